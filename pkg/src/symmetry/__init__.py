from symmetry.young import partitions, ssyt_count, syt_count, lattice_path_count
from symmetry.orbits import (
    orbit_enumerate,
    orbit_metrics,
    orbit_dimension,
    cq_dimension,
    tensor_power_coeffs,
    tensor_power_support,
    restrict,
    resymmetrize,
    pushforward,
    concat_orbit,
)
from symmetry.blocks import BlockConverter, build_converter, to_blocks, from_blocks

__all__ = [
    "partitions",
    "ssyt_count",
    "syt_count",
    "lattice_path_count",
    "orbit_enumerate",
    "orbit_metrics",
    "orbit_dimension",
    "cq_dimension",
    "tensor_power_coeffs",
    "tensor_power_support",
    "restrict",
    "resymmetrize",
    "pushforward",
    "concat_orbit",
    "BlockConverter",
    "build_converter",
    "to_blocks",
    "from_blocks",
]
