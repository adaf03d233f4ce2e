"""
Base class for seesaw engines.

Runs independent restarts in parallel and alternates decoder and encoder
half-steps within each restart.
"""
import asyncio
import logging
from abc import abstractmethod
from concurrent.futures import ThreadPoolExecutor
from math import comb
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from core.exceptions import InvalidParameterError
from core.interfaces import ISeesawEngine
from core.models import CodeResult, IterationRecord, SeesawConfig
from infrastructure.config import SeesawDefaults
from infrastructure.tracing import get_tracer

tracer = get_tracer(__name__)
logger = logging.getLogger(__name__)

MONOTONE_SLACK = 1e-9


def restart_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible stream for one restart."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, index]))


def cq_weights(n: int, q: float) -> Dict[int, float]:
    """P(k erased out of n) = C(n,k) q^k (1−q)^{n−k}."""
    return {k: comb(n, k) * q ** k * (1 - q) ** (n - k) for k in range(n + 1)}


class BaseSeesaw(ISeesawEngine):
    """Template for seesaw engines; subclasses supply the two half-steps."""

    def __init__(self, defaults: Optional[SeesawDefaults] = None):
        self.defaults = defaults or SeesawDefaults()

    def validate(self, config: SeesawConfig) -> None:
        if config.n < 1:
            raise InvalidParameterError(f"Need n >= 1, got {config.n}")
        if config.d < 2:
            raise InvalidParameterError(f"Need d >= 2, got {config.d}")
        if config.seesaw_tol <= 0 or config.power_tol <= 0:
            raise InvalidParameterError("Tolerances must be positive")
        if config.max_outer_iters < 1 or config.max_power_iters < 1:
            raise InvalidParameterError("Iteration caps must be >= 1")
        if not 0.0 <= config.erasure_prob <= 1.0:
            raise InvalidParameterError(f"Erasure probability must lie in [0, 1], got {config.erasure_prob}")
        if config.threads < 1:
            raise InvalidParameterError(f"Need threads >= 1, got {config.threads}")

    def get_configuration_info(self, config: SeesawConfig) -> dict:
        """Get information about how the engine is configured."""
        return {
            "mode": config.mode.value,
            "n": config.n,
            "d": config.d,
            "restarts": self.restart_count(config),
            "master_seed": config.master_seed,
            "seesaw_tol": config.seesaw_tol,
            "power_tol": config.power_tol,
            "max_outer_iters": config.max_outer_iters,
            "max_power_iters": config.max_power_iters,
            "erasure_prob": config.erasure_prob,
            "warm_start": config.warm_start is not None,
        }

    def restart_count(self, config: SeesawConfig) -> int:
        return config.resolved_restarts(self.defaults.restarts_small, self.defaults.restarts_large)

    # ------------------------------------------------------------------
    # Half-steps supplied by the engines
    # ------------------------------------------------------------------

    @abstractmethod
    def initial_state(self, config: SeesawConfig, index: int, rng: np.random.Generator) -> Any:
        """Encoder to start restart `index` from."""
        pass

    @abstractmethod
    def decoder_step(self, config: SeesawConfig, encoder: Any, decoders: Optional[Any]) -> Tuple[float, Any]:
        """Optimize decoders for a fixed encoder; returns (F_D, decoders)."""
        pass

    @abstractmethod
    def encoder_step(self, config: SeesawConfig, encoder: Any, decoders: Any) -> Tuple[float, Any]:
        """Optimize the encoder for fixed decoders; returns (F_E, encoder)."""
        pass

    @abstractmethod
    def finalize(self, config: SeesawConfig, encoder: Any, decoders: Any) -> CodeResult:
        """Package the code with fidelities recomputed from the stored operators."""
        pass

    # ------------------------------------------------------------------
    # Outer loop and restarts
    # ------------------------------------------------------------------

    def optimize(self, config: SeesawConfig, index: int, rng: np.random.Generator) -> CodeResult:
        """
        Alternate half-steps until neither gains more than seesaw_tol.

        The loop stops when max(F_E(i) − F_D(i), F_D(i) − F_E(i−1)) < δ.
        """
        encoder = self.initial_state(config, index, rng)
        decoders = None
        trace: List[IterationRecord] = []
        warnings: List[str] = []
        previous = -np.inf
        converged = False
        for outer in range(1, config.max_outer_iters + 1):
            f_decoder, decoders = self.decoder_step(config, encoder, decoders)
            f_encoder, encoder = self.encoder_step(config, encoder, decoders)
            trace.append(IterationRecord(outer, f_decoder, f_encoder))
            logger.info(f"Restart {index} iter {outer}: F_D={f_decoder:.12f} F_E={f_encoder:.12f}")
            if f_decoder < previous - MONOTONE_SLACK or f_encoder < f_decoder - MONOTONE_SLACK:
                message = f"Non-monotone step at outer iteration {outer}"
                logger.warning(message)
                warnings.append(message)
            if max(f_encoder - f_decoder, f_decoder - previous) < config.seesaw_tol:
                converged = True
                break
            previous = f_encoder
        if not converged:
            message = f"Seesaw did not converge in {config.max_outer_iters} outer iterations"
            logger.warning(message)
            warnings.append(message)
        result = self.finalize(config, encoder, decoders)
        result.trace = trace
        result.restart_index = index
        result.converged = converged
        result.warnings.extend(warnings)
        return result

    def _run_restart(self, config: SeesawConfig, index: int) -> CodeResult:
        with tracer.start_as_current_span(
            "seesaw.restart",
            attributes={"restart": index, "n": config.n, "mode": config.mode.value},
        ) as span:
            try:
                result = self.optimize(config, index, restart_rng(config.master_seed, index))
            except Exception as e:
                span.record_exception(e)
                raise
            span.set_attribute("fidelity", result.fidelity)
            logger.info(f"Restart {index} finished: F={result.fidelity:.12f} after {len(result.trace)} iterations")
            return result

    async def run_async(self, config: SeesawConfig) -> CodeResult:
        """Run every restart, at most `threads` at a time, and keep the best code."""
        self.validate(config)
        restarts = self.restart_count(config)
        with tracer.start_as_current_span(
            "seesaw.run",
            attributes={"n": config.n, "mode": config.mode.value, "restarts": restarts},
        ) as run_span:
            logger.info(f"Starting {restarts} {config.mode.value} restarts at n={config.n}")
            semaphore = asyncio.Semaphore(config.threads)
            loop = asyncio.get_running_loop()

            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                async def run_with_semaphore(index: int) -> CodeResult:
                    async with semaphore:
                        return await loop.run_in_executor(pool, self._run_restart, config, index)

                results = await asyncio.gather(
                    *(run_with_semaphore(i) for i in range(restarts)),
                    return_exceptions=True,
                )

            best: Optional[CodeResult] = None
            failures = []
            for index, result in enumerate(results):
                if isinstance(result, Exception):
                    logger.error(f"Restart {index} failed: {result}")
                    failures.append(result)
                elif best is None or result.fidelity > best.fidelity:
                    best = result
            if best is None:
                run_span.record_exception(failures[0])
                raise failures[0]
            best.warnings.extend(f"Restart failed: {e}" for e in failures)
            run_span.set_attribute("fidelity", best.fidelity)
            run_span.set_attribute("winner", best.restart_index)
            logger.info(f"Best code: restart {best.restart_index}, F={best.fidelity:.12f}")
            return best

    def run(self, config: SeesawConfig) -> CodeResult:
        return asyncio.run(self.run_async(config))
