"""
Finite-blocklength bounds for the flagged effective channel.

Coherent-information moments, second-order and Berry–Esseen achievability
bounds, Petz–Rényi error exponents, and converse bounds from PPT and
two-extendibility. All logarithms are base 2.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize, special

from core.exceptions import CrossingNotFoundError, InvalidParameterError
from core.interfaces import IRateBound
from core.models import (
    BoundCurve,
    BoundKind,
    BoundSample,
    CodeResult,
    EffectiveChannelSpec,
    EffectiveParams,
)
from infrastructure.tracing import get_tracer
from services.channel_core import partial_trace
from services.effective_channel import output_mes_state

tracer = get_tracer(__name__)
logger = logging.getLogger(__name__)

BERRY_ESSEEN_C = 0.4748
CROSSING_CAP = 10 ** 8
SUPPORT_TOL = 1e-14


def _xlog2(p: np.ndarray, power: int = 1) -> np.ndarray:
    """p·(log2 p)^power with 0·log 0 = 0."""
    p = np.asarray(p, dtype=float)
    safe = np.where(p > 0, p, 1.0)
    return np.where(p > 0, p * np.log2(safe) ** power, 0.0)


def _check_params(params: EffectiveParams) -> np.ndarray:
    w = np.asarray(params.weights, dtype=float)
    if not 0.0 <= params.erasure_prob <= 1.0:
        raise InvalidParameterError(f"Erasure probability must lie in [0, 1], got {params.erasure_prob}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise InvalidParameterError(f"Weights {params.weights} are not a probability vector")
    return w


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

def entropy_stats(weights: Sequence[float]) -> Tuple[float, float]:
    """Shannon entropy H and entropy variance V of a distribution."""
    w = np.asarray(weights, dtype=float)
    h = -float(_xlog2(w).sum())
    v = float(_xlog2(w, 2).sum()) - h ** 2
    return h, max(v, 0.0)


def coherent_moment(params: EffectiveParams, k: int) -> float:
    """Raw moment M_k = (1−q)(log K)^k + q Σ_ℓ p_ℓ (log p_ℓ)^k."""
    if k < 1:
        raise InvalidParameterError(f"Moment order must be >= 1, got {k}")
    w = _check_params(params)
    q = params.erasure_prob
    return (1 - q) * np.log2(params.key_dim) ** k + q * float(_xlog2(w, k).sum())


def coherent_information(params: EffectiveParams) -> float:
    """ι = (1−q) log K − q H(p̄)."""
    h, _ = entropy_stats(_check_params(params))
    return (1 - params.erasure_prob) * np.log2(params.key_dim) - params.erasure_prob * h


def coherent_variance(params: EffectiveParams) -> float:
    """ν = q V(p̄) + q(1−q)(log K + H(p̄))²."""
    h, v = entropy_stats(_check_params(params))
    q = params.erasure_prob
    return q * v + q * (1 - q) * (np.log2(params.key_dim) + h) ** 2


def _spec(params: EffectiveParams) -> EffectiveChannelSpec:
    return EffectiveChannelSpec(
        key_dim=params.key_dim,
        shield_dim=2,
        erasure_prob=params.erasure_prob,
        weights=tuple(params.weights),
    )


def _states(params: EffectiveParams) -> Tuple[np.ndarray, np.ndarray]:
    """ξ_{RB'Z} and σ = 1_R ⊗ ξ_{B'Z}."""
    xi = output_mes_state(_spec(params)).rho
    K = params.key_dim
    xi_b = partial_trace(xi, [K, 2 * K], [0])
    return xi, np.kron(np.eye(K), xi_b)


def log_likelihood_distribution(params: EffectiveParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nussbaum–Szkoła pairing of ξ against σ = 1 ⊗ ξ_B.

    Returns:
        (probabilities, log-likelihoods) over eigenvector pairs with positive weight;
        log-likelihoods are +inf where σ vanishes on the support of ξ
    """
    xi, sigma = _states(params)
    lam, xvec = linalg.eigh(xi)
    mu, yvec = linalg.eigh(sigma)
    overlap = np.abs(xvec.conj().T @ yvec) ** 2
    probs, llr = [], []
    for x in range(len(lam)):
        if lam[x] <= SUPPORT_TOL:
            continue
        for y in range(len(mu)):
            weight = lam[x] * overlap[x, y]
            if weight <= SUPPORT_TOL:
                continue
            probs.append(weight)
            llr.append(np.inf if mu[y] <= SUPPORT_TOL else np.log2(lam[x]) - np.log2(mu[y]))
    return np.asarray(probs), np.asarray(llr)


def third_abs_moment(params: EffectiveParams) -> float:
    """τ = E|L − D|³ of the log-likelihood L under the Nussbaum–Szkoła distribution."""
    probs, llr = log_likelihood_distribution(params)
    if np.any(np.isinf(llr)):
        logger.warning("Support violation: ξ is not dominated by 1 ⊗ ξ_B")
        return float("inf")
    mean = float(np.dot(probs, llr))
    return float(np.dot(probs, np.abs(llr - mean) ** 3))


def pairing_moments(params: EffectiveParams) -> Tuple[float, float]:
    """Mean and variance of the log-likelihood from the same pairing."""
    probs, llr = log_likelihood_distribution(params)
    mean = float(np.dot(probs, llr))
    return mean, float(np.dot(probs, (llr - mean) ** 2))


def _log2m(rho: np.ndarray) -> np.ndarray:
    """Matrix log2 restricted to the support."""
    vals, vecs = linalg.eigh(rho)
    logs = np.where(vals > SUPPORT_TOL, np.log2(np.where(vals > SUPPORT_TOL, vals, 1.0)), 0.0)
    return (vecs * logs) @ vecs.conj().T


def dense_moment(params: EffectiveParams, k: int) -> float:
    """Tr[ξ (log ξ − log σ)^k] evaluated with dense matrix functions."""
    xi, sigma = _states(params)
    diff = _log2m(xi) - _log2m(sigma)
    return float(np.real(np.trace(xi @ np.linalg.matrix_power(diff, k))))


def coherent_information_dense(params: EffectiveParams) -> float:
    """D(ξ ‖ 1 ⊗ ξ_B) from eigen-decompositions."""
    return dense_moment(params, 1)


# ---------------------------------------------------------------------------
# Achievability and converse bounds
# ---------------------------------------------------------------------------

def _check_epsilon(eps: float, upper: float = 1.0) -> None:
    if not 0.0 < eps < upper:
        raise InvalidParameterError(f"Error ε must lie in (0, {upper}), got {eps}")


def lower_bound_normal(n: int, eps: float, params: EffectiveParams) -> float:
    """ι + √(ν/n) Φ⁻¹(ε)."""
    _check_epsilon(eps)
    return coherent_information(params) + np.sqrt(coherent_variance(params) / n) * float(special.ndtri(eps))


def berry_esseen_correction(n: int, params: EffectiveParams, constant: float = BERRY_ESSEEN_C) -> float:
    """C τ / (ν^{3/2} √n)."""
    return constant * third_abs_moment(params) / (coherent_variance(params) ** 1.5 * np.sqrt(n))


def lower_bound_be(
    n: int,
    eps: float,
    params: EffectiveParams,
    constant: float = BERRY_ESSEEN_C,
    tau: Optional[float] = None,
) -> Optional[float]:
    """ι + √(ν/n) Φ⁻¹(ε − Cτ/(ν^{3/2}√n)); None when the shifted error is not positive."""
    _check_epsilon(eps)
    nu = coherent_variance(params)
    tau = third_abs_moment(params) if tau is None else tau
    shifted = eps - constant * tau / (nu ** 1.5 * np.sqrt(n))
    if shifted <= 0:
        return None
    return coherent_information(params) + np.sqrt(nu / n) * float(special.ndtri(shifted))


def upper_bound_ppt(n: int, eps: float) -> float:
    """−(1/n) log(1−ε)."""
    if not 0.0 <= eps < 1.0:
        raise InvalidParameterError(f"PPT converse needs ε in [0, 1), got {eps}")
    return -np.log2(1.0 - eps) / n


def upper_bound_erasure(n: int, eps: float) -> float:
    """−(1/n) log(1−2ε)."""
    if not 0.0 <= eps < 0.5:
        raise InvalidParameterError(f"Two-extendibility converse needs ε in [0, 1/2), got {eps}")
    return -np.log2(1.0 - 2.0 * eps) / n


class FidelityBounds(NamedTuple):
    ppt: float
    two_ext: float


def fidelity_upper_bounds(d: int) -> FidelityBounds:
    """Singlet-fraction limits: 1/d for PPT, (d+1)/(2d) for two-extendible channels."""
    if d < 2:
        raise InvalidParameterError(f"Need d >= 2, got {d}")
    return FidelityBounds(ppt=1.0 / d, two_ext=(d + 1) / (2.0 * d))


# ---------------------------------------------------------------------------
# Petz–Rényi coherent information and error exponents
# ---------------------------------------------------------------------------

def petz_iota(alpha: float, params: EffectiveParams) -> float:
    """(α/(α−1)) log( q (Σ p_ℓ^α)^{1/α} + (1−q) K^{(α−1)/α} ); the α → 1 limit is ι."""
    if alpha <= 0:
        raise InvalidParameterError(f"Rényi order must be positive, got {alpha}")
    if abs(alpha - 1.0) < 1e-12:
        return coherent_information(params)
    w = _check_params(params)
    q, K = params.erasure_prob, params.key_dim
    w = w[w > 0]
    inner = q * float(np.sum(w ** alpha)) ** (1 / alpha) + (1 - q) * K ** ((alpha - 1) / alpha)
    return alpha / (alpha - 1) * np.log2(inner)


def petz_root(params: EffectiveParams, lo: float = 0.5, hi: float = 1.0 - 1e-9) -> float:
    """The order α* in (lo, 1) where ι_α changes sign."""
    return float(optimize.brentq(lambda a: petz_iota(a, params), lo, hi, xtol=1e-12))


def exponent_argmax(params: EffectiveParams) -> float:
    """Maximizer of ((1−α)/α) ι_α on (α*, 1)."""
    lo = petz_root(params)
    res = optimize.minimize_scalar(
        lambda a: -(1 - a) / a * petz_iota(a, params),
        bounds=(lo, 1.0 - 1e-9),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x)


def _log2_error_objective(s: float, n: int, d: int, params: EffectiveParams) -> float:
    prefactor = 1.0 + 0.5 * (s * np.log2(s) + (1 - s) * np.log2(1 - s) - np.log2(s))
    exponent = (n * s / 2.0) * (petz_iota(1.0 / (1.0 + s), params) - np.log2(d) / n)
    return prefactor - exponent


def error_exponent_upper(n: int, d: int, params: EffectiveParams) -> float:
    """
    min_s 2√(s^s(1−s)^{1−s}/s) · 2^{−(ns/2)(ι_{1/(1+s)} − log d / n)}, clipped to [0, 1].

    A log-spaced scan locates the basin, then a bounded scalar search refines it.
    """
    if d < 2 or n < 1:
        raise InvalidParameterError(f"Need d >= 2 and n >= 1, got d={d}, n={n}")
    grid = np.logspace(-8, np.log10(1 - 1e-8), 400)
    values = np.array([_log2_error_objective(s, n, d, params) for s in grid])
    best = int(np.argmin(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(
        _log2_error_objective,
        bounds=(lo, hi),
        args=(n, d, params),
        method="bounded",
        options={"xatol": 1e-10},
    )
    log_value = min(float(res.fun), float(values[best])) if res.success else float(values[best])
    return float(np.clip(2.0 ** log_value, 0.0, 1.0))


def error_exponent_threshold(target: float, d: int, params: EffectiveParams, cap: int = CROSSING_CAP) -> int:
    """Smallest n where the error-exponent bound drops below `target`."""
    return _smallest_n(lambda n: error_exponent_upper(n, d, params) < target, cap)


# ---------------------------------------------------------------------------
# Curves and crossings
# ---------------------------------------------------------------------------

class NormalApproximationBound(IRateBound):
    """Second-order achievability bound."""

    def __init__(self, epsilon: float, params: EffectiveParams):
        self.epsilon = epsilon
        self.params = params

    @property
    def kind(self) -> BoundKind:
        return BoundKind.NORMAL

    def evaluate(self, n: int) -> BoundSample:
        return BoundSample(n, lower_bound_normal(n, self.epsilon, self.params))


class BerryEsseenBound(IRateBound):
    """Third-order corrected achievability bound; invalid at small n."""

    def __init__(self, epsilon: float, params: EffectiveParams, constant: float = BERRY_ESSEEN_C):
        self.epsilon = epsilon
        self.params = params
        self.constant = constant
        self.tau = third_abs_moment(params)

    @property
    def kind(self) -> BoundKind:
        return BoundKind.BERRY_ESSEEN

    def evaluate(self, n: int) -> BoundSample:
        value = lower_bound_be(n, self.epsilon, self.params, self.constant, tau=self.tau)
        if value is None:
            return BoundSample(n, float("nan"), valid=False)
        return BoundSample(n, value)


class PptConverseBound(IRateBound):
    def __init__(self, epsilon: float):
        self.epsilon = epsilon

    @property
    def kind(self) -> BoundKind:
        return BoundKind.PPT_UPPER

    def evaluate(self, n: int) -> BoundSample:
        return BoundSample(n, upper_bound_ppt(n, self.epsilon))


class ErasureConverseBound(IRateBound):
    def __init__(self, epsilon: float):
        self.epsilon = epsilon

    @property
    def kind(self) -> BoundKind:
        return BoundKind.ERASURE_UPPER

    def evaluate(self, n: int) -> BoundSample:
        return BoundSample(n, upper_bound_erasure(n, self.epsilon))


class ErrorExponentBound(IRateBound):
    """Upper bound on the transmission error for a rank-d code at blocklength n."""

    def __init__(self, d: int, params: EffectiveParams):
        self.d = d
        self.params = params

    @property
    def kind(self) -> BoundKind:
        return BoundKind.ERROR_EXPONENT

    def evaluate(self, n: int) -> BoundSample:
        return BoundSample(n, error_exponent_upper(n, self.d, self.params))


def make_bound(
    kind: BoundKind,
    epsilon: float = 0.25,
    d: int = 2,
    params: Optional[EffectiveParams] = None,
    constant: float = BERRY_ESSEEN_C,
) -> IRateBound:
    """Factory for the analytic curves."""
    params = params or EffectiveParams.superactivation()
    if kind is BoundKind.NORMAL:
        return NormalApproximationBound(epsilon, params)
    if kind is BoundKind.BERRY_ESSEEN:
        return BerryEsseenBound(epsilon, params, constant)
    if kind is BoundKind.PPT_UPPER:
        return PptConverseBound(epsilon)
    if kind is BoundKind.ERASURE_UPPER:
        return ErasureConverseBound(epsilon)
    if kind is BoundKind.ERROR_EXPONENT:
        return ErrorExponentBound(d, params)
    raise InvalidParameterError(f"No analytic evaluator for kind '{kind.value}'")


def log_spaced_ns(n_min: int, n_max: int, points: int) -> List[int]:
    """Strictly increasing integers, roughly log-spaced over [n_min, n_max]."""
    if n_min < 1 or n_max < n_min or points < 1:
        raise InvalidParameterError(f"Invalid sampling range [{n_min}, {n_max}] with {points} points")
    raw = np.geomspace(n_min, n_max, points)
    return sorted(set(int(round(x)) for x in raw) | {n_min, n_max})


def sample_curve(bound: IRateBound, ns: Iterable[int], parameter: float, threads: int = 1) -> BoundCurve:
    """Evaluate `bound` on every n (in parallel when threads > 1)."""
    ns = sorted(set(int(n) for n in ns))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        samples = list(pool.map(bound.evaluate, ns))
    return BoundCurve(kind=bound.kind, parameter=parameter, samples=samples)


def _smallest_n(predicate: Callable[[int], bool], cap: int) -> int:
    """Exponential bracket then binary refinement for a predicate true from some n on."""
    hi = 1
    while not predicate(hi):
        if hi >= cap:
            raise CrossingNotFoundError(f"No crossing found below n = {cap}")
        hi = min(hi * 2, cap)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return hi


def crossing_point(
    eps: float,
    kind: BoundKind = BoundKind.NORMAL,
    params: Optional[EffectiveParams] = None,
    constant: float = BERRY_ESSEEN_C,
    cap: int = CROSSING_CAP,
) -> int:
    """Smallest n at which the achievability bound exceeds both converse bounds."""
    _check_epsilon(eps, 0.5)
    if kind not in (BoundKind.NORMAL, BoundKind.BERRY_ESSEEN):
        raise InvalidParameterError(f"Crossings are defined for lower bounds, got '{kind.value}'")
    lower = make_bound(kind, eps, params=params, constant=constant)

    def beats_converses(n: int) -> bool:
        sample = lower.evaluate(n)
        return sample.valid and sample.value > max(upper_bound_ppt(n, eps), upper_bound_erasure(n, eps))

    with tracer.start_as_current_span(
        "bounds.crossing",
        attributes={"epsilon": eps, "kind": kind.value, "cap": cap},
    ) as span:
        try:
            n_star = _smallest_n(beats_converses, cap)
        except CrossingNotFoundError as e:
            span.record_exception(e)
            raise
        span.set_attribute("crossing", n_star)
    logger.info(f"Crossing for {kind.value} at ε={eps}: n = {n_star}")
    return n_star


def seesaw_rate_curve(results: Sequence[CodeResult], eps: float) -> BoundCurve:
    """Achievable points (n, log d / n) from codes; valid iff fidelity ≥ 1 − ε."""
    samples = [
        BoundSample(r.n, np.log2(r.d) / r.n, valid=r.fidelity >= 1.0 - eps)
        for r in sorted(results, key=lambda r: r.n)
    ]
    return BoundCurve(kind=BoundKind.SEESAW, parameter=eps, samples=samples)
