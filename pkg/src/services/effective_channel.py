"""
Horodecki PPT channel, erasure channel, and their flagged effective reduction.

Builds the channel pair, the decomposition of the PPT Choi state into shifted
private states, the explicit encoder/decoder protocol around P ⊗ A^q, and the
flagged qubit channel Ñ it reduces to.

System orderings used throughout:
- encoder output: (A1', A1'', A2', A2''): key, shield, key copy, shield partner
- no-erasure decoder input: (B1', B1'', A2', A2'')
- flagged output: (qubit, flag)
"""
import logging
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from core.exceptions import InvalidDimensionError, InvalidParameterError
from core.models import (
    ChoiMatrix,
    DensityOperator,
    EffectiveChannelSpec,
    FlaggedSiteChannels,
    PrivateStateSectors,
)
from services.channel_core import (
    apply,
    choi_from_kraus,
    complementary_channel,
    compose,
    hermitize,
    identity_channel,
    permute_systems,
    tensor,
)

logger = logging.getLogger(__name__)

HORODECKI_P = 1.0 / (1.0 + np.sqrt(2.0))

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


# ---------------------------------------------------------------------------
# Channel pair
# ---------------------------------------------------------------------------

def erasure_kraus(d: int, q: float) -> List[np.ndarray]:
    """Kraus operators of A^q: keep with 1−q, replace by |e⟩ = |d⟩ with q."""
    if d < 1:
        raise InvalidDimensionError(f"Erasure channel needs d >= 1, got {d}")
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"Erasure probability must lie in [0, 1], got {q}")
    keep = np.zeros((d + 1, d), dtype=complex)
    keep[:d, :d] = np.eye(d)
    ops = [np.sqrt(1.0 - q) * keep]
    for j in range(d):
        op = np.zeros((d + 1, d), dtype=complex)
        op[d, j] = np.sqrt(q)
        ops.append(op)
    return ops


def erasure_channel(d: int, q: float) -> ChoiMatrix:
    """A^q(ρ) = (1−q)ρ ⊕ q·Tr(ρ)|e⟩⟨e| on d+1 dimensions."""
    return choi_from_kraus(erasure_kraus(d, q), d, d + 1)


def erasure_complement(d: int, q: float) -> ChoiMatrix:
    """
    Complementary channel of A^q with the environment relabelled.

    The Stinespring environment carries the erasure symbol on index 0 and the
    data on 1..d; it is reordered so the symbol sits on index d, which makes
    the complement literally equal to A^{1−q}.
    """
    comp = complementary_channel(erasure_kraus(d, q))
    order = list(range(1, d + 1)) + [0]
    perm = np.zeros((d + 1, d + 1))
    perm[np.arange(d + 1), order] = 1.0
    lift = np.kron(np.eye(d), perm)
    return ChoiMatrix(d, d + 1, lift @ comp.gamma @ lift.T)


def erasure_is_symmetric(d: int, q: float, tol: float = 1e-12) -> bool:
    """True when A^q equals its own complement, i.e. it is two-extendible by symmetry."""
    residual = float(np.max(np.abs(erasure_complement(d, q).gamma - erasure_channel(d, q).gamma)))
    return residual <= tol


def horodecki_kraus(p: float = HORODECKI_P) -> List[np.ndarray]:
    """Six Kraus operators on key ⊗ shield qubits."""
    m0 = 0.5 * np.diag([np.sqrt(2 + np.sqrt(2)), np.sqrt(2 - np.sqrt(2))]).astype(complex)
    m1 = 0.5 * np.diag([np.sqrt(2 - np.sqrt(2)), -np.sqrt(2 + np.sqrt(2))]).astype(complex)
    p0, p1 = _proj(_ket(2, 0)), _proj(_ket(2, 1))
    return [
        np.sqrt((1 - p) / 2) * np.kron(_I2, p0),
        np.sqrt((1 - p) / 4) * np.kron(_I2, _X),
        np.sqrt((1 - p) / 2) * np.kron(_Z, p1),
        np.sqrt((1 - p) / 4) * np.kron(_Z, _Y),
        np.sqrt(p) * np.kron(_X, m0),
        np.sqrt(p) * np.kron(_Y, m1),
    ]


@lru_cache(maxsize=None)
def horodecki_channel(p: float = HORODECKI_P) -> ChoiMatrix:
    """The PPT channel P on 4 → 4 dimensions."""
    return choi_from_kraus(horodecki_kraus(p), 4, 4)


def horodecki_bell_components(p: float = HORODECKI_P):
    """
    Bell-diagonal form Φ^P = Σ_i q_i ψ^i_{R'B'} ⊗ ρ^(i)_{R''B''}.

    Returns (weights, bell_projectors, shield_states) in the order Φ+, Φ−, Ψ+, Ψ−.
    """
    s = 1 / np.sqrt(2)
    phi_p = s * np.array([1, 0, 0, 1], dtype=complex)
    phi_m = s * np.array([1, 0, 0, -1], dtype=complex)
    psi_p = s * np.array([0, 1, 1, 0], dtype=complex)
    psi_m = s * np.array([0, 1, -1, 0], dtype=complex)
    chi_p = 0.5 * np.array([np.sqrt(2 + np.sqrt(2)), 0, 0, np.sqrt(2 - np.sqrt(2))], dtype=complex)
    chi_m = 0.5 * np.array([np.sqrt(2 - np.sqrt(2)), 0, 0, -np.sqrt(2 + np.sqrt(2))], dtype=complex)
    weights = ((1 - p) / 2, (1 - p) / 2, p / 2, p / 2)
    bells = tuple(_proj(v) for v in (phi_p, phi_m, psi_p, psi_m))
    shields = (
        0.5 * (_proj(_ket(4, 0)) + _proj(psi_p)),
        0.5 * (_proj(_ket(4, 3)) + _proj(psi_m)),
        _proj(chi_p),
        _proj(chi_m),
    )
    return weights, bells, shields


def horodecki_choi_state(p: float = HORODECKI_P) -> np.ndarray:
    """Normalized Choi state assembled from the Bell-diagonal form, ordered (R'R'')(B'B'')."""
    weights, bells, shields = horodecki_bell_components(p)
    state = sum(w * np.kron(b, s) for w, b, s in zip(weights, bells, shields))
    return permute_systems(state, [2, 2, 2, 2], [0, 2, 1, 3])


# ---------------------------------------------------------------------------
# Private-state decomposition
# ---------------------------------------------------------------------------

def private_decomposition(p: float = HORODECKI_P) -> PrivateStateSectors:
    """Closed-form sectors: σ^0 = π_4 with a swap-type twist, σ^1 = Φ̄² with a Hadamard-type twist."""
    sigma0 = np.eye(4, dtype=complex) / 4
    sigma1 = 0.5 * (_proj(_ket(4, 0)) + _proj(_ket(4, 3)))
    u10 = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]], dtype=complex)
    a = 1 / np.sqrt(2)
    u11 = np.array([[a, 0, 0, a], [0, 0, 1, 0], [0, 1, 0, 0], [a, 0, 0, -a]], dtype=complex)
    unitaries = {
        (0, 0): np.eye(4, dtype=complex),
        (1, 0): u10,
        (0, 1): np.eye(4, dtype=complex),
        (1, 1): u11,
    }
    return PrivateStateSectors(
        key_dim=2,
        shield_dim=2,
        weights=(1 - p, p),
        shield_states=(sigma0, sigma1),
        twist_unitaries=unitaries,
    )


def with_twist(sectors: PrivateStateSectors, i: int, shift: int, unitary: np.ndarray) -> PrivateStateSectors:
    """Copy of `sectors` with U^{i,ℓ} replaced."""
    unitaries = dict(sectors.twist_unitaries)
    unitaries[(i, shift)] = np.asarray(unitary, dtype=complex)
    return PrivateStateSectors(
        sectors.key_dim, sectors.shield_dim, sectors.weights, sectors.shield_states, unitaries
    )


def private_state(sectors: PrivateStateSectors, shift: int) -> np.ndarray:
    """γ^ℓ = (1/K) Σ_ij |i⟩⟨j| ⊗ |i+ℓ⟩⟨j+ℓ| ⊗ U^{i,ℓ} σ^ℓ U^{j,ℓ}†, ordered (R', B', R'', B'')."""
    K, ds = sectors.key_dim, sectors.shield_dim
    sigma = sectors.shield_states[shift]
    out = np.zeros((K * K * ds * ds,) * 2, dtype=complex)
    for i in range(K):
        for j in range(K):
            key = np.kron(np.outer(_ket(K, i), _ket(K, j)), np.outer(_ket(K, (i + shift) % K), _ket(K, (j + shift) % K)))
            shield = sectors.unitary(i, shift) @ sigma @ sectors.unitary(j, shift).conj().T
            out += np.kron(key, shield)
    return out / K


def untwisting_unitary(sectors: PrivateStateSectors) -> np.ndarray:
    """V† = Σ_{i,ℓ} |i⟩⟨i| ⊗ |i+ℓ⟩⟨i+ℓ| ⊗ U^{i,ℓ}† on (R', B', R'', B'')."""
    K, ds = sectors.key_dim, sectors.shield_dim
    out = np.zeros((K * K * ds * ds,) * 2, dtype=complex)
    for i in range(K):
        for shift in range(K):
            key = np.kron(_proj(_ket(K, i)), _proj(_ket(K, (i + shift) % K)))
            out += np.kron(key, sectors.unitary(i, shift).conj().T)
    return out


def reconstruct_choi_state(sectors: PrivateStateSectors) -> np.ndarray:
    """Σ_ℓ p_ℓ γ^ℓ reordered to (R'R'')(B'B'')."""
    K, ds = sectors.key_dim, sectors.shield_dim
    mixture = sum(w * private_state(sectors, ell) for ell, w in enumerate(sectors.weights))
    return permute_systems(mixture, [K, K, ds, ds], [0, 2, 1, 3])


def sector_constraint_residuals(sectors: PrivateStateSectors, p: float = HORODECKI_P) -> List[float]:
    """
    Residuals of the four defining equations of the two-qubit-shield sectors.

    For each sector ℓ with Bell pair (ρ_a, ρ_b): U^{i,ℓ}σ^ℓU^{i,ℓ}† = (ρ_a+ρ_b)/2
    for both i, and U^{0,ℓ}σ^ℓU^{1,ℓ}† = (ρ_a−ρ_b)/2.
    """
    _, _, shields = horodecki_bell_components(p)
    residuals = []
    for ell, (ra, rb) in enumerate([(shields[0], shields[1]), (shields[2], shields[3])]):
        sigma = sectors.shield_states[ell]
        u0, u1 = sectors.unitary(0, ell), sectors.unitary(1, ell)
        diag = max(
            np.max(np.abs(u0 @ sigma @ u0.conj().T - 0.5 * (ra + rb))),
            np.max(np.abs(u1 @ sigma @ u1.conj().T - 0.5 * (ra + rb))),
        )
        anti = np.max(np.abs(u0 @ sigma @ u1.conj().T - 0.5 * (ra - rb)))
        residuals.extend([float(diag), float(anti)])
    return residuals


# ---------------------------------------------------------------------------
# Encoder and decoders
# ---------------------------------------------------------------------------

def encoder_tilde(K: int = 2, d_s: int = 2) -> ChoiMatrix:
    """Append Φ^{d_s} on (A1'', A2'') and |0⟩ on A2', then CNOT A1' → A2'."""
    if K < 2 or d_s < 2:
        raise InvalidDimensionError(f"Encoder needs K, d_s >= 2, got K={K}, d_s={d_s}")
    iso = np.zeros((K * d_s * K * d_s, K), dtype=complex)
    for i in range(K):
        for s in range(d_s):
            idx = ((i * d_s + s) * K + i) * d_s + s
            iso[idx, i] = 1.0 / np.sqrt(d_s)
    return choi_from_kraus([iso], K, K * d_s * K * d_s)


def _untwist_operator(sectors: PrivateStateSectors) -> np.ndarray:
    """Controlled U^{i,ℓ}† on (A2'', B1'') with i = A2', ℓ = B1' − A2', ordered (B1', B1'', A2', A2'')."""
    K, ds = sectors.key_dim, sectors.shield_dim
    # Built in order (B1', A2', A2'', B1'') then reordered.
    op = np.zeros((K * K * ds * ds,) * 2, dtype=complex)
    for b in range(K):
        for i in range(K):
            shift = (b - i) % K
            control = np.kron(_proj(_ket(K, b)), _proj(_ket(K, i)))
            op += np.kron(control, sectors.unitary(i, shift).conj().T)
    return permute_systems(op, [K, K, ds, ds], [0, 3, 1, 2])


def _decoder_no_erasure_kraus(sectors: PrivateStateSectors) -> List[np.ndarray]:
    K, ds = sectors.key_dim, sectors.shield_dim
    untwist = _untwist_operator(sectors)
    uncopy = sum(
        np.outer(np.kron(_ket(K, b), _ket(K, (c - b) % K)), np.kron(_ket(K, b), _ket(K, c)))
        for b in range(K) for c in range(K)
    )
    ops = []
    for s1 in range(ds):
        for s2 in range(ds):
            trace_shields = np.kron(np.kron(np.eye(K), _ket(ds, s1)[None, :]),
                                    np.kron(np.eye(K), _ket(ds, s2)[None, :]))
            for ell in range(K):
                # Parity outcome ℓ (B1' = A2' + ℓ) followed by X^{−ℓ} on B1'.
                correct = sum(
                    np.outer(np.kron(_ket(K, i), _ket(K, i)), np.kron(_ket(K, (i + ell) % K), _ket(K, i)))
                    for i in range(K)
                )
                for a in range(K):
                    discard = np.kron(np.eye(K), _ket(K, a)[None, :])
                    ops.append(discard @ uncopy @ correct @ trace_shields @ untwist)
    return ops


def decoder_no_erasure(sectors: PrivateStateSectors) -> ChoiMatrix:
    """D⁰: untwist, trace shields, parity measurement, shift correction, inverse CNOT, trace A2'."""
    K, ds = sectors.key_dim, sectors.shield_dim
    return choi_from_kraus(_decoder_no_erasure_kraus(sectors), K * ds * K * ds, K)


def _decoder_erasure_kraus(K: int, d_s: int) -> List[np.ndarray]:
    return [np.kron(np.eye(K), _ket(d_s, s)[None, :]) for s in range(d_s)]


def decoder_erasure(K: int = 2, d_s: int = 2) -> ChoiMatrix:
    """D¹: trace out the output shield B1''."""
    return choi_from_kraus(_decoder_erasure_kraus(K, d_s), K * d_s, K)


def flagged_decoder(sectors: PrivateStateSectors) -> ChoiMatrix:
    """
    D̃ on the joint output (B1', B1'', B2) → (qubit, flag).

    Measures whether B2 holds the erasure symbol, runs D⁰ or D¹ accordingly
    and writes the outcome to the flag.
    """
    K, ds = sectors.key_dim, sectors.shield_dim
    a_dim = K * ds
    b2 = a_dim + 1
    keep = np.kron(np.eye(a_dim), np.eye(a_dim, b2))
    erased = np.kron(np.eye(a_dim), _ket(b2, a_dim)[None, :])
    flag0 = np.kron(np.eye(K), _ket(2, 0)[:, None])
    flag1 = np.kron(np.eye(K), _ket(2, 1)[:, None])
    ops = [flag0 @ k @ keep for k in _decoder_no_erasure_kraus(sectors)]
    ops += [flag1 @ k @ erased for k in _decoder_erasure_kraus(K, ds)]
    return choi_from_kraus(ops, a_dim * b2, 2 * K)


def joint_channel(q: float = 0.5, p: float = HORODECKI_P) -> ChoiMatrix:
    """P ⊗ A^q on 16 → 20 dimensions."""
    return tensor(horodecki_channel(p), erasure_channel(4, q))


def protocol_state(sectors: PrivateStateSectors, rho: Optional[np.ndarray] = None) -> np.ndarray:
    """ω⁰ on (B1', B1'', A2', A2''): the encoded input after P ⊗ id, before decoding. Defaults to ρ = |0⟩⟨0|."""
    K, ds = sectors.key_dim, sectors.shield_dim
    rho = _proj(_ket(K, 0)) if rho is None else rho
    channel = compose(encoder_tilde(K, ds), tensor(horodecki_channel(), identity_channel(K * ds)))
    return apply(channel, rho)


def parity_outcome_probabilities(sectors: PrivateStateSectors, rho: Optional[np.ndarray] = None) -> np.ndarray:
    """Probabilities of the parity outcomes ℓ after encoding, P ⊗ id, and untwisting."""
    K, ds = sectors.key_dim, sectors.shield_dim
    state = protocol_state(sectors, rho)
    untwist = _untwist_operator(sectors)
    state = untwist @ state @ untwist.conj().T
    probs = np.zeros(K)
    for ell in range(K):
        parity = sum(np.kron(_proj(_ket(K, (i + ell) % K)), _proj(_ket(K, i))) for i in range(K))
        projector = permute_systems(np.kron(parity, np.eye(ds * ds)), [K, K, ds, ds], [0, 2, 1, 3])
        probs[ell] = float(np.real(np.trace(projector @ state)))
    return probs


# ---------------------------------------------------------------------------
# Effective channel
# ---------------------------------------------------------------------------

def pauli_branch_channel(weights: Sequence[float]) -> ChoiMatrix:
    """X^{p̄} ∘ Δ̄: complete dephasing followed by a random shift ℓ ~ p̄."""
    K = len(weights)
    ops = []
    for ell, w in enumerate(weights):
        for a in range(K):
            ops.append(np.sqrt(w) * np.outer(_ket(K, (a + ell) % K), _ket(K, a)))
    return choi_from_kraus(ops, K, K)


def _check_spec(spec: EffectiveChannelSpec) -> None:
    if not 0.0 <= spec.erasure_prob <= 1.0:
        raise InvalidParameterError(f"Erasure probability must lie in [0, 1], got {spec.erasure_prob}")
    w = np.asarray(spec.weights, dtype=float)
    if len(w) != spec.key_dim or np.any(w < -1e-15) or abs(w.sum() - 1.0) > 1e-12:
        raise InvalidParameterError(f"Weights {spec.weights} are not a distribution on {spec.key_dim} letters")


def effective_channel(spec: EffectiveChannelSpec = EffectiveChannelSpec()) -> ChoiMatrix:
    """Ñ(ρ) = (1−q) ρ ⊗ |0⟩⟨0| + q (X^{p̄}∘Δ̄)(ρ) ⊗ |1⟩⟨1|, output ordered (qubit, flag)."""
    _check_spec(spec)
    K, q = spec.key_dim, spec.erasure_prob
    ops = [np.sqrt(1 - q) * np.kron(np.eye(K), _ket(2, 0)[:, None])]
    for ell, w in enumerate(spec.weights):
        for a in range(K):
            jump = np.outer(_ket(K, (a + ell) % K), _ket(K, a))
            ops.append(np.sqrt(q * w) * np.kron(jump, _ket(2, 1)[:, None]))
    return choi_from_kraus(ops, K, 2 * K)


def verify_effective_equivalence(
    erasure_prob: float = 0.5,
    sectors: Optional[PrivateStateSectors] = None,
) -> float:
    """
    Max-abs entrywise difference between Choi(D̃ ∘ (P ⊗ A^q) ∘ Ẽ) and Choi(Ñ).

    Args:
        erasure_prob: Erasure probability of the physical channel and of Ñ
        sectors: Decoder sectors (defaults to the closed-form decomposition)

    Returns:
        The residual; ≈ 0 when the protocol realizes Ñ exactly
    """
    reference = private_decomposition()
    sectors = sectors or reference
    K, ds = reference.key_dim, reference.shield_dim
    protocol = compose(
        compose(encoder_tilde(K, ds), joint_channel(erasure_prob)),
        flagged_decoder(sectors),
    )
    target = effective_channel(EffectiveChannelSpec(K, ds, erasure_prob, reference.weights))
    residual = float(np.max(np.abs(protocol.gamma - target.gamma)))
    logger.info(f"Effective-channel identity residual at q={erasure_prob}: {residual:.3e}")
    return residual


def pauli_flag_channel_k(n: int, k: int, spec: EffectiveChannelSpec = EffectiveChannelSpec()) -> FlaggedSiteChannels:
    """Single-site description of N_k = P^{⊗k} ⊗ id^{⊗(n−k)}."""
    if not 0 <= k <= n:
        raise InvalidParameterError(f"Need 0 <= k <= n, got k={k}, n={n}")
    return FlaggedSiteChannels(
        n=n,
        k=k,
        erased=pauli_branch_channel(spec.weights),
        intact=identity_channel(spec.key_dim),
    )


def output_mes_state(spec: EffectiveChannelSpec = EffectiveChannelSpec()) -> DensityOperator:
    """ξ_{RB'Z} = (id ⊗ Ñ)(Φ^K)."""
    channel = effective_channel(spec)
    return DensityOperator(dim=channel.gamma.shape[0], rho=hermitize(channel.state))

