"""Quantum side of the experiment: multiport interferometers, joint
outcome probabilities, correlation functions, the Bell value and its
analytic gradient, the T-coefficient decomposition, and finite-shot
sampling.

The measurement model: each party feeds its half of the entangled
state through an unbiased d-port Fourier multiport with per-input
phase shifters.  With state coefficients a_k (sum a_k^2 = d) and phase
vectors phi^{A_i}, phi^{B_j}, the joint outcome distribution for a
setting pair depends on the outcomes only through u = (m + n) mod d:

    P(m, n) = (1/d^3) |sum_k a_k gamma^{k(m+n)} e^{i(phi_k^{A_i} + phi_k^{B_j})}|^2

with gamma = exp(2 pi i / d).  The 1/d^3 prefactor is the unique
normalization making each setting's table sum to one under the state
convention above.  All heavy paths exploit the class structure in u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import (
    Dimension,
    KernelVariant,
    MeasurementSettings,
    PureState,
    ValidationError,
    DimensionMismatchError,
)
from .analytic import PAIR_SLOTS, gamma_constants

__all__ = [
    "MultiportUnitary",
    "JointProbabilityTable",
    "TCoefficients",
    "SampleEstimate",
    "multiport_unitary",
    "joint_probabilities",
    "correlation_q",
    "bell_value",
    "bell_value_noisy",
    "t_coefficients",
    "t_coefficients_alt",
    "bell_gradient",
    "value_and_gradient_arrays",
    "sample_experiment",
]

_NEGATIVE_CLAMP = -1e-14
_SLICE_SUM_TOL = 1e-12
_UNITARY_TOL = 1e-12

# Setting pairs (i, j) in evaluation order, their signs in the Bell
# combination I = Q11 + Q12 - Q21 + Q22, and the sign of eps(i - j).
_SETTING_PAIRS = ((1, 1), (1, 2), (2, 1), (2, 2))
_PAIR_SIGNS = np.array([1.0, 1.0, -1.0, 1.0])
_EPS_ROW = (0, 1, 0, 0)  # 0: eps = +1 (i >= j), 1: eps = -1 (i < j)


@lru_cache(maxsize=None)
def _dft(d: int) -> np.ndarray:
    # V[u, k] = gamma^{u k}
    u = np.arange(d)
    V = np.exp(2j * np.pi * np.outer(u, u) / d)
    V.flags.writeable = False
    return V


@lru_cache(maxsize=None)
def _class_weights(d: int, variant: KernelVariant) -> np.ndarray:
    # W[e, u] = sum of kernel values over the outcome class
    # {(m, n): (m + n) mod d = u}; e indexes the sign of eps.
    spin = (d - 1) / 2
    W = np.zeros((2, d))
    for m in range(d):
        for n in range(d):
            u = (m + n) % d
            combo = m + n if variant is KernelVariant.PLUS else m - n
            W[0, u] += spin - (combo % d)
            W[1, u] += spin - ((-combo) % d)
    W.flags.writeable = False
    return W


@lru_cache(maxsize=None)
def _kernel_matrix(d: int, i: int, j: int, variant: KernelVariant) -> np.ndarray:
    eps = -1 if i < j else 1
    m = np.arange(d)[:, None]
    n = np.arange(d)[None, :]
    combo = m + n if variant is KernelVariant.PLUS else m - n
    F = (d - 1) / 2 - ((eps * combo) % d)
    F.flags.writeable = False
    return F


def _phase_matrix(settings: MeasurementSettings) -> np.ndarray:
    return np.array([
        settings.a1.phases,
        settings.a2.phases,
        settings.b1.phases,
        settings.b2.phases,
    ])


def _setting_thetas(phases: np.ndarray) -> np.ndarray:
    # Row r of the result is phi^{A_i} + phi^{B_j} for _SETTING_PAIRS[r].
    return phases[(0, 0, 1, 1), :] + phases[(2, 3, 2, 3), :]


@dataclass(frozen=True, eq=False)
class MultiportUnitary:
    """Transfer matrix of one party's phased Fourier multiport:
    U[i, j] = (1/sqrt d) gamma^{ij} e^{i phi_j}, indices 0-based."""

    dim: Dimension
    matrix: np.ndarray

    def __post_init__(self) -> None:
        d = self.dim.d
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (d, d):
            raise DimensionMismatchError(f"expected a {d}x{d} matrix, got {m.shape}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValidationError("matrix entries must be finite")
        if np.max(np.abs(m.conj().T @ m - np.eye(d))) > _UNITARY_TOL:
            raise ValidationError("matrix is not unitary within 1e-12")
        if np.max(np.abs(np.abs(m) - 1.0 / math.sqrt(d))) > _UNITARY_TOL:
            raise ValidationError("matrix is not unbiased within 1e-12")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)


def multiport_unitary(dim: Dimension, phases) -> MultiportUnitary:
    if phases.dim != dim:
        raise DimensionMismatchError(
            f"phases have dimension {phases.dim.d}, expected {dim.d}"
        )
    d = dim.d
    U = _dft(d) / math.sqrt(d) * np.exp(1j * np.asarray(phases.phases))[None, :]
    return MultiportUnitary(dim, U)


@dataclass(frozen=True, eq=False)
class JointProbabilityTable:
    """P(m, n) for all four setting pairs, shape (2, 2, d, d).

    Entries may carry negative round-off down to -1e-14, which is
    clamped to zero; anything more negative is rejected.  Every
    setting's slice must sum to one within 1e-12.
    """

    dim: Dimension
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        d = self.dim.d
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (2, 2, d, d):
            raise DimensionMismatchError(
                f"expected shape (2, 2, {d}, {d}), got {p.shape}"
            )
        if not np.all(np.isfinite(p)):
            raise ValidationError("probabilities must be finite")
        if np.min(p) < _NEGATIVE_CLAMP:
            raise ValidationError(
                f"probability {np.min(p)!r} below the -1e-14 round-off allowance"
            )
        p = np.clip(p, 0.0, None)
        sums = p.sum(axis=(2, 3))
        if np.max(np.abs(sums - 1.0)) > _SLICE_SUM_TOL:
            raise ValidationError(
                f"setting slices must sum to 1 within 1e-12, got {sums.tolist()!r}"
            )
        p.flags.writeable = False
        object.__setattr__(self, "probabilities", p)

    def setting(self, i: int, j: int) -> np.ndarray:
        if i not in (1, 2) or j not in (1, 2):
            raise ValidationError(f"setting indices must be 1 or 2, got ({i}, {j})")
        return self.probabilities[i - 1, j - 1]

    def prob(self, i: int, j: int, m: int, n: int) -> float:
        return float(self.setting(i, j)[m, n])


def joint_probabilities(state: PureState, settings: MeasurementSettings) -> JointProbabilityTable:
    if state.dim != settings.dim:
        raise DimensionMismatchError(
            f"state dimension {state.dim.d} != settings dimension {settings.dim.d}"
        )
    d = state.dim.d
    theta = _setting_thetas(_phase_matrix(settings))
    c = np.asarray(state.coefficients) * np.exp(1j * theta)
    ahat = c @ _dft(d).T
    class_p = np.abs(ahat) ** 2 / d**3
    idx = (np.arange(d)[:, None] + np.arange(d)[None, :]) % d
    p = class_p[:, idx].reshape(2, 2, d, d)
    return JointProbabilityTable(state.dim, p)


def correlation_q(table: JointProbabilityTable, i: int, j: int, variant: KernelVariant) -> float:
    """Q_ij = (1/S) sum_{m,n} f_ij(m, n) P(m, n), in [-1, 1]."""
    d = table.dim.d
    F = _kernel_matrix(d, i, j, variant)
    return float(np.sum(F * table.setting(i, j)) / table.dim.spin)


def _bell_from_table(table: JointProbabilityTable, variant: KernelVariant) -> float:
    q = [correlation_q(table, i, j, variant) for i, j in _SETTING_PAIRS]
    return q[0] + q[1] - q[2] + q[3]


def bell_value(state: PureState, settings: MeasurementSettings,
               variant: KernelVariant = KernelVariant.PLUS) -> float:
    """I = Q11 + Q12 - Q21 + Q22 evaluated through the probability table."""
    return _bell_from_table(joint_probabilities(state, settings), variant)


def bell_value_noisy(state: PureState, settings: MeasurementSettings,
                     noise_fraction: float,
                     variant: KernelVariant = KernelVariant.PLUS) -> float:
    """Bell value of the uniform-noise admixture: the outcome table is
    (1 - F) P + F / d^2.  The kernel sums to zero over the outcome
    table, so the uniform part contributes nothing and the result
    equals (1 - F) times the noiseless value; it is still evaluated on
    the mixed table rather than by that shortcut."""
    f = float(noise_fraction)
    if not 0.0 <= f <= 1.0:
        raise ValidationError(f"noise fraction must lie in [0, 1], got {noise_fraction!r}")
    table = joint_probabilities(state, settings)
    d = state.dim.d
    mixed = JointProbabilityTable(
        state.dim, (1.0 - f) * table.probabilities + f / d**2
    )
    return _bell_from_table(mixed, variant)


_CHI_BY_GAP = {1: 1.0, 2: 0.0, 3: -1.0}


@dataclass(frozen=True)
class TCoefficients:
    """The six pair coefficients of the bilinear decomposition
    I = sum_{k<l} a_k a_l T_kl (d = 4, plus-variant kernel).

    Magnitudes are bounded by Gamma_1 for index gaps 1 and 3 and by
    Gamma_2 for gap 2; the constructor enforces the bounds with a
    1e-9 allowance.
    """

    t01: float
    t02: float
    t03: float
    t12: float
    t13: float
    t23: float

    def __post_init__(self) -> None:
        g = gamma_constants()
        bounds = {1: g.gamma1, 2: g.gamma2, 3: g.gamma1}
        for (k, l), value in zip(PAIR_SLOTS, self.values()):
            if abs(value) > bounds[l - k] + 1e-9:
                raise ValidationError(
                    f"|T{k}{l}| = {abs(value)!r} exceeds its bound {bounds[l - k]!r}"
                )

    def values(self) -> tuple[float, ...]:
        return (self.t01, self.t02, self.t03, self.t12, self.t13, self.t23)

    def __getitem__(self, pair: tuple[int, int]) -> float:
        return self.values()[PAIR_SLOTS.index(pair)]

    def bilinear(self, state: PureState) -> float:
        """sum_{k<l} a_k a_l T_kl for the given state."""
        a = state.coefficients
        return sum(a[k] * a[l] * t for (k, l), t in zip(PAIR_SLOTS, self.values()))


def t_coefficients(settings: MeasurementSettings) -> TCoefficients:
    """Pair coefficients such that bell_value(state, settings) equals
    TCoefficients.bilinear(state) for every d = 4 state.

    Each pair (k, l) contributes (1/6) a_k a_l (cos D + sigma sin D)
    to Q_ij, where D is the pair phase phi_kl^{ij} and sigma depends on
    the index gap (zero for gap 2) and flips sign on the (1, 2)
    setting; summing with the +, +, -, + signature gives T_kl.
    """
    if settings.dim.d != 4:
        raise ValidationError(
            f"the T decomposition is defined for dimension 4, got {settings.dim.d}"
        )
    out = []
    for k, l in PAIR_SLOTS:
        chi = _CHI_BY_GAP[l - k]
        d11 = settings.pair_phase(1, 1, k, l)
        d12 = settings.pair_phase(1, 2, k, l)
        d21 = settings.pair_phase(2, 1, k, l)
        d22 = settings.pair_phase(2, 2, k, l)
        out.append((
            (math.cos(d11) + chi * math.sin(d11))
            + (math.cos(d12) - chi * math.sin(d12))
            - (math.cos(d21) + chi * math.sin(d21))
            + (math.cos(d22) + chi * math.sin(d22))
        ) / 6.0)
    return TCoefficients(*out)


def t_coefficients_alt(settings: MeasurementSettings) -> dict[tuple[int, int], float]:
    """Alternative sign-convention forms of the six coefficients that
    circulate for this decomposition.  They fail the zero-phase
    identity (their sum there is -2/3 where the identity needs 2), so
    they are exposed for diagnostics only; nothing downstream uses
    them.
    """
    if settings.dim.d != 4:
        raise ValidationError(
            f"the T decomposition is defined for dimension 4, got {settings.dim.d}"
        )

    def cs(k: int, l: int) -> tuple[list[float], list[float]]:
        ds = [settings.pair_phase(i, j, k, l)
              for (i, j) in ((1, 1), (2, 1), (1, 2), (2, 2))]
        return [math.cos(x) for x in ds], [math.sin(x) for x in ds]

    c, s = cs(0, 1)
    t01 = ((c[0] - c[1] - c[2] + c[3]) - (s[0] + s[1] + s[2] + s[3])) / 6.0
    c, s = cs(0, 2)
    t02 = -(c[0] - c[1] + c[2] + c[3]) / 6.0
    c, s = cs(0, 3)
    t03 = ((c[0] - c[1] - c[2] + c[3]) + (s[0] + s[1] + s[2] + s[3])) / 6.0
    c, s = cs(1, 2)
    t12 = ((c[0] - c[1] - c[2] + c[3]) - (s[0] - s[1] + s[2] + s[3])) / 6.0
    c, s = cs(1, 3)
    t13 = -(c[0] - c[1] + c[2] + c[3]) / 6.0
    c, s = cs(2, 3)
    t23 = ((c[0] - c[1] - c[2] + c[3]) - (s[0] - s[1] + s[2] + s[3])) / 6.0
    return dict(zip(PAIR_SLOTS, (t01, t02, t03, t12, t13, t23)))


def value_and_gradient_arrays(coefficients: np.ndarray, phases: np.ndarray,
                              d: int, variant: KernelVariant) -> tuple[float, np.ndarray, np.ndarray]:
    """Low-level evaluation on raw arrays: Bell value, its gradient
    with respect to the (4, d) phase matrix (rows A1, A2, B1, B2), and
    its gradient with respect to the state coefficients.

    No validation happens here; this is the optimizer's hot path.  The
    phase gradient exploits that the class amplitudes are a DFT of the
    phased coefficients.
    """
    V = _dft(d)
    W = _class_weights(d, variant)[_EPS_ROW, :]
    spin_scale = 1.0 / (((d - 1) / 2) * d**3)
    theta = _setting_thetas(phases)
    phase_factor = np.exp(1j * theta)
    c = coefficients * phase_factor
    ahat = c @ V.T
    q = spin_scale * np.sum(W * np.abs(ahat) ** 2, axis=1)
    value = float(q @ _PAIR_SIGNS)
    G = (W * ahat.conj()) @ V
    dq_dtheta = -2.0 * spin_scale * np.imag(c * G)
    signed = dq_dtheta * _PAIR_SIGNS[:, None]
    grad_phases = np.empty((4, d))
    grad_phases[0] = signed[0] + signed[1]
    grad_phases[1] = signed[2] + signed[3]
    grad_phases[2] = signed[0] + signed[2]
    grad_phases[3] = signed[1] + signed[3]
    grad_state = 2.0 * spin_scale * (
        (_PAIR_SIGNS[:, None] * np.real(phase_factor * G)).sum(axis=0)
    )
    return value, grad_phases, grad_state


def bell_gradient(state: PureState, settings: MeasurementSettings,
                  variant: KernelVariant = KernelVariant.PLUS) -> np.ndarray:
    """Partial derivatives of bell_value with respect to every phase,
    ordered A1, A2, B1, B2 with d entries each."""
    if state.dim != settings.dim:
        raise DimensionMismatchError(
            f"state dimension {state.dim.d} != settings dimension {settings.dim.d}"
        )
    _, grad_phases, _ = value_and_gradient_arrays(
        np.asarray(state.coefficients), _phase_matrix(settings), state.dim.d, variant
    )
    return grad_phases.reshape(-1)


@dataclass(frozen=True, eq=False)
class SampleEstimate:
    """Finite-shot estimate of the Bell value.

    counts has shape (2, 2, d, d); each setting slice sums to
    shots_per_setting.  value_estimate is the plug-in value from raw
    empirical frequencies.  std_error propagates per-setting
    multinomial variances computed from half-count smoothed
    frequencies, so it stays positive even when all shots land in one
    cell.
    """

    shots_per_setting: int
    counts: np.ndarray
    value_estimate: float
    std_error: float

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts)
        counts = counts.copy()
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        if self.shots_per_setting < 1:
            raise ValidationError("shots_per_setting must be >= 1")
        if np.any(counts.sum(axis=(2, 3)) != self.shots_per_setting):
            raise ValidationError("each setting slice must sum to shots_per_setting")


def sample_experiment(state: PureState, settings: MeasurementSettings,
                      shots_per_setting: int, seed: int,
                      variant: KernelVariant = KernelVariant.PLUS) -> SampleEstimate:
    """Draw shots_per_setting outcomes per setting pair by inverse-CDF
    sampling with a seeded PRNG; deterministic for a fixed seed."""
    shots = int(shots_per_setting)
    if shots < 1:
        raise ValidationError(f"shots_per_setting must be >= 1, got {shots_per_setting!r}")
    table = joint_probabilities(state, settings)
    d = state.dim.d
    spin = state.dim.spin
    rng = np.random.default_rng(seed)
    counts = np.zeros((2, 2, d, d), dtype=np.int64)
    for i, j in _SETTING_PAIRS:  # fixed order, one stream
        cdf = np.cumsum(table.setting(i, j).reshape(-1))
        cdf[-1] = 1.0  # guard against round-off at the top end
        draws = np.searchsorted(cdf, rng.random(shots), side="right")
        counts[i - 1, j - 1] = np.bincount(draws, minlength=d * d).reshape(d, d)

    value = 0.0
    variance = 0.0
    for (i, j), sign in zip(_SETTING_PAIRS, _PAIR_SIGNS):
        F = _kernel_matrix(d, i, j, variant)
        c = counts[i - 1, j - 1]
        value += sign * float(np.sum(F * c)) / (spin * shots)
        smoothed = (c + 0.5) / (shots + 0.5 * d * d)
        m1 = float(np.sum(smoothed * F))
        m2 = float(np.sum(smoothed * F * F))
        variance += (m2 - m1 * m1) / (spin * spin * shots)
    return SampleEstimate(shots, counts, value, math.sqrt(variance))
