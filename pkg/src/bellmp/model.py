"""Core types for a two-party, two-setting Bell test with d outcomes.

Conventions used throughout the package:

- Outcomes m, n run over 0..d-1.  Each party chooses between two
  measurement settings, indexed 1 and 2.
- The spin parameter is S = (d - 1) / 2.  Correlations are weighted by
  the half-integer kernel

      f_ij(m, n) = S - M(eps(i - j) * (m + n), d)        (plus variant)
      f_ij(m, n) = S - M(eps(i - j) * (m - n), d)        (minus variant)

  where M(x, d) is the non-negative residue of x modulo d and
  eps(x) = +1 for x >= 0, -1 otherwise.  Only the setting pair
  (i, j) = (1, 2) picks up the sign flip.
- Pure states carry real coefficients normalized so that the squares
  sum to d; the maximally entangled state has every coefficient 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "BellError",
    "DimensionMismatchError",
    "DegenerateStateError",
    "ValidationError",
    "KernelVariant",
    "Dimension",
    "PureState",
    "PhaseVector",
    "MeasurementSettings",
    "kernel_f",
    "make_state",
    "maximally_entangled_state",
    "zero_settings",
    "NORMALIZATION_TOLERANCE",
]

NORMALIZATION_TOLERANCE = 1e-12


class BellError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(BellError):
    """Inputs disagree about the outcome dimension d."""


class DegenerateStateError(BellError):
    """A state vector with no usable weight (all coefficients zero)."""


class ValidationError(BellError):
    """A value violates a documented constraint (range, finiteness, ...)."""


class KernelVariant(enum.Enum):
    """Sign convention inside the correlation kernel: m + n or m - n."""

    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class Dimension:
    """Outcome dimension d of each measurement, d >= 2."""

    d: int

    def __post_init__(self) -> None:
        if not isinstance(self.d, int) or isinstance(self.d, bool):
            raise ValidationError(f"dimension must be an int, got {self.d!r}")
        if self.d < 2:
            raise ValidationError(f"dimension must be >= 2, got {self.d}")

    @property
    def spin(self) -> float:
        """S = (d - 1) / 2, the largest kernel value."""
        return (self.d - 1) / 2


def _as_float_tuple(values: Iterable[float], what: str) -> tuple[float, ...]:
    out = []
    for v in values:
        x = float(v)
        if not math.isfinite(x):
            raise ValidationError(f"{what} entries must be finite, got {v!r}")
        out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class PureState:
    """Real-coefficient entangled state sum_k a_k |kk>, with sum a_k^2 = d.

    Construct through :func:`make_state`, which normalizes arbitrary
    non-zero input; the constructor itself insists the normalization
    already holds to within ``NORMALIZATION_TOLERANCE``.
    """

    dim: Dimension
    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = _as_float_tuple(self.coefficients, "state coefficient")
        object.__setattr__(self, "coefficients", coeffs)
        if len(coeffs) != self.dim.d:
            raise DimensionMismatchError(
                f"expected {self.dim.d} coefficients, got {len(coeffs)}"
            )
        norm_sq = sum(c * c for c in coeffs)
        if abs(norm_sq - self.dim.d) > NORMALIZATION_TOLERANCE * self.dim.d:
            raise ValidationError(
                f"coefficients must satisfy sum(a^2) = d = {self.dim.d}, "
                f"got {norm_sq!r}"
            )


@dataclass(frozen=True)
class PhaseVector:
    """One party's output phases for a single setting, one angle per port."""

    dim: Dimension
    phases: tuple[float, ...]

    def __post_init__(self) -> None:
        phases = _as_float_tuple(self.phases, "phase")
        object.__setattr__(self, "phases", phases)
        if len(phases) != self.dim.d:
            raise DimensionMismatchError(
                f"expected {self.dim.d} phases, got {len(phases)}"
            )


@dataclass(frozen=True)
class MeasurementSettings:
    """The four phase vectors of a full experiment: A1, A2, B1, B2."""

    dim: Dimension
    a1: PhaseVector
    a2: PhaseVector
    b1: PhaseVector
    b2: PhaseVector

    def __post_init__(self) -> None:
        for name in ("a1", "a2", "b1", "b2"):
            vec: PhaseVector = getattr(self, name)
            if vec.dim != self.dim:
                raise DimensionMismatchError(
                    f"setting {name} has dimension {vec.dim.d}, expected {self.dim.d}"
                )

    def alice(self, i: int) -> PhaseVector:
        if i not in (1, 2):
            raise ValidationError(f"setting index must be 1 or 2, got {i}")
        return self.a1 if i == 1 else self.a2

    def bob(self, j: int) -> PhaseVector:
        if j not in (1, 2):
            raise ValidationError(f"setting index must be 1 or 2, got {j}")
        return self.b1 if j == 1 else self.b2

    def pair_phase(self, i: int, j: int, k: int, l: int) -> float:
        """phi_k^{A_i} - phi_l^{A_i} + phi_k^{B_j} - phi_l^{B_j}."""
        a = self.alice(i).phases
        b = self.bob(j).phases
        return a[k] - a[l] + b[k] - b[l]


def kernel_f(i: int, j: int, m: int, n: int, dim: Dimension, variant: KernelVariant) -> float:
    """Half-integer correlation kernel f_ij(m, n) in [-S, S].

    For every setting pair the kernel takes each value S - k
    (k = 0..d-1) on exactly d of the d^2 outcome pairs, so it sums
    to zero over the full outcome table.
    """
    if i not in (1, 2) or j not in (1, 2):
        raise ValidationError(f"setting indices must be 1 or 2, got ({i}, {j})")
    if not (0 <= m < dim.d and 0 <= n < dim.d):
        raise ValidationError(
            f"outcomes must lie in 0..{dim.d - 1}, got ({m}, {n})"
        )
    eps = -1 if i < j else 1
    combo = m + n if variant is KernelVariant.PLUS else m - n
    return dim.spin - ((eps * combo) % dim.d)


def make_state(dim: Dimension, coeffs: Sequence[float]) -> PureState:
    """Normalize real coefficients to sum(a^2) = d and wrap as a state.

    Raises a dimension error on a length mismatch and a
    degenerate-state error when every coefficient is zero.
    """
    values = _as_float_tuple(coeffs, "state coefficient")
    if len(values) != dim.d:
        raise DimensionMismatchError(
            f"expected {dim.d} coefficients, got {len(values)}"
        )
    norm_sq = sum(c * c for c in values)
    if norm_sq == 0.0:
        raise DegenerateStateError("cannot normalize the all-zero state")
    scale = math.sqrt(dim.d / norm_sq)
    return PureState(dim, tuple(c * scale for c in values))


def maximally_entangled_state(dim: Dimension) -> PureState:
    """The state with every coefficient equal to 1."""
    return PureState(dim, (1.0,) * dim.d)


def zero_settings(dim: Dimension) -> MeasurementSettings:
    """All four phase vectors identically zero."""
    zero = PhaseVector(dim, (0.0,) * dim.d)
    return MeasurementSettings(dim, zero, zero, zero, zero)
