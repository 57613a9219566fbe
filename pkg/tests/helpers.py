"""Shared builders and independent reference implementations.

The reference routines recompute quantities through a different route
than the package (explicit transfer matrices, direct kernel sums,
central differences), so tests compare two independent paths instead
of checking an implementation against itself.
"""

import math

import numpy as np

from bellmp import (
    Dimension,
    MeasurementSettings,
    PhaseVector,
    bell_value,
    kernel_f,
    make_state,
)

SETTING_SIGNS = (((1, 1), 1.0), ((1, 2), 1.0), ((2, 1), -1.0), ((2, 2), 1.0))


def random_phase_vector(rng, dim):
    return PhaseVector(dim, tuple(rng.uniform(0.0, 2.0 * math.pi, dim.d)))


def random_settings(rng, d):
    dim = Dimension(d)
    return MeasurementSettings(
        dim, *(random_phase_vector(rng, dim) for _ in range(4))
    )


def random_state(rng, d, signed=False):
    lo = -1.0 if signed else 0.05
    values = rng.uniform(lo, 1.0, d)
    while float(values @ values) < 1e-4:  # reject near-degenerate draws
        values = rng.uniform(lo, 1.0, d)
    return make_state(Dimension(d), tuple(values))


def settings_from_rows(dim, rows):
    return MeasurementSettings(dim, *(PhaseVector(dim, tuple(r)) for r in rows))


def settings_rows(settings):
    return [
        list(settings.a1.phases),
        list(settings.a2.phases),
        list(settings.b1.phases),
        list(settings.b2.phases),
    ]


def transfer_matrix(phases):
    """U[m, k] = gamma^{mk} e^{i phi_k} / sqrt(d), built from scratch."""
    d = len(phases)
    gamma = np.exp(2j * math.pi / d)
    mk = np.outer(np.arange(d), np.arange(d))
    return gamma ** mk * np.exp(1j * np.asarray(phases)) / math.sqrt(d)


def reference_table(state, settings):
    """P(m, n) for all settings by contracting the transfer matrices."""
    d = state.dim.d
    a = np.asarray(state.coefficients)
    out = np.empty((2, 2, d, d))
    for i in (1, 2):
        ua = transfer_matrix(settings.alice(i).phases)
        for j in (1, 2):
            ub = transfer_matrix(settings.bob(j).phases)
            amp = np.einsum("k,mk,nk->mn", a, ua, ub)
            out[i - 1, j - 1] = np.abs(amp) ** 2 / d
    return out


def reference_correlation(table_slice, i, j, dim, variant):
    total = 0.0
    for m in range(dim.d):
        for n in range(dim.d):
            total += kernel_f(i, j, m, n, dim, variant) * table_slice[m, n]
    return total / dim.spin


def reference_bell_value(state, settings, variant):
    """I from the reference table plus direct kernel sums."""
    table = reference_table(state, settings)
    total = 0.0
    for (i, j), sign in SETTING_SIGNS:
        total += sign * reference_correlation(
            table[i - 1, j - 1], i, j, state.dim, variant
        )
    return total


def central_difference_gradient(state, settings, variant, step=1e-6):
    """d I / d phi by central differences, ordered A1, A2, B1, B2."""
    dim = state.dim
    rows = settings_rows(settings)
    grad = np.empty(4 * dim.d)
    for r in range(4):
        for k in range(dim.d):
            hi = [row[:] for row in rows]
            lo = [row[:] for row in rows]
            hi[r][k] += step
            lo[r][k] -= step
            f_hi = bell_value(state, settings_from_rows(dim, hi), variant)
            f_lo = bell_value(state, settings_from_rows(dim, lo), variant)
            grad[r * dim.d + k] = (f_hi - f_lo) / (2.0 * step)
    return grad
