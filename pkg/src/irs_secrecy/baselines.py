"""Reference schemes and exhaustive-search oracles.

Random-phase and surface-free schemes bracket the optimizer from below;
the lattice and corner searches bracket the power loop from above at
desk scale. All schemes evaluate rates through the rates module.
"""

import enum

import numpy as np

from .power_opt import fp_loop
from .rates import (breakdown_from_gains, min_secrecy_batch, phase_gains,
                    random_phase_vector, secrecy_breakdown)

GRID_GUARD = 10**8


class BaselineKind(enum.Enum):
    RANDOM_PHASE_OPT_POWER = "random-opt"
    RANDOM_PHASE_PMAX = "random-pmax"
    RANDOM_PHASE_PMIN = "random-pmin"
    NO_IRS_OPT_POWER = "noirs-opt"
    NO_IRS_PMAX = "noirs-pmax"
    NO_IRS_PMIN = "noirs-pmin"
    GRID_SEARCH_POWER = "grid"
    CORNER_SEARCH_POWER = "corner"


POWER_MODE_MIN = "pmin"
POWER_MODE_MAX = "pmax"
POWER_MODE_OPT = "opt"


def _powers_for_mode(eff, omega, params, power_mode):
    n = eff.n_users
    if power_mode == POWER_MODE_MIN:
        return np.full(n, params.Pmin)
    if power_mode == POWER_MODE_MAX:
        return np.full(n, params.Pmax)
    if power_mode == POWER_MODE_OPT:
        P, _ = fp_loop(eff, omega, None, params)
        return P
    raise ValueError(f"unknown power mode {power_mode!r}")


def random_phase_baseline(eff, params, seed, power_mode):
    """One uniformly random phase draw, powers fixed or optimized."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    omega = random_phase_vector(rng, eff.L)
    P = _powers_for_mode(eff, omega, params, power_mode)
    return secrecy_breakdown(eff, P, omega, params)


def no_irs_baseline(chs, params, power_mode):
    """Direct links only: every cascaded entry zeroed before evaluation."""
    from .channel import build_effective

    eff = build_effective(chs).zero_cascade_copy()
    omega = np.ones(eff.L + 1, dtype=complex)
    P = _powers_for_mode(eff, omega, params, power_mode)
    return secrecy_breakdown(eff, P, omega, params)


def _lattice_axes(params, Q):
    return np.linspace(params.Pmin, params.Pmax, Q)


def grid_search_power(eff, omega, params, Q, chunk=200_000):
    """Exhaustive min-secrecy maximization over the Q^(2N) power lattice.

    Lattice points are evenly spaced in linear watts including both box
    endpoints, enumerated row-major in power-vector order; ties keep the
    lowest lattice index. Evaluation is chunked and vectorized.
    """
    n = eff.n_users
    if Q < 2:
        raise ValueError("need Q >= 2")
    total = Q**n
    if total > GRID_GUARD:
        raise ValueError(f"lattice of {total} points exceeds the guard")
    gains = phase_gains(eff, omega)
    axis = _lattice_axes(params, Q)
    best_val = -np.inf
    best_idx = -1
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        flat = np.arange(lo, hi)
        digits = np.empty((hi - lo, n), dtype=np.int64)
        rem = flat
        for d in range(n - 1, -1, -1):
            digits[:, d] = rem % Q
            rem = rem // Q
        P_batch = axis[digits]
        vals = min_secrecy_batch(gains, P_batch, params)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_idx = lo + k
    digits = np.empty(n, dtype=np.int64)
    rem = best_idx
    for d in range(n - 1, -1, -1):
        digits[d] = rem % Q
        rem = rem // Q
    return axis[digits], best_val


def corner_search_power(eff, omega, params):
    """Four-corner enumeration, valid for a single pair only."""
    if eff.n_pairs != 1:
        raise ValueError("corner enumeration is defined for one pair only")
    return grid_search_power(eff, omega, params, Q=2)
