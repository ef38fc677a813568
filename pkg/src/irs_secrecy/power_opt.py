"""Transmit-power optimization at fixed phases via quadratic transforms.

Each per-pair unclamped secrecy value is a sum of two signal ratios and a
negated leakage ratio. The two signal ratios use the standard transform
2 x sqrt(num) - x^2 den inside a log, tight at x = sqrt(num)/den. The
leakage ratio is handled by transforming its reciprocal 1/(1 + gamma_E),

    l(P, x3) = log2(2 x3 sqrt(den_E) - x3^2 (num_E + den_E)),

whose maximizer x3 = sqrt(den_E)/(num_E + den_E) recovers exactly
-log2(1 + gamma_E) and which is concave in P (log of a sqrt-of-affine
minus affine). Applying the transform directly to gamma_E and negating
the log ("direct_ratio" below) produces a convex, non-tight term; it is
kept only for evaluation, never for optimization.

Alternating the closed-form auxiliary update with the concave epigraph
solve ascends the true min-pair objective monotonically.
"""

from dataclasses import dataclass, field

import numpy as np

from .convex_kernel import (BoxLogTerm, ConcaveBoxProblem, SolverError,
                            solve_concave_box)
from .rates import (LN2, breakdown_from_gains, pair_user_indices, phase_gains)
from .util import fractional_increase

INVERTED_RATIO = "inverted_ratio"
DIRECT_RATIO = "direct_ratio"

_DOMAIN_FLOOR = 1e-300


class SurrogateDomainError(ValueError):
    """A log argument went nonpositive: the auxiliaries are stale for
    this power vector and must be refreshed. Carries the floored value."""

    def __init__(self, message, floored_value):
        super().__init__(message)
        self.floored_value = floored_value


def _pair_gain_views(gains, P, pair, params):
    P = np.asarray(P, dtype=float)
    a, b = pair_user_indices(pair)
    other = np.ones(gains.n_users, dtype=bool)
    other[[a, b]] = False
    noise = params.noise_legit
    den_a = float(P[other] @ gains.legit[other, a]) + noise
    den_b = float(P[other] @ gains.legit[other, b]) + noise
    den_e = float(P[other] @ gains.eve[other]) + params.sigma2
    num_e = P[a] * gains.eve[a] + P[b] * gains.eve[b]
    return a, b, other, den_a, den_b, den_e, num_e


def update_aux_from_gains(gains, P, params, leakage_transform=INVERTED_RATIO):
    """Closed-form per-pair auxiliaries (x1, x2, x3), shape (N, 3)."""
    P = np.asarray(P, dtype=float)
    N = gains.n_users // 2
    aux = np.zeros((N, 3))
    for pair in range(1, N + 1):
        a, b, _, den_a, den_b, den_e, num_e = _pair_gain_views(
            gains, P, pair, params)
        x1 = np.sqrt(P[b] * gains.legit[b, a]) / den_a
        x2 = np.sqrt(P[a] * gains.legit[a, b]) / den_b
        if leakage_transform == INVERTED_RATIO:
            x3 = np.sqrt(den_e) / (num_e + den_e)
        elif leakage_transform == DIRECT_RATIO:
            x3 = np.sqrt(num_e) / den_e
        else:
            raise ValueError(f"unknown leakage transform {leakage_transform!r}")
        aux[pair - 1] = (x1, x2, x3)
    return aux


def update_aux(eff, P, omega, params, leakage_transform=INVERTED_RATIO):
    return update_aux_from_gains(phase_gains(eff, omega), P, params,
                                 leakage_transform)


def surrogate_f_from_gains(gains, P, aux, pair, params,
                           leakage_transform=INVERTED_RATIO,
                           clip_domain=False):
    """Transformed pair value in bits for fixed auxiliaries, 1-based pair."""
    P = np.asarray(P, dtype=float)
    a, b, _, den_a, den_b, den_e, num_e = _pair_gain_views(gains, P, pair, params)
    x1, x2, x3 = aux[pair - 1]
    args = [
        1.0 + 2.0 * x1 * np.sqrt(P[b] * gains.legit[b, a]) - x1**2 * den_a,
        1.0 + 2.0 * x2 * np.sqrt(P[a] * gains.legit[a, b]) - x2**2 * den_b,
    ]
    if leakage_transform == INVERTED_RATIO:
        args.append(2.0 * x3 * np.sqrt(den_e) - x3**2 * (num_e + den_e))
    elif leakage_transform == DIRECT_RATIO:
        # literal transcription: the 2 x3 sqrt(num) term sits inside the
        # x3^2 bracket together with the interference-plus-noise sum
        args.append(1.0 - x3**2 * (den_e + 2.0 * x3 * np.sqrt(num_e)))
    else:
        raise ValueError(f"unknown leakage transform {leakage_transform!r}")
    floored = sum(np.log(max(arg, _DOMAIN_FLOOR)) for arg in args) / LN2
    if min(args) <= 0.0 and not clip_domain:
        raise SurrogateDomainError(
            f"nonpositive log argument for pair {pair}; refresh the auxiliaries",
            floored)
    return float(floored)


def surrogate_f(eff, P, omega, aux, pair, params,
                leakage_transform=INVERTED_RATIO, clip_domain=False):
    return surrogate_f_from_gains(phase_gains(eff, omega), P, aux, pair,
                                  params, leakage_transform, clip_domain)


def build_box_problem(gains, aux, params):
    """Epigraph problem over the power box for fixed auxiliaries."""
    n = gains.n_users
    noise = params.noise_legit
    cons = []
    for pair in range(1, n // 2 + 1):
        a, b = pair_user_indices(pair)
        other = np.ones(n, dtype=bool)
        other[[a, b]] = False
        x1, x2, x3 = aux[pair - 1]
        lin_a = np.where(other, gains.legit[:, a], 0.0)
        lin_b = np.where(other, gains.legit[:, b], 0.0)
        lin_e = np.where(other, gains.eve, 0.0)
        e_a = np.zeros(n)
        e_a[a] = gains.legit[a, b]
        e_b = np.zeros(n)
        e_b[b] = gains.legit[b, a]
        terms = (
            BoxLogTerm(coeff=1.0 / LN2, const=1.0 - x1**2 * noise,
                       lin=-x1**2 * lin_a, kappa=2.0 * x1, sq_const=0.0,
                       sq_lin=e_b),
            BoxLogTerm(coeff=1.0 / LN2, const=1.0 - x2**2 * noise,
                       lin=-x2**2 * lin_b, kappa=2.0 * x2, sq_const=0.0,
                       sq_lin=e_a),
            BoxLogTerm(coeff=1.0 / LN2, const=-x3**2 * params.sigma2,
                       lin=-x3**2 * gains.eve, kappa=2.0 * x3,
                       sq_const=params.sigma2, sq_lin=lin_e),
        )
        cons.append(terms)
    return ConcaveBoxProblem(n_vars=n, constraints=tuple(cons),
                             pmin=params.Pmin, pmax=params.Pmax)


@dataclass
class FpState:
    P_hat: np.ndarray
    aux: np.ndarray
    objective: float
    iteration: int = 0
    trace: list = field(default_factory=list)
    statuses: list = field(default_factory=list)


def fp_start_from_gains(gains, P0, params):
    P0 = np.asarray(P0, dtype=float)
    obj = breakdown_from_gains(gains, P0, params).min_secrecy
    aux = update_aux_from_gains(gains, P0, params)
    return FpState(P_hat=P0, aux=aux, objective=obj, trace=[obj])


def fp_step_from_gains(gains, state, params):
    aux = update_aux_from_gains(gains, state.P_hat, params)
    prob = build_box_problem(gains, aux, params)
    P, t, report = solve_concave_box(prob, start=state.P_hat)
    if not report.ok:
        raise SolverError(
            f"power subproblem failed with status {report.status.value} "
            f"at sub-iteration {state.iteration + 1}")
    obj = breakdown_from_gains(gains, P, params).min_secrecy
    return FpState(P_hat=P, aux=aux, objective=obj,
                   iteration=state.iteration + 1, trace=state.trace + [obj],
                   statuses=state.statuses + [report.status.value])


def fp_step(eff, omega, state, params):
    """One auxiliary refresh plus epigraph solve at fixed phases."""
    return fp_step_from_gains(phase_gains(eff, omega), state, params)


def fp_loop_from_gains(gains, P0, params, max_steps=None, eps=None,
                       on_step=None):
    cap = params.fp_subiter_cap if max_steps is None else max_steps
    tol = params.eps1 if eps is None else eps
    if P0 is None:
        P0 = np.full(gains.n_users, params.Pmax)
    state = fp_start_from_gains(gains, P0, params)
    for _ in range(cap):
        prev = state.objective
        state = fp_step_from_gains(gains, state, params)
        if on_step is not None:
            on_step(state)
        if fractional_increase(prev, state.objective) <= tol:
            break
    return state.P_hat, state.trace


def fp_loop(eff, omega, P0, params, max_steps=None, eps=None, on_step=None):
    """Iterate power steps until the fractional increase of the clamped
    min-pair secrecy drops to the power tolerance or the cap is reached.
    P0 = None starts from full power on every user."""
    return fp_loop_from_gains(phase_gains(eff, omega), P0, params,
                              max_steps=max_steps, eps=eps, on_step=on_step)
