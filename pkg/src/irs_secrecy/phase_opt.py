"""Successive convex refinement of the surface phase matrix at fixed powers.

Each step linearizes the concave subtrahend S of the trace-form pair value
G = Q - S around the current expansion point, solves the resulting
epigraph problem over PSD unit-diagonal matrices inside a Frobenius trust
region, and re-expands at the optimum. The objective trace is the true
(unlinearized) min-pair value, which ascends monotonically up to solver
tolerance because the surrogate minorizes G and is tight at the expansion
point.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .convex_kernel import (SdpConstraint, SdpProblem, SolveStatus,
                            SolverError, solve_sdp)
from .rates import LN2, pair_user_indices, trace_form_values
from .util import fractional_increase

logger = logging.getLogger(__name__)


def _s_aggregates(eff, P, pair, params):
    """Aggregate matrices of the three log terms of S for 1-based pair j."""
    P = np.asarray(P, dtype=float)
    a, b = pair_user_indices(pair)
    other = np.ones(eff.n_users, dtype=bool)
    other[[a, b]] = False
    M_a = np.einsum("x,xij->ij", P[other], eff.gram[other, a])
    M_b = np.einsum("x,xij->ij", P[other], eff.gram[other, b])
    M_e = np.einsum("x,xij->ij", P, eff.gram_eve)
    return M_a, M_b, M_e


def _q_aggregates(eff, P, pair, params):
    """Aggregate matrices of the three log terms of Q for 1-based pair j."""
    P = np.asarray(P, dtype=float)
    a, b = pair_user_indices(pair)
    other = np.ones(eff.n_users, dtype=bool)
    other[[a, b]] = False
    not_a = np.ones(eff.n_users, dtype=bool)
    not_a[a] = False
    not_b = np.ones(eff.n_users, dtype=bool)
    not_b[b] = False
    M1 = np.einsum("x,xij->ij", P[not_a], eff.gram[not_a, a])
    M2 = np.einsum("x,xij->ij", P[not_b], eff.gram[not_b, b])
    M3 = np.einsum("x,xij->ij", P[other], eff.gram_eve[other])
    return M1, M2, M3


def _trace_real(M, W):
    return float(np.real(np.vdot(M, W)))  # Re tr(M^dag W), M Hermitian


def s_value(eff, P, W, pair, params):
    """S evaluated directly from its aggregate matrices, in bits."""
    M_a, M_b, M_e = _s_aggregates(eff, P, pair, params)
    noise = params.noise_legit
    return float(np.log(_trace_real(M_a, W) + noise)
                 + np.log(_trace_real(M_b, W) + noise)
                 + np.log(_trace_real(M_e, W) + params.sigma2)) / LN2


def grad_S(eff, P, W, pair, params):
    """Gradient of S with respect to W, a Hermitian (L+1) matrix in bits.

    Each log term contributes its aggregate matrix divided by the scalar
    log argument; the interference terms use the receiver-side aggregates
    and the eavesdropper term sums over every user.
    """
    M_a, M_b, M_e = _s_aggregates(eff, P, pair, params)
    noise = params.noise_legit
    den_a = _trace_real(M_a, W) + noise
    den_b = _trace_real(M_b, W) + noise
    den_e = _trace_real(M_e, W) + params.sigma2
    if min(den_a, den_b, den_e) <= 0.0:
        raise ValueError("nonpositive log argument in S")
    g = (M_a / den_a + M_b / den_b + M_e / den_e) / LN2
    return 0.5 * (g + g.conj().T)


def taylor_upper_bound(eff, P, W, W_hat, pair, params):
    """First-order expansion of S around W_hat, an upper bound by concavity."""
    G = grad_S(eff, P, W_hat, pair, params)
    return s_value(eff, P, W_hat, pair, params) + float(
        np.real(np.vdot(G, W - W_hat)))


def build_sdp_problem(eff, P, W_hat, params, xi=None):
    """Assemble the epigraph subproblem around the expansion point W_hat."""
    m = eff.L + 1
    noise = params.noise_legit
    cons = []
    for pair in range(1, eff.n_pairs + 1):
        M1, M2, M3 = _q_aggregates(eff, P, pair, params)
        G = grad_S(eff, P, W_hat, pair, params)
        s_hat = s_value(eff, P, W_hat, pair, params)
        offset = -s_hat + float(np.real(np.vdot(G, W_hat)))
        cons.append(SdpConstraint(
            log_coeffs=(1.0 / LN2,) * 3,
            log_mats=(M1, M2, M3),
            log_offsets=(noise, noise, params.sigma2),
            affine_mat=-G,
            affine_offset=offset,
        ))
    return SdpProblem(dim=m, constraints=tuple(cons), w_hat=np.asarray(W_hat),
                      xi=params.trust_radius if xi is None else xi)


@dataclass
class ScaState:
    W_hat: np.ndarray
    objective: float
    iteration: int = 0
    trace: list = field(default_factory=list)
    statuses: list = field(default_factory=list)


def _min_G(eff, P, W, params):
    vals = [q - s for q, s in
            (trace_form_values(eff, P, W, j, params)
             for j in range(1, eff.n_pairs + 1))]
    return float(min(vals))


def sca_start(eff, P, W0, params):
    obj = _min_G(eff, P, W0, params)
    return ScaState(W_hat=np.asarray(W0, dtype=complex), objective=obj,
                    trace=[obj])


def sca_step(eff, P, state, params):
    """One linearize-and-solve refinement; retries once with a doubled
    trust region if the subproblem reports infeasibility."""
    prob = build_sdp_problem(eff, P, state.W_hat, params)
    W, t, report = solve_sdp(prob)
    if report.status is SolveStatus.INFEASIBLE:
        logger.warning("phase subproblem infeasible, retrying with radius %g",
                       2.0 * prob.xi)
        prob = build_sdp_problem(eff, P, state.W_hat, params, xi=2.0 * prob.xi)
        W, t, report = solve_sdp(prob)
    if not report.ok:
        raise SolverError(
            f"phase subproblem failed with status {report.status.value} "
            f"at sub-iteration {state.iteration + 1}")
    obj = _min_G(eff, P, W, params)
    return ScaState(W_hat=W, objective=obj, iteration=state.iteration + 1,
                    trace=state.trace + [obj],
                    statuses=state.statuses + [report.status.value])


def sca_loop(eff, P, W0, params, max_steps=None, eps=None, on_step=None):
    """Refine until the fractional increase of the min-pair value drops
    below the phase tolerance or the sub-iteration cap is reached."""
    cap = params.sca_subiter_cap if max_steps is None else max_steps
    tol = params.eps2 if eps is None else eps
    state = sca_start(eff, P, W0, params)
    for _ in range(cap):
        prev = state.objective
        state = sca_step(eff, P, state, params)
        if on_step is not None:
            on_step(state)
        if fractional_increase(prev, state.objective) <= tol:
            break
    return state.W_hat, state.trace
