"""Alternating optimization: power loops and phase loops, then rank-one
phase recovery.

One run starts from full power and a random unit-modulus phase vector,
alternates the fractional-programming power loop (using matrix link
gains tr(Gram W) while W is a relaxed PSD iterate) with the phase
refinement loop, and stops when the fractional increase of the clamped
min-pair value drops to the outer tolerance or the outer cap is hit.
The final PSD iterate is rounded to unit-modulus phases by Gaussian
randomization (principal eigenvector always among the candidates) and
the reported rates are re-evaluated at the recovered phases.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import SystemParams
from .phase_opt import sca_loop, trace_form_values
from .power_opt import fp_loop_from_gains
from .rates import (breakdown_from_gains, min_secrecy_candidates,
                    psd_gains, random_phase_vector, secrecy_breakdown)
from .util import fractional_increase


def recover_phases(omega_hat):
    """Project a complex vector to unit-modulus phases relative to its
    reference entry, which becomes exactly 1."""
    omega_hat = np.asarray(omega_hat, dtype=complex)
    if omega_hat[-1] == 0.0:
        raise ValueError("reference entry of the candidate vector is zero")
    ratio = omega_hat[:-1] / omega_hat[-1]
    out = np.empty_like(omega_hat)
    out[:-1] = np.exp(1j * np.angle(ratio))
    out[-1] = 1.0
    return out


def gaussian_randomization(W, eff, P, params, seed):
    """Round a PSD matrix to phases: sample candidates with covariance W,
    normalize each to unit modulus, keep the best by min-pair secrecy."""
    W = np.asarray(W, dtype=complex)
    lam, V = np.linalg.eigh(W)
    lam = np.clip(lam, 0.0, None)
    root = V * np.sqrt(lam)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.Philox(ss))
    m = W.shape[0]
    K = params.randomization_samples
    raw = rng.standard_normal((K, 2 * m))
    zeta = (raw[:, 0::2] + 1j * raw[:, 1::2]) / np.sqrt(2.0)
    draws = zeta @ root.T  # row k is root @ zeta_k, covariance W
    principal = V[:, -1]
    candidates = [principal] + list(draws)
    omegas = []
    for cand in candidates:
        if cand[-1] == 0.0:
            continue
        omegas.append(recover_phases(cand))
    if not omegas:
        raise ValueError("no usable rounding candidate")
    omegas = np.stack(omegas)
    values = min_secrecy_candidates(eff, omegas, P, params)
    return omegas[int(np.argmax(values))]


@dataclass
class AoResult:
    """Outcome of one alternating-optimization run.

    Phases are stored as angles (radians, length L). The reported rates
    come from the rates module at the recovered phases, not from the
    relaxation; `relaxation_objective` is the clamped min-pair value of
    the final PSD iterate and `rank_one_gap` the loss (positive) or gain
    (negative) of the rounding step relative to it.
    """

    seed: int
    phase_angles: np.ndarray
    powers: np.ndarray
    breakdown: object
    outer_trace: list
    fp_traces: list
    sca_traces: list
    relaxation_objective: float
    rank_one_gap: float
    outer_iterations: int

    @property
    def phase_vector(self):
        return np.concatenate([np.exp(1j * self.phase_angles), [1.0 + 0.0j]])

    @property
    def min_secrecy(self):
        return self.breakdown.min_secrecy

    def to_record(self):
        return {
            "seed": int(self.seed),
            "phase_angles": [float(a) for a in self.phase_angles],
            "powers": [float(p) for p in self.powers],
            "min_secrecy": float(self.breakdown.min_secrecy),
            "secrecy_per_pair": [float(c) for c in self.breakdown.secrecy],
            "rate_a": [float(r) for r in self.breakdown.rate_a],
            "rate_b": [float(r) for r in self.breakdown.rate_b],
            "leakage": [float(r) for r in self.breakdown.leakage],
            "outer_trace": [float(v) for v in self.outer_trace],
            "fp_traces": [[float(v) for v in tr] for tr in self.fp_traces],
            "sca_traces": [[float(v) for v in tr] for tr in self.sca_traces],
            "relaxation_objective": float(self.relaxation_objective),
            "rank_one_gap": float(self.rank_one_gap),
            "outer_iterations": int(self.outer_iterations),
        }


def run_algorithm1(eff, params: SystemParams, seed):
    """Full alternating run on one channel realization.

    Deterministic given (eff, params, seed): the seed drives the initial
    phases and the rounding candidates through separate child streams.
    """
    ss = np.random.SeedSequence(seed)
    init_ss, rounding_ss = ss.spawn(2)
    rng = np.random.Generator(np.random.Philox(init_ss))
    omega0 = random_phase_vector(rng, eff.L)
    W_hat = np.outer(omega0, omega0.conj())
    P_hat = np.full(eff.n_users, params.Pmax)

    def clamped_relax_obj(P, W):
        return breakdown_from_gains(psd_gains(eff, W), P, params).min_secrecy

    outer_trace = [clamped_relax_obj(P_hat, W_hat)]
    fp_traces = []
    sca_traces = []
    outer_done = 0
    for _ in range(params.outer_iter_cap):
        gains = psd_gains(eff, W_hat)
        P_hat, fp_trace = fp_loop_from_gains(gains, P_hat, params)
        fp_traces.append(fp_trace)
        W_hat, sca_trace = sca_loop(eff, P_hat, W_hat, params)
        sca_traces.append(sca_trace)
        obj = clamped_relax_obj(P_hat, W_hat)
        prev = outer_trace[-1]
        outer_trace.append(obj)
        outer_done += 1
        if fractional_increase(prev, obj) <= params.eps3:
            break

    omega_f = gaussian_randomization(W_hat, eff, P_hat, params, rounding_ss)
    breakdown = secrecy_breakdown(eff, P_hat, omega_f, params)
    relax_obj = clamped_relax_obj(P_hat, W_hat)
    return AoResult(
        seed=seed,
        phase_angles=np.angle(omega_f[:-1]),
        powers=P_hat,
        breakdown=breakdown,
        outer_trace=outer_trace,
        fp_traces=fp_traces,
        sca_traces=sca_traces,
        relaxation_objective=relax_obj,
        rank_one_gap=relax_obj - breakdown.min_secrecy,
        outer_iterations=outer_done,
    )


def min_unclamped_G(eff, P, W, params):
    """Min over pairs of the trace-form value, for relaxation-gap checks."""
    return min(
        q - s for q, s in (trace_form_values(eff, P, W, j, params)
                           for j in range(1, eff.n_pairs + 1)))
