"""Information rates, per-pair secrecy rates, and their trace form.

All rates are bits per channel use. Internals run in natural log with a
single 1/ln(2) conversion so that analytic gradients elsewhere carry the
same factor. Every optimizer and baseline evaluates rates through this
module only.

The same formulas are evaluated in two interchangeable ways: from a
combining vector w (link gain |w^dag H|^2) or from a positive
semidefinite matrix W (link gain tr(Gram W)), which coincide when
W = w w^dag.
"""

from dataclasses import dataclass

import numpy as np

from .channel import user_index

LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class LinkGains:
    """Scalar link powers: legit[x, y] between users, eve[x] toward E."""

    legit: np.ndarray
    eve: np.ndarray

    @property
    def n_users(self):
        return self.eve.shape[0]


def phase_gains(eff, omega):
    """Link gains |omega^dag H|^2 for a combining vector of length L+1."""
    omega = np.asarray(omega, dtype=complex)
    e_legit = np.einsum("i,xyi->xy", omega.conj(), eff.H)
    e_eve = np.einsum("i,xi->x", omega.conj(), eff.H_eve)
    return LinkGains(legit=np.abs(e_legit) ** 2, eve=np.abs(e_eve) ** 2)


def psd_gains(eff, W):
    """Link gains tr(Gram W) for a Hermitian PSD matrix of size L+1."""
    W = np.asarray(W, dtype=complex)
    gl = np.einsum("xyi,ij,xyj->xy", eff.H.conj(), W, eff.H).real
    ge = np.einsum("xi,ij,xj->x", eff.H_eve.conj(), W, eff.H_eve).real
    return LinkGains(legit=gl, eve=ge)


def check_psd(W, herm_tol=1e-12, eig_tol=1e-9):
    """Validate the Hermitian/PSD invariants of a candidate W."""
    W = np.asarray(W)
    scale = max(np.abs(np.trace(W)).real, 1.0)
    if np.max(np.abs(W - W.conj().T)) > herm_tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    if np.linalg.eigvalsh(W)[0] < -eig_tol * scale:
        raise ValueError("matrix is not positive semidefinite within tolerance")


def pair_user_indices(pair):
    """Power-vector indices (a, b) of 1-based pair j."""
    return 2 * (pair - 1), 2 * (pair - 1) + 1


@dataclass(frozen=True)
class RateBreakdown:
    """Per-pair rates plus the max-min objective, all in bits."""

    rate_a: np.ndarray
    rate_b: np.ndarray
    leakage: np.ndarray
    secrecy_unclamped: np.ndarray
    secrecy: np.ndarray
    min_secrecy: float
    min_unclamped: float


def _pair_terms_from_gains(gains, P, params):
    """Signal/interference/leakage accumulators for every pair at once.

    Relies on the legit gain matrix having a zero diagonal (no self link),
    so the total received power minus the partner's contribution is the
    out-of-pair interference.
    """
    P = np.asarray(P, dtype=float)
    n = gains.n_users
    N = n // 2
    a_idx = np.arange(N) * 2
    b_idx = a_idx + 1
    recv = P @ gains.legit  # total received power at each user
    recv_e = float(P @ gains.eve)

    sig_a = P[b_idx] * gains.legit[b_idx, a_idx]
    sig_b = P[a_idx] * gains.legit[a_idx, b_idx]
    intf_a = recv[a_idx] - sig_a
    intf_b = recv[b_idx] - sig_b
    num_e = P[a_idx] * gains.eve[a_idx] + P[b_idx] * gains.eve[b_idx]
    intf_e = recv_e - num_e
    return sig_a, sig_b, intf_a, intf_b, num_e, intf_e


def breakdown_from_gains(gains, P, params):
    sig_a, sig_b, intf_a, intf_b, num_e, intf_e = _pair_terms_from_gains(gains, P, params)
    noise = params.noise_legit
    rate_a = np.log1p(sig_a / (intf_a + noise)) / LN2
    rate_b = np.log1p(sig_b / (intf_b + noise)) / LN2
    leakage = np.log1p(num_e / (intf_e + params.sigma2)) / LN2
    unclamped = rate_a + rate_b - leakage
    secrecy = np.maximum(unclamped, 0.0)
    return RateBreakdown(
        rate_a=rate_a, rate_b=rate_b, leakage=leakage,
        secrecy_unclamped=unclamped, secrecy=secrecy,
        min_secrecy=float(secrecy.min()), min_unclamped=float(unclamped.min()),
    )


def rate_legit(eff, P, omega, receiver, params):
    """Information rate achieved at a legitimate receiving user."""
    gains = phase_gains(eff, omega)
    r = user_index(receiver, eff.n_pairs)
    p = user_index(receiver.partner(), eff.n_pairs)
    P = np.asarray(P, dtype=float)
    sig = P[p] * gains.legit[p, r]
    intf = float(P @ gains.legit[:, r]) - sig - P[r] * gains.legit[r, r]
    return float(np.log1p(sig / (intf + params.noise_legit)) / LN2)


def rate_eve(eff, P, omega, pair, params):
    """Worst-case leakage rate toward the eavesdropper for 1-based pair j."""
    if not 1 <= pair <= eff.n_pairs:
        raise ValueError(f"pair must be in [1, {eff.n_pairs}]")
    gains = phase_gains(eff, omega)
    a, b = pair_user_indices(pair)
    P = np.asarray(P, dtype=float)
    num = P[a] * gains.eve[a] + P[b] * gains.eve[b]
    intf = float(P @ gains.eve) - num
    return float(np.log1p(num / (intf + params.sigma2)) / LN2)


def secrecy_breakdown(eff, P, omega, params):
    """Full per-pair secrecy evaluation for a combining vector."""
    return breakdown_from_gains(phase_gains(eff, omega), P, params)


def trace_form_values(eff_or_gains, P, W_or_none, pair, params):
    """(Q, S) pair of concave log-sum values, 1-based pair index.

    Q sums received powers excluding only the receiver itself (and the
    eavesdropped pair in its third term); S removes the whole pair from
    the first two sums and keeps every user in the eavesdropper term.
    """
    if isinstance(eff_or_gains, LinkGains):
        gains = eff_or_gains
    else:
        check_psd(W_or_none)
        gains = psd_gains(eff_or_gains, W_or_none)
    P = np.asarray(P, dtype=float)
    a, b = pair_user_indices(pair)
    other = np.ones(gains.n_users, dtype=bool)
    other[[a, b]] = False
    noise = params.noise_legit
    q1 = float(P @ gains.legit[:, a]) + noise  # legit diagonal is zero
    q2 = float(P @ gains.legit[:, b]) + noise
    q3 = float(P[other] @ gains.eve[other]) + params.sigma2
    s1 = float(P[other] @ gains.legit[other, a]) + noise
    s2 = float(P[other] @ gains.legit[other, b]) + noise
    s3 = float(P @ gains.eve) + params.sigma2
    q = (np.log(q1) + np.log(q2) + np.log(q3)) / LN2
    s = (np.log(s1) + np.log(s2) + np.log(s3)) / LN2
    return float(q), float(s)


def trace_form_G(eff, P, W, pair, params):
    """Trace-form pair value Q - S; equals the unclamped secrecy rate
    whenever W is the rank-one outer product of a unit-modulus vector."""
    q, s = trace_form_values(eff, P, W, pair, params)
    return q - s


def min_secrecy_from_psd(eff, P, W, params):
    """Clamped max-min objective evaluated with matrix link gains."""
    return breakdown_from_gains(psd_gains(eff, W), P, params).min_secrecy


def min_secrecy_batch(gains, P_batch, params):
    """Vectorized clamped min-secrecy over a (K, 2N) block of power vectors."""
    P = np.asarray(P_batch, dtype=float)
    n = gains.n_users
    N = n // 2
    a_idx = np.arange(N) * 2
    b_idx = a_idx + 1
    noise = params.noise_legit
    recv = P @ gains.legit  # (K, n)
    recv_e = P @ gains.eve  # (K,)
    sig_a = P[:, b_idx] * gains.legit[b_idx, a_idx][None, :]
    sig_b = P[:, a_idx] * gains.legit[a_idx, b_idx][None, :]
    intf_a = recv[:, a_idx] - sig_a
    intf_b = recv[:, b_idx] - sig_b
    num_e = P[:, a_idx] * gains.eve[a_idx][None, :] + P[:, b_idx] * gains.eve[b_idx][None, :]
    intf_e = recv_e[:, None] - num_e
    un = (np.log1p(sig_a / (intf_a + noise))
          + np.log1p(sig_b / (intf_b + noise))
          - np.log1p(num_e / (intf_e + params.sigma2))) / LN2
    return np.maximum(un, 0.0).min(axis=1)


def min_secrecy_candidates(eff, omegas, P, params):
    """Vectorized clamped min-secrecy over a (K, L+1) block of vectors."""
    omegas = np.asarray(omegas, dtype=complex)
    P = np.asarray(P, dtype=float)
    e_legit = np.einsum("ki,xyi->kxy", omegas.conj(), eff.H)
    e_eve = np.einsum("ki,xi->kx", omegas.conj(), eff.H_eve)
    gl = np.abs(e_legit) ** 2
    ge = np.abs(e_eve) ** 2
    n = eff.n_users
    N = n // 2
    a_idx = np.arange(N) * 2
    b_idx = a_idx + 1
    noise = params.noise_legit
    recv = np.einsum("x,kxy->ky", P, gl)
    recv_e = ge @ P
    sig_a = P[b_idx][None, :] * gl[:, b_idx, a_idx]
    sig_b = P[a_idx][None, :] * gl[:, a_idx, b_idx]
    intf_a = recv[:, a_idx] - sig_a
    intf_b = recv[:, b_idx] - sig_b
    num_e = P[a_idx][None, :] * ge[:, a_idx] + P[b_idx][None, :] * ge[:, b_idx]
    intf_e = recv_e[:, None] - num_e
    un = (np.log1p(sig_a / (intf_a + noise))
          + np.log1p(sig_b / (intf_b + noise))
          - np.log1p(num_e / (intf_e + params.sigma2))) / LN2
    return np.maximum(un, 0.0).min(axis=1)


def random_phase_vector(rng, L):
    """Unit-modulus combining vector with the reference entry fixed to 1."""
    phases = rng.uniform(0.0, 2.0 * np.pi, size=L)
    return np.concatenate([np.exp(1j * phases), [1.0 + 0.0j]])
