"""Self-contained solvers for the two convex subproblem shapes.

Both solvers maximize an epigraph scalar t with a logarithmic-barrier
path-following (SUMT) scheme and damped Newton steps, and certify the
result with an explicit duality gap built from the barrier multipliers
(lambda_j = 1/(mu u_j) etc.), so no external optimization package is
involved.

solve_sdp: max t over Hermitian W subject to smooth concave constraints
    g_j(W) = sum_i a_i ln(tr(M_i W) + c_i) + <B_j, W> + d_j >= t,
    diag(W) = 1, W PSD, and optionally ||W - W_hat||_F <= xi.
    The Newton system is solved in the eigenbasis of W, where the
    log-det Hessian is elementwise-diagonal; every remaining Hessian
    piece is a rank-one term handled by a Sherman-Morrison-Woodbury
    correction, so a step costs one m x m eigendecomposition plus a few
    batched products. Dimensions up to m = 128 are accepted; the intended
    regime is m <= 41.

solve_concave_box: max t over a box-constrained power vector subject to
    f_j(P) = sum_i a_i ln(c_i + u_i.P + kappa_i sqrt(s_i + w_i.P)) >= t.
    Dimension 2N+1 is tiny, so plain dense Newton steps are used.
"""

import csv
import enum
import math
import os
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-7
KKT_TOL = 1e-6
MAX_NEWTON = 400

_NEWTON_DEC_TOL = 1e-9
_NEWTON_DEC_LOOSE = 1e-4  # intermediate stages only warm-start the next
_STAGE_ITER_LIMIT = 30
_STALL_FACTOR = 0.9  # decrement must shrink this much or the stage stops
_STALL_LIMIT = 5
_MU0 = 1.0
_MU_FACTOR = 10.0
_MU_FACTOR_SLOW = 1.5  # continuation rate while hugging a constraint boundary
_MU_SLOW_THRESHOLD = 100.0  # beyond this weight, jumps stay gentle
_WEDGE_ALPHA = 1e-2  # accepted steps this short count as boundary-wedged
_ARMIJO = 0.01
_BACKTRACK = 0.5
_MAX_BACKTRACKS = 60
_BOUNDARY_FRACTION = 0.99


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"
    NUMERICAL_TROUBLE = "numerical_trouble"


class SolverError(RuntimeError):
    """Raised by callers when a subproblem solve is unusable."""


@dataclass
class SolveReport:
    status: SolveStatus
    objective: float
    iterations: int
    max_violation: float
    duality_gap: float
    kkt_residual: float

    @property
    def ok(self):
        return self.status is SolveStatus.OPTIMAL


@dataclass(frozen=True)
class SdpConstraint:
    """g(W) = sum_i a_i ln(tr(M_i W) + c_i) + <B, W> + d, with a_i > 0,
    c_i > 0 and Hermitian PSD M_i (glue for log-of-affine-trace sums
    minus an affine part)."""

    log_coeffs: tuple
    log_mats: tuple
    log_offsets: tuple
    affine_mat: np.ndarray
    affine_offset: float = 0.0


@dataclass(frozen=True)
class SdpProblem:
    dim: int
    constraints: tuple
    w_hat: np.ndarray
    xi: float | None = None  # None disables the trust region


@dataclass(frozen=True)
class BoxLogTerm:
    """a * ln(const + lin.P + kappa * sqrt(sq_const + sq_lin.P))."""

    coeff: float
    const: float
    lin: np.ndarray
    kappa: float = 0.0
    sq_const: float = 0.0
    sq_lin: np.ndarray | None = None


@dataclass(frozen=True)
class ConcaveBoxProblem:
    n_vars: int
    constraints: tuple  # tuple of tuples of BoxLogTerm
    pmin: float
    pmax: float


def _herm(a):
    return 0.5 * (a + a.conj().T)


def _inner(x, y):
    """Real inner product Re tr(X^dag Y) on (stacked) matrices."""
    return float(np.real(np.vdot(x, y)))


def _sdp_inputs_finite(prob):
    arrays = [prob.w_hat]
    scalars = []
    for con in prob.constraints:
        arrays.extend(con.log_mats)
        arrays.append(con.affine_mat)
        scalars.extend(con.log_coeffs)
        scalars.extend(con.log_offsets)
        scalars.append(con.affine_offset)
    if prob.xi is not None:
        scalars.append(prob.xi)
    return all(np.all(np.isfinite(a)) for a in arrays) and all(
        math.isfinite(s) for s in scalars
    )


def _constraint_value(con, W):
    val = con.affine_offset + _inner(con.affine_mat, W)
    for a, M, c in zip(con.log_coeffs, con.log_mats, con.log_offsets):
        y = _inner(M, W) + c
        if y <= 0.0:
            return -np.inf
        val += a * math.log(y)
    return val


def _constraint_grad(con, W):
    g = np.array(con.affine_mat, dtype=complex, copy=True)
    for a, M, c in zip(con.log_coeffs, con.log_mats, con.log_offsets):
        y = _inner(M, W) + c
        g += (a / y) * M
    return g


def _trace_writer(trace_path):
    if trace_path is None:
        return None, None
    fh = open(trace_path, "w", newline="", encoding="utf-8")
    writer = csv.writer(fh)
    writer.writerow(["iteration", "objective", "newton_decrement", "duality_gap"])
    return fh, writer


def _center_epigraph(g_vals, mu):
    """Exact partial minimization of the barrier over the epigraph scalar:
    the unique t < min(g) with sum_j 1/(g_j - t) = mu.

    Eliminating t before every Newton step keeps the epigraph residual out
    of the step computation, which otherwise dominates the decrement after
    each barrier-weight jump. Safeguarded Newton on the increasing scalar
    h(t); t0 = min(g) - J/mu always satisfies h(t0) <= 0.
    """
    g = np.asarray(g_vals, dtype=float)
    top = float(g.min())
    lo = top - len(g) / mu
    hi = top
    t = lo
    for _ in range(100):
        u = g - t
        h = float(np.sum(1.0 / u)) - mu
        if abs(h) <= 1e-12 * mu:
            break
        if h > 0.0:
            hi = t
        else:
            lo = t
        t_new = t - h / float(np.sum(1.0 / u**2))
        if not lo < t_new < hi:
            t_new = 0.5 * (lo + hi)
        t = t_new
    return float(t)


def solve_sdp(prob, tol=KKT_TOL, feas_tol=FEAS_TOL, max_newton=MAX_NEWTON,
              trace_path=None):
    """Solve the phase-shift subproblem shape; see the module docstring.

    Returns (W, t, report) with t = min_j g_j(W) at the final interior
    point and report.duality_gap the certified distance to the optimum.
    """
    m = prob.dim
    if m > 128:
        raise ValueError("matrix dimension above the desk-scale limit of 128")
    if not prob.constraints:
        raise ValueError("need at least one epigraph constraint")
    if not _sdp_inputs_finite(prob):
        return prob.w_hat.copy(), float("nan"), SolveReport(
            SolveStatus.NUMERICAL_TROUBLE, float("nan"), 0, float("inf"),
            float("inf"), float("inf"))

    w_hat = _herm(np.asarray(prob.w_hat, dtype=complex))
    cons = prob.constraints
    xi = prob.xi

    if xi is not None and xi == 0.0:
        # Degenerate trust region: the only feasible point is w_hat.
        t = min(_constraint_value(c, w_hat) for c in cons)
        return w_hat.copy(), t, SolveReport(
            SolveStatus.OPTIMAL, t, 0, 0.0, 0.0, 0.0)

    eye = np.eye(m)
    dist_to_eye = float(np.linalg.norm(eye - w_hat))
    rho = 0.05
    if xi is not None and dist_to_eye > 0.0:
        rho = min(0.05, 0.3 * xi / dist_to_eye)
    W = _herm((1.0 - rho) * w_hat + rho * eye)
    g0 = [_constraint_value(c, W) for c in cons]
    t = _center_epigraph(g0, _MU0)

    n_cons = len(cons)
    nu_total = n_cons + m + (1 if xi is not None else 0)
    mu = _MU0
    total_newton = 0
    status = SolveStatus.OPTIMAL
    dec2 = 0.0
    fh, writer = _trace_writer(trace_path)

    def reduced_barrier(W, chol_diag):
        """Barrier value with the epigraph scalar eliminated; returns
        (value, centered t)."""
        g_try = [_constraint_value(c, W) for c in cons]
        if not all(math.isfinite(g) for g in g_try):
            return np.inf, 0.0
        t_star = _center_epigraph(g_try, mu)
        val = -mu * t_star - 2.0 * float(np.sum(np.log(chol_diag)))
        for g in g_try:
            val -= math.log(g - t_star)
        if xi is not None:
            s = xi**2 - float(np.linalg.norm(W - w_hat)) ** 2
            if s <= 0.0:
                return np.inf, t_star
            val -= math.log(s)
        return val, t_star

    mu_factor = _MU_FACTOR
    try:
        while True:
            # Intermediate stages only need a rough center; exact centering
            # (and hence the certificate) is enforced on the final stage.
            final_stage = nu_total / mu <= tol * (1.0 + abs(t))
            dec_tol = _NEWTON_DEC_TOL if final_stage else _NEWTON_DEC_LOOSE
            stage_cap = max_newton if final_stage else _STAGE_ITER_LIMIT
            best_dec2 = np.inf
            stalled = 0
            wedged = 0
            stage_centered = False
            stage_steps = 0
            for _ in range(stage_cap):
                if total_newton >= max_newton:
                    status = SolveStatus.MAX_ITER
                    break
                stage_steps += 1
                lam, V = np.linalg.eigh(W)
                if lam[0] <= 0.0:
                    status = SolveStatus.NUMERICAL_TROUBLE
                    break
                Vc = V.conj()
                ball_dir = W - w_hat
                s = None
                two_over_s = 0.0
                if xi is not None:
                    s = xi**2 - float(np.linalg.norm(ball_dir)) ** 2
                    two_over_s = 2.0 / s

                grads = []
                g_vals = []
                log_curv = []  # per constraint: list of (a/y^2, M)
                for con in cons:
                    g_val = con.affine_offset + _inner(con.affine_mat, W)
                    grad = np.array(con.affine_mat, dtype=complex, copy=True)
                    curv = []
                    for a, M, c in zip(con.log_coeffs, con.log_mats, con.log_offsets):
                        y = _inner(M, W) + c
                        g_val += a * math.log(y)
                        grad += (a / y) * M
                        curv.append((a / (y * y), M))
                    if not math.isfinite(g_val):
                        status = SolveStatus.NUMERICAL_TROUBLE
                        break
                    grads.append(grad)
                    g_vals.append(g_val)
                    log_curv.append(curv)
                if status is not SolveStatus.OPTIMAL:
                    break
                t = _center_epigraph(g_vals, mu)
                u_vals = [g - t for g in g_vals]
                # every curvature piece beyond the elementwise base is a
                # rank-one term whose coefficient can explode on the central
                # path (1/u^2 on constraint gradients, a/(u y^2) on log
                # curvature, 4/s^2 on the ball); each is bordered with its
                # own multiplier and a unit-normalized direction, so the
                # huge coefficient only ever appears inverted, as a tiny
                # positive diagonal entry
                scaled = []  # (coefficient, direction) for the exact operator
                for u, curv in zip(u_vals, log_curv):
                    scaled.extend((coef / u, M) for coef, M in curv)
                if xi is not None:
                    scaled.append((4.0 / (s * s), ball_dir))

                inv_u = np.array([1.0 / u for u in u_vals])
                W_inv = (V * (1.0 / lam)) @ Vc.T
                R_W = sum(iu * g for iu, g in zip(inv_u, grads)) + W_inv
                if xi is not None:
                    R_W = R_W - two_over_s * ball_dir
                R_W = _herm(R_W)
                r_t = mu - float(np.sum(inv_u))
                r_eq = 1.0 - np.diag(W).real
                sig = np.array([iu * iu for iu in inv_u])

                dirs = []
                diag_reg = []
                t_col = []
                for coef, Q in scaled:
                    nrm = float(np.linalg.norm(Q))
                    if nrm <= 0.0 or coef <= 0.0:
                        continue
                    dirs.append(Q / nrm)
                    diag_reg.append(1.0 / (coef * nrm * nrm))
                    t_col.append(0.0)
                grad_norms = []
                for sg, grad in zip(sig, grads):
                    nrm = float(np.linalg.norm(grad))
                    grad_norms.append(nrm)
                    dirs.append(grad / nrm)
                    diag_reg.append(1.0 / (sg * nrm * nrm))
                    t_col.append(1.0 / nrm)
                nl = len(dirs)

                # rotate everything into the eigenbasis of W, where the
                # elementwise base (log-det plus ball identity) is diagonal
                phi = 1.0 / (1.0 / np.outer(lam, lam) + two_over_s)
                stack = np.stack(dirs + [R_W])
                rot = Vc.T @ stack @ V
                D_rot = rot[:nl]
                Rw_rot = rot[-1]
                phiD = phi[None, :, :] * D_rot
                D_flat_c = D_rot.reshape(nl, -1).conj()
                phiD_flat = phiD.reshape(nl, -1)

                def a_of(y_rot):
                    return ((V @ y_rot) * Vc).sum(axis=1).real

                F1 = V[:, None, :] * Vc[None, :, :]  # F1[i,j,p] = V[i,p] Vc[j,p]
                T1 = F1.reshape(-1, m).conj() @ phi  # phi is symmetric
                AHA0 = (F1.reshape(-1, m) * T1).sum(axis=1).real.reshape(m, m)
                K_dd = (D_flat_c @ phiD_flat.T).real + np.diag(diag_reg)
                K_de = ((V[None] @ phiD) * Vc[None]).sum(axis=2).real  # (nl, m)
                tcol = np.array(t_col)

                dim = nl + 1 + m
                M_sys = np.zeros((dim, dim))
                M_sys[:nl, :nl] = K_dd
                M_sys[:nl, nl] = tcol
                M_sys[nl, :nl] = tcol
                M_sys[:nl, nl + 1:] = K_de
                M_sys[nl + 1:, :nl] = K_de.T
                M_sys[nl + 1:, nl + 1:] = AHA0

                def solve_kkt(Rw_rot_in, rt_in, req_in):
                    hr = phi * Rw_rot_in
                    bq = (D_flat_c @ hr.ravel()).real
                    be = a_of(hr)
                    rhs = np.concatenate([bq, [-rt_in], be - req_in])
                    try:
                        sol = np.linalg.solve(M_sys, rhs)
                    except np.linalg.LinAlgError:
                        sol = np.linalg.lstsq(M_sys, rhs, rcond=None)[0]
                    gam, dt_, nu_ = sol[:nl], float(sol[nl]), sol[nl + 1:]
                    corr_rot = Vc.T @ (nu_[:, None] * V)
                    dw_rot = hr - phi * (np.tensordot(gam, D_rot, axes=1)
                                         + corr_rot)
                    return dw_rot, dt_, nu_

                def kkt_residual(dw_rot, dt_, nu_):
                    """Exact operator application; exposes the error left by
                    the Woodbury solve so it can be refined away."""
                    dw = V @ dw_rot @ Vc.T
                    act = W_inv @ dw @ W_inv + two_over_s * dw
                    for coef, Mmat in scaled:
                        act = act + coef * _inner(Mmat, dw) * Mmat
                    t_flow = 0.0
                    for sg, gmat in zip(sig, grads):
                        w_flow = sg * (_inner(gmat, dw) - dt_)
                        act = act + w_flow * gmat
                        t_flow -= w_flow
                    res_W = R_W - act - np.diag(nu_)
                    res_t = r_t - t_flow
                    res_eq = r_eq - np.diag(dw).real
                    return _herm(res_W), res_t, res_eq

                dW_rot, dt, nu = solve_kkt(Rw_rot, r_t, r_eq)
                for _ in range(4):
                    res_W, res_t, res_eq = kkt_residual(dW_rot, dt, nu)
                    if (np.max(np.abs(res_W)) <= 1e-11 * (1.0 + np.max(np.abs(R_W)))
                            and abs(res_t) <= 1e-11 * (1.0 + abs(r_t))):
                        break
                    cor_rot, cor_dt, cor_nu = solve_kkt(
                        Vc.T @ res_W @ V, res_t, res_eq)
                    dW_rot = dW_rot + cor_rot
                    dt = dt + cor_dt
                    nu = nu + cor_nu
                dW = _herm(V @ dW_rot @ Vc.T)

                dec2 = _inner(R_W, dW) + r_t * dt
                total_newton += 1
                if not math.isfinite(dec2):
                    status = SolveStatus.NUMERICAL_TROUBLE
                    break
                if dec2 / 2.0 <= dec_tol:
                    stage_centered = True
                    break
                # rounding floor: decrement no longer shrinking near the center
                if dec2 >= _STALL_FACTOR * best_dec2 and dec2 / 2.0 <= 1e-5:
                    stalled += 1
                    if stalled >= _STALL_LIMIT:
                        stage_centered = True
                        break
                else:
                    stalled = 0
                best_dec2 = min(best_dec2, dec2)

                # fraction-to-boundary starting step: largest alpha keeping
                # the PSD cone and the trust region strictly feasible
                scaled_dir = dW_rot / np.sqrt(np.outer(lam, lam))
                dir_min = float(np.linalg.eigvalsh(_herm(scaled_dir))[0])
                alpha = 1.0
                if dir_min < 0.0:
                    alpha = min(alpha, -_BOUNDARY_FRACTION / dir_min)
                if xi is not None:
                    aq = float(np.linalg.norm(dW)) ** 2
                    bq = 2.0 * _inner(ball_dir, dW)
                    cq = float(np.linalg.norm(ball_dir)) ** 2 - xi**2
                    if aq > 0.0:
                        root = (-bq + math.sqrt(max(bq * bq - 4 * aq * cq, 0.0))
                                ) / (2 * aq)
                        if root > 0.0:
                            alpha = min(alpha, _BOUNDARY_FRACTION * root)

                # backtracking line search on the reduced barrier
                moved = False
                f_cur, _ = reduced_barrier(W, np.diag(np.linalg.cholesky(W)).real)
                for _ in range(_MAX_BACKTRACKS):
                    W_try = W + alpha * dW
                    if xi is not None and (
                            xi**2 - np.linalg.norm(W_try - w_hat) ** 2 <= 0.0):
                        alpha *= _BACKTRACK
                        continue
                    try:
                        cd = np.diag(np.linalg.cholesky(W_try)).real
                    except np.linalg.LinAlgError:
                        alpha *= _BACKTRACK
                        continue
                    f_try, t_try = reduced_barrier(W_try, cd)
                    if f_try <= f_cur - _ARMIJO * alpha * dec2:
                        W, t = _herm(W_try), t_try
                        moved = True
                        break
                    alpha *= _BACKTRACK
                if os.environ.get("IRS_SECRECY_SOLVER_DEBUG"):
                    print(f"    mu={mu:.3g} it={total_newton} dec2={dec2:.4g} "
                          f"alpha={alpha if moved else 0.0:.3g} "
                          f"s={s if s is not None else -1:.3g} "
                          f"lam_min={lam[0]:.3g} u_min={min(u_vals):.3g}")
                if not moved:
                    if dec2 / 2.0 <= 1e-6:
                        stage_centered = True
                        break  # effectively centered; accept the point
                    status = SolveStatus.NUMERICAL_TROUBLE
                    break
                # steps pinned against a boundary make no real progress;
                # stop the stage and continue with a gentler weight jump
                if alpha <= _WEDGE_ALPHA:
                    wedged += 1
                    if wedged >= 3:
                        break
                else:
                    wedged = 0
            if status is not SolveStatus.OPTIMAL:
                break
            # a boundary-wedged exit with a tiny decrement is a solved stage
            stage_centered = stage_centered or dec2 / 2.0 <= 1e-5
            t_val = min(_constraint_value(c, W) for c in cons)
            gap = nu_total / mu
            if writer is not None:
                writer.writerow([total_newton, repr(float(t_val)),
                                 repr(float(dec2)), repr(float(gap))])
            if final_stage and stage_centered and gap <= tol * (1.0 + abs(t_val)):
                break
            # advance the weight only from a centered point; large jumps at
            # high weight open long barrier valleys, so they stay gentle
            if stage_centered:
                mu_factor = (_MU_FACTOR if mu < _MU_SLOW_THRESHOLD
                             else _MU_FACTOR_SLOW)
                mu *= mu_factor
    finally:
        if fh is not None:
            fh.close()

    t_ret = float(min(_constraint_value(c, W) for c in cons))
    gap = nu_total / mu
    eigs = np.linalg.eigvalsh(W)
    viol = max(0.0, -float(eigs[0]))
    viol = max(viol, float(np.max(np.abs(np.diag(W).real - 1.0))))
    viol = max(viol, float(np.max(np.abs(np.diag(W).imag))))
    if xi is not None:
        viol = max(viol, max(0.0, float(np.linalg.norm(W - w_hat)) - xi))
    if status is SolveStatus.OPTIMAL and (
            gap > tol * (1.0 + abs(t_ret)) or viol > feas_tol):
        status = SolveStatus.MAX_ITER
    report = SolveReport(status, t_ret, total_newton, viol, gap,
                         math.sqrt(max(dec2, 0.0)) if total_newton else 0.0)
    return W, t_ret, report


def _box_term_eval(term, P):
    arg = term.const + float(term.lin @ P)
    grad = np.array(term.lin, dtype=float, copy=True)
    curv = None
    if term.kappa != 0.0 and term.sq_lin is not None:
        root_arg = term.sq_const + float(term.sq_lin @ P)
        if root_arg < 0.0:
            return -1.0, grad, curv
        root = math.sqrt(root_arg)
        arg += term.kappa * root
        if root > 0.0:
            grad = grad + (term.kappa / (2.0 * root)) * term.sq_lin
            curv = (term.kappa / (4.0 * root_arg * root), term.sq_lin)
    return arg, grad, curv


def box_constraint_value(terms, P):
    """f(P) for one constraint; -inf when outside the log domain."""
    total = 0.0
    for term in terms:
        arg, _, _ = _box_term_eval(term, P)
        if arg <= 0.0:
            return -np.inf
        total += term.coeff * math.log(arg)
    return total


def solve_concave_box(prob, tol=KKT_TOL, feas_tol=FEAS_TOL,
                      max_newton=MAX_NEWTON, start=None, trace_path=None):
    """Solve the power subproblem shape; see the module docstring.

    Returns (P, t, report) with t = min_j f_j(P).
    """
    n = prob.n_vars
    pmin, pmax = prob.pmin, prob.pmax
    cons = prob.constraints
    if not cons:
        raise ValueError("need at least one epigraph constraint")
    finite = all(
        math.isfinite(term.const) and math.isfinite(term.coeff)
        and math.isfinite(term.kappa) and math.isfinite(term.sq_const)
        and np.all(np.isfinite(term.lin))
        and (term.sq_lin is None or np.all(np.isfinite(term.sq_lin)))
        for terms in cons for term in terms) and math.isfinite(pmin) and math.isfinite(pmax)
    if not finite:
        P = np.full(n, pmin)
        return P, float("nan"), SolveReport(
            SolveStatus.NUMERICAL_TROUBLE, float("nan"), 0, float("inf"),
            float("inf"), float("inf"))

    span = pmax - pmin
    if span <= 0.0:
        P = np.full(n, pmin)
        t = min(box_constraint_value(terms, P) for terms in cons)
        return P, t, SolveReport(SolveStatus.OPTIMAL, t, 0, 0.0, 0.0, 0.0)

    inset = 1e-3 * span
    if start is None:
        P = np.full(n, 0.5 * (pmin + pmax))
    else:
        P = np.clip(np.asarray(start, dtype=float), pmin + inset, pmax - inset)
    f0 = [box_constraint_value(terms, P) for terms in cons]
    if not all(math.isfinite(f) for f in f0):
        return P, float("nan"), SolveReport(
            SolveStatus.NUMERICAL_TROUBLE, float("nan"), 0, float("inf"),
            float("inf"), float("inf"))
    t = min(f0) - 0.1 * (1.0 + abs(min(f0)))

    n_cons = len(cons)
    nu_total = n_cons + 2 * n
    mu = _MU0
    total_newton = 0
    status = SolveStatus.OPTIMAL
    dec2 = 0.0
    fh, writer = _trace_writer(trace_path)

    def barrier_value(P, t):
        lo = P - pmin
        hi = pmax - P
        if np.any(lo <= 0.0) or np.any(hi <= 0.0):
            return np.inf
        val = -mu * t - float(np.sum(np.log(lo)) + np.sum(np.log(hi)))
        for terms in cons:
            u = box_constraint_value(terms, P) - t
            if u <= 0.0 or not math.isfinite(u):
                return np.inf
            val -= math.log(u)
        return val

    try:
        while True:
            best_dec2 = np.inf
            stalled = 0
            for _ in range(max_newton):
                if total_newton >= max_newton:
                    status = SolveStatus.MAX_ITER
                    break
                grad = np.zeros(n + 1)
                hess = np.zeros((n + 1, n + 1))
                feasible = True
                for terms in cons:
                    f = 0.0
                    gf = np.zeros(n)
                    hf = np.zeros((n, n))
                    for term in terms:
                        arg, garg, curv = _box_term_eval(term, P)
                        if arg <= 0.0:
                            feasible = False
                            break
                        f += term.coeff * math.log(arg)
                        gf += (term.coeff / arg) * garg
                        hf -= (term.coeff / arg**2) * np.outer(garg, garg)
                        if curv is not None:
                            cc, w = curv
                            hf -= (term.coeff * cc / arg) * np.outer(w, w)
                    if not feasible:
                        break
                    u = f - t
                    if u <= 0.0:
                        feasible = False
                        break
                    q = np.concatenate([gf, [-1.0]])
                    grad[:n] += -gf / u
                    grad[n] += 1.0 / u
                    hess += np.outer(q, q) / u**2
                    hess[:n, :n] += -hf / u
                if not feasible:
                    status = SolveStatus.NUMERICAL_TROUBLE
                    break
                lo = P - pmin
                hi = pmax - P
                grad[:n] += -1.0 / lo + 1.0 / hi
                grad[n] += -mu
                hess[:n, :n] += np.diag(1.0 / lo**2 + 1.0 / hi**2)

                try:
                    step = np.linalg.solve(hess, -grad)
                except np.linalg.LinAlgError:
                    status = SolveStatus.NUMERICAL_TROUBLE
                    break
                dec2 = float(-grad @ step)
                total_newton += 1
                if not math.isfinite(dec2):
                    status = SolveStatus.NUMERICAL_TROUBLE
                    break
                if dec2 / 2.0 <= _NEWTON_DEC_TOL:
                    break
                # rounding floor: decrement no longer shrinking near the center
                if dec2 >= _STALL_FACTOR * best_dec2 and dec2 / 2.0 <= 1e-5:
                    stalled += 1
                    if stalled >= _STALL_LIMIT:
                        break
                else:
                    stalled = 0
                best_dec2 = min(best_dec2, dec2)

                f_cur = barrier_value(P, t)
                alpha = 1.0
                moved = False
                for _ in range(_MAX_BACKTRACKS):
                    P_try = P + alpha * step[:n]
                    t_try = t + alpha * step[n]
                    f_try = barrier_value(P_try, t_try)
                    if f_try <= f_cur - _ARMIJO * alpha * dec2:
                        P, t = P_try, t_try
                        moved = True
                        break
                    alpha *= _BACKTRACK
                if not moved:
                    if dec2 / 2.0 <= 1e-6:
                        break
                    status = SolveStatus.NUMERICAL_TROUBLE
                    break
            if status is not SolveStatus.OPTIMAL:
                break
            t_val = min(box_constraint_value(terms, P) for terms in cons)
            gap = nu_total / mu
            if writer is not None:
                writer.writerow([total_newton, repr(float(t_val)), repr(float(dec2)), repr(float(gap))])
            if gap <= tol * (1.0 + abs(t_val)):
                break
            mu *= _MU_FACTOR
    finally:
        if fh is not None:
            fh.close()

    t_ret = float(min(box_constraint_value(terms, P) for terms in cons))
    gap = nu_total / mu
    viol = max(0.0, float(np.max(pmin - P)), float(np.max(P - pmax)))
    if status is SolveStatus.OPTIMAL and (
            gap > tol * (1.0 + abs(t_ret)) or viol > feas_tol):
        status = SolveStatus.MAX_ITER
    report = SolveReport(status, t_ret, total_newton, viol, gap,
                         math.sqrt(max(dec2, 0.0)) if total_newton else 0.0)
    return np.asarray(P, dtype=float), t_ret, report
