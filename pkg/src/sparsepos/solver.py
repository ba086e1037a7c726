"""Self-contained primal-dual interior-point solver.

Assembled programs arrive as linear matrix inequalities in the free moments:
minimize f0 + c.u subject to F0 + sum_i u_i F_i being PSD blockwise (scalar
rows in the linear-programming case).  Internally the solver works on the
equivalent conic pair

    (P)  min <C, X>   s.t.  <A_i, X> = b_i,   X PSD
    (D)  max b.y      s.t.  sum_i y_i A_i + S = C,   S PSD

with A_i = -F_i, C = F0, b = -c, so the (D) variable y is the moment vector
and the (P) variable X collects the Gram multiplier blocks of the dual
representation (the bound certificate).  Search directions use Nesterov-Todd
scaling with a Mehrotra predictor-corrector; elementwise-nonnegative rows
ride along as diagonal blocks with the same formulas.

Everything is dense float64 linear algebra; exactness is recovered
downstream by certificate verification.  There is no randomized state, so
repeated solves of one program are bit-identical.  Infeasibility detection
is heuristic: a presolve catches constant-row contradictions, and divergence
of the certificate value with small residuals is reported as infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .moments import MomentVector
from .relax import ConicProgram, LinearProgram

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITERATIONS = "max-iterations"
NUMERICAL_FAILURE = "numerical-failure"

_STEP_FRACTION = 0.98
_DIVERGENCE = 1e10


@dataclass
class Residuals:
    primal: float
    dual: float
    gap: float


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``primal_objective`` is the relaxation bound (the minimized moment
    pairing); ``dual_objective`` is the certificate value lambda.  On optimal
    status the two agree up to the gap tolerance.  ``dual_blocks`` pairs each
    block label with its Gram multiplier matrix (SDP) or each row label with
    its nonnegative multiplier (LP).
    """

    status: str
    primal_objective: float
    dual_objective: float
    moments: MomentVector
    dual_blocks: list
    iterations: int
    residuals: Residuals


@dataclass
class _Cone:
    kind: str  # "s" dense PSD block, "l" elementwise-nonnegative rows
    size: int
    A: np.ndarray  # s: (M, k, k);  l: (M, k)
    C: np.ndarray  # s: (k, k);     l: (k,)

    def apply(self, X: np.ndarray) -> np.ndarray:
        if self.kind == "s":
            return self.A.reshape(self.A.shape[0], -1) @ X.ravel()
        return self.A @ X

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        if self.kind == "s":
            return np.tensordot(y, self.A, axes=1)
        return self.A.T @ y


@dataclass
class _RawResult:
    status: str
    X: list
    S: list
    y: np.ndarray
    iterations: int
    rel_p: float
    rel_d: float
    pobj: float
    dobj: float


def _check_tol(tol: float) -> None:
    if not 1e-12 <= tol <= 1e-2:
        raise ValueError(f"tolerance must lie in [1e-12, 1e-2], got {tol}")


def _sym(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.T)


def _inner(cone: _Cone, X, S) -> float:
    if cone.kind == "s":
        return float(np.tensordot(X, S))
    return float(X @ S)


def _max_step_s(L: np.ndarray, dX: np.ndarray) -> float:
    # Largest a with X + a dX PSD, given X = L L^T.
    B = solve_triangular(L, dX, lower=True)
    B = solve_triangular(L, B.T, lower=True).T
    lam_min = float(np.linalg.eigvalsh(_sym(B))[0])
    if lam_min >= -1e-14:
        return np.inf
    return -1.0 / lam_min


def _max_step_l(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(x[neg] / -dx[neg]))


class _Scaling:
    """Nesterov-Todd scaling point data for one cone.

    For a PSD cone, R satisfies R^-1 X R^-T = R^T S R = diag(lam); the
    scaling matrix is W = R R^T and the scaled complementarity target is
    diagonal, which makes the Mehrotra correction a Lyapunov-style division
    by lam_i + lam_j.
    """

    def __init__(self, cone: _Cone, X, S):
        if cone.kind == "s":
            self.Lx = np.linalg.cholesky(X)
            Ls = np.linalg.cholesky(S)
            _, lam, Vt = np.linalg.svd(Ls.T @ self.Lx)
            if np.min(lam) <= 0:
                raise np.linalg.LinAlgError("lost positive definiteness")
            self.lam = lam
            self.R = self.Lx @ (Vt.T / np.sqrt(lam))
            eye = np.eye(cone.size)
            self.Rinv = (Vt * np.sqrt(lam)[:, None]) @ solve_triangular(
                self.Lx, eye, lower=True
            )
            self.W = self.R @ self.R.T
        else:
            self.x = X
            self.w2 = X / S
            self.Sinv = 1.0 / S

    def congruence(self, mat):
        """W M W (symmetric scaling of a block or a stack of blocks)."""
        return self.W @ mat @ self.W if hasattr(self, "W") else self.w2 * mat

    def corrector_rhs(self, sigma_mu: float, dX, dS):
        """Right-hand side of the centering-corrector complementarity
        equation, mapped back to the unscaled space."""
        dXt = self.Rinv @ dX @ self.Rinv.T
        dSt = self.R.T @ dS @ self.R
        rhs = -0.5 * (dXt @ dSt + dSt @ dXt)
        idx = np.diag_indices(rhs.shape[0])
        rhs[idx] += sigma_mu - self.lam**2
        scaled = 2.0 * rhs / (self.lam[:, None] + self.lam[None, :])
        return self.R @ scaled @ self.R.T


def _presolve_infeasible(cones: list[_Cone], scale: float) -> bool:
    # Constant constraints (zero coefficient rows/blocks) must already be
    # consistent; catches doctored contradictions exactly.
    tiny = 1e-12 * scale
    for cone in cones:
        if cone.kind == "l":
            dead = np.max(np.abs(cone.A), axis=0) == 0 if cone.A.size else np.ones(cone.size, bool)
            if np.any(cone.C[dead] < -tiny):
                return True
        else:
            if cone.A.size == 0 or np.max(np.abs(cone.A)) == 0:
                if float(np.linalg.eigvalsh(_sym(cone.C))[0]) < -tiny:
                    return True
    return False


def _presolve_unbounded(cones: list[_Cone], b: np.ndarray) -> bool:
    # A moment with nonzero objective weight that no block touches is a free
    # ray (e.g. odd moments under purely even constraint products).
    M = b.size
    if M == 0:
        return False
    touched = np.zeros(M, dtype=bool)
    for cone in cones:
        flat = cone.A.reshape(M, -1)
        touched |= np.max(np.abs(flat), axis=1) > 0
    return bool(np.any((~touched) & (b != 0)))


def _ipm(cones: list[_Cone], b: np.ndarray, tol: float, max_iter: int) -> _RawResult:
    M = b.size
    nu = sum(c.size for c in cones)
    norm_b = float(np.linalg.norm(b))
    norm_C = float(np.sqrt(sum(np.sum(c.C**2) for c in cones)))
    data_norm = max(
        [norm_b] + [float(np.max(np.abs(c.C), initial=0.0)) for c in cones]
        + [float(np.max(np.abs(c.A), initial=0.0)) for c in cones]
    )
    init_scale = 1.0 + data_norm

    if _presolve_infeasible(cones, init_scale):
        X = [np.zeros((c.size, c.size)) if c.kind == "s" else np.zeros(c.size) for c in cones]
        S = [c.C.copy() for c in cones]
        return _RawResult(INFEASIBLE, X, S, np.zeros(M), 0, np.inf, np.inf, 0.0, 0.0)
    if _presolve_unbounded(cones, b):
        X = [np.zeros((c.size, c.size)) if c.kind == "s" else np.zeros(c.size) for c in cones]
        S = [c.C.copy() for c in cones]
        return _RawResult(UNBOUNDED, X, S, np.zeros(M), 0, np.inf, np.inf, 0.0, 0.0)

    X = [init_scale * (np.eye(c.size) if c.kind == "s" else np.ones(c.size)) for c in cones]
    S = [init_scale * (np.eye(c.size) if c.kind == "s" else np.ones(c.size)) for c in cones]
    y = np.zeros(M)

    if M == 0:
        # No free moments: feasibility is a constant PSD check.
        bad = any(
            (float(np.linalg.eigvalsh(_sym(c.C))[0]) if c.kind == "s" else float(np.min(c.C)))
            < -1e-12 * init_scale
            for c in cones
        )
        status = INFEASIBLE if bad else OPTIMAL
        Xz = [np.zeros((c.size, c.size)) if c.kind == "s" else np.zeros(c.size) for c in cones]
        return _RawResult(status, Xz, [c.C.copy() for c in cones], y, 0, 0.0, 0.0, 0.0, 0.0)

    status = MAX_ITERATIONS
    iterations = 0
    rel_p = rel_d = np.inf
    pobj = dobj = 0.0
    stalls = 0

    for it in range(max_iter + 1):
        rp = b - sum(c.apply(Xc) for c, Xc in zip(cones, X))
        Rd = [c.C - Sc - c.apply_adjoint(y) for c, Sc in zip(cones, S)]
        gap_xs = sum(_inner(c, Xc, Sc) for c, Xc, Sc in zip(cones, X, S))
        mu = gap_xs / nu
        pobj = sum(_inner(c, c.C, Xc) for c, Xc in zip(cones, X))
        dobj = float(b @ y)
        rel_p = float(np.linalg.norm(rp)) / (1.0 + norm_b)
        rel_d = float(np.sqrt(sum(np.sum(R * R) for R in Rd))) / (1.0 + norm_C)
        rel_g = gap_xs / (1.0 + abs(pobj) + abs(dobj))

        if max(rel_p, rel_d, rel_g) <= tol:
            status = OPTIMAL
            break
        if pobj < -_DIVERGENCE * init_scale and rel_p < 1e-6:
            status = INFEASIBLE  # certificate value diverges upward
            break
        if dobj > _DIVERGENCE * init_scale and rel_d < 1e-6:
            status = UNBOUNDED
            break
        if it == max_iter:
            break

        try:
            scal = [_Scaling(c, Xc, Sc) for c, Xc, Sc in zip(cones, X, S)]

            schur = np.zeros((M, M))
            for c, sc in zip(cones, scal):
                if c.kind == "s":
                    T = sc.congruence(c.A)
                    schur += c.A.reshape(M, -1) @ T.reshape(M, -1).T
                else:
                    schur += (c.A * sc.w2) @ c.A.T
            schur = _sym(schur)
            if not np.isfinite(schur).all():
                raise np.linalg.LinAlgError("non-finite Schur complement")
            jitter = 0.0
            base = 1e-14 * (1.0 + float(np.trace(schur)) / M)
            for attempt in range(4):
                try:
                    fac = cho_factor(schur + jitter * np.eye(M), lower=True)
                    break
                except np.linalg.LinAlgError:
                    jitter = base * (100.0**attempt + 1.0)
            else:
                raise np.linalg.LinAlgError("Schur complement not positive definite")

            def newton(Rc):
                rhs = rp.copy()
                for c, sc, R, Rcc in zip(cones, scal, Rd, Rc):
                    rhs += c.apply(sc.congruence(R)) - c.apply(Rcc)
                dy = cho_solve(fac, rhs)
                # Refine against the unregularized system: recovers accuracy
                # lost to jitter and to ill-conditioning near optimality.
                for _ in range(2):
                    dy = dy + cho_solve(fac, rhs - schur @ dy)
                dS = [R - c.apply_adjoint(dy) for c, R in zip(cones, Rd)]
                dX = []
                for c, sc, Rcc, dSc in zip(cones, scal, Rc, dS):
                    step = Rcc - sc.congruence(dSc)
                    dX.append(_sym(step) if c.kind == "s" else step)
                return dy, dX, dS

            # Predictor: pure Newton step toward complementarity zero.
            Rc_aff = [-Xc for Xc in X]
            dy_a, dX_a, dS_a = newton(Rc_aff)
            ap = min(
                1.0,
                min(
                    _max_step_s(sc.Lx, d) if c.kind == "s" else _max_step_l(sc.x, d)
                    for c, sc, d in zip(cones, scal, dX_a)
                ),
            )
            ad = 1.0
            for c, Sc, d in zip(cones, S, dS_a):
                if c.kind == "s":
                    ad = min(ad, _max_step_s(np.linalg.cholesky(Sc), d))
                else:
                    ad = min(ad, _max_step_l(Sc, d))
            mu_aff = max(
                0.0,
                sum(
                    _inner(c, Xc + ap * dXc, Sc + ad * dSc)
                    for c, Xc, Sc, dXc, dSc in zip(cones, X, S, dX_a, dS_a)
                )
                / nu,
            )
            sigma = min(0.999, max(1e-10, (mu_aff / mu) ** 3)) if mu > 0 else 0.1

            # Corrector with the second-order complementarity term.
            Rc = []
            for c, sc, Xc, dXc, dSc in zip(cones, scal, X, dX_a, dS_a):
                if c.kind == "s":
                    Rc.append(sc.corrector_rhs(sigma * mu, dXc, dSc))
                else:
                    Rc.append(sigma * mu * sc.Sinv - Xc - dXc * dSc * sc.Sinv)
            dy, dX, dS = newton(Rc)
        except np.linalg.LinAlgError:
            status = NUMERICAL_FAILURE
            break

        ap = 1.0
        ad = 1.0
        for c, sc, Sc, dXc, dSc in zip(cones, scal, S, dX, dS):
            if c.kind == "s":
                ap = min(ap, _STEP_FRACTION * _max_step_s(sc.Lx, dXc))
                ad = min(ad, _STEP_FRACTION * _max_step_s(np.linalg.cholesky(Sc), dSc))
            else:
                ap = min(ap, _STEP_FRACTION * _max_step_l(sc.x, dXc))
                ad = min(ad, _STEP_FRACTION * _max_step_l(Sc, dSc))

        if max(ap, ad) < 1e-10:
            stalls += 1
            if stalls >= 3:
                status = NUMERICAL_FAILURE
                break
        else:
            stalls = 0

        X = [Xc + ap * dXc for Xc, dXc in zip(X, dX)]
        X = [_sym(Xc) if c.kind == "s" else Xc for c, Xc in zip(cones, X)]
        y = y + ad * dy
        S = [Sc + ad * dSc for Sc, dSc in zip(S, dS)]
        S = [_sym(Sc) if c.kind == "s" else Sc for c, Sc in zip(cones, S)]
        iterations = it + 1

    return _RawResult(status, X, S, y, iterations, rel_p, rel_d, pobj, dobj)


def _moment_positions(variable_index, layout):
    zero = layout.zero_exponent
    if variable_index[0] != zero:
        raise ValueError("variable index must start with the unit moment")
    return {e: i - 1 for i, e in enumerate(variable_index) if i > 0}


def _sdp_cones(program: ConicProgram):
    layout = program.layout
    zero = layout.zero_exponent
    pos = _moment_positions(program.variable_index, layout)
    M = len(program.variable_index) - 1
    cones = []
    for _, sym in program.psd_blocks:
        k = sym.size
        A = np.zeros((M, k, k))
        C = np.zeros((k, k))
        for i in range(k):
            for j in range(i, k):
                for coeff, e in sym.entries[i][j]:
                    v = float(coeff)
                    if e == zero:
                        C[i, j] += v
                        if i != j:
                            C[j, i] += v
                    else:
                        q = pos[e]
                        A[q, i, j] -= v
                        if i != j:
                            A[q, j, i] -= v
        cones.append(_Cone("s", k, A, C))
    return cones, pos, M


def _lp_cones(program: LinearProgram):
    layout = program.layout
    zero = layout.zero_exponent
    pos = _moment_positions(program.variable_index, layout)
    M = len(program.variable_index) - 1
    R = len(program.rows)
    A = np.zeros((M, R))
    C = np.zeros(R)
    for row, (_, form) in enumerate(program.rows):
        for e, coeff in form.items():
            v = float(coeff)
            if e == zero:
                C[row] += v
            else:
                A[pos[e], row] -= v
    return [_Cone("l", R, A, C)], pos, M


def _objective_vector(program, M: int, pos) -> tuple[np.ndarray, float]:
    zero = program.layout.zero_exponent
    c = np.zeros(M)
    f0 = 0.0
    for e, coeff in program.objective.items():
        if e == zero:
            f0 = float(coeff)
        else:
            c[pos[e]] = float(coeff)
    return c, f0


def _build_report(program, raw: _RawResult, f0: float, c: np.ndarray, dual_blocks) -> SolveReport:
    values = {program.layout.zero_exponent: 1.0}
    for i, e in enumerate(program.variable_index[1:]):
        values[e] = float(raw.y[i])
    moments = MomentVector(program.layout, values, 2 * program.order)
    primal = f0 + float(c @ raw.y)
    dual = f0 - raw.pobj
    return SolveReport(
        status=raw.status,
        primal_objective=primal,
        dual_objective=dual,
        moments=moments,
        dual_blocks=dual_blocks,
        iterations=raw.iterations,
        residuals=Residuals(raw.rel_p, raw.rel_d, abs(primal - dual)),
    )


def solve_sdp(program: ConicProgram, tol: float = 1e-8, max_iter: int = 200) -> SolveReport:
    """Solve a block-PSD moment relaxation.

    On optimal status the reported moments satisfy every block to tolerance
    with the unit moment pinned at 1, and ``dual_blocks`` holds the Gram
    matrices realizing the bound as a weighted sum-of-squares identity.
    """
    _check_tol(tol)
    cones, pos, M = _sdp_cones(program)
    c, f0 = _objective_vector(program, M, pos)
    raw = _ipm(cones, -c, tol, max_iter)
    dual_blocks = [
        (label, Xc) for (label, _), Xc in zip(program.psd_blocks, raw.X)
    ]
    return _build_report(program, raw, f0, c, dual_blocks)


def solve_lp(program: LinearProgram, tol: float = 1e-8, max_iter: int = 200) -> SolveReport:
    """Solve a cone relaxation; row multipliers come back as the duals."""
    _check_tol(tol)
    cones, pos, M = _lp_cones(program)
    c, f0 = _objective_vector(program, M, pos)
    raw = _ipm(cones, -c, tol, max_iter)
    multipliers = raw.X[0]
    dual_blocks = [
        (key, float(multipliers[i])) for i, (key, _) in enumerate(program.rows)
    ]
    return _build_report(program, raw, f0, c, dual_blocks)
