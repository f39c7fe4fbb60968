"""Equality- and norm-ball-constrained quadratic solvers in the real lift."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import InfeasibleError, NumericalError
from .reallift import lift_matrix, lift_steering, unlift_weight

_LOAD_SCALE = 1e-12
_RANK_TOL = 1e-10
_RESIDUAL_TOL = 1e-9
_NORM_RTOL = 1e-9
_MAX_BISECT = 200


@dataclass(frozen=True)
class EqualityConstraints:
    """Linear system c.T @ w_tilde = f; each column of c is one named row."""

    c: np.ndarray
    f: np.ndarray
    names: tuple

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        f = np.asarray(self.f, dtype=float).ravel()
        if c.ndim != 2 or c.shape[1] != f.size or len(self.names) != f.size:
            raise ValueError("constraint matrix, targets, and names disagree in size")
        if c.shape[1] == 0:
            raise ValueError("need at least one constraint")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def m(self):
        return self.c.shape[1]

    def extended(self, c_extra, f_extra, names_extra):
        return EqualityConstraints(
            np.column_stack([self.c, np.asarray(c_extra, dtype=float)]),
            np.concatenate([self.f, np.asarray(f_extra, dtype=float).ravel()]),
            self.names + tuple(names_extra),
        )


class SolverDiagnostics(NamedTuple):
    loads: tuple
    dropped: tuple


class QPSolution(NamedTuple):
    w_tilde: np.ndarray
    mu: float
    norm_sq: float
    ball_active: bool
    diagnostics: SolverDiagnostics


class MaxDirectivityResult(NamedTuple):
    w: np.ndarray
    d_max: float
    diagnostics: SolverDiagnostics


def mainlobe_constraints(v0, v_theta=None, v_phi=None):
    """Unit-gain and flat-slope rows for the look direction.

    The complex gain condition v0^H w = 1 contributes two real rows; each
    supplied derivative contributes one row forcing Re(d^H w) = 0.
    """
    v0_tilde, v0_hat = lift_steering(v0)
    cols = [v0_tilde, v0_hat]
    f = [1.0, 0.0]
    names = ["gain_re", "gain_im"]
    for name, d in (("slope_theta", v_theta), ("slope_phi", v_phi)):
        if d is not None:
            cols.append(lift_steering(d)[0])
            f.append(0.0)
            names.append(name)
    return EqualityConstraints(np.column_stack(cols), np.asarray(f), tuple(names))


def _cholesky_pd(m):
    """Lower Cholesky factor with a single diagonal-loading retry."""
    try:
        return scipy.linalg.cho_factor(m, lower=True), 0.0
    except np.linalg.LinAlgError:
        load = _LOAD_SCALE * float(np.trace(m)) / m.shape[0]
        try:
            factor = scipy.linalg.cho_factor(m + load * np.eye(m.shape[0]), lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "matrix is not positive definite even after diagonal loading"
            ) from exc
        return factor, load


def _rank_filter(con):
    """Drop linearly dependent constraint columns, verifying consistency.

    A dropped column must be a combination of the kept ones with a matching
    target; a contradictory target raises InfeasibleError.
    """
    c, f = con.c, con.f
    _, r, piv = scipy.linalg.qr(c, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = float(diag[0]) if diag.size else 0.0
    rank = int(np.count_nonzero(diag > _RANK_TOL * max(scale, np.finfo(float).tiny)))
    if rank == con.m:
        return con, ()
    if rank == 0:
        raise InfeasibleError("constraint matrix is identically zero")
    keep = np.sort(piv[:rank])
    drop = np.sort(piv[rank:])
    coef, *_ = np.linalg.lstsq(c[:, keep], c[:, drop], rcond=None)
    implied = f[keep] @ coef
    bad = np.abs(implied - f[drop]) > _RESIDUAL_TOL * (1.0 + np.abs(f[drop]))
    if np.any(bad):
        names = ", ".join(con.names[i] for i in drop[bad])
        raise InfeasibleError(f"dependent constraints have contradictory targets: {names}")
    filtered = EqualityConstraints(c[:, keep], f[keep], tuple(con.names[i] for i in keep))
    return filtered, tuple(con.names[i] for i in drop)


def solve_equality_qp(a_tilde, con):
    """Minimize w^T a w subject to c.T w = f.

    Uses the Schur complement of the KKT system: with y = a^{-1} c the
    minimizer is w = y (c.T y)^{-1} f.
    """
    a_tilde = np.asarray(a_tilde, dtype=float)
    con_f, dropped = _rank_filter(con)
    loads = []
    factor, load = _cholesky_pd(a_tilde)
    if load:
        loads.append(load)
    y = scipy.linalg.cho_solve(factor, con_f.c)
    s = con_f.c.T @ y
    s_factor, s_load = _cholesky_pd(0.5 * (s + s.T))
    if s_load:
        loads.append(s_load)
    w = y @ scipy.linalg.cho_solve(s_factor, con_f.f)
    residual = np.linalg.norm(con_f.c.T @ w - con_f.f)
    if residual > _RESIDUAL_TOL * (1.0 + np.linalg.norm(con_f.f)):
        raise NumericalError(f"equality residual {residual:.3e} exceeds tolerance")
    return QPSolution(w, 0.0, float(w @ w), False, SolverDiagnostics(tuple(loads), dropped))


def min_norm_point(con):
    """Smallest-norm vector satisfying the equality rows."""
    con_f, _ = _rank_filter(con)
    g = con_f.c.T @ con_f.c
    factor, _ = _cholesky_pd(0.5 * (g + g.T))
    return con_f.c @ scipy.linalg.cho_solve(factor, con_f.f)


def solve_norm_constrained_qp(a_tilde, con, b):
    """Minimize w^T a w subject to c.T w = f and ||w||^2 <= b.

    The ball multiplier mu shifts the curvature to a + mu I; the constrained
    norm decreases monotonically in mu, so when the equality-only solution
    overflows the ball a bisection on mu finds the boundary root. Raises
    InfeasibleError when even the smallest-norm feasible point overflows.
    """
    a_tilde = np.asarray(a_tilde, dtype=float)
    if b <= 0:
        raise ValueError(f"ball bound must be positive, got {b}")
    con_f, dropped = _rank_filter(con)
    w_mn = min_norm_point(con_f)
    mn_sq = float(w_mn @ w_mn)
    if mn_sq > b * (1.0 + 1e-12):
        raise InfeasibleError(
            f"equality rows force ||w||^2 >= {mn_sq:.6g}, above the ball bound {b:.6g}"
        )

    loads = []

    def merged(sol, mu, active):
        diag = SolverDiagnostics(tuple(loads), dropped)
        return QPSolution(sol.w_tilde, mu, sol.norm_sq, active, diag)

    def solve_mu(mu):
        sol = solve_equality_qp(a_tilde + mu * np.eye(a_tilde.shape[0]), con_f)
        loads.extend(sol.diagnostics.loads)
        return sol

    sol0 = solve_mu(0.0)
    if sol0.norm_sq <= b:
        return merged(sol0, 0.0, False)
    if mn_sq >= b * (1.0 - 1e-9):
        # The ball is tangent to the affine set; the boundary point is the
        # smallest-norm solution itself.
        return QPSolution(w_mn, np.inf, mn_sq, True, SolverDiagnostics(tuple(loads), dropped))

    lo, lo_sq = 0.0, sol0.norm_sq
    hi = max(float(np.trace(a_tilde)) / a_tilde.shape[0], np.finfo(float).tiny)
    hi_sol = solve_mu(hi)
    for _ in range(200):
        if hi_sol.norm_sq <= b:
            break
        assert hi_sol.norm_sq <= lo_sq * (1.0 + 1e-9), "norm must fall as mu grows"
        lo, lo_sq = hi, hi_sol.norm_sq
        hi *= 4.0
        hi_sol = solve_mu(hi)
    else:
        raise NumericalError("ball multiplier bracket failed to close")

    for _ in range(_MAX_BISECT):
        if abs(hi_sol.norm_sq - b) <= _NORM_RTOL * b or hi - lo <= 1e-12 * hi:
            break
        mid = 0.5 * (lo + hi)
        mid_sol = solve_mu(mid)
        assert mid_sol.norm_sq <= lo_sq * (1.0 + 1e-9), "norm must fall as mu grows"
        assert mid_sol.norm_sq >= hi_sol.norm_sq * (1.0 - 1e-9), "norm must fall as mu grows"
        if mid_sol.norm_sq > b:
            lo, lo_sq = mid, mid_sol.norm_sq
        else:
            hi, hi_sol = mid, mid_sol
    return merged(hi_sol, hi, True)


def max_directivity(a, v0, v_theta=None, v_phi=None):
    """Directivity-optimal weights under the mainlobe rows.

    With the derivative rows omitted the result is the generalized Rayleigh
    maximizer v0^H A^{-1} v0. Returns the weight vector, the directivity it
    attains, and solver diagnostics (degenerate rows, e.g. a vanishing
    theta-derivative for planar arrays, are dropped and reported). The
    attained value is the ceiling used to budget the norm ball for a given
    external-noise floor.
    """
    a_tilde = lift_matrix(a)
    sol = solve_equality_qp(a_tilde, mainlobe_constraints(v0, v_theta, v_phi))
    value = float(sol.w_tilde @ (a_tilde @ sol.w_tilde))
    if value <= 0.0:
        raise NumericalError("average pattern power collapsed to zero")
    return MaxDirectivityResult(unlift_weight(sol.w_tilde), 1.0 / value, sol.diagnostics)
