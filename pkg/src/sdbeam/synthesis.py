"""Iterative sidelobe-pinning synthesis under mainlobe and noise-floor bounds.

The loop maximizes directivity subject to a unit mainlobe, an external-noise
dominance floor expressed as a weight-norm ball, and a uniform sidelobe
ceiling enforced by pinning the worst pattern peaks each pass. Sidelobes are
controlled either on the azimuth cut through the look direction (the
operational cut for surface arrays, default) or over the whole sphere.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BracketError, InfeasibleError, NumericalError
from .geometry import Direction, make_uca, steering_derivatives, steering_matrix, steering_vector
from .metrics import (
    DirectivityMatrices,
    Peak,
    QuadratureSpec,
    _golden_min,
    compute_a,
    compute_b,
    directivity,
    estimate_mainlobe_radius,
    find_sidelobe_peaks,
    from_db,
    pattern_response,
    rein,
    sample_pattern,
    to_db,
    worst_sidelobe,
)
from .qpsolver import mainlobe_constraints, max_directivity, solve_norm_constrained_qp
from .reallift import lift_matrix, lift_steering, unlift_weight

# External-noise floors epsilon(f) in dB for HF receive bands (MHz keys).
DEFAULT_REIN_FLOORS_DB = {4.0: -30.0, 6.0: -23.0, 8.0: -19.0, 10.0: -16.0, 12.0: -13.0}

SIDELOBE_REGIONS = ("azimuth-cut", "sphere")

_CONVERGE_SLACK_DB = 0.1
_STEERING_DEDUPE_TOL = 1e-8
_MIN_EXCLUDE_CELLS = 3


def m_max(n, m_rows):
    """Largest number of simultaneously pinnable sidelobe points.

    `m_rows` counts the real mainlobe constraint rows. Raises when the
    design is over-constrained (no pin slots left).
    """
    if n < 1 or m_rows < 1:
        raise ValueError("sensor and constraint counts must be positive")
    if m_rows % 2:
        out = n - (m_rows + 1) // 2
    else:
        out = n - m_rows // 2
    if out <= 0:
        raise InfeasibleError(
            f"{m_rows} mainlobe rows leave no sidelobe slots for {n} sensors"
        )
    return out


def pin_targets(values, s):
    """Desired complex responses at the pinned peaks.

    Each target keeps the current pattern's phase and sets magnitude `s`
    (linear amplitude). A zero pattern value has no phase; such peaks are
    pinned to the real value s and their indices returned for reporting.
    """
    values = np.asarray(values, dtype=complex).ravel()
    if values.size == 0:
        raise ValueError("need at least one peak value")
    if s < 0:
        raise ValueError(f"desired sidelobe magnitude must be >= 0, got {s}")
    mags = np.abs(values)
    zero = mags == 0.0
    targets = np.where(zero, s + 0.0j, s * values / np.where(zero, 1.0, mags))
    return targets, tuple(int(i) for i in np.flatnonzero(zero))


@dataclass(frozen=True)
class SynthesisConfig:
    look: Direction
    epsilon_db: float
    sidelobe_level_db: float = -25.0
    delta_db: float = 0.5
    sidelobe_region: str = "azimuth-cut"
    grid_step_deg: float = 1.0
    quadrature: QuadratureSpec = QuadratureSpec()
    max_pin_iterations: int = 50
    max_outer_iterations: int = 10
    relax_step_db: float = 1.0
    mainlobe_radius: float = 0.0
    refine_peaks: bool = True

    def __post_init__(self):
        if not np.isfinite(self.epsilon_db):
            raise ValueError("epsilon_db must be finite")
        if self.sidelobe_level_db >= 0:
            raise ValueError("sidelobe_level_db must be negative")
        if self.delta_db <= 0:
            raise ValueError("delta_db must be positive")
        if self.sidelobe_region not in SIDELOBE_REGIONS:
            raise ValueError(f"sidelobe_region must be one of {SIDELOBE_REGIONS}")
        if self.max_pin_iterations < 1 or self.max_outer_iterations < 1:
            raise ValueError("iteration limits must be positive")
        if self.relax_step_db <= 0:
            raise ValueError("relax_step_db must be positive")


@dataclass(frozen=True)
class IterationRecord:
    outer_round: int
    pin_iteration: int
    epsilon0_db: float
    ball_bound: float
    n_pinned: int
    worst_sidelobe_db: float
    gamma_db: float
    objective: float
    norm_sq: float
    ball_active: bool
    mu: float
    w: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "outer_round": self.outer_round,
            "pin_iteration": self.pin_iteration,
            "epsilon0_db": self.epsilon0_db,
            "ball_bound": self.ball_bound,
            "n_pinned": self.n_pinned,
            "worst_sidelobe_db": self.worst_sidelobe_db,
            "gamma_db": self.gamma_db,
            "objective": self.objective,
            "norm_sq": self.norm_sq,
            "ball_active": self.ball_active,
            "mu": self.mu,
        }


@dataclass(frozen=True)
class SynthesisResult:
    w_opt: np.ndarray
    directivity_db: float
    gamma_db: float
    epsilon_final_db: float
    d_max: float
    ball_bound: float
    pinned_peaks: tuple
    iterations: tuple
    status: str
    diagnostics: dict

    @property
    def converged(self):
        return self.status == "converged"

    def to_dict(self):
        return {
            "status": self.status,
            "weights_re": self.w_opt.real.tolist(),
            "weights_im": self.w_opt.imag.tolist(),
            "directivity_db": self.directivity_db,
            "gamma_db": self.gamma_db,
            "epsilon_final_db": self.epsilon_final_db,
            "d_max": self.d_max,
            "ball_bound": self.ball_bound,
            "pinned_peaks": [
                {
                    "theta_rad": d.theta,
                    "phi_rad": d.phi,
                    "target_re": t.real,
                    "target_im": t.imag,
                }
                for d, t in self.pinned_peaks
            ],
            "iterations": [rec.to_dict() for rec in self.iterations],
            "diagnostics": self.diagnostics,
        }


class _CutRegion:
    """Sidelobe bookkeeping on the circle theta = look.theta.

    The mainlobe arc runs from the first pattern minimum on either side of
    the look azimuth (at least `_MIN_EXCLUDE_CELLS` cells each way); all
    remaining cut samples count as sidelobe.
    """

    def __init__(self, array, ctx, config):
        look = config.look
        if np.sin(look.theta) < 1e-9:
            raise ValueError("azimuth cut degenerates at the poles; use the sphere region")
        n = max(int(round(360.0 / config.grid_step_deg)), 16)
        self.phi = np.arange(n) * (2.0 * np.pi / n)
        self.vmat = steering_matrix(array, ctx, look.theta, self.phi)
        self.j0 = int(np.argmin(np.abs((self.phi - look.phi + np.pi) % (2.0 * np.pi) - np.pi)))
        self.array, self.ctx, self.config = array, ctx, config

    def _mainlobe_arc(self, mag):
        n = mag.size

        def first_min(sign):
            prev = mag[self.j0]
            for k in range(1, n // 2):
                cur = mag[(self.j0 + sign * k) % n]
                if cur > prev:
                    return k - 1
                prev = cur
            return 0

        return (
            max(first_min(-1), _MIN_EXCLUDE_CELLS),
            max(first_min(+1), _MIN_EXCLUDE_CELLS),
        )

    def survey(self, w, s_lin):
        """Worst sidelobe level in dB and the pinnable peaks above s_lin."""
        f = self.vmat @ np.asarray(w, dtype=complex).conj()
        mag = np.abs(f)
        n = mag.size
        left, right = self._mainlobe_arc(mag)
        mask = np.ones(n, dtype=bool)
        mask[(self.j0 + np.arange(-left, right + 1)) % n] = False
        worst_db = to_db(max(float(mag[mask].max()), 1e-300) ** 2)

        is_max = (mag > np.roll(mag, 1)) & (mag > np.roll(mag, -1)) & mask & (mag > s_lin)
        order = np.argsort(-mag[is_max])
        idx = np.flatnonzero(is_max)[order]
        step = 2.0 * np.pi / n
        theta0 = self.config.look.theta
        peaks = []
        for j in idx:
            if self.config.refine_peaks:
                fun = lambda p: -abs(
                    pattern_response(w, steering_vector(self.array, self.ctx, Direction(theta0, p)))
                )
                phi = _golden_min(fun, self.phi[j] - step, self.phi[j] + step, 1e-3)
            else:
                phi = self.phi[j]
            d = Direction(theta0, phi)
            peaks.append(
                Peak(d, abs(pattern_response(w, steering_vector(self.array, self.ctx, d))))
            )
        return worst_db, peaks


class _SphereRegion:
    """Sidelobe bookkeeping over the full sphere minus the mainlobe cap(s)."""

    def __init__(self, array, ctx, config):
        self.array, self.ctx, self.config = array, ctx, config
        mirror = config.look.mirror_z()
        self.extra = (
            (mirror,)
            if array.planar_xy and mirror.angle_to(config.look) > 1e-9
            else ()
        )

    def survey(self, w, s_lin):
        config = self.config
        grid = sample_pattern(self.array, self.ctx, w, config.grid_step_deg)
        exclusion = config.mainlobe_radius or estimate_mainlobe_radius(grid, config.look)
        worst, _ = worst_sidelobe(grid, config.look, exclusion, self.extra)
        worst_db = to_db(max(worst, 1e-300) ** 2)
        if worst_db <= config.sidelobe_level_db + _CONVERGE_SLACK_DB:
            return worst_db, []

        def magnitude(th, ph):
            return abs(pattern_response(w, steering_vector(self.array, self.ctx, Direction(th, ph))))

        peaks = find_sidelobe_peaks(
            grid,
            config.look,
            exclusion,
            extra_exclude=self.extra,
            refine=magnitude if config.refine_peaks else None,
        )
        return worst_db, [p for p in peaks if p.magnitude > s_lin]


def _dedupe_by_steering(peaks, array, ctx):
    """Merge peaks whose steering vectors coincide (mirror images on planar
    arrays constrain the same functional and would duplicate rows)."""
    kept, vectors = [], []
    for peak in peaks:
        v = steering_vector(array, ctx, peak.direction)
        if any(np.max(np.abs(v - u)) < _STEERING_DEDUPE_TOL * np.sqrt(array.n) for u in vectors):
            continue
        kept.append(peak)
        vectors.append(v)
    return kept, vectors


def _base_constraints(v0, v_theta, v_phi, dropped):
    """Mainlobe rows with the degenerate derivative rows removed up front."""
    kwargs = {}
    if "slope_theta" not in dropped:
        kwargs["v_theta"] = v_theta
    if "slope_phi" not in dropped:
        kwargs["v_phi"] = v_phi
    return mainlobe_constraints(v0, **kwargs)


def synthesize(array, ctx, config):
    """Run the iterative synthesis and return the full trace.

    Outer rounds relax the noise floor epsilon0 one step at a time whenever
    the sidelobe ceiling cannot be met inside the current norm ball; inner
    iterations pin the worst sidelobe peaks to the desired level and
    re-solve. The result reports status converged, sidelobe-infeasible, or
    rein-infeasible, with per-iterate weights retained for auditing.
    """
    a = compute_a(array, ctx, config.quadrature)
    a_tilde = lift_matrix(a)
    mats = DirectivityMatrices(a, compute_b(array, ctx, config.look), ctx, config.look)
    v0 = steering_vector(array, ctx, config.look)
    v_theta, v_phi = steering_derivatives(array, ctx, config.look)
    dmax_res = max_directivity(a, v0, v_theta, v_phi)
    base_con = _base_constraints(v0, v_theta, v_phi, dmax_res.diagnostics.dropped)
    s_lin = from_db(config.sidelobe_level_db) ** 0.5  # ceiling amplitude

    region_cls = _CutRegion if config.sidelobe_region == "azimuth-cut" else _SphereRegion
    region = region_cls(array, ctx, config)

    diagnostics = {
        "loads": [],
        "dropped_rows": list(dmax_res.diagnostics.dropped),
        "zero_phase_pins": 0,
        "sidelobe_region": config.sidelobe_region,
    }
    records = []
    status = "rein-infeasible"
    w_best, pins_best, eps_final = None, (), config.epsilon_db

    for outer in range(config.max_outer_iterations):
        eps0_db = config.epsilon_db - outer * config.relax_step_db
        eps_final = eps0_db
        b = 1.0 / (from_db(eps0_db) * dmax_res.d_max)
        try:
            sol = solve_norm_constrained_qp(a_tilde, base_con, b)
        except InfeasibleError:
            status = "rein-infeasible"
            continue
        diagnostics["loads"].extend(sol.diagnostics.loads)
        w_c = unlift_weight(sol.w_tilde)
        pins = ()
        converged = False

        for it in range(config.max_pin_iterations):
            worst_db, peaks = region.survey(w_c, s_lin)
            records.append(
                IterationRecord(
                    outer, it, eps0_db, b, len(pins), worst_db,
                    rein(w_c, a).db, 1.0 / max(directivity(w_c, mats).ratio, 1e-300),
                    float(np.real(np.vdot(w_c, w_c))), sol.ball_active, sol.mu, w_c,
                )
            )
            if worst_db <= config.sidelobe_level_db + _CONVERGE_SLACK_DB:
                converged = True
                break

            peaks, vectors = _dedupe_by_steering(peaks, array, ctx)
            if not peaks:
                # Above the ceiling yet nothing pinnable (flat pattern).
                status = "sidelobe-infeasible"
                break
            cap = m_max(array.n, base_con.m)
            peaks, vectors = peaks[:cap], vectors[:cap]
            values = [pattern_response(w_c, v) for v in vectors]
            targets, zero_idx = pin_targets(values, s_lin)
            diagnostics["zero_phase_pins"] += len(zero_idx)

            con = base_con
            for i, (v, t) in enumerate(zip(vectors, targets)):
                v_tilde, v_hat = lift_steering(v)
                # Rows bound v^H w; the pattern value w^H v is its conjugate.
                con = con.extended(
                    np.column_stack([v_tilde, v_hat]),
                    [t.real, -t.imag],
                    (f"pin{i}_re", f"pin{i}_im"),
                )
            try:
                sol = solve_norm_constrained_qp(a_tilde, con, b)
            except InfeasibleError:
                status = "sidelobe-infeasible"
                break
            diagnostics["loads"].extend(sol.diagnostics.loads)
            w_c = unlift_weight(sol.w_tilde)
            pins = tuple((p.direction, complex(t)) for p, t in zip(peaks, targets))
        else:
            status = "sidelobe-infeasible"

        w_best, pins_best = w_c, pins
        if converged:
            gamma_db = rein(w_c, a).db
            if gamma_db >= eps0_db - config.delta_db:
                status = "converged"
                break
            status = "rein-infeasible"

    if w_best is None:
        # Ball infeasible at every probed floor; report the unit-gain
        # directivity maximizer as the best-effort weight.
        w_best = dmax_res.w
        pins_best = ()
    return SynthesisResult(
        w_opt=w_best,
        directivity_db=directivity(w_best, mats).db,
        gamma_db=rein(w_best, a).db,
        epsilon_final_db=eps_final,
        d_max=dmax_res.d_max,
        ball_bound=1.0 / (from_db(eps_final) * dmax_res.d_max),
        pinned_peaks=pins_best,
        iterations=tuple(records),
        status=status,
        diagnostics=diagnostics,
    )


def radius_for_rein(n, ctx, epsilon_db, look, tol_db=0.05, quad=QuadratureSpec()):
    """Radius at which the max-directivity weight meets the noise floor.

    REIN of the directivity-optimal solution rises monotonically with the
    circle radius (asserted during the search); a bisection finds where it
    crosses epsilon_db. Raises BracketError when no radius in the grown
    bracket attains the floor.
    """
    lam = ctx.wavelength

    def gamma_db(r):
        arr = make_uca(n, r)
        a = compute_a(arr, ctx, quad)
        v0 = steering_vector(arr, ctx, look)
        v_theta, v_phi = steering_derivatives(arr, ctx, look)
        res = max_directivity(a, v0, v_theta, v_phi)
        return rein(res.w, a).db

    lo, hi = 0.01 * lam, 0.5 * lam
    g_lo, g_hi = gamma_db(lo), gamma_db(hi)
    for _ in range(30):
        if g_lo <= epsilon_db:
            break
        lo *= 0.5
        g_lo = gamma_db(lo)
    else:
        raise BracketError(f"noise floor {epsilon_db} dB is met by every probed radius")
    for _ in range(8):
        if g_hi >= epsilon_db:
            break
        hi *= 2.0
        g_hi = gamma_db(hi)
    else:
        raise BracketError(f"noise floor {epsilon_db} dB is unreachable for n={n}")

    for _ in range(80):
        mid = 0.5 * (lo + hi)
        g_mid = gamma_db(mid)
        assert g_lo - 1e-9 <= g_mid <= g_hi + 1e-9, "REIN must rise with radius"
        if abs(g_mid - epsilon_db) <= tol_db:
            return mid
        if g_mid < epsilon_db:
            lo, g_lo = mid, g_mid
        else:
            hi, g_hi = mid, g_mid
    raise NumericalError("radius bisection failed to meet the REIN tolerance")
