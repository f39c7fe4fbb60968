"""Pattern evaluation, spherical power integrals, directivity, and REIN."""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import QuadratureError
from .geometry import Direction, steering_matrix, steering_vector

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_NODE_CHUNK = 1 << 16


class RatioDB(NamedTuple):
    ratio: float
    db: float


def to_db(ratio):
    """Power ratio to decibels."""
    return 10.0 * np.log10(ratio)


def from_db(db):
    """Decibels to power ratio."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts for the spherical product rule.

    Gauss-Legendre in cos(theta) crossed with a uniform periodic rule in
    phi; node counts double until the power matrix stabilizes to `tol`.
    """

    n_theta: int = 64
    n_phi: int = 128
    tol: float = 1e-10
    max_doublings: int = 4

    def __post_init__(self):
        if self.n_theta < 8:
            raise ValueError(f"n_theta must be >= 8, got {self.n_theta}")
        if self.n_phi < 16:
            raise ValueError(f"n_phi must be >= 16, got {self.n_phi}")


@dataclass(frozen=True)
class DirectivityMatrices:
    """Spherical power matrix A and look-direction outer product B."""

    a: np.ndarray
    b: np.ndarray
    ctx: object
    look: Direction

    def to_dict(self):
        return {
            "f0_hz": self.ctx.f0,
            "look": {"theta_rad": self.look.theta, "phi_rad": self.look.phi},
            "a_re": self.a.real.tolist(),
            "a_im": self.a.imag.tolist(),
            "b_re": self.b.real.tolist(),
            "b_im": self.b.imag.tolist(),
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def pattern_response(w, v):
    """Beamformer output w^H v for a single steering vector."""
    w = np.asarray(w, dtype=complex).ravel()
    v = np.asarray(v, dtype=complex).ravel()
    if w.shape != v.shape:
        raise ValueError(f"length mismatch: {w.size} weights vs {v.size} steering entries")
    return complex(np.vdot(w, v))


def _sphere_nodes(n_theta, n_phi):
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = np.arange(n_phi) * (2.0 * np.pi / n_phi)
    # (1/4pi) * GL weight * (2pi/n_phi) collapses to wx / (2 n_phi)
    node_w = wx / (2.0 * n_phi)
    return theta, phi, node_w


def _steering_moment(array, ctx, n_theta, n_phi):
    """Accumulate (1/4pi) * integral of v v^H sin(theta) dtheta dphi."""
    theta, phi, node_w = _sphere_nodes(n_theta, n_phi)
    th = np.repeat(theta, n_phi)
    ph = np.tile(phi, n_theta)
    q = np.repeat(node_w, n_phi)
    a = np.zeros((array.n, array.n), dtype=complex)
    for start in range(0, th.size, _NODE_CHUNK):
        sl = slice(start, start + _NODE_CHUNK)
        v = steering_matrix(array, ctx, th[sl], ph[sl])
        a += (v * q[sl, None]).T @ v.conj()
    return 0.5 * (a + a.conj().T)


def compute_a(array, ctx, quad=QuadratureSpec()):
    """Spherical second-moment matrix of the steering vectors.

    w^H A w is the pattern power averaged over the full sphere. Node counts
    double until successive estimates agree entrywise within quad.tol;
    raises QuadratureError when max_doublings is exhausted first.
    """
    n_theta, n_phi = quad.n_theta, quad.n_phi
    a_prev = _steering_moment(array, ctx, n_theta, n_phi)
    for _ in range(quad.max_doublings):
        n_theta *= 2
        n_phi *= 2
        a_next = _steering_moment(array, ctx, n_theta, n_phi)
        if np.max(np.abs(a_next - a_prev)) < quad.tol:
            return a_next
        a_prev = a_next
    raise QuadratureError(
        f"power matrix did not stabilize to {quad.tol} by {n_theta}x{n_phi} nodes"
    )


def compute_b(array, ctx, look):
    """Rank-one outer product of the look-direction steering vector."""
    v0 = steering_vector(array, ctx, look)
    b = np.outer(v0, v0.conj())
    return 0.5 * (b + b.conj().T)


def directivity_matrices(array, ctx, look, quad=QuadratureSpec()):
    return DirectivityMatrices(compute_a(array, ctx, quad), compute_b(array, ctx, look), ctx, look)


def _quad_form(w, m):
    return float(np.real(np.vdot(w, m @ w)))


def directivity(w, mats):
    """Directivity (w^H B w)/(w^H A w) as a (ratio, dB) pair."""
    w = np.asarray(w, dtype=complex).ravel()
    if not np.any(w):
        raise ValueError("weight vector must be nonzero")
    # B is positive semidefinite; a negative quadratic form is rounding
    # noise at a pattern null, so clamp and report -inf dB rather than nan.
    num = max(_quad_form(w, mats.b), 0.0)
    ratio = num / _quad_form(w, mats.a)
    with np.errstate(divide="ignore"):
        return RatioDB(ratio, to_db(ratio))


def rein(w, a):
    """Ratio of external to internal noise (w^H A w)/(w^H w) as (ratio, dB)."""
    w = np.asarray(w, dtype=complex).ravel()
    if not np.any(w):
        raise ValueError("weight vector must be nonzero")
    gamma = _quad_form(w, np.asarray(a)) / float(np.real(np.vdot(w, w)))
    return RatioDB(gamma, to_db(gamma))


@dataclass(frozen=True)
class PatternGrid:
    """Pattern samples on a regular theta x phi grid (radians)."""

    theta: np.ndarray
    phi: np.ndarray
    values: np.ndarray

    def magnitude(self):
        return np.abs(self.values)

    def nearest_index(self, direction):
        i = int(np.argmin(np.abs(self.theta - direction.theta)))
        dphi = np.abs((self.phi - direction.phi + np.pi) % (2.0 * np.pi) - np.pi)
        return i, int(np.argmin(dphi))


def sample_pattern(array, ctx, w, step_deg=1.0):
    """Evaluate w^H v on a regular grid covering the full sphere."""
    theta, phi = pattern_grid_axes(step_deg)
    w = np.asarray(w, dtype=complex).ravel()
    values = np.empty((theta.size, phi.size), dtype=complex)
    rows = max(1, _NODE_CHUNK // (phi.size * max(array.n, 1)))
    for start in range(0, theta.size, rows):
        sl = slice(start, start + rows)
        v = steering_matrix(array, ctx, theta[sl, None], phi[None, :])
        values[sl] = v @ w.conj()
    return PatternGrid(theta, phi, values)


def pattern_grid_axes(step_deg):
    if step_deg <= 0:
        raise ValueError(f"grid step must be positive, got {step_deg}")
    n_theta = int(round(180.0 / step_deg)) + 1
    n_phi = int(round(360.0 / step_deg))
    if n_theta < 2 or n_phi < 2:
        raise ValueError("need at least 2 samples per axis")
    theta = np.linspace(0.0, np.pi, n_theta)
    phi = np.arange(n_phi) * (2.0 * np.pi / n_phi)
    return theta, phi


class Peak(NamedTuple):
    direction: Direction
    magnitude: float


def _direction_mask(grid, center, radius):
    """Boolean grid mask of points within `radius` central angle of center."""
    u = center.unit_vector()
    st = np.sin(grid.theta)[:, None]
    dots = (
        st * np.cos(grid.phi)[None, :] * u[0]
        + st * np.sin(grid.phi)[None, :] * u[1]
        + np.cos(grid.theta)[:, None] * u[2]
    )
    return np.arccos(np.clip(dots, -1.0, 1.0)) <= radius


def _golden_min(fun, lo, hi, tol):
    """Golden-section minimizer of a unimodal scalar function on [lo, hi]."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def _refine_peak(theta, phi, magnitude, step_theta, step_phi, tol=1e-3, passes=2):
    """Coordinate-wise golden-section ascent around one grid peak."""
    for _ in range(passes):
        lo = max(theta - step_theta, 0.0)
        hi = min(theta + step_theta, np.pi)
        theta = _golden_min(lambda t: -magnitude(t, phi), lo, hi, tol)
        phi = _golden_min(lambda p: -magnitude(theta, p), phi - step_phi, phi + step_phi, tol)
    return Direction(theta, phi)


def estimate_mainlobe_radius(grid, look, min_cells=3):
    """Mainlobe cap radius: first azimuth null from the look, floored at
    `min_cells` grid cells and capped at pi/2."""
    i0, j0 = grid.nearest_index(look)
    mag = grid.magnitude()
    row = mag[i0]
    n_phi = row.size
    dphi = 2.0 * np.pi / n_phi
    null_dist = None
    for sign in (1, -1):
        prev = row[j0]
        for k in range(1, n_phi // 2):
            cur = row[(j0 + sign * k) % n_phi]
            if cur > prev:
                null_dist = min(null_dist, (k - 1) * dphi) if null_dist else (k - 1) * dphi
                break
            prev = cur
    step = max(dphi, np.pi / max(grid.theta.size - 1, 1))
    radius = max(null_dist or 0.0, min_cells * step)
    return min(radius, np.pi / 2.0)


def worst_sidelobe(grid, look, exclusion, extra_exclude=()):
    """Largest sampled magnitude outside the mainlobe cap(s) and where it sits."""
    mask = ~_direction_mask(grid, look, exclusion)
    for other in extra_exclude:
        mask &= ~_direction_mask(grid, other, exclusion)
    if not mask.any():
        raise ValueError("mainlobe exclusion leaves no sidelobe region")
    mag = grid.magnitude()
    i, j = np.unravel_index(np.argmax(np.where(mask, mag, -1.0)), mag.shape)
    return float(mag[i, j]), Direction(grid.theta[i], grid.phi[j])


def find_sidelobe_peaks(grid, look, exclusion, m=None, extra_exclude=(), refine=None):
    """Largest local maxima of |F| outside the mainlobe cap.

    Parameters
    ----------
    grid : PatternGrid
    look : Direction
        Mainlobe center; a cap of `exclusion` radians around it (and around
        each direction in `extra_exclude`) is ignored.
    m : int, optional
        Return at most this many peaks (strongest first).
    refine : callable, optional
        Continuous evaluator (theta, phi) -> |F| used to sharpen each grid
        peak by golden-section ascent; grid-cell directions otherwise.

    Returns peaks ordered by descending magnitude; fewer than `m` when the
    sidelobe region holds fewer local maxima.
    """
    mag = grid.magnitude()
    n_theta, n_phi = mag.shape
    sidelobe = ~_direction_mask(grid, look, exclusion)
    for other in extra_exclude:
        sidelobe &= ~_direction_mask(grid, other, exclusion)
    if not sidelobe.any():
        raise ValueError("mainlobe exclusion leaves no sidelobe region")

    inner = mag[1:-1]
    is_max = (
        (inner > mag[:-2])
        & (inner > mag[2:])
        & (inner > np.roll(mag[1:-1], 1, axis=1))
        & (inner > np.roll(mag[1:-1], -1, axis=1))
    )
    candidates = [
        (float(mag[i + 1, j]), i + 1, j) for i, j in np.argwhere(is_max) if sidelobe[i + 1, j]
    ]
    # Poles collapse to single physical points; detect them against the
    # neighboring ring.
    if sidelobe[0].all() and mag[0, 0] > mag[1].max():
        candidates.append((float(mag[0, 0]), 0, 0))
    if sidelobe[-1].all() and mag[-1, 0] > mag[-2].max():
        candidates.append((float(mag[-1, 0]), n_theta - 1, 0))
    candidates.sort(reverse=True)

    step_theta = np.pi / (n_theta - 1)
    step_phi = 2.0 * np.pi / n_phi
    peaks = []
    for value, i, j in candidates:
        if refine is not None:
            d = _refine_peak(grid.theta[i], grid.phi[j], refine, step_theta, step_phi)
            value = float(refine(d.theta, d.phi))
        else:
            d = Direction(grid.theta[i], grid.phi[j])
        if any(d.angle_to(p.direction) < 0.25 * min(step_theta, step_phi) for p in peaks):
            continue
        peaks.append(Peak(d, value))
    peaks.sort(key=lambda p: -p.magnitude)
    if m is not None:
        peaks = peaks[:m]
    return peaks


def pattern_grid_to_csv(grid, ref_value, path, floor_db=-300.0):
    """Write the grid as CSV columns theta_deg, phi_deg, re, im, magnitude_dB.

    Magnitudes are normalized to |ref_value| (the look-direction response).
    """
    ref = abs(ref_value)
    if ref <= 0:
        raise ValueError("reference value must be nonzero")
    with open(path, "w") as fh:
        fh.write("theta_deg,phi_deg,re,im,magnitude_dB\n")
        for i, th in enumerate(np.rad2deg(grid.theta)):
            for j, ph in enumerate(np.rad2deg(grid.phi)):
                val = grid.values[i, j]
                db = 20.0 * np.log10(max(abs(val) / ref, 10.0 ** (floor_db / 20.0)))
                fh.write(
                    f"{th:.6g},{ph:.6g},{val.real:.6g},{val.imag:.6g},{db:.6g}\n"
                )
