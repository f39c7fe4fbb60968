"""Sensor layouts, look directions, and plane-wave steering vectors."""

import json
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
"Propagation speed in m/s used unless a context overrides it."

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Direction:
    """A direction on the sphere: polar angle from +z, azimuth from +x.

    theta is validated into [0, pi]; phi is wrapped into [0, 2*pi).
    """

    theta: float
    phi: float

    def __post_init__(self):
        theta = float(self.theta)
        if not 0.0 <= theta <= np.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg):
        return cls(np.deg2rad(theta_deg), np.deg2rad(phi_deg))

    def unit_vector(self):
        """Cartesian unit vector pointing at this direction."""
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    def angle_to(self, other):
        """Central angle to another direction, in radians."""
        c = float(np.dot(self.unit_vector(), other.unit_vector()))
        return float(np.arccos(np.clip(c, -1.0, 1.0)))

    def mirror_z(self):
        """Reflection through the xy-plane (theta -> pi - theta)."""
        return Direction(np.pi - self.theta, self.phi)


@dataclass(frozen=True)
class CarrierContext:
    """Carrier frequency and propagation speed; wavelength is derived."""

    f0: float
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.f0 > 0:
            raise ValueError(f"frequency must be positive, got {self.f0}")
        if not self.c > 0:
            raise ValueError(f"propagation speed must be positive, got {self.c}")

    @property
    def wavelength(self):
        return self.c / self.f0

    @classmethod
    def from_mhz(cls, f_mhz, c=SPEED_OF_LIGHT):
        return cls(float(f_mhz) * 1e6, c)


class IsotropicElement:
    """Unit-gain element pattern; its angular derivatives vanish."""

    tag = "isotropic"

    def response(self, theta, phi):
        return np.ones(np.broadcast(theta, phi).shape)

    def d_theta(self, theta, phi):
        return np.zeros(np.broadcast(theta, phi).shape)

    def d_phi(self, theta, phi):
        return np.zeros(np.broadcast(theta, phi).shape)


ISOTROPIC = IsotropicElement()


class SensorArray:
    """N point receivers at fixed positions with per-sensor element patterns.

    Parameters
    ----------
    positions : array_like, shape (N, 3)
        Sensor coordinates in meters.
    element_patterns : sequence, optional
        One pattern object per sensor exposing ``response``/``d_theta``/
        ``d_phi``; defaults to isotropic elements.
    """

    def __init__(self, positions, element_patterns=None):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim == 1 and positions.size == 3:
            positions = positions[None, :]
        if positions.ndim != 2 or positions.shape[1] != 3 or positions.shape[0] < 1:
            raise ValueError("positions must have shape (N, 3) with N >= 1")
        if not np.all(np.isfinite(positions)):
            raise ValueError("positions must be finite")
        self.positions = positions
        if element_patterns is None:
            element_patterns = [ISOTROPIC] * positions.shape[0]
        self.element_patterns = list(element_patterns)
        if len(self.element_patterns) != positions.shape[0]:
            raise ValueError("need exactly one element pattern per sensor")

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def isotropic(self):
        return all(isinstance(p, IsotropicElement) for p in self.element_patterns)

    @property
    def planar_xy(self):
        """True when every sensor lies in the z = 0 plane."""
        scale = 1.0 + float(np.max(np.abs(self.positions)))
        return bool(np.max(np.abs(self.positions[:, 2])) <= 1e-12 * scale)

    def translated(self, offset):
        """Copy of the array shifted by a Cartesian offset in meters."""
        return SensorArray(self.positions + np.asarray(offset, float), self.element_patterns)


def make_uca(n, radius, rotation=0.0):
    """Uniform circular array in the xy-plane, sensor 0 at azimuth `rotation`."""
    if n < 1:
        raise ValueError(f"sensor count must be >= 1, got {n}")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    az = TWO_PI * np.arange(n) / n + rotation
    positions = np.column_stack([radius * np.cos(az), radius * np.sin(az), np.zeros(n)])
    return SensorArray(positions)


def propagation_delay(position, direction, ctx):
    """Plane-wave delay of a point relative to the origin, in seconds.

    Positive delay means the carrier phase at the point leads the origin by
    2*pi*f0*delay when receiving from `direction`.
    """
    return float(np.dot(np.asarray(position, dtype=float), direction.unit_vector())) / ctx.c


def steering_matrix(array, ctx, theta, phi):
    """Steering vectors for broadcastable angle arrays; shape (..., N).

    Entry k is g_k(theta, phi) * exp(+j 2 pi f0 tau_k) with tau_k the
    plane-wave delay of sensor k relative to the origin.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    theta, phi = np.broadcast_arrays(theta, phi)
    st = np.sin(theta)
    u = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)
    tau = u @ array.positions.T / ctx.c
    v = np.exp(2j * np.pi * ctx.f0 * tau)
    if not array.isotropic:
        g = np.stack([p.response(theta, phi) for p in array.element_patterns], axis=-1)
        v = g * v
    return v


def steering_vector(array, ctx, direction):
    """Steering vector at one direction; complex array of length N."""
    return steering_matrix(array, ctx, direction.theta, direction.phi)


def steering_derivatives(array, ctx, direction):
    """Analytic partials of the steering vector w.r.t. theta and phi.

    Returns the pair (dv/dtheta, dv/dphi), each a complex N-vector.
    """
    th, ph = direction.theta, direction.phi
    st, ct = np.sin(th), np.cos(th)
    sp, cp = np.sin(ph), np.cos(ph)
    du_dth = np.array([ct * cp, ct * sp, -st])
    du_dph = np.array([-st * sp, st * cp, 0.0])
    dtau_dth = array.positions @ du_dth / ctx.c
    dtau_dph = array.positions @ du_dph / ctx.c

    tau = array.positions @ direction.unit_vector() / ctx.c
    phase = np.exp(2j * np.pi * ctx.f0 * tau)
    jw = 2j * np.pi * ctx.f0
    if array.isotropic:
        return jw * dtau_dth * phase, jw * dtau_dph * phase
    g = np.array([p.response(th, ph) for p in array.element_patterns])
    dg_dth = np.array([p.d_theta(th, ph) for p in array.element_patterns])
    dg_dph = np.array([p.d_phi(th, ph) for p in array.element_patterns])
    dv_dth = (dg_dth + g * jw * dtau_dth) * phase
    dv_dph = (dg_dph + g * jw * dtau_dph) * phase
    return dv_dth, dv_dph


def save_layout(array, path):
    """Write a sensor layout to a JSON document."""
    if not array.isotropic:
        raise ValueError("only isotropic layouts are serializable")
    doc = {
        "sensors": [{"x": x, "y": y, "z": z} for x, y, z in array.positions],
        "element_pattern": "isotropic",
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_layout(path):
    """Read a sensor layout written by save_layout."""
    with open(path) as fh:
        doc = json.load(fh)
    tag = doc.get("element_pattern", "isotropic")
    if tag != "isotropic":
        raise ValueError(f"unsupported element pattern tag {tag!r}")
    positions = [[s["x"], s["y"], s["z"]] for s in doc["sensors"]]
    return SensorArray(positions)
