"""Line composition of identical circular sub-arrays and the factored pattern."""

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import SensorArray
from .metrics import (
    QuadratureSpec,
    compute_a,
    compute_b,
    DirectivityMatrices,
    directivity,
    rein,
)


@dataclass(frozen=True)
class CompositeArray:
    """`count` copies of one sub-array stepped along `axis` by `spacing`.

    Every copy reuses the same sub-array weights; `excitations` taper the
    copies (uniform by default).
    """

    subarray: SensorArray
    subarray_weights: np.ndarray
    count: int
    spacing: float
    axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    excitations: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.subarray_weights, dtype=complex).ravel()
        if w.size != self.subarray.n:
            raise ValueError(f"expected {self.subarray.n} sub-array weights, got {w.size}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if self.spacing < 0:
            raise ValueError(f"spacing must be >= 0, got {self.spacing}")
        axis = np.asarray(self.axis, dtype=float).ravel()
        norm = np.linalg.norm(axis)
        if axis.shape != (3,) or norm == 0 or not np.all(np.isfinite(axis)):
            raise ValueError("axis must be a nonzero finite 3-vector")
        exc = (
            np.ones(self.count, dtype=complex)
            if self.excitations is None
            else np.asarray(self.excitations, dtype=complex).ravel()
        )
        if exc.size != self.count:
            raise ValueError(f"expected {self.count} excitations, got {exc.size}")
        object.__setattr__(self, "subarray_weights", w)
        object.__setattr__(self, "axis", axis / norm)
        object.__setattr__(self, "excitations", exc)

    @property
    def n_total(self):
        return self.count * self.subarray.n


def flatten(comp):
    """Flattened sensor array and total weights, sub-array index major.

    w_total[(k, j)] = excitations[k] * subarray_weights[j], matching the
    position layout; the flattened pattern therefore factors exactly into
    (sub-array pattern) x (line array factor).
    """
    offsets = np.arange(comp.count)[:, None] * comp.spacing * comp.axis[None, :]
    positions = (comp.subarray.positions[None, :, :] + offsets[:, None, :]).reshape(-1, 3)
    w_total = np.kron(comp.excitations, comp.subarray_weights)
    return SensorArray(positions), w_total


def array_factor(comp, ctx, theta, phi):
    """Line-array factor conj(exc_k) summed over phase steps along the axis.

    Defined so that F_total = F_sub * AF for the flattened composite.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    u_axis = (
        st * np.cos(phi) * comp.axis[0]
        + st * np.sin(phi) * comp.axis[1]
        + np.cos(theta) * comp.axis[2]
    )
    psi = (2.0 * np.pi * ctx.f0 / ctx.c) * comp.spacing * u_axis
    k = np.arange(comp.count)
    return np.exp(1j * psi[..., None] * k) @ comp.excitations.conj()


def composite_metrics(comp, ctx, look, quad=QuadratureSpec()):
    """Directivity and REIN of the flattened composite, both as (ratio, dB)."""
    arr, w_total = flatten(comp)
    a = compute_a(arr, ctx, quad)
    mats = DirectivityMatrices(a, compute_b(arr, ctx, look), ctx, look)
    return {"directivity": directivity(w_total, mats), "rein": rein(w_total, a)}


def save_composite(comp, path):
    """Write the composite layout as structured text (sub-array schema plus
    count/spacing/axis/excitations)."""
    doc = {
        "sensors": [
            {"x": float(x), "y": float(y), "z": float(z)}
            for x, y, z in comp.subarray.positions
        ],
        "element_pattern": "isotropic",
        "count": comp.count,
        "spacing_m": comp.spacing,
        "axis": comp.axis.tolist(),
        "weights": [{"re": w.real, "im": w.imag} for w in comp.subarray_weights],
        "excitations": [{"re": e.real, "im": e.imag} for e in comp.excitations],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_composite(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("element_pattern", "isotropic") != "isotropic":
        raise ValueError(f"unknown element pattern tag {doc.get('element_pattern')!r}")
    positions = np.array([[s["x"], s["y"], s["z"]] for s in doc["sensors"]], dtype=float)
    weights = np.array([w["re"] + 1j * w["im"] for w in doc["weights"]])
    excitations = np.array([e["re"] + 1j * e["im"] for e in doc["excitations"]])
    return CompositeArray(
        SensorArray(positions),
        weights,
        int(doc["count"]),
        float(doc["spacing_m"]),
        np.asarray(doc["axis"], dtype=float),
        excitations,
    )
