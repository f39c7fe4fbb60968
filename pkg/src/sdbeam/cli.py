"""Command-line front end for synthesis runs, sweeps, tables, and composition."""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .composite import CompositeArray, composite_metrics, flatten, save_composite
from .errors import ConfigError, InfeasibleError, NumericalError
from .geometry import CarrierContext, Direction, make_uca, steering_vector
from .metrics import (
    QuadratureSpec,
    compute_a,
    pattern_grid_to_csv,
    pattern_response,
    rein,
    sample_pattern,
    to_db,
)
from .qpsolver import max_directivity
from .synthesis import (
    DEFAULT_REIN_FLOORS_DB,
    SynthesisConfig,
    radius_for_rein,
    synthesize,
)

_SVG_FLOOR_DB = -60.0


def _fmt(x):
    return f"{x:.6g}"


@dataclass(frozen=True)
class RunConfig:
    """Validated run settings; every physical field carries its unit in the name."""

    n: int = 5
    radius_m: float = 3.0
    rotation_deg: float = 0.0
    frequencies_mhz: tuple = (4.0,)
    look_theta_deg: float = 90.0
    look_phi_deg: float = 0.0
    epsilon_db: dict = None
    sidelobe_db: float = -25.0
    delta_db: float = 0.5
    sidelobe_region: str = "azimuth-cut"
    grid_step_deg: float = 1.0
    n_theta: int = 64
    n_phi: int = 128
    count: int = 8
    spacing_m: float = 15.0
    axis: tuple = (1.0, 0.0, 0.0)
    excitations: tuple = None
    seed: int = 0

    @property
    def look(self):
        return Direction.from_degrees(self.look_theta_deg, self.look_phi_deg)

    @property
    def quadrature(self):
        return QuadratureSpec(n_theta=self.n_theta, n_phi=self.n_phi)

    def epsilon_for(self, f_mhz):
        table = self.epsilon_db if self.epsilon_db else DEFAULT_REIN_FLOORS_DB
        for key, value in table.items():
            if abs(key - f_mhz) < 1e-9:
                return value
        raise ConfigError(
            f"no REIN floor for frequency {_fmt(f_mhz)} MHz; add it to epsilon_db"
        )

    def synthesis_config(self, f_mhz):
        return SynthesisConfig(
            look=self.look,
            epsilon_db=self.epsilon_for(f_mhz),
            sidelobe_level_db=self.sidelobe_db,
            delta_db=self.delta_db,
            sidelobe_region=self.sidelobe_region,
            grid_step_deg=self.grid_step_deg,
            quadrature=self.quadrature,
        )


def _require(condition, message):
    if not condition:
        raise ConfigError(message)


def _take(doc, key, expected, where):
    value = doc.pop(key, None)
    if value is None:
        return None
    _require(isinstance(value, expected), f"field '{where}{key}' has the wrong type")
    return value


def load_config(path=None):
    """Build a RunConfig from a JSON document, validating field by field."""
    kwargs = {}
    if path is None:
        return RunConfig(epsilon_db=None)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    _require(isinstance(doc, dict), "config root must be an object")

    array = _take(doc, "array", dict, "")
    if array is not None:
        n = _take(array, "n", int, "array.")
        if n is not None:
            _require(n >= 1, "field 'array.n' must be >= 1")
            kwargs["n"] = n
        radius = _take(array, "radius_m", (int, float), "array.")
        if radius is not None:
            _require(radius >= 0, "field 'array.radius_m' must be >= 0")
            kwargs["radius_m"] = float(radius)
        rotation = _take(array, "rotation_deg", (int, float), "array.")
        if rotation is not None:
            kwargs["rotation_deg"] = float(rotation)
        _require(not array, f"unknown field 'array.{next(iter(array), '')}'")

    look = _take(doc, "look", dict, "")
    if look is not None:
        for name, dest in (("theta_deg", "look_theta_deg"), ("phi_deg", "look_phi_deg")):
            value = _take(look, name, (int, float), "look.")
            if value is not None:
                kwargs[dest] = float(value)
        _require(not look, f"unknown field 'look.{next(iter(look), '')}'")

    freqs = _take(doc, "frequencies_mhz", list, "")
    if freqs is not None:
        _require(freqs, "field 'frequencies_mhz' must be nonempty")
        _require(
            all(isinstance(f, (int, float)) and f > 0 for f in freqs),
            "field 'frequencies_mhz' must hold positive numbers",
        )
        kwargs["frequencies_mhz"] = tuple(float(f) for f in freqs)

    eps = _take(doc, "epsilon_db", dict, "")
    if eps is not None:
        table = {}
        for key, value in eps.items():
            try:
                f = float(key)
            except ValueError:
                raise ConfigError(f"field 'epsilon_db' has non-numeric frequency key {key!r}")
            _require(isinstance(value, (int, float)), f"field 'epsilon_db[{key}]' must be a number")
            table[f] = float(value)
        kwargs["epsilon_db"] = table

    for name, kinds in (
        ("sidelobe_db", (int, float)),
        ("delta_db", (int, float)),
        ("grid_step_deg", (int, float)),
        ("seed", int),
    ):
        value = _take(doc, name, kinds, "")
        if value is not None:
            kwargs[name] = value

    region = _take(doc, "sidelobe_region", str, "")
    if region is not None:
        kwargs["sidelobe_region"] = region

    quad = _take(doc, "quadrature", dict, "")
    if quad is not None:
        for name in ("n_theta", "n_phi"):
            value = _take(quad, name, int, "quadrature.")
            if value is not None:
                kwargs[name] = value
        _require(not quad, f"unknown field 'quadrature.{next(iter(quad), '')}'")

    comp = _take(doc, "composite", dict, "")
    if comp is not None:
        count = _take(comp, "count", int, "composite.")
        if count is not None:
            _require(count >= 1, "field 'composite.count' must be >= 1")
            kwargs["count"] = count
        spacing = _take(comp, "spacing_m", (int, float), "composite.")
        if spacing is not None:
            _require(spacing >= 0, "field 'composite.spacing_m' must be >= 0")
            kwargs["spacing_m"] = float(spacing)
        axis = _take(comp, "axis", list, "composite.")
        if axis is not None:
            _require(
                len(axis) == 3 and all(isinstance(x, (int, float)) for x in axis),
                "field 'composite.axis' must be a 3-vector",
            )
            kwargs["axis"] = tuple(float(x) for x in axis)
        exc = _take(comp, "excitations", list, "composite.")
        if exc is not None:
            parsed = []
            for i, entry in enumerate(exc):
                _require(
                    isinstance(entry, dict) and {"re", "im"} >= set(entry),
                    f"field 'composite.excitations[{i}]' must be an object with re/im",
                )
                parsed.append(complex(entry.get("re", 0.0), entry.get("im", 0.0)))
            kwargs["excitations"] = tuple(parsed)
        _require(not comp, f"unknown field 'composite.{next(iter(comp), '')}'")

    _require(not doc, f"unknown field '{next(iter(doc), '')}'")
    config = RunConfig(**kwargs)
    # Fail early when any requested frequency lacks a noise floor.
    for f in config.frequencies_mhz:
        config.epsilon_for(f)
    try:
        config.synthesis_config(config.frequencies_mhz[0])
    except ValueError as exc:
        raise ConfigError(str(exc))
    return config


def _apply_flag_overrides(config, args):
    if args.quadrature:
        parts = args.quadrature.lower().split("x")
        try:
            n_theta, n_phi = (int(p) for p in parts)
        except ValueError:
            raise ConfigError(f"--quadrature must look like 64x128, got {args.quadrature!r}")
        config = replace(config, n_theta=n_theta, n_phi=n_phi)
    if args.grid:
        _require(args.grid > 0, "--grid must be positive")
        config = replace(config, grid_step_deg=args.grid)
    try:
        config.quadrature
    except ValueError as exc:
        raise ConfigError(str(exc))
    return config


def _write_polar_svg(path, phi_rad, values_db, look_phi_rad, title):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    db = np.maximum(np.asarray(values_db, dtype=float), _SVG_FLOOR_DB)
    phi = np.concatenate([phi_rad, phi_rad[:1]])
    db = np.concatenate([db, db[:1]])
    fig, ax = plt.subplots(subplot_kw={"projection": "polar"})
    ax.plot(phi, db)
    ax.plot([look_phi_rad], [0.0], marker="v", color="tab:red")
    ax.set_rlim(_SVG_FLOOR_DB, 5.0)
    ax.set_title(title)
    fig.savefig(path, format="svg")
    plt.close(fig)


def _cut_index(grid, theta):
    return int(np.argmin(np.abs(grid.theta - theta)))


def _result_document(config, f_mhz, result):
    return {
        "f_mhz": f_mhz,
        "epsilon_db": config.epsilon_for(f_mhz),
        "sidelobe_db": config.sidelobe_db,
        "array": {
            "n": config.n,
            "radius_m": config.radius_m,
            "rotation_deg": config.rotation_deg,
        },
        "look": {"theta_deg": config.look_theta_deg, "phi_deg": config.look_phi_deg},
        "result": result.to_dict(),
    }


def _emit_pattern(array, ctx, w, look, step_deg, csv_path, svg_path, title):
    grid = sample_pattern(array, ctx, w, step_deg)
    ref = pattern_response(w, steering_vector(array, ctx, look))
    pattern_grid_to_csv(grid, ref, csv_path)
    i0 = _cut_index(grid, look.theta)
    cut_db = 20.0 * np.log10(np.maximum(np.abs(grid.values[i0]) / abs(ref), 1e-12))
    _write_polar_svg(svg_path, grid.phi, cut_db, look.phi, title)


def cmd_synth(config, out_dir):
    """Synthesize at each configured frequency; emit result/pattern artifacts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    array = make_uca(config.n, config.radius_m, np.deg2rad(config.rotation_deg))
    all_converged = True
    for f_mhz in config.frequencies_mhz:
        suffix = "" if len(config.frequencies_mhz) == 1 else f"_f{f_mhz:g}"
        ctx = CarrierContext.from_mhz(f_mhz)
        result = synthesize(array, ctx, config.synthesis_config(f_mhz))
        all_converged &= result.converged
        with open(out / f"result{suffix}.json", "w") as fh:
            json.dump(_result_document(config, f_mhz, result), fh, indent=2)
            fh.write("\n")
        _emit_pattern(
            array, ctx, result.w_opt, config.look, config.grid_step_deg,
            out / f"pattern{suffix}.csv", out / f"pattern{suffix}.svg",
            f"{_fmt(f_mhz)} MHz pattern (dB)",
        )
        line = (
            f"f={_fmt(f_mhz)} MHz: {result.status}"
            f" D={_fmt(result.directivity_db)} dB"
            f" gamma={_fmt(result.gamma_db)} dB"
        )
        if result.iterations:
            line += f" worst_sidelobe={_fmt(result.iterations[-1].worst_sidelobe_db)} dB"
        print(line)
    return 0 if all_converged else 3


def _sweep_point(config, variable, value):
    n, radius, f_mhz = config.n, config.radius_m, config.frequencies_mhz[0]
    if variable == "radius":
        radius = value
    elif variable == "frequency":
        f_mhz = value
    else:
        n = int(value)
    try:
        array = make_uca(n, radius, np.deg2rad(config.rotation_deg))
        ctx = CarrierContext.from_mhz(f_mhz)
        a = compute_a(array, ctx, config.quadrature)
        res = max_directivity(a, steering_vector(array, ctx, config.look))
        gamma = rein(res.w, a)
        status = "ok"
        if n > 1 and radius == 0:
            status = "degenerate-geometry"
        return (value, to_db(res.d_max), gamma.db, status)
    except (InfeasibleError, NumericalError, ValueError) as exc:
        return (value, float("nan"), float("nan"), f"error:{type(exc).__name__}")


def cmd_sweep(config, out_dir, variable, values):
    """Max-directivity and REIN across a one-variable sweep; one CSV row per point."""
    _require(values, "sweep needs at least one value")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with ThreadPoolExecutor(max_workers=min(8, len(values))) as pool:
        rows = list(pool.map(lambda v: _sweep_point(config, variable, v), values))
    column = {"radius": "radius_m", "frequency": "f_mhz", "n": "n"}[variable]
    with open(out / "sweep.csv", "w") as fh:
        fh.write(f"{column},Dmax_dB,gamma_dB,status\n")
        for value, dmax_db, gamma_db, status in rows:
            fh.write(f"{value:.6g},{dmax_db:.6g},{gamma_db:.6g},{status}\n")
    print(f"wrote {out / 'sweep.csv'} ({len(rows)} points)")
    return 0


def cmd_table2(config, out_dir):
    """Reproduce the five-frequency design table for the configured array."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frequencies = (4.0, 6.0, 8.0, 10.0, 12.0)
    array = make_uca(config.n, config.radius_m, np.deg2rad(config.rotation_deg))
    rows = []
    all_converged = True
    for f_mhz in frequencies:
        ctx = CarrierContext.from_mhz(f_mhz)
        result = synthesize(array, ctx, config.synthesis_config(f_mhz))
        all_converged &= result.converged
        rows.append((f_mhz, result))
        with open(out / f"result_f{f_mhz:g}.json", "w") as fh:
            json.dump(_result_document(config, f_mhz, result), fh, indent=2)
            fh.write("\n")
    with open(out / "table2.csv", "w") as fh:
        fh.write("f_MHz,D_dB,gamma_dB\n")
        for f_mhz, result in rows:
            fh.write(
                f"{f_mhz:.6g},{result.directivity_db:.6g},{result.gamma_db:.6g}\n"
            )
    for f_mhz, result in rows:
        print(
            f"f={_fmt(f_mhz)} MHz: {result.status}"
            f" D={_fmt(result.directivity_db)} dB gamma={_fmt(result.gamma_db)} dB"
        )
    return 0 if all_converged else 3


def cmd_compose(config, out_dir):
    """Synthesize one sub-array, replicate it along the line, emit the total pattern."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    f_mhz = config.frequencies_mhz[0]
    ctx = CarrierContext.from_mhz(f_mhz)
    subarray = make_uca(config.n, config.radius_m, np.deg2rad(config.rotation_deg))
    result = synthesize(subarray, ctx, config.synthesis_config(f_mhz))
    with open(out / "result_subarray.json", "w") as fh:
        json.dump(_result_document(config, f_mhz, result), fh, indent=2)
        fh.write("\n")
    if not result.converged:
        print(f"sub-array synthesis did not converge: {result.status}")
        return 3
    comp = CompositeArray(
        subarray,
        result.w_opt,
        config.count,
        config.spacing_m,
        np.asarray(config.axis, dtype=float),
        np.asarray(config.excitations, dtype=complex) if config.excitations else None,
    )
    save_composite(comp, out / "composite_layout.json")
    total_array, w_total = flatten(comp)
    _emit_pattern(
        total_array, ctx, w_total, config.look, config.grid_step_deg,
        out / "composite_pattern.csv", out / "composite_pattern_polar.svg",
        f"{config.count} x {config.n} sensors, {_fmt(config.spacing_m)} m spacing (dB)",
    )
    metrics = composite_metrics(comp, ctx, config.look, config.quadrature)
    print(
        f"composite: D={_fmt(metrics['directivity'].db)} dB"
        f" gamma={_fmt(metrics['rein'].db)} dB"
    )
    return 0


def cmd_radius_for_rein(config, out_dir, n, f_mhz, epsilon_db):
    """Find the circle radius meeting the REIN floor for the max-directivity weight."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    f_mhz = f_mhz if f_mhz is not None else config.frequencies_mhz[0]
    epsilon_db = epsilon_db if epsilon_db is not None else config.epsilon_for(f_mhz)
    ctx = CarrierContext.from_mhz(f_mhz)
    radius = radius_for_rein(n, ctx, epsilon_db, config.look, quad=config.quadrature)
    doc = {
        "n": n,
        "f_mhz": f_mhz,
        "epsilon_db": epsilon_db,
        "radius_m": radius,
        "radius_lambda": radius / ctx.wavelength,
    }
    with open(out / "radius.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(
        f"n={n} f={_fmt(f_mhz)} MHz epsilon={_fmt(epsilon_db)} dB ->"
        f" r={_fmt(radius)} m ({_fmt(radius / ctx.wavelength)} lambda)"
    )
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument(
        "--quadrature", metavar="NTHETAxNPHI", help="override quadrature nodes, e.g. 64x128"
    )
    common.add_argument(
        "--grid", metavar="DEG", type=float, help="override pattern grid step in degrees"
    )
    parser = argparse.ArgumentParser(
        prog="sdbeam", description="Super-directive receive-array weight synthesis."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="synthesize at each configured frequency")
    p_sweep = sub.add_parser("sweep", parents=[common], help="sweep radius, frequency, or n")
    p_sweep.add_argument("--variable", choices=("radius", "frequency", "n"), required=True)
    p_sweep.add_argument(
        "--values", required=True,
        help="comma-separated sweep values (meters, MHz, or counts)",
    )
    sub.add_parser("table2", parents=[common], help="five-frequency design table")
    sub.add_parser("compose", parents=[common], help="line composite of sub-arrays")
    p_radius = sub.add_parser(
        "radius-for-rein", parents=[common], help="radius meeting a REIN floor"
    )
    p_radius.add_argument("--n", type=int, required=True, help="sensor count")
    p_radius.add_argument("--f-mhz", type=float, help="carrier frequency in MHz")
    p_radius.add_argument("--epsilon-db", type=float, help="REIN floor in dB")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _apply_flag_overrides(load_config(args.config), args)
        if args.command == "synth":
            return cmd_synth(config, args.out)
        if args.command == "sweep":
            try:
                values = tuple(float(v) for v in args.values.split(","))
            except ValueError:
                raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}")
            return cmd_sweep(config, args.out, args.variable, values)
        if args.command == "table2":
            return cmd_table2(config, args.out)
        if args.command == "compose":
            return cmd_compose(config, args.out)
        return cmd_radius_for_rein(config, args.out, args.n, args.f_mhz, args.epsilon_db)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
