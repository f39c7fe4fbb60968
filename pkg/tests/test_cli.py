import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sdbeam import (
    CarrierContext,
    ConfigError,
    Direction,
    compute_a,
    directivity,
    directivity_matrices,
    make_uca,
    rein,
)
from sdbeam.cli import RunConfig, load_config, main


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _weights(result_json):
    doc = json.loads(result_json.read_text())
    return np.array(doc["result"]["weights_re"]) + 1j * np.array(doc["result"]["weights_im"]), doc


def test_load_config_defaults():
    config = load_config(None)
    assert config.n == 5 and config.radius_m == 3.0
    assert config.frequencies_mhz == (4.0,)
    assert config.epsilon_for(4.0) == -30.0
    assert config.epsilon_for(12.0) == -13.0


def test_load_config_rejects_unknown_fields(tmp_path):
    with pytest.raises(ConfigError, match="array.radius'"):
        load_config(_write(tmp_path, "a.json", {"array": {"radius": 3}}))
    with pytest.raises(ConfigError, match="'wavelength'"):
        load_config(_write(tmp_path, "b.json", {"wavelength": 75.0}))
    with pytest.raises(ConfigError, match="frequencies_mhz"):
        load_config(_write(tmp_path, "c.json", {"frequencies_mhz": []}))
    with pytest.raises(ConfigError, match="array.n"):
        load_config(_write(tmp_path, "d.json", {"array": {"n": 0}}))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    with pytest.raises(ConfigError, match="not valid JSON"):
        path = tmp_path / "broken.json"
        path.write_text("{")
        load_config(str(path))


def test_load_config_requires_noise_floor(tmp_path):
    with pytest.raises(ConfigError, match="5.5 MHz"):
        load_config(_write(tmp_path, "f.json", {"frequencies_mhz": [5.5]}))
    # An explicit floor table unlocks custom frequencies.
    config = load_config(
        _write(tmp_path, "g.json", {"frequencies_mhz": [5.5], "epsilon_db": {"5.5": -26}})
    )
    assert config.epsilon_for(5.5) == -26.0


def test_missing_floor_exits_2(tmp_path, capsys):
    code = main(["synth", "--config", _write(tmp_path, "f.json", {"frequencies_mhz": [7.0]})])
    assert code == 2
    assert "7 MHz" in capsys.readouterr().err


def test_bad_quadrature_flag_exits_2(tmp_path):
    assert main(["synth", "--quadrature", "64by128", "--out", str(tmp_path)]) == 2
    assert main(["synth", "--quadrature", "4x128", "--out", str(tmp_path)]) == 2
    assert main(["synth", "--grid", "-2", "--out", str(tmp_path)]) == 2


def test_synth_outputs_and_round_trip(tmp_path):
    out = tmp_path / "run"
    assert main(["synth", "--out", str(out)]) == 0
    for name in ("result.json", "pattern.csv", "pattern.svg"):
        assert (out / name).exists()

    w, doc = _weights(out / "result.json")
    config = RunConfig()
    arr = make_uca(config.n, config.radius_m)
    ctx = CarrierContext.from_mhz(4.0)
    mats = directivity_matrices(arr, ctx, config.look)
    assert_allclose(directivity(w, mats).db, doc["result"]["directivity_db"], atol=1e-9)
    assert_allclose(rein(w, mats.a).db, doc["result"]["gamma_db"], atol=1e-9)

    with open(out / "pattern.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 181 * 360
    by_angle = {(r["theta_deg"], r["phi_deg"]): r for r in rows}
    assert abs(float(by_angle[("90", "0")]["magnitude_dB"])) <= 1e-12
    # Reported dB values agree with the re/im columns to print precision.
    probe = by_angle[("90", "180")]
    mag = abs(complex(float(probe["re"]), float(probe["im"])))
    assert_allclose(20 * np.log10(mag), float(probe["magnitude_dB"]), atol=1e-3)


def test_synth_deterministic_csv(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["synth", "--out", str(out1)]) == 0
    assert main(["synth", "--out", str(out2)]) == 0
    assert (out1 / "pattern.csv").read_bytes() == (out2 / "pattern.csv").read_bytes()


def test_synth_multi_frequency_suffixes(tmp_path):
    cfg = _write(tmp_path, "multi.json", {"frequencies_mhz": [4, 8]})
    out = tmp_path / "multi"
    assert main(["synth", "--config", cfg, "--out", str(out)]) == 0
    for suffix in ("_f4", "_f8"):
        assert (out / f"result{suffix}.json").exists()
        assert (out / f"pattern{suffix}.csv").exists()


def test_synth_single_sensor_flat_pattern_exits_3(tmp_path):
    cfg = _write(tmp_path, "n1.json", {"array": {"n": 1, "radius_m": 0.0}})
    out = tmp_path / "n1"
    assert main(["synth", "--config", cfg, "--out", str(out)]) == 3
    with open(out / "pattern.csv") as fh:
        levels = {row["magnitude_dB"] for row in csv.DictReader(fh)}
    assert levels == {"0"}


def test_quadrature_blowup_exits_4(tmp_path):
    cfg = _write(
        tmp_path, "hf.json", {"frequencies_mhz": [3000], "epsilon_db": {"3000": -30}}
    )
    assert main(["synth", "--config", cfg, "--quadrature", "8x16", "--out", str(tmp_path)]) == 4


def test_table2_rows_match_result_documents(tmp_path):
    out = tmp_path / "t2"
    assert main(["table2", "--out", str(out)]) == 0
    with open(out / "table2.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["f_MHz"] for r in rows] == ["4", "6", "8", "10", "12"]
    for row in rows:
        doc = json.loads((out / f"result_f{row['f_MHz']}.json").read_text())
        assert doc["result"]["status"] == "converged"
        # CSV is %.6g; compare at print precision.
        assert_allclose(float(row["D_dB"]), doc["result"]["directivity_db"], rtol=1e-5)
        assert_allclose(float(row["gamma_dB"]), doc["result"]["gamma_db"], rtol=1e-5)
    gammas = [float(r["gamma_dB"]) for r in rows]
    assert gammas == sorted(gammas)


def test_sweep_handles_degenerate_radius(tmp_path):
    out = tmp_path / "sw"
    code = main(
        ["sweep", "--variable", "radius", "--values", "0,1.5,3", "--out", str(out)]
    )
    assert code == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["radius_m"] for r in rows] == ["0", "1.5", "3"]
    assert rows[0]["status"] == "degenerate-geometry"
    assert rows[1]["status"] == "ok" and rows[2]["status"] == "ok"
    # Dmax falls and gamma rises with radius.
    assert float(rows[1]["Dmax_dB"]) > float(rows[2]["Dmax_dB"])
    assert float(rows[1]["gamma_dB"]) < float(rows[2]["gamma_dB"])


def test_sweep_rejects_bad_values(tmp_path):
    assert main(["sweep", "--variable", "n", "--values", "3,x", "--out", str(tmp_path)]) == 2


def test_compose_count_one_matches_synth(tmp_path):
    out_s, out_c = tmp_path / "s", tmp_path / "c"
    assert main(["synth", "--out", str(out_s)]) == 0
    cfg = _write(tmp_path, "c1.json", {"composite": {"count": 1, "spacing_m": 20.0}})
    assert main(["compose", "--config", cfg, "--out", str(out_c)]) == 0
    assert (out_s / "pattern.csv").read_bytes() == (out_c / "composite_pattern.csv").read_bytes()
    assert (out_c / "composite_layout.json").exists()
    assert (out_c / "composite_pattern_polar.svg").exists()


def test_compose_infeasible_subarray_exits_3(tmp_path):
    cfg = _write(tmp_path, "bad.json", {"array": {"n": 1, "radius_m": 0.0}})
    assert main(["compose", "--config", cfg, "--out", str(tmp_path / "x")]) == 3


def test_radius_for_rein_writes_document(tmp_path):
    out = tmp_path / "r"
    code = main(
        ["radius-for-rein", "--n", "5", "--f-mhz", "4", "--epsilon-db", "-30", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads((out / "radius.json").read_text())
    assert doc["n"] == 5 and doc["f_mhz"] == 4.0 and doc["epsilon_db"] == -30.0
    lam = CarrierContext.from_mhz(4.0).wavelength
    assert_allclose(doc["radius_lambda"] * lam, doc["radius_m"], rtol=1e-12)
    # Confirm the returned radius meets the floor.
    arr = make_uca(5, doc["radius_m"])
    a = compute_a(arr, CarrierContext.from_mhz(4.0))
    from sdbeam import max_directivity, steering_derivatives, steering_vector

    look = Direction.from_degrees(90, 0)
    ctx = CarrierContext.from_mhz(4.0)
    v0 = steering_vector(arr, ctx, look)
    dth, dph = steering_derivatives(arr, ctx, look)
    gamma = rein(max_directivity(a, v0, dth, dph).w, a)
    assert abs(gamma.db + 30.0) <= 0.06
