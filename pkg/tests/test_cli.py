import json
from pathlib import Path

import numpy as np
import pytest

from alflab.cli import main
from alflab.potential import default_config, flat_config


def write_config(path: Path, doc: dict) -> str:
    path.write_text(json.dumps(doc))
    return str(path)


def flat_doc():
    doc = flat_config(epsilon=1.0).to_json_dict()
    doc["samples"] = {"seed": 3, "radial_range": [0.5, 4.0], "radial_count": 4, "angular_count": 6}
    return doc


def k2_doc(eps=0.04):
    doc = default_config(2, epsilon=eps, delta=0.3).to_json_dict()
    doc["samples"] = {"seed": 5, "radial_range": [0.3, 2.5], "radial_count": 4, "angular_count": 6}
    return doc


def read_summary(out: Path) -> dict:
    return json.loads((out / "summary.json").read_text())


# ---------------------------------------------------------------- verify


def test_verify_flat_config_passes(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", flat_doc())
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0
    summary = read_summary(out)
    res = summary["results"]
    assert res["passed"] is True
    assert res["max_q_defect"] <= 1e-10
    assert res["max_metric_rel"] <= 1e-10
    assert res["max_closedness"] <= 1e-10
    assert (out / "verify.csv").exists()


def test_verify_k2_passes(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", k2_doc())
    out = tmp_path / "out"
    assert main(["verify", "--config", cfg, "--out", str(out)]) == 0


# ---------------------------------------------------------------- exit codes


def test_exit_2_on_malformed_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["verify", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_exit_2_on_invalid_values(tmp_path):
    doc = k2_doc()
    doc["delta"] = 0.9
    cfg = write_config(tmp_path / "cfg.json", doc)
    assert main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_exit_2_on_missing_file(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "o")]) == 2


def test_exit_3_on_domain_error(tmp_path):
    # calibrate requires a point pair; a pointless config is a domain failure
    doc = flat_doc()
    cfg = write_config(tmp_path / "cfg.json", doc)
    assert main(["calibrate", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_exit_1_on_threshold_failure_with_summary(tmp_path):
    doc = k2_doc()
    cfg = write_config(tmp_path / "cfg.json", doc)
    out = tmp_path / "o"
    code = main(["volume", "--config", cfg, "--out", str(out),
                 "--set", "thresholds.volume_band=[3.5,3.6]"])
    assert code == 1
    summary = read_summary(out)
    assert summary["results"]["passed"] is False
    assert summary["results"]["thresholds"]["volume_band"] == [3.5, 3.6]


# ---------------------------------------------------------------- verbs


def test_scaling_small_study(tmp_path):
    doc = k2_doc()
    doc["study"] = {"epsilons": [0.04, 0.028, 0.02, 0.014]}
    doc["samples"] = {"seed": 2, "radial_count": 3, "angular_count": 6}
    cfg = write_config(tmp_path / "cfg.json", doc)
    out = tmp_path / "o"
    assert main(["scaling", "--config", cfg, "--out", str(out)]) == 0
    res = read_summary(out)["results"]
    assert 2.7 <= res["slope"] <= 3.3
    assert res["r_squared"] >= 0.98
    assert res["q_defect_at_floor"] is True
    assert (out / "scaling.csv").exists()


def test_asymptotics_k1_zero_mass(tmp_path):
    doc = default_config(1, epsilon=0.05).to_json_dict()
    cfg = write_config(tmp_path / "cfg.json", doc)
    out = tmp_path / "o"
    assert main(["asymptotics", "--config", cfg, "--out", str(out)]) == 0
    res = read_summary(out)["results"]
    assert abs(res["fitted_mass"]) <= 1e-3 * 0.05


def test_asymptotics_k3(tmp_path):
    doc = default_config(3, epsilon=0.05).to_json_dict()
    cfg = write_config(tmp_path / "cfg.json", doc)
    out = tmp_path / "o"
    assert main(["asymptotics", "--config", cfg, "--out", str(out)]) == 0
    res = read_summary(out)["results"]
    assert res["expected_mass"] == pytest.approx(0.1)
    assert abs(res["fitted_mass"] - 0.1) <= 0.001


def test_volume_k2(tmp_path):
    doc = k2_doc()
    doc["radii"] = [20.0, 40.0, 80.0, 160.0]
    cfg = write_config(tmp_path / "cfg.json", doc)
    out = tmp_path / "o"
    assert main(["volume", "--config", cfg, "--out", str(out)]) == 0
    res = read_summary(out)["results"]
    assert 2.8 <= res["exponent"] <= 3.2


def test_curvature_single_tn(tmp_path):
    doc = {
        "epsilon": 0.2, "delta": 0.46, "points": [],
        "center_charge": 0.2, "pair_charge": 0.0,
        "samples": {"seed": 6, "radial_range": [0.8, 3.0], "radial_count": 3, "angular_count": 5},
        "radii": [20.0, 40.0, 80.0],
    }
    cfg = write_config(tmp_path / "cfg.json", doc)
    out = tmp_path / "o"
    assert main(["curvature", "--config", cfg, "--out", str(out)]) == 0
    res = read_summary(out)["results"]
    assert res["max_ricci_ratio"] <= 1e-4
    assert res["decay_2q"] > 3.5


def test_calibrate_pure_two_tn(tmp_path):
    doc = k2_doc()
    doc["points"] = [[1.5, 0.3, 0.2]]
    doc["center_charge"] = 0.0
    doc["calibrate"] = {"resolution": [8, 8], "levels": 4, "amplitudes": [0.01, 0.02, 0.04]}
    cfg = write_config(tmp_path / "cfg.json", doc)
    out = tmp_path / "o"
    assert main(["calibrate", "--config", cfg, "--out", str(out)]) == 0
    res = read_summary(out)["results"]
    assert res["final_defect_over_area"] <= 1e-6
    assert 1.8 <= res["perturbation_slope"] <= 2.2


# ---------------------------------------------------------------- determinism


@pytest.mark.parametrize("verb,extra", [
    ("verify", {}),
    ("asymptotics", {}),
    ("volume", {"radii": [20.0, 40.0, 80.0]}),
    ("scaling", {"study": {"epsilons": [0.04, 0.028, 0.02, 0.014]},
                 "samples": {"seed": 2, "radial_count": 2, "angular_count": 4}}),
])
def test_csv_bytes_reproducible(tmp_path, verb, extra):
    doc = k2_doc()
    doc.update(extra)
    cfg = write_config(tmp_path / "cfg.json", doc)
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        main([verb, "--config", cfg, "--out", str(out), "--seed", "17"])
        outs.append(out)
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_seed_changes_samples(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", k2_doc())
    a, b = tmp_path / "a", tmp_path / "b"
    main(["verify", "--config", cfg, "--out", str(a), "--seed", "1"])
    main(["verify", "--config", cfg, "--out", str(b), "--seed", "2"])
    assert (a / "verify.csv").read_bytes() != (b / "verify.csv").read_bytes()


def test_set_override_dot_path(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", k2_doc())
    out = tmp_path / "o"
    main(["verify", "--config", cfg, "--out", str(out),
          "--set", "samples.radial_count=3", "--set", "samples.angular_count=4"])
    res = read_summary(out)["results"]
    assert res["samples"] + res["dropped"] == 12


def test_threads_do_not_change_results(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", k2_doc())
    a, b = tmp_path / "a", tmp_path / "b"
    main(["verify", "--config", cfg, "--out", str(a), "--threads", "1"])
    main(["verify", "--config", cfg, "--out", str(b), "--threads", "4"])
    assert (a / "verify.csv").read_bytes() == (b / "verify.csv").read_bytes()
