import json

import numpy as np
import pytest

from percshift.cli import main
from percshift.pointcloud import load_cloud, save_cloud


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def three_csv(tmp_path):
    p = tmp_path / "three.csv"
    p.write_text("0\n1\n3\n")
    return str(p)


def test_gen_sphere(tmp_path, capsys):
    path = str(tmp_path / "s2.pgc")
    rep = report(capsys, "gen", "--kind", "hypersphere", "--d", "2", "--n", "1000", "--seed", "7", "--out", path)
    assert (rep["n"], rep["dim"]) == (1000, 3)
    c = load_cloud(path)
    assert (c.n, c.dim) == (1000, 3) and c.seed == 7
    assert rep["manifest"]["rng"] == {"algorithm": "PCG64", "seed": 7}
    assert rep["manifest"]["command"].startswith("percshift gen")


def test_gen_missing_n_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--kind", "cube", "--d", "2", "--seed", "1", "--out", str(tmp_path / "x.pgc")])
    assert exc.value.code == 2


def test_gen_missing_seed_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--kind", "cube", "--d", "2", "--n", "5", "--out", str(tmp_path / "x.pgc")])
    assert exc.value.code == 2


def test_gen_step(tmp_path, capsys):
    path = str(tmp_path / "step.pgc")
    report(capsys, "gen", "--kind", "step", "--w", "0.8", "--n", "100000", "--seed", "1", "--out", path)
    x = load_cloud(path).points
    assert abs(np.mean(x[:, 0] < 0.5) - 0.8) < 0.01


def test_gen_invalid_spec_is_data_error(tmp_path, capsys):
    code, out, err = run(capsys, "gen", "--kind", "cube", "--n", "5", "--seed", "1", "--out", str(tmp_path / "x.pgc"))
    assert code == 3 and out == "" and "dimension" in err


def test_threshold(three_csv, capsys):
    rep = report(capsys, "threshold", "--in", three_csv)
    assert rep["epsilon_c"] == 1.0 and rep["connectivity_epsilon"] == 2.0
    rep = report(capsys, "threshold", "--in", three_csv, "--rule", "at-least", "--alpha", "0.3")
    assert rep["epsilon_c"] == 0.0


def test_threshold_unreadable_input(tmp_path, capsys):
    code, out, err = run(capsys, "threshold", "--in", str(tmp_path / "missing.csv"))
    assert code == 3 and out == ""
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    code, _, err = run(capsys, "threshold", "--in", str(bad))
    assert code == 3 and "row 2" in err


def test_bad_alpha_is_usage_error(three_csv):
    with pytest.raises(SystemExit) as exc:
        main(["threshold", "--in", three_csv, "--alpha", "1.5"])
    assert exc.value.code == 2


def test_curve(three_csv, tmp_path, capsys):
    csv = tmp_path / "curve.csv"
    rep = report(capsys, "curve", "--in", three_csv, "--csv", str(csv))
    assert rep["points"] == 4 and rep["threshold"]["epsilon_c"] == 1.0
    assert csv.read_text().splitlines()[1] == "0.0,0.3333333333333333"
    rep = report(capsys, "curve", "--in", three_csv, "--grid", "0.5,1.5,2.5", "--csv", str(csv))
    assert rep["points"] == 3


def test_shift_same_file(tmp_path, capsys):
    path = str(tmp_path / "a.pgc")
    report(capsys, "gen", "--kind", "ball", "--d", "2", "--n", "200", "--seed", "3", "--out", path)
    rep = report(capsys, "shift", "--real", path, "--model", path, "--seed", "1", "--resamples", "20")
    assert rep["delta_eps"] == 0.0 and rep["zone"] == "healthy"


def test_shift_requires_seed_when_resampling(tmp_path, capsys):
    path = str(tmp_path / "a.pgc")
    report(capsys, "gen", "--kind", "ball", "--d", "2", "--n", "50", "--seed", "3", "--out", path)
    with pytest.raises(SystemExit) as exc:
        main(["shift", "--real", path, "--model", path])
    assert exc.value.code == 2
    rep = report(capsys, "shift", "--real", path, "--model", path, "--resamples", "0")
    assert rep["zone"] == "healthy"


def test_shift_size_mismatch(tmp_path, capsys):
    a, b = str(tmp_path / "a.pgc"), str(tmp_path / "b.pgc")
    report(capsys, "gen", "--kind", "ball", "--d", "2", "--n", "50", "--seed", "3", "--out", a)
    report(capsys, "gen", "--kind", "ball", "--d", "2", "--n", "60", "--seed", "3", "--out", b)
    code, _, err = run(capsys, "shift", "--real", a, "--model", b, "--seed", "1")
    assert code == 3 and "sample size" in err


def test_fit_scaling(tmp_path, capsys):
    csv = tmp_path / "fit.csv"
    rep = report(capsys, "fit-scaling", "--kind", "hypersphere", "--d", "2", "--n", "100,300,1000,3000",
                 "--trials", "5", "--seed", "7", "--csv", str(csv))
    assert -0.6 <= rep["slope"] <= -0.4
    assert csv.read_text().splitlines()[0] == "n,mean_eps_c,std_eps_c"


def test_fit_scaling_single_n(capsys):
    code, _, err = run(capsys, "fit-scaling", "--kind", "cube", "--d", "2", "--n", "500", "--seed", "1")
    assert code == 3 and "distinct N" in err


def test_h2(capsys):
    rep = report(capsys, "h2", "--kind", "step", "--w", "0.8", "--n", "2000")
    assert rep["h2"] == pytest.approx(1.36)
    assert rep["predicted_ratio"] == pytest.approx(1.36 ** -0.5)


def test_invariance(tmp_path, capsys):
    path = str(tmp_path / "b.pgc")
    report(capsys, "gen", "--kind", "ball", "--d", "3", "--n", "300", "--seed", "2", "--out", path)
    rep = report(capsys, "invariance", "--in", path, "--map", "scale", "--factor", "2")
    assert rep["eps_mapped"] == 2 * rep["eps_original"]
    rep = report(capsys, "invariance", "--in", path, "--map", "linear", "--singular-values", "0.5,1,2",
                 "--seed", "4")
    assert rep["lower_ok"] and rep["upper_ok"]
    m = tmp_path / "m.csv"
    m.write_text("1,0\n0,1\n")
    code, _, err = run(capsys, "invariance", "--in", path, "--map", "linear", "--matrix", str(m))
    assert code == 3 and "dimension" in err
    with pytest.raises(SystemExit) as exc:
        main(["invariance", "--in", path, "--map", "scale"])
    assert exc.value.code == 2


def test_loss_and_expand(tmp_path, capsys):
    real, fake = tmp_path / "real.csv", tmp_path / "fake.csv"
    real.write_text("0\n1\n3\n")
    fake.write_text("0\n2\n6\n")
    rep = report(capsys, "loss", "--real", str(real), "--fake", str(fake), "--gradient")
    assert rep["value"] == pytest.approx(14 / 3)
    assert len(rep["gradient"]) == 3
    code, _, err = run(capsys, "expand", "--real", str(real), "--fake", str(fake), "--steps", "5")
    assert code == 3 and "attractive" in err

    path = str(tmp_path / "b.pgc")
    report(capsys, "gen", "--kind", "ball", "--d", "2", "--n", "60", "--seed", "2", "--out", path)
    c = load_cloud(path)
    small = str(tmp_path / "small.pgc")
    save_cloud(c.scaled(0.5), small)
    trace_csv = tmp_path / "trace.csv"
    out_cloud = tmp_path / "final.pgc"
    rep = report(capsys, "expand", "--real", path, "--fake", small, "--steps", "40", "--csv", str(trace_csv),
                 "--cloud-out", str(out_cloud))
    assert rep["final_loss"] < rep["initial_loss"]
    assert load_cloud(out_cloud).n == 60
    code, _, err = run(capsys, "expand", "--real", path, "--fake", small, "--steps", "200", "--lr", "1000")
    assert code == 3


def test_spectrum_export(three_csv, tmp_path, capsys):
    csv = tmp_path / "spec.csv"
    rep = report(capsys, "spectrum", "--in", three_csv, "--csv", str(csv))
    assert rep["pairs"] == 3
    assert csv.read_text().splitlines()[1] == "1.0,0,1"


def test_report_to_file(three_csv, tmp_path, capsys):
    out = tmp_path / "r.json"
    code, stdout, _ = run(capsys, "threshold", "--in", three_csv, "--out", str(out))
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["epsilon_c"] == 1.0


def _estimates(rep):
    rep = dict(rep)
    rep.pop("manifest")
    return json.dumps(rep, sort_keys=True)


def test_thread_count_does_not_change_reports(tmp_path, capsys):
    a, b = str(tmp_path / "a.pgc"), str(tmp_path / "b.pgc")
    report(capsys, "gen", "--kind", "mixture", "--n", "400", "--seed", "5", "--out", a)
    report(capsys, "gen", "--kind", "mixture", "--sigma", "0.25", "--n", "400", "--seed", "6", "--out", b)
    runs = {}
    for t in ("1", "3"):
        runs[t] = [
            _estimates(report(capsys, "shift", "--real", a, "--model", b, "--seed", "9", "--resamples", "30",
                              "--threads", t)),
            _estimates(report(capsys, "fit-scaling", "--kind", "cube", "--d", "2", "--n", "50,100,200",
                              "--seed", "2", "--threads", t)),
            _estimates(report(capsys, "threshold", "--in", a, "--threads", t)),
        ]
    assert runs["1"] == runs["3"]
