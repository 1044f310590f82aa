import json

import numpy as np
import pytest

from varbound.cli import main
from varbound.data import load_dataset, write_csv
from varbound.diagnostics import read_rows
from varbound.synthetic import linear_dataset, logistic_dataset
from varbound.targets import Dataset, GlmTarget, log_marginal_likelihood
from varbound.trace import read_trace


@pytest.fixture
def linear_csv(tmp_path):
    path = tmp_path / "lin.csv"
    write_csv(linear_dataset(20, 3, np.random.default_rng(0)), path)
    return path


@pytest.fixture
def logistic_csv(tmp_path):
    path = tmp_path / "log.csv"
    ds = logistic_dataset(30, 3, np.random.default_rng(1), norm_range=(0.1, 10))
    write_csv(Dataset(ds.X, (ds.y + 1) / 2), path)  # 0/1 labels on disk
    return path


def fit(data, out, *extra, model="linear"):
    return main(["fit", "--data", str(data), "--model", model, "--out", str(out), "--iterations", "60",
                 "--snapshot-every", "20", "--grad-samples", "100", "--elbo-samples", "200", *extra])


def test_fit_smoke_and_determinism(linear_csv, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert fit(linear_csv, a, "--seed", "3") == 0
    assert fit(linear_csv, b, "--seed", "3") == 0
    assert a.read_bytes() == b.read_bytes()
    header, records = read_trace(a)
    assert [r.iteration for r in records] == [0, 20, 40, 60]
    assert header["model"] == "linear" and header["seed"] == "3" and header["base"] == "gaussian"
    assert float(header["step_size"]) > 0
    c = tmp_path / "c.csv"
    fit(linear_csv, c, "--seed", "4")
    assert c.read_bytes() != a.read_bytes()


def test_fit_reaches_evidence_on_linear_data(linear_csv, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["fit", "--data", str(linear_csv), "--out", str(out), "--iterations", "2000",
                 "--snapshot-every", "2000", "--elbo-samples", "20000"]) == 0
    _, records = read_trace(out)
    log_z = log_marginal_likelihood(GlmTarget("linear", load_dataset(linear_csv)))
    assert abs(records[-1].elbo_mean - log_z) <= 0.1


def test_diagnose_rows(linear_csv, tmp_path):
    trace, out = tmp_path / "t.csv", tmp_path / "d.csv"
    fit(linear_csv, trace)
    assert main(["diagnose", "--trace", str(trace), "--data", str(linear_csv), "--out", str(out),
                 "--mc-samples", "5000"]) == 0
    rows = read_rows(out)
    assert len(rows) == 4 * 2
    num = lambda r, k: float(r[k])  # noqa: E731
    for r in rows:
        emp, se = num(r, "esn_empirical"), num(r, "esn_se")
        assert emp - 4 * se <= num(r, "bound_matrix") * (1 + 1e-9) + 1e-20
        assert num(r, "bound_matrix") <= num(r, "bound_scalar") * (1 + 1e-12)
        assert num(r, "bound_scalar") <= num(r, "bound_friendly") * (1 + 1e-12)
        assert num(r, "var_lower_bound") <= num(r, "bound_matrix")
    by = {(r["iteration"], r["sampler"]): num(r, "esn_empirical") for r in rows}
    for it in ("20", "40", "60"):
        assert by[(it, "batch")] < by[(it, "uniform")]


def test_diagnose_honors_seed_and_workers(logistic_csv, tmp_path):
    trace = tmp_path / "t.csv"
    fit(logistic_csv, trace, model="logistic")
    outs = []
    for i, extra in enumerate((["--workers", "1"], ["--workers", "3"], ["--seed", "99"])):
        out = tmp_path / f"d{i}.csv"
        assert main(["diagnose", "--trace", str(trace), "--data", str(logistic_csv), "--model", "logistic",
                     "--mc-samples", "25000", "--samplers", "uniform,opt_matrix", "--out", str(out), *extra]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_compare_samplers(logistic_csv, tmp_path):
    trace, out = tmp_path / "t.csv", tmp_path / "c.csv"
    fit(logistic_csv, trace, model="logistic")
    assert main(["compare-samplers", "--trace", str(trace), "--data", str(logistic_csv), "--model", "logistic",
                 "--mc-samples", "2000", "--out", str(out)]) == 0
    rows = {r["sampler"]: r for r in read_rows(out)}
    assert list(next(iter(rows.values()))) == ["sampler", "esn_empirical", "esn_se", "bound_scalar", "bound_matrix"]
    assert set(rows) == {"batch", "uniform", "proportional", "opt_scalar", "opt_matrix"}
    assert float(rows["opt_matrix"]["bound_matrix"]) <= float(rows["uniform"]["bound_matrix"])
    assert float(rows["opt_matrix"]["bound_matrix"]) <= float(rows["proportional"]["bound_matrix"])


def test_identical_rows_make_samplers_coincide(tmp_path):
    data = tmp_path / "same.csv"
    data.write_text("0.5,-1.0,1\n" * 8)
    trace, out = tmp_path / "t.csv", tmp_path / "c.csv"
    fit(data, trace, model="logistic")
    assert main(["compare-samplers", "--trace", str(trace), "--data", str(data), "--model", "logistic",
                 "--mc-samples", "1000", "--samplers", "uniform,proportional,opt_scalar,opt_matrix",
                 "--out", str(out)]) == 0
    rows = read_rows(out)
    for col in ("bound_scalar", "bound_matrix", "esn_empirical"):
        vals = [float(r[col]) for r in rows]
        assert max(vals) == pytest.approx(min(vals), rel=1e-9)


def test_plot(linear_csv, tmp_path):
    trace, diag = tmp_path / "t.csv", tmp_path / "d.csv"
    fit(linear_csv, trace)
    main(["diagnose", "--trace", str(trace), "--data", str(linear_csv), "--out", str(diag), "--mc-samples", "1000"])
    svgs = []
    for name in ("a.svg", "b.svg"):
        out = tmp_path / name
        assert main(["plot", "--csv", str(diag), "--out", str(out), "--columns", "esn_empirical,bound_matrix"]) == 0
        svgs.append(out.read_bytes())
    assert svgs[0] == svgs[1]
    text = svgs[0].decode()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count("<polyline") == 4  # 2 columns x {batch, uniform}
    for label in ("batch: esn_empirical", "uniform: bound_matrix"):
        assert label in text

    empty = tmp_path / "empty.csv"
    empty.write_text("iteration,sampler,esn_empirical\n")
    assert main(["plot", "--csv", str(empty), "--out", str(tmp_path / "e.svg")]) == 1
    assert main(["plot", "--csv", str(diag), "--out", str(tmp_path / "e.svg"), "--columns", "nope"]) == 1


def test_exit_codes(linear_csv, tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["fit", "--data", str(linear_csv)])  # --out missing
    assert info.value.code == 2
    assert main(["fit", "--out", str(tmp_path / "x")]) == 2  # no dataset
    assert main(["fit", "--data", str(linear_csv), "--out", str(tmp_path / "x"), "--base", "cauchy"]) == 2
    assert main(["fit", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "x")]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3\n1,2\n")
    assert main(["fit", "--data", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert "line 2" in capsys.readouterr().err

    trace = tmp_path / "t.csv"
    fit(linear_csv, trace)
    out = str(tmp_path / "d.csv")
    assert main(["diagnose", "--trace", str(trace), "--data", str(linear_csv), "--model", "logistic", "--out", out]) == 1
    assert "mismatch" in capsys.readouterr().err
    assert main(["diagnose", "--trace", str(trace), "--data", str(linear_csv), "--sigma2", "2", "--out", out]) == 1
    assert main(["diagnose", "--trace", str(trace), "--data", str(linear_csv), "--samplers", "bogus", "--out", out]) == 2
    wide = tmp_path / "wide.csv"
    write_csv(linear_dataset(20, 4, np.random.default_rng(0)), wide)
    assert main(["diagnose", "--trace", str(trace), "--data", str(wide), "--out", out]) == 1


def test_config_file_precedence(linear_csv, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# experiment\ndata = {linear_csv}\niterations = 40\nsnapshot-every = 20\nseed = 5\n"
                   "grad_samples = 50\nelbo_samples = 100\n")
    a = tmp_path / "a.csv"
    assert main(["fit", "--config", str(cfg), "--out", str(a)]) == 0
    header, records = read_trace(a)
    assert header["seed"] == "5" and [r.iteration for r in records] == [0, 20, 40]
    b = tmp_path / "b.csv"
    assert main(["fit", "--config", str(cfg), "--seed", "6", "--iterations", "20", "--out", str(b)]) == 0
    header, records = read_trace(b)
    assert header["seed"] == "6" and records[-1].iteration == 20
    cfg.write_text("iterations\n")
    assert main(["fit", "--config", str(cfg), "--out", str(b)]) == 2


def test_selftest_quick_json(capsys, monkeypatch):
    from varbound import checks

    # keep this a plumbing test: run only the fast exact check
    monkeypatch.setattr(checks, "run_all", lambda quick, lazy: [checks.norm_factorization])
    assert main(["selftest", "--quick", "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["passed"] is True
    assert summary["checks"][0]["name"].startswith("A1")
