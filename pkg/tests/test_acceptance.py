"""End-to-end acceptance runs through the command line.

The nonlinear 512^2 run takes roughly ten minutes on one core and is shared
by criteria 4, 5 and 10 (which reruns it once more).
"""

import json
import time

import pytest

from besovlab.cli import EXIT_OK, main
from besovlab.inequalities import CHECKS, IDENTITY_IDS, INEQUALITY_IDS, property_suite


def run_preset(preset, out, seed=0):
    start = time.perf_counter()
    code = main(["run", "--preset", preset, "--seed", str(seed), "--out", str(out)])
    elapsed = time.perf_counter() - start
    summary = json.loads((out / "summary.json").read_text())
    return code, summary, elapsed


def checks_by_name(summary):
    return {c["name"]: c for c in summary["checks"]}


def note(request, text):
    request.node.user_properties.append(("detail", text))


@pytest.fixture(scope="module")
def nonlinear_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("nonlinear") / "run"
    code, summary, elapsed = run_preset("nonlinear-decay-2d", out)
    return out, code, summary, elapsed


@pytest.fixture(scope="module")
def suite_report():
    return property_suite(sorted(CHECKS), seed=0, trials=50)


@pytest.mark.criterion(1, "linear 3D decay, exponent 0.75 +- 0.05")
def test_linear_decay_3d(tmp_path, request):
    code, summary, elapsed = run_preset("linear-decay-3d", tmp_path / "o")
    (check,) = summary["checks"]
    note(request, f"{check['detail']}, {elapsed:.1f}s")
    assert code == EXIT_OK and check["passed"]
    assert elapsed < 60


@pytest.mark.criterion(2, "linear decay family, d in {2,3}, s in {0,1,2}")
def test_linear_decay_family(tmp_path, request):
    code, summary, elapsed = run_preset("linear-decay-family", tmp_path / "o")
    checks = summary["checks"]
    note(request, ", ".join(f"{c['name']}: {c['detail'].split(' vs')[0].split()[-1]}" for c in checks) + f"; {elapsed:.1f}s")
    assert len(checks) == 6
    assert code == EXIT_OK and all(c["passed"] for c in checks)
    assert elapsed < 120


@pytest.mark.criterion(3, "low-frequency envelope, c0 >= 0.4 and C <= 10")
def test_envelope(tmp_path, request):
    code, summary, _ = run_preset("envelope", tmp_path / "o")
    note(request, ", ".join(c["detail"] for c in summary["checks"]))
    assert code == EXIT_OK and len(summary["checks"]) == 2
    assert all(c["passed"] for c in summary["checks"])


@pytest.mark.criterion(4, "nonlinear 2D small-data L2 decay, exponent 0.5 +- 0.1")
def test_nonlinear_decay(nonlinear_run, request):
    _, code, summary, elapsed = nonlinear_run
    check = checks_by_name(summary)["L2 decay"]
    note(request, f"{check['detail']}, {elapsed:.0f}s")
    assert summary["status"] == "complete"
    assert check["gating"] and check["passed"]
    assert elapsed < 15 * 60


@pytest.mark.criterion(5, "high-frequency D_p terms bounded by 5x their early maximum")
def test_dp_high_frequency_bounded(nonlinear_run, request):
    _, code, summary, _ = nonlinear_run
    checks = checks_by_name(summary)
    parts = [checks["D_p high_alpha bounded"], checks["D_p high_grad bounded"]]
    note(request, "; ".join(c["detail"] for c in parts))
    assert all(c["gating"] and c["passed"] for c in parts)
    assert code == EXIT_OK


@pytest.mark.criterion(6, "linear-limit consistency, order 2.0 +- 0.1 in eps")
def test_linear_limit(tmp_path, request):
    code, summary, _ = run_preset("linear-limit", tmp_path / "o")
    (check,) = summary["checks"]
    note(request, check["detail"])
    assert code == EXIT_OK and check["passed"]


@pytest.mark.criterion(7, "identity suite at 1e-10 relative")
def test_identities(suite_report, request):
    results = [suite_report[c] for c in sorted(IDENTITY_IDS)]
    note(request, ", ".join(f"{r.check_id} {r.max_ratio:.2g}" for r in results))
    assert {"lp-reconstruction", "bony-identity", "leray", "effective-velocity", "rescale-identity"} <= set(IDENTITY_IDS)
    for r in results:
        assert r.passed and r.max_ratio < 1e-10, r.line()


@pytest.mark.criterion(8, "inequality suite, measured constants over 50 trials")
def test_inequalities(suite_report, request):
    results = [suite_report[c] for c in sorted(INEQUALITY_IDS)]
    note(request, f"{sum(r.passed for r in results)}/{len(results)} pass")
    for r in results:
        assert r.trials == 50 and r.passed, r.line()
    assert suite_report["nonlinear-bernstein-p2"].detail["c_min"] >= 0.5
    assert suite_report["lowfreq-product"].detail["N0"] <= 8
    assert suite_report["bernstein"].detail["spread"] <= 2.0


@pytest.mark.criterion(9, "convolution inequality, stable pairs and flagged control")
def test_convolution(tmp_path, request):
    code, summary, _ = run_preset("convolution", tmp_path / "o")
    checks = summary["checks"]
    note(request, "; ".join(f"{c['name']} {c['detail'].split(',')[0]}" for c in checks))
    assert len(checks) == 4 and sum("flagged" in c["name"] for c in checks) == 1
    assert code == EXIT_OK and all(c["passed"] for c in checks)


@pytest.mark.criterion(10, "byte-identical CSV on rerun with a fixed seed")
@pytest.mark.parametrize("preset", ["linear-decay-3d", "nonlinear-smoke-2d", "appendix-suite"])
def test_determinism_small(preset, tmp_path, request):
    first = run_preset(preset, tmp_path / "a", seed=3)
    second = run_preset(preset, tmp_path / "b", seed=3)
    assert first[0] == second[0]
    assert (tmp_path / "a" / "records.csv").read_bytes() == (tmp_path / "b" / "records.csv").read_bytes()
    note(request, preset)


@pytest.mark.criterion(10, "byte-identical CSV on rerun with a fixed seed")
def test_determinism_nonlinear(nonlinear_run, tmp_path, request):
    first_out = nonlinear_run[0]
    run_preset("nonlinear-decay-2d", tmp_path / "again")
    assert (tmp_path / "again" / "records.csv").read_bytes() == (first_out / "records.csv").read_bytes()
    note(request, "nonlinear-decay-2d")
