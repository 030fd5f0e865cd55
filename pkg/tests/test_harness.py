import json
import random
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from besovlab.checkpoint import (
    DigestMismatchError,
    MagicMismatchError,
    TruncatedPayloadError,
    VersionMismatchError,
    read_checkpoint,
    write_checkpoint,
)
from besovlab.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_OK, main
from besovlab.config import ConfigError, ExperimentConfig, load_config
from besovlab.grid import Grid
from besovlab.outputs import COLUMNS, OutputError, Record, loglog_svg, plot_records, read_csv, write_csv
from besovlab.presets import PRESETS, get_preset
from besovlab.solver import FluidParams, State

PARAMS = FluidParams()


def random_state(d, n, seed, t=0.0):
    g = Grid(d, n, 10.0)
    rng = np.random.default_rng(seed)
    return State(g, rng.standard_normal(g.shape) * 0.1, rng.standard_normal((d,) + g.shape), t)


# --- checkpoints ---------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.sampled_from([(1, 16), (2, 8), (3, 8)]), st.integers(0, 2**31 - 1), st.floats(0, 1e3))
def test_checkpoint_round_trip_bit_exact(tmp_path_factory, dn, seed, t):
    path = tmp_path_factory.mktemp("ck") / "s.bnsd"
    s = random_state(*dn, seed, t)
    back = read_checkpoint(write_checkpoint(path, s, PARAMS), PARAMS)
    assert back.a.tobytes() == s.a.tobytes() and back.u.tobytes() == s.u.tobytes()
    assert back.t == s.t and back.grid == s.grid


def test_checkpoint_layout(tmp_path):
    s = random_state(2, 8, 0, 1.5)
    raw = write_checkpoint(tmp_path / "s", s, PARAMS).read_bytes()
    assert raw[:4] == b"BNSD"
    assert struct.unpack_from("<III", raw, 4) == (1, 2, 8)
    header = 4 + 12 + 16 + 32
    assert len(raw) == header + 3 * 64 * 8
    assert np.frombuffer(raw[header : header + 8], "<f8")[0] == s.a.flat[0]


def test_checkpoint_errors_are_distinct(tmp_path):
    s = random_state(2, 8, 1)
    path = write_checkpoint(tmp_path / "s", s, PARAMS)
    raw = path.read_bytes()

    (tmp_path / "magic").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(MagicMismatchError):
        read_checkpoint(tmp_path / "magic")

    (tmp_path / "version").write_bytes(raw[:4] + struct.pack("<I", 9) + raw[8:])
    with pytest.raises(VersionMismatchError):
        read_checkpoint(tmp_path / "version")

    (tmp_path / "short").write_bytes(raw[:-8])
    with pytest.raises(TruncatedPayloadError) as err:
        read_checkpoint(tmp_path / "short")
    assert (err.value.expected, err.value.actual) == (192, 191)
    assert "192" in str(err.value) and "191" in str(err.value)

    with pytest.raises(DigestMismatchError):
        read_checkpoint(path, FluidParams(mu0=0.3))
    read_checkpoint(path)  # no params given: digest not checked

    kinds = {MagicMismatchError, VersionMismatchError, TruncatedPayloadError, DigestMismatchError}
    assert len(kinds) == 4 and not any(issubclass(a, b) for a in kinds for b in kinds if a is not b)


# --- CSV and SVG -----------------------------------------------------------------

def rec(run="r", t=0.0, norm="L2", value=1.0, valid=True):
    return Record(run, t, norm, 0.0, 2.0, 1.0, "full", value, valid)


def test_csv_header_only(tmp_path):
    path = write_csv([], tmp_path / "x.csv")
    assert path.read_text() == ",".join(COLUMNS) + "\n"
    assert COLUMNS == ("run_id", "t", "norm_id", "s", "p", "r", "restriction", "value", "valid")


def test_csv_one_row_round_trip(tmp_path):
    r = Record("run", 0.1, "L2(a,u)", -0.5, float("inf"), 2.0, "low", 1 / 3, False)
    path = write_csv([r], tmp_path / "x.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and len(lines[1].split(",")) == 9 + 1  # the norm id carries a quoted comma
    assert read_csv(path) == [r]


def test_csv_large_sorted_and_stable(tmp_path):
    rng = random.Random(0)
    recs = [rec(f"run{rng.randrange(3)}", float(rng.randrange(50)), f"n{rng.randrange(4)}", value=float(i)) for i in range(10_000)]
    back = read_csv(write_csv(recs, tmp_path / "x.csv"))
    assert len(back) == 10_000
    keys = [(r.run_id, r.t, r.norm_id) for r in back]
    assert keys == sorted(keys)
    # ties keep input order, which the value column encodes
    for a, b in zip(back, back[1:]):
        if (a.run_id, a.t, a.norm_id) == (b.run_id, b.t, b.norm_id):
            assert a.value < b.value
    shuffled = recs[:]
    rng.shuffle(shuffled)
    assert [(r.run_id, r.t, r.norm_id) for r in read_csv(write_csv(shuffled, tmp_path / "y.csv"))] == keys


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError):
        write_csv([rec()], blocker / "sub" / "x.csv")


def test_svg_has_series_and_guide():
    t = np.geomspace(1, 100, 20)
    svg = loglog_svg({"L2": (t, t**-0.5)}, {"L2": 0.5}, "demo & co")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count("<polyline") == 1 and "stroke-dasharray" in svg
    assert "demo &amp; co" in svg and "target 0.5" in svg
    empty = loglog_svg({"L2": (t, np.zeros_like(t))})
    assert "no positive data" in empty


def test_plot_records_one_file_per_run(tmp_path):
    recs = [rec("a/b", float(t), value=1 / (1 + t)) for t in range(5)] + [rec("c", 1.0, valid=False)]
    paths = plot_records(recs, tmp_path)
    assert [p.name for p in paths] == ["a_b.svg"]


# --- configuration -----------------------------------------------------------------

def test_config_round_trip_and_errors(tmp_path):
    cfg = ExperimentConfig("envelope", seed=3, options={"k0": -1})
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg
    bad = [
        {"preset": "envelope", "colour": 1},
        {"preset": "envelope", "schema_version": 2},
        {"seed": 1},
        {"preset": "envelope", "seed": -1},
        {"preset": "envelope", "seed": True},
        {"preset": "envelope", "grid": []},
        [1, 2],
    ]
    for raw in bad:
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_preset_validation():
    with pytest.raises(ConfigError, match="available"):
        get_preset("nope")
    p = get_preset("nonlinear-smoke-2d")
    with pytest.raises(ConfigError, match="unknown grid keys"):
        p.validate(ExperimentConfig(p.id, grid={"m": 3}))
    with pytest.raises(ConfigError):
        p.validate(ExperimentConfig(p.id, grid={"n": 12}))
    with pytest.raises(ConfigError):
        p.validate(ExperimentConfig(p.id, fluid={"mu0": -1.0}))
    with pytest.raises(ConfigError):
        p.validate(ExperimentConfig(p.id, indices={"p": 5.0}))
    with pytest.raises(ConfigError, match="unknown options keys"):
        p.validate(ExperimentConfig(p.id, options={"bogus": 1}))
    with pytest.raises(ConfigError, match="support_radius"):
        p.validate(ExperimentConfig(p.id, grid={"L": 16.0}))
    ctx = p.validate(ExperimentConfig(p.id, grid={"n": 32}))
    assert ctx.grid == {"d": 2, "n": 32, "L": 32.0}


def test_every_preset_states_its_claim():
    for p in PRESETS.values():
        assert p.claim and p.summary
        p.validate(ExperimentConfig(p.id))


# --- CLI -------------------------------------------------------------------------------

def test_cli_list_and_validate(capsys):
    assert main(["list-presets"]) == EXIT_OK
    listed = capsys.readouterr().out
    assert all(pid in listed for pid in PRESETS)
    assert main(["validate", "--preset", "envelope"]) == EXIT_OK
    assert main(["validate", "--preset", "nope"]) == EXIT_CONFIG
    assert main(["validate"]) == EXIT_CONFIG


def test_cli_bad_config_exit_2(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"preset": "envelope", "options": {"k0": 0, "zz": 1}}))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert not (tmp_path / "o").exists()


def test_cli_unwritable_out_exit_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--preset", "envelope", "--out", str(blocker / "o")]) == EXIT_CONFIG


def test_cli_run_writes_artifacts_and_replot(tmp_path, capsys):
    out = tmp_path / "env"
    assert main(["run", "--preset", "envelope", "--out", str(out), "--seed", "4"]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["passed"] and summary["seed"] == 4 and summary["claim"] == PRESETS["envelope"].claim
    assert {c["name"] for c in summary["checks"]} == {"c0 >= 0.4", "C <= 10.0"}
    assert read_csv(out / "records.csv")
    for svg in (out / "plots").glob("*.svg"):
        svg.unlink()
    capsys.readouterr()
    assert main(["replot", "--out", str(out)]) == EXIT_OK
    assert list((out / "plots").glob("*.svg"))
    assert main(["replot", "--out", str(tmp_path / "none")]) == EXIT_CONFIG


def test_cli_blowup_exit_3_with_partial_artifacts(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"preset": "nonlinear-smoke-2d", "options": {"target_X": 10.0}}))
    out = tmp_path / "o"
    assert main(["run", "--config", str(path), "--out", str(out)]) == EXIT_BLOWUP
    summary = json.loads((out / "summary.json").read_text())
    assert summary["status"] == "blow-up" and not summary["passed"] and "floor" in summary["error"]
    assert (out / "records.csv").read_text().startswith("run_id,")


def test_smoke_preset_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--preset", "nonlinear-smoke-2d", "--seed", "5", "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a" / "records.csv").read_bytes() == (tmp_path / "b" / "records.csv").read_bytes()
    sa, sb = (json.loads((tmp_path / n / "summary.json").read_text()) for n in "ab")
    sa.pop("created"), sb.pop("created")
    sa["config"].pop("out"), sb["config"].pop("out")
    assert sa == sb
    assert main(["run", "--preset", "nonlinear-smoke-2d", "--seed", "6", "--out", str(tmp_path / "c")]) == EXIT_OK
    assert (tmp_path / "c" / "records.csv").read_bytes() != (tmp_path / "a" / "records.csv").read_bytes()
