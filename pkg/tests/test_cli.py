import json
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpzmp.cli import SchemaError, emit_config, main, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, obj):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(obj))
    return str(p)


def _rows(path):
    return [line.split(",") for line in Path(path).read_text().splitlines()]


def test_example_config(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["tasep-prob", "--config", str(CONFIGS / "example.json"), "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == ["scenario_id", "method", "value", "stderr_or_trunc", "wall_time"]
    series = [r for r in rows if r[:2] == ["poisson", "series"]][0]
    assert abs(float(series[2]) - 0.6321205588285577) < 1e-12


def test_no_timing_is_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}.csv"
        main(["tasep-prob", "--config", str(CONFIGS / "example.json"), "--out", str(out), "--no-timing"])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_seed_override_changes_mc(tmp_path):
    vals = []
    for seed in ("1", "2"):
        out = tmp_path / f"o{seed}.csv"
        main(["tasep-prob", "--config", str(CONFIGS / "example.json"), "--out", str(out), "--seed", seed])
        vals.append([r[2] for r in _rows(out) if r[1] == "mc"][0])
    assert vals[0] != vals[1]


def test_order_violation_exits_2(tmp_path, capsys):
    cfg = {"id": "bad", "initial": {"mnw": [["0", "0"]]}, "queries": [["0", "2", "0"], ["0", "1", "0"]]}
    assert main(["kpz-prob", "--config", _write(tmp_path, cfg)]) == 2
    assert "violate the order" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg",
    [
        {"id": "x", "initial": {"tasep": ["0", "0"]}, "queries": [["1", "1", "0"]]},
        {"id": "x", "initial": {"tasep": ["0"]}, "queries": [["1", "1", "0"]], "colour": "red"},
        {"id": "x", "initial": {"tasep": ["0"]}, "queries": [["1", "1", "0"]], "truncation": {"bogus": "1"}},
        {"id": "x", "initial": {"tasep": ["0"]}, "queries": [["1", "1", "0"]], "seed": "-1"},
        {"id": "x", "initial": {"tasep": ["0"]}, "queries": [["1", "1", "0"]], "methods": ["fredholm_new"]},
        {"id": "x", "kind": "kpz_prob", "initial": {"mnw": [["0", "0"]]}, "queries": [["0", "1", "0"]]},
    ],
)
def test_schema_errors_exit_2(tmp_path, cfg):
    assert main(["tasep-prob", "--config", _write(tmp_path, cfg)]) == 2


def test_missing_file_exits_2(tmp_path):
    assert main(["tasep-prob", "--config", str(tmp_path / "none.json")]) == 2


def test_tolerance_failure_exits_3(tmp_path):
    cfg = {"id": "t", "initial": {"tasep": ["2", "0", "-3"]}, "queries": [["3", "1.5", "-2"]],
           "truncation": {"n_total_max": "1", "tolerance": "1e-12"}}
    assert main(["tasep-prob", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "o.csv")]) == 3


def test_kpz_methods_agree(tmp_path):
    cfg = {"id": "tw", "initial": {"mnw": [["0", "0"]]}, "queries": [["0", "1", "-1"]],
           "methods": ["series", "fredholm_new", "fredholm_mqr"]}
    out = tmp_path / "o.csv"
    assert main(["kpz-prob", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    vals = [float(r[2]) for r in _rows(out)[1:]]
    assert max(vals) - min(vals) < 1e-6


def test_chi_eval(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["chi-eval", "--config", str(CONFIGS / "chi.json"), "--out", str(out)]) == 0
    assert any(r[0] == "two[0]" and r[1] == "chi.re" for r in _rows(out))


def test_verify_subcommand():
    r = subprocess.run([sys.executable, "-m", "kpzmp", "verify", "--no-timing"], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "0 failed" in r.stderr


decimal = st.decimals(-5, 5, places=3, allow_nan=False, allow_infinity=False).map(str)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(-20, 20), min_size=1, max_size=5, unique=True),
    st.lists(st.tuples(st.floats(0.1, 3.0), st.integers(-5, 5)), min_size=1, max_size=3),
    st.integers(0, 2**64 - 1),
    st.sampled_from([["series"], ["series", "ctmc"], ["mc"]]),
)
def test_config_round_trip(y, qs, seed, methods):
    y = sorted(y, reverse=True)
    q = [[str(k + 1), repr(t), str(a)] for k, (t, a) in enumerate(qs[: len(y)])]
    q.sort(key=lambda e: float(e[1]))
    cfg = {"id": "r", "kind": "tasep_prob", "initial": {"tasep": [str(v) for v in y]}, "queries": q,
           "methods": methods, "seed": str(seed), "truncation": {"z_radius": "0.4", "n_total_max": "3"}}
    try:
        first = parse_config(json.dumps(cfg))
    except Exception as e:
        # only order violations are acceptable here
        assert "nondecreasing" in str(e) or "order" in str(e)
        return
    again = parse_config(emit_config(first))
    assert again == first


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(decimal, decimal), min_size=1, max_size=4))
def test_equal_time_round_trip(pairs):
    cfg = {"id": "e", "kind": "equal_time", "initial": {"mnw": [["0", "0"]]}, "queries": [list(p) for p in pairs]}
    try:
        first = parse_config(json.dumps(cfg))
    except SchemaError:
        raise
    except ValueError as e:
        assert "increasing" in str(e)
        return
    assert parse_config(emit_config(first)) == first
