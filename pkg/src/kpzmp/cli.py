"""Batch front end: JSON scenario files in, CSV out.

A config file holds one scenario object or {"scenarios": [...]}.  Numbers are
written as decimal strings ("0.25", "-3"), complex numbers as [re, im] pairs.
Each scenario has an "id", a "kind" (optional when it matches the subcommand)
and kind-specific fields; see README.md for the full schema.

Exit codes: 0 success, 2 schema error, 3 tolerance failure.
"""

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .equal_time import EqualTimeParams, fredholm_mqr, fredholm_new
from .kpz_char import ChiParams, CompactUC, MultiNarrowWedge, WedgeError, chi_mnw, chi_mnw_matrix, chi_uc, dyadic_mnw
from .kpz_multipoint import KpzTruncation, as_kpz_queries, convergence_study, rescale_time, rescaled_ch
from .kpz_multipoint import joint_cdf as kpz_joint_cdf
from .tasep_char import InitialConditionError, TasepInitial, ch_eval
from .tasep_multipoint import QueryError, ToleranceError, TruncationParams, as_queries
from .tasep_multipoint import joint_cdf as tasep_joint_cdf
from .tasep_oracles import DiscretizationError, SimConfig, ctmc_joint_cdf, discretize_mnw, mc_joint_cdf
from .verify import verify_all

KINDS = ("tasep_prob", "kpz_prob", "chi_eval", "equal_time", "convergence", "verify")
COMMANDS = {k.replace("_", "-"): k for k in KINDS}
HEADER = ("scenario_id", "method", "value", "stderr_or_trunc", "wall_time")

METHODS = {
    "tasep_prob": (("series",), ("series", "ctmc", "mc")),
    "kpz_prob": (("series",), ("series", "fredholm_new", "fredholm_mqr")),
    "equal_time": (("fredholm_new", "fredholm_mqr"), ("fredholm_new", "fredholm_mqr")),
    "chi_eval": (("chi",), ("chi",)),
    "convergence": (("tasep_mc",), ("tasep_mc", "rescaled_ch")),
    "verify": (("suite",), ("suite",)),
}

PARAMS = {
    "tasep_prob": TruncationParams,
    "kpz_prob": KpzTruncation,
    "convergence": KpzTruncation,
    "equal_time": EqualTimeParams,
    "chi_eval": ChiParams,
}


class SchemaError(ValueError):
    pass


SCHEMA_ERRORS = (SchemaError, QueryError, WedgeError, InitialConditionError, DiscretizationError)


@dataclass(frozen=True)
class Scenario:
    id: str
    kind: str
    initial: tuple = ()
    queries: tuple = ()
    methods: tuple = ()
    truncation: tuple = ()
    points: tuple = ()
    eps: tuple = ()
    n_samples: int = 100_000
    seed: int = 0
    budget: str = "quick"


# numbers


def _real(x, what):
    if isinstance(x, bool) or not isinstance(x, (str, int, float)):
        raise SchemaError(f"{what}: expected a decimal string, got {x!r}")
    try:
        v = float(x)
    except ValueError:
        raise SchemaError(f"{what}: not a number: {x!r}") from None
    if not math.isfinite(v):
        raise SchemaError(f"{what}: must be finite")
    return v


def _int(x, what):
    if isinstance(x, str):
        try:
            return int(x)
        except ValueError:
            pass
    v = _real(x, what)
    if v != int(v):
        raise SchemaError(f"{what}: expected an integer, got {x!r}")
    return int(v)


def _bool(x, what):
    if x in ("true", "false", True, False):
        return x in ("true", True)
    raise SchemaError(f"{what}: expected 'true' or 'false', got {x!r}")


def _complex(x, what):
    if not isinstance(x, (list, tuple)) or len(x) != 2:
        raise SchemaError(f"{what}: complex numbers are [re, im] pairs")
    return complex(_real(x[0], what), _real(x[1], what))


def _list(x, what):
    if not isinstance(x, (list, tuple)):
        raise SchemaError(f"{what}: expected a list")
    return x


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


# parsing


def _parse_initial(d, sid):
    if not isinstance(d, dict) or len(d) != 1:
        raise SchemaError(f"{sid}: 'initial' must have exactly one of tasep, mnw, sampled")
    (key, val), = d.items()
    what = f"{sid}.initial.{key}"
    if key == "tasep":
        y = tuple(_int(v, what) for v in _list(val, what))
        TasepInitial(y)
        return ("tasep", y)
    if key in ("mnw", "sampled"):
        pairs = []
        for e in _list(val, what):
            e = _list(e, what)
            if len(e) != 2:
                raise SchemaError(f"{what}: entries are [x, value] pairs")
            pairs.append((_real(e[0], what), _real(e[1], what)))
        if key == "mnw":
            MultiNarrowWedge(tuple(pairs))
        elif len(pairs) < 2 or any(b[0] <= a[0] for a, b in zip(pairs, pairs[1:])):
            raise SchemaError(f"{what}: need at least two samples with increasing x")
        return (key, tuple(pairs))
    raise SchemaError(f"{sid}: unknown initial condition type {key!r}")


def _parse_queries(kind, val, sid, initial):
    what = f"{sid}.queries"
    rows = [_list(e, what) for e in _list(val, what)]
    if kind == "tasep_prob":
        q = [(_int(k, what), _real(t, what), _int(a, what)) for k, t, a in _check_len(rows, 3, what)]
        n = len(initial[1]) if initial and initial[0] == "tasep" else None
        as_queries(q, n)
    elif kind in ("kpz_prob", "convergence"):
        q = [tuple(_real(v, what) for v in e) for e in _check_len(rows, 3, what)]
        as_kpz_queries(q)
    elif kind == "equal_time":
        q = [tuple(_real(v, what) for v in e) for e in _check_len(rows, 2, what)]
        a = [e[0] for e in q]
        if any(y <= x for x, y in zip(a, a[1:])):
            raise QueryError(f"{what}: alphas must be strictly increasing at equal times")
    else:
        q = []
    return tuple(tuple(e) for e in q)


def _check_len(rows, n, what):
    for e in rows:
        if len(e) != n:
            raise SchemaError(f"{what}: each query needs {n} entries")
    return rows


def _parse_truncation(kind, d, sid):
    if d is None:
        return ()
    if not isinstance(d, dict):
        raise SchemaError(f"{sid}.truncation must be an object")
    cls = PARAMS.get(kind)
    fields = {f.name: f for f in dataclasses.fields(cls)} if cls else {}
    out = []
    for key in sorted(d):
        if key == "fredholm" and kind == "kpz_prob":
            out.append((key, _parse_truncation("equal_time", d[key], f"{sid}.truncation.fredholm")))
            continue
        if key == "chi" and kind in ("kpz_prob", "convergence"):
            out.append((key, _parse_truncation("chi_eval", d[key], f"{sid}.truncation.chi")))
            continue
        if key not in fields:
            raise SchemaError(f"{sid}: unknown truncation parameter {key!r}")
        default = fields[key].default
        conv = _bool if isinstance(default, bool) else _int if isinstance(default, int) else _real
        out.append((key, conv(d[key], f"{sid}.truncation.{key}")))
    return tuple(out)


def parse_scenario(d, default_kind=None):
    if not isinstance(d, dict):
        raise SchemaError("each scenario must be an object")
    sid = str(d.get("id", ""))
    if not sid:
        raise SchemaError("scenario needs a nonempty 'id'")
    kind = d.get("kind", default_kind)
    if kind not in KINDS:
        raise SchemaError(f"{sid}: unknown kind {kind!r}")
    if default_kind is not None and kind != default_kind:
        raise SchemaError(f"{sid}: kind {kind!r} does not match the subcommand")
    allowed = {"id", "kind", "initial", "queries", "methods", "truncation", "points", "eps", "n_samples", "seed", "budget"}
    extra = set(d) - allowed
    if extra:
        raise SchemaError(f"{sid}: unknown fields {sorted(extra)}")
    initial = ()
    if kind != "verify":
        if "initial" not in d:
            raise SchemaError(f"{sid}: missing 'initial'")
        initial = _parse_initial(d["initial"], sid)
        want = {"tasep_prob": ("tasep",), "convergence": ("mnw",)}.get(kind, ("mnw", "sampled", "tasep"))
        if kind in ("kpz_prob", "equal_time"):
            want = ("mnw", "sampled")
        if initial[0] not in want:
            raise SchemaError(f"{sid}: {kind} needs initial data of type {' or '.join(want)}")
    queries = ()
    if kind not in ("chi_eval", "verify"):
        if "queries" not in d:
            raise SchemaError(f"{sid}: missing 'queries'")
        queries = _parse_queries(kind, d["queries"], sid, initial)
    default, allowed_m = METHODS[kind]
    methods = tuple(d.get("methods", default))
    if not methods or any(m not in allowed_m for m in methods):
        raise SchemaError(f"{sid}: methods must be drawn from {allowed_m}")
    if kind == "kpz_prob" and any(m.startswith("fredholm") for m in methods):
        if len({q[1] for q in queries}) != 1:
            raise SchemaError(f"{sid}: Fredholm methods need equal times")
    points = ()
    if "points" in d:
        pts = []
        for e in _list(d["points"], f"{sid}.points"):
            e = _list(e, f"{sid}.points")
            if len(e) != 2:
                raise SchemaError(f"{sid}.points: entries are [eta, xi]")
            pts.append((_complex(e[0], f"{sid}.points"), _complex(e[1], f"{sid}.points")))
        points = tuple(pts)
    if kind == "chi_eval" and not points:
        raise SchemaError(f"{sid}: chi_eval needs 'points'")
    eps = tuple(_real(e, f"{sid}.eps") for e in _list(d.get("eps", []), f"{sid}.eps"))
    if kind == "convergence":
        if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise SchemaError(f"{sid}: eps must be a nonempty decreasing list of positive numbers")
        if "rescaled_ch" in methods and not points:
            raise SchemaError(f"{sid}: rescaled_ch needs 'points'")
    n_samples = _int(d.get("n_samples", "100000"), f"{sid}.n_samples")
    if n_samples < 1:
        raise SchemaError(f"{sid}: n_samples must be positive")
    seed = _int(d.get("seed", "0"), f"{sid}.seed")
    if not 0 <= seed < 2**64:
        raise SchemaError(f"{sid}: seed must be an unsigned 64-bit integer")
    budget = d.get("budget", "quick")
    if budget not in ("quick", "full"):
        raise SchemaError(f"{sid}: budget must be quick or full")
    return Scenario(
        sid, kind, initial, queries, methods, _parse_truncation(kind, d.get("truncation"), sid),
        points, eps, n_samples, seed, budget,
    )


def parse_config(text, default_kind=None):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"config is not valid JSON: {e}") from None
    items = data["scenarios"] if isinstance(data, dict) and "scenarios" in data else [data]
    scen = [parse_scenario(d, default_kind) for d in _list(items, "scenarios")]
    ids = [s.id for s in scen]
    if len(set(ids)) != len(ids):
        raise SchemaError("scenario ids must be unique")
    return scen


# emission


def _emit_truncation(t):
    return {k: (_emit_truncation(v) if isinstance(v, tuple) else _fmt(v)) for k, v in t}


def scenario_dict(s):
    d = {"id": s.id, "kind": s.kind}
    if s.initial:
        key, val = s.initial
        d["initial"] = {key: [_fmt(v) for v in val] if key == "tasep" else [[_fmt(a), _fmt(b)] for a, b in val]}
    if s.queries:
        d["queries"] = [[_fmt(v) for v in q] for q in s.queries]
    d["methods"] = list(s.methods)
    if s.truncation:
        d["truncation"] = _emit_truncation(s.truncation)
    if s.points:
        d["points"] = [[[_fmt(z.real), _fmt(z.imag)] for z in p] for p in s.points]
    if s.eps:
        d["eps"] = [_fmt(e) for e in s.eps]
    d["n_samples"] = _fmt(s.n_samples)
    d["seed"] = _fmt(s.seed)
    d["budget"] = s.budget
    return d


def emit_config(scenarios):
    return json.dumps({"scenarios": [scenario_dict(s) for s in scenarios]}, indent=2) + "\n"


# execution


def _params(cls, trunc, **extra):
    kw = {k: v for k, v in trunc if not isinstance(v, tuple)}
    kw.update(extra)
    return cls(**kw)


def _sub(trunc, key):
    for k, v in trunc:
        if k == key:
            return v
    return ()


def _sampled_uc(pairs):
    xs = np.array([p[0] for p in pairs])
    vs = np.array([p[1] for p in pairs])

    def ev(x):
        if x < xs[0] or x > xs[-1]:
            return -math.inf
        return float(np.interp(x, xs, vs))

    L = max(abs(xs[0]), abs(xs[-1]))
    return CompactUC(L, float(vs.max()), ev, tuple(xs))


def _as_mnw(initial, chi):
    key, val = initial
    if key == "mnw":
        return MultiNarrowWedge(val)
    return dyadic_mnw(_sampled_uc(val), chi.dyadic_depth, chi.samples_per_cell)


def _unit_time(h, q):
    hw, qc = rescale_time(h, q, q[0][1])
    return hw, [(e.alpha, e.beta) for e in qc]


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def run_scenario(s):
    """Rows (id, method, value, err, wall_time) for one scenario."""
    rows = []
    if s.kind == "tasep_prob":
        y = s.initial[1]
        for m in s.methods:
            if m == "series":
                r, dt = _timed(lambda: tasep_joint_cdf(y, s.queries, _params(TruncationParams, s.truncation)))
                rows.append((s.id, m, r.value, r.truncation, dt))
            elif m == "ctmc":
                (v, e), dt = _timed(lambda: ctmc_joint_cdf(y, s.queries, with_error=True))
                rows.append((s.id, m, v, e, dt))
            else:
                (v, e), dt = _timed(lambda: mc_joint_cdf(y, s.queries, SimConfig(s.seed, s.n_samples)))
                rows.append((s.id, m, v, e, dt))
    elif s.kind == "kpz_prob":
        tp = _params(KpzTruncation, s.truncation, chi=_params(ChiParams, _sub(s.truncation, "chi")))
        h = _as_mnw(s.initial, tp.chi)
        for m in s.methods:
            if m == "series":
                r, dt = _timed(lambda: kpz_joint_cdf(h, s.queries, tp))
                rows.append((s.id, m, r.value, r.truncation, dt))
            else:
                fp = _params(EqualTimeParams, _sub(s.truncation, "fredholm"))
                hw, q = _unit_time(h, s.queries)
                fn = fredholm_new if m == "fredholm_new" else fredholm_mqr
                v, dt = _timed(lambda: fn(q, hw, fp))
                rows.append((s.id, m, v, 0.0, dt))
    elif s.kind == "equal_time":
        fp = _params(EqualTimeParams, s.truncation)
        h = _as_mnw(s.initial, ChiParams())
        vals = {}
        for m in s.methods:
            fn = fredholm_new if m == "fredholm_new" else fredholm_mqr
            vals[m], dt = _timed(lambda: fn(s.queries, h, fp))
            rows.append([s.id, m, vals[m], 0.0, dt])
        if len(vals) == 2:
            # the two determinants are independent routes; their gap is the error estimate
            gap = abs(vals["fredholm_new"] - vals["fredholm_mqr"])
            for r in rows:
                r[3] = gap
        rows = [tuple(r) for r in rows]
    elif s.kind == "chi_eval":
        cp = _params(ChiParams, s.truncation)
        key, val = s.initial
        for k, (eta, xi) in enumerate(s.points):
            if key == "tasep":
                (v, e), dt = _timed(lambda: (ch_eval(val, eta, xi), 0.0))
            elif key == "mnw":
                (v, e), dt = _timed(lambda: (chi_mnw(MultiNarrowWedge(val), eta, xi, cp), 0.0))
            else:
                (v, e), dt = _timed(lambda: chi_uc(_sampled_uc(val), eta, xi, cp))
            rows.append((f"{s.id}[{k}]", "chi.re", v.real, e, dt))
            rows.append((f"{s.id}[{k}]", "chi.im", v.imag, e, 0.0))
    elif s.kind == "convergence":
        tp = _params(KpzTruncation, s.truncation, chi=_params(ChiParams, _sub(s.truncation, "chi")))
        h = MultiNarrowWedge(s.initial[1])
        if "tasep_mc" in s.methods:
            table, dt = _timed(lambda: convergence_study(h, s.queries, s.eps, tp, s.n_samples, s.seed))
            rows.append((s.id, "kpz_series", table[0].kpz, 0.0, 0.0))
            for r in table:
                rows.append((s.id, f"tasep_mc eps={_fmt(r.eps)}", r.tasep, r.stderr, r.wall_time))
        if "rescaled_ch" in s.methods:
            h0 = h.normalized()[0]
            etas = np.array([p[0] for p in s.points])
            xis = np.array([p[1] for p in s.points])
            ref = np.diag(chi_mnw_matrix(h0, etas, xis, tp.chi))
            for e in s.eps:
                y = discretize_mnw(h0, e)
                got, dt = _timed(lambda: np.diag(rescaled_ch(y, e, etas, xis)))
                rows.append((s.id, f"rescaled_ch eps={_fmt(e)}", float(np.max(np.abs(got - ref))), 0.0, dt))
    else:
        for r in verify_all(s.budget):
            rows.append((s.id, r.name, r.error, r.tolerance, r.wall_time))
            for e in r.table:
                if hasattr(e, "eps"):
                    rows.append((s.id, f"{r.name} eps={_fmt(e.eps)}", e.tasep, e.stderr, e.wall_time))
                else:
                    rows.append((s.id, f"{r.name} eps={_fmt(e[0])}", e[1], 0.0, 0.0))
            if not r.passed:
                rows.append((s.id, f"{r.name} FAILED", r.error, r.tolerance, 0.0))
    return rows


def _run_one(s):
    try:
        return 0, run_scenario(s), ""
    except ToleranceError as e:
        return 3, [], f"{s.id}: {e}"
    except SCHEMA_ERRORS as e:
        return 2, [], f"{s.id}: {e}"


def run(scenarios, workers=1):
    """Run scenarios in order; returns (rows, exit_code, messages)."""
    if workers > 1 and len(scenarios) > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_one, scenarios))
    else:
        results = [_run_one(s) for s in scenarios]
    rows, code, msgs = [], 0, []
    for c, r, msg in results:
        rows.extend(r)
        if msg:
            msgs.append(msg)
        code = max(code, c)
    for r in rows:
        if r[1].endswith("FAILED"):
            code = max(code, 3)
    return rows, code, msgs


def write_csv(rows, fh, timing=True):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(HEADER)
    for sid, method, value, err, wall in rows:
        w.writerow((sid, method, _fmt(value), _fmt(err), f"{wall:.3f}" if timing else "0"))


def build_parser():
    p = argparse.ArgumentParser(prog="kpzmp", description="Multipoint TASEP and KPZ fixed point probabilities.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "verify", help="JSON scenario file")
        sp.add_argument("--out", help="CSV output path (default stdout)")
        sp.add_argument("--seed", type=int, help="override every scenario seed (u64)")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--budget", choices=("quick", "full"), default=None)
        sp.add_argument("--no-timing", action="store_true", help="write 0 in the wall_time column")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    kind = COMMANDS[args.command]
    try:
        if args.config:
            with open(args.config) as fh:
                scenarios = parse_config(fh.read(), kind)
        else:
            scenarios = [Scenario("verify", "verify", methods=("suite",))]
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise SchemaError("--seed must be an unsigned 64-bit integer")
            scenarios = [dataclasses.replace(s, seed=args.seed) for s in scenarios]
        if args.budget is not None:
            scenarios = [dataclasses.replace(s, budget=args.budget) for s in scenarios]
        if args.workers < 1:
            raise SchemaError("--workers must be >= 1")
    except SCHEMA_ERRORS as e:
        print(f"schema error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"cannot read config: {e}", file=sys.stderr)
        return 2
    rows, code, msgs = run(scenarios, args.workers)
    for m in msgs:
        print(m, file=sys.stderr)
    buf = io.StringIO()
    write_csv(rows, buf, not args.no_timing)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if kind == "verify":
        checks = [r for r in rows if " " not in r[1]]
        failed = sum(r[1].endswith("FAILED") for r in rows)
        print(f"verify: {len(checks) - failed} passed, {failed} failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
