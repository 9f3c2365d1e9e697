"""Command-line front end.

Subcommands: ``simulate``, ``audit``, ``design-observer`` and
``repro-paper``.  Exit codes: 0 success, 1 reproduction check failed,
2 bad configuration or input, 3 numerical or modelling assumption failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import errors
from .config import ScenarioConfig, read_config
from .discernibility import audit_graph, format_audit, write_audit_csv
from .dynamics import FaultSchedule, build_system, simulate
from .fdi_full import Ambiguous, build_projector, check_identifiability_full, run_full_fdi, write_full_log
from .fdi_partial import (
    ObserverRun,
    check_identifiability_partial,
    design_deadbeat,
    identify_partial,
    run_observer,
    write_observer_log,
)
from .fixtures import (
    SEVEN_NODE_A,
    SEVEN_NODE_KAPPA,
    SEVEN_NODE_OBSERVED,
    SIM1_X0,
    SIM2_X0,
    SIM_FAULTS,
    SIM_HORIZON,
    seven_node_graph,
)
from .graph import read_graph

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CONFIG_ERRORS = (
    errors.ConfigError,
    errors.InvalidGraph,
    errors.ScheduleInvalid,
    errors.KappaOutOfRange,
    errors.NotStronglyConnected,
    errors.NoSuchArc,
    FileNotFoundError,
)
NUMERICAL_ERRORS = (
    errors.NotObservable,
    errors.IllConditioned,
    errors.RepeatedEigenvalue,
    errors.AssumptionViolated,
    errors.ConvergenceFailure,
    errors.NotIrreducible,
    errors.WindowTooShort,
    errors.FaultDisconnectsGraph,
)


class Relabeling:
    """Observed vertices first, the rest in increasing order.

    ``order[k]`` is the original label of internal vertex ``k + 1``.
    """

    def __init__(self, n, observed=None):
        observed = list(observed or [])
        self.order = observed + [v for v in range(1, n + 1) if v not in observed]
        self.new = {old: k + 1 for k, old in enumerate(self.order)}
        self.identity = self.order == list(range(1, n + 1))

    def to_internal(self, x):
        return np.asarray(x, dtype=float)[[v - 1 for v in self.order]]

    def to_original(self, X):
        X = np.asarray(X)
        out = np.empty_like(X)
        out[..., [v - 1 for v in self.order]] = X
        return out

    def vertex(self, k):
        return self.order[k - 1]

    def arc(self, arc):
        return (self.vertex(arc[0]), self.vertex(arc[1]))

    def describe(self):
        return " ".join(f"{old}->{k + 1}" for k, old in enumerate(self.order))


def _fmt_arc(arc):
    return f"{arc[0]}->{arc[1]}"


def _out_path(out_dir, name):
    p = Path(name)
    return p if p.is_absolute() else Path(out_dir) / p


# --- simulate --------------------------------------------------------------


def cmd_simulate(cfg: ScenarioConfig, out_dir=".", out=None):
    out = out or sys.stdout
    g0 = read_graph(cfg.graph_path)
    if len(cfg.x0) != g0.n:
        raise errors.ConfigError(f"x0 has {len(cfg.x0)} entries, graph has {g0.n} vertices")
    rl = Relabeling(g0.n, cfg.observed if cfg.mode == "partial" else None)
    g = g0.relabel(rl.order)
    sys_ = build_system(g, cfg.kappa)
    intervals = [(a, b, rl.new[t], rl.new[h]) for a, b, t, h in cfg.intervals()]
    schedule = FaultSchedule.from_intervals(intervals)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = simulate(sys_, rl.to_internal(cfg.x0), schedule, cfg.horizon)
    for w in caught:
        print(f"warning: {w.message}", file=out)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    if not rl.identity:
        print(f"relabeling (original->internal): {rl.describe()}", file=out)
    if "trajectory" in cfg.outputs:
        _write_trajectory(_out_path(out_dir, cfg.outputs["trajectory"]), traj, rl)

    events = []
    if cfg.mode == "full":
        proj = build_projector(sys_)
        episodes, norms = run_full_fdi(proj, traj, cfg.eps)
        if "residuals" in cfg.outputs:
            write_full_log(_out_path(out_dir, cfg.outputs["residuals"]), norms,
                           _relabel_episodes(episodes, rl), cfg.eps)
        for ep in episodes:
            if ep.trace is not None and ep.status == "identified":
                what = f"arc {_fmt_arc(rl.arc(ep.arc))}"
            elif ep.trace is not None:
                tails = sorted(rl.vertex(v) for v in ep.trace.tail.candidates)
                what = f"head {rl.vertex(ep.head)}, tail among {tails}"
            elif ep.head is not None:
                what = f"head {rl.vertex(ep.head)}, tail unidentified"
            else:
                what = "unidentified"
            events.append((ep.detection_time, what))
    else:
        p = len(cfg.observed)
        obs = design_deadbeat(sys_, p)
        Y = traj.states[:, :p]
        run = run_observer(obs, Y, cfg.eps)
        if "residuals" in cfg.outputs:
            _write_observer(_out_path(out_dir, cfg.outputs["residuals"]), Y, run, rl)
        print(f"dead-beat observer: tau0 = {obs.tau0}", file=out)
        ev = run.events
        for k, t in enumerate(ev):
            end = ev[k + 1] if k + 1 < len(ev) else None
            try:
                res = identify_partial(obs, run, Y, t, end=end)
            except errors.WindowTooShort as exc:
                events.append((t, f"unidentified ({exc})"))
                continue
            if res.result is None:
                what = "no fault in window"
            elif isinstance(res.result, tuple):
                what = f"arc {_fmt_arc(rl.arc(res.result))}"
            elif res.result.candidates:
                what = "ambiguous among " + ", ".join(
                    _fmt_arc(rl.arc(a)) for a in sorted(res.result.candidates))
            else:
                what = "no candidate arc fits"
            events.append((t, what))
    if "audit" in cfg.outputs:
        entries = audit_graph(sys_, cfg.mode, len(cfg.observed) if cfg.mode == "partial" else None)
        write_audit_csv(_relabel_audit(entries, rl), _out_path(out_dir, cfg.outputs["audit"]), cfg.mode)
    if events:
        for t, what in events:
            print(f"detection at t={t}: {what}", file=out)
    else:
        print("no detection", file=out)
    return EXIT_OK, events


def _write_trajectory(path, traj, rl):
    states = rl.to_original(traj.states)
    n = states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i}" for i in range(1, n + 1)] + ["matrix_tag"])
        for t, x in enumerate(states):
            tag = "initial" if t == 0 else _relabel_tag(traj.tags[t - 1], rl)
            w.writerow([t] + [format(v, ".17g") for v in x] + [tag])


def _relabel_tag(tag, rl):
    if not tag.startswith("cut:"):
        return tag
    t, h = tag[4:].split("-")
    return f"cut:{rl.vertex(int(t))}-{rl.vertex(int(h))}"


def _write_observer(path, Y, run, rl):
    mapped = ObserverRun(rl.to_original(run.xhat_states), run.residuals,
                         run.detection_signal, run.tau0, run.eps)
    write_observer_log(path, Y, mapped)


def _relabel_episodes(episodes, rl):
    out = []
    for ep in episodes:
        tr = ep.trace
        if tr is not None:
            tail = tr.tail
            tail = Ambiguous(frozenset(rl.vertex(v) for v in tail.candidates)) \
                if isinstance(tail, Ambiguous) else rl.vertex(tail)
            tr = replace(tr, head=rl.vertex(tr.head), tail=tail,
                         candidate_sets=[frozenset(rl.vertex(v) for v in s) for s in tr.candidate_sets])
        head = None if ep.head is None else rl.vertex(ep.head)
        out.append(replace(ep, head=head, trace=tr))
    return out


def _relabel_audit(entries, rl):
    out = []
    for e in entries:
        v = e.verdict
        if v is not None:
            v = replace(v, edge=rl.arc(v.edge))
        out.append(replace(e, edge=rl.arc(e.edge), verdict=v))
    return sorted(out, key=lambda e: e.edge)


# --- audit -----------------------------------------------------------------


def cmd_audit(graph_path, kappa, mode="full", observed=None, out_dir=None, out=None):
    out = out or sys.stdout
    g0 = read_graph(graph_path)
    if mode == "partial" and not observed:
        raise errors.ConfigError("partial audit needs --observed")
    rl = Relabeling(g0.n, observed if mode == "partial" else None)
    sys_ = build_system(g0.relabel(rl.order), kappa)
    p = len(observed) if mode == "partial" else None
    entries = _relabel_audit(audit_graph(sys_, mode, p), rl)
    if not rl.identity:
        print(f"relabeling (original->internal): {rl.describe()}", file=out)
    print(format_audit(entries), file=out)
    print("identification pre-checks:", file=out)
    if mode == "full":
        for h in range(1, g0.n + 1):
            rep = check_identifiability_full(sys_, rl.new[h])
            status = "ok" if rep else "fails: " + "; ".join(
                f"{_describe_item(item, rl)} ({why})" for item, why in rep.failures)
            print(f"  head {h}: {status}", file=out)
    else:
        rep = check_identifiability_partial(sys_, p)
        print(f"  candidates: {', '.join(_fmt_arc(rl.arc(a)) for a in rep.candidates) or 'none'}", file=out)
        for item, why in rep.failures:
            print(f"  fails: {_describe_item(item, rl)} ({why})", file=out)
        if rep:
            print("  all conditions hold", file=out)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_audit_csv(entries, Path(out_dir) / "audit.csv", mode)
    return EXIT_OK, entries


def _describe_item(item, rl):
    if item is None:
        return "system"
    if isinstance(item[0], tuple):
        return " vs ".join(_fmt_arc(rl.arc(a)) for a in item)
    return _fmt_arc(rl.arc(item))


# --- design-observer -------------------------------------------------------


def cmd_design_observer(graph_path, kappa, observed, out_dir=None, out=None):
    out = out or sys.stdout
    g0 = read_graph(graph_path)
    if not observed:
        raise errors.ConfigError("design-observer needs --observed")
    rl = Relabeling(g0.n, observed)
    sys_ = build_system(g0.relabel(rl.order), kappa)
    obs = design_deadbeat(sys_, len(observed))
    if not rl.identity:
        print(f"relabeling (original->internal): {rl.describe()}", file=out)
    print(f"tau0 = {obs.tau0}", file=out)
    print(f"observability indices = {list(obs.indices)}", file=out)
    print(f"transform condition number = {obs.condition:.6g}", file=out)
    G = rl.to_original(obs.G.T).T
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        with open(Path(out_dir) / "observer_gain.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex"] + [f"y{v}" for v in observed])
            for i in range(g0.n):
                w.writerow([i + 1] + [format(v, ".17g") for v in G[i]])
    else:
        with np.printoptions(precision=6, suppress=True):
            print("G =", file=out)
            print(G, file=out)
    return EXIT_OK, obs


# --- repro-paper -----------------------------------------------------------


def reproduce_benchmark(eps=1e-9, out_dir=None):
    """Run both benchmark simulations; returns ``[(check, passed, detail)]``."""
    rows = []
    g = seven_node_graph()
    sys_ = build_system(g, SEVEN_NODE_KAPPA)
    rows.append(("consensus matrix reproduced exactly", bool(np.array_equal(sys_.A, SEVEN_NODE_A)), ""))
    p = len(SEVEN_NODE_OBSERVED)
    obs = design_deadbeat(sys_, p)
    rows.append(("tau0 == 3", obs.tau0 == 3, f"tau0={obs.tau0}"))
    schedule = FaultSchedule.from_intervals(SIM_FAULTS)
    for label, x0 in (("sim1", SIM1_X0), ("sim2", SIM2_X0)):
        t_start = time.perf_counter()
        traj = simulate(sys_, x0, schedule, SIM_HORIZON)
        Y = traj.states[:, :p]
        run = run_observer(obs, Y, eps)
        elapsed = time.perf_counter() - t_start
        d = run.detection_signal.astype(int)
        ev = run.events
        signal = "".join(map(str, d[:30]))
        if label == "sim1":
            rows.append(("sim1: d(t)=0 for t in [3,10]", not d[3:11].any(), f"d[0:30]={signal}"))
            rows.append(("sim1: first detection at t=11", bool(ev) and ev[0] == 11, f"events={ev}"))
            rows.append(("sim1: second detection at t=22", len(ev) > 1 and ev[1] == 22, f"events={ev}"))
            rows.append(("sim1: runtime < 1 s", elapsed < 1.0, f"{elapsed * 1e3:.1f} ms"))
            res = identify_partial(obs, run, Y, 22) if 22 in ev else None
            ok = res is not None and res.result == (5, 7)
            rows.append(("sim1: t=22 episode identified as 5->7", ok,
                         "" if res is None else f"result={res.result}"))
        else:
            rows.append(("sim2: no detection before t=22", not d[obs.tau0:22].any(), f"d[0:30]={signal}"))
            rows.append(("sim2: detection at t=22", bool(d[22]) and not d[21], f"events={ev}"))
        if out_dir is not None:
            Path(out_dir).mkdir(parents=True, exist_ok=True)
            traj.to_csv(Path(out_dir) / f"{label}_trajectory.csv")
            write_observer_log(Path(out_dir) / f"{label}_observer.csv", Y, run)
    return rows


def cmd_repro_paper(eps=1e-9, out_dir=None, out=None):
    out = out or sys.stdout
    rows = reproduce_benchmark(eps, out_dir)
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name.ljust(width)}  {detail}", file=out)
    failed = sum(not ok for _, ok, _ in rows)
    print(f"{len(rows) - failed}/{len(rows)} checks passed", file=out)
    return (EXIT_OK if not failed else EXIT_CHECK_FAILED), rows


# --- entry point -----------------------------------------------------------


def _vertex_list(text):
    try:
        return [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="edgefdi", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario file with fault injection and monitoring")
    s.add_argument("config")
    s.add_argument("--eps", type=float, help="detection threshold (overrides the scenario)")
    s.add_argument("--mode", choices=("full", "partial"), help="monitoring mode (overrides the scenario)")
    s.add_argument("--out-dir", default=".")

    a = sub.add_parser("audit", help="discernibility of every single-arc loss")
    a.add_argument("graph")
    a.add_argument("--kappa", type=float, required=True)
    a.add_argument("--mode", choices=("full", "partial"), default="full")
    a.add_argument("--observed", type=_vertex_list, help="observed vertices, e.g. '1,2,3'")
    a.add_argument("--out-dir")

    d = sub.add_parser("design-observer", help="dead-beat observer gain for a sensor set")
    d.add_argument("graph")
    d.add_argument("--kappa", type=float, required=True)
    d.add_argument("--observed", type=_vertex_list, required=True)
    d.add_argument("--out-dir")

    r = sub.add_parser("repro-paper", help="rerun the seven-agent benchmark and print a pass/fail table")
    r.add_argument("--eps", type=float, default=1e-9)
    r.add_argument("--out-dir")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cfg = read_config(args.config)
            if args.eps is not None or args.mode is not None:
                cfg = replace(cfg, eps=args.eps if args.eps is not None else cfg.eps,
                              mode=args.mode or cfg.mode)
            code, _ = cmd_simulate(cfg, args.out_dir)
        elif args.command == "audit":
            code, _ = cmd_audit(args.graph, args.kappa, args.mode, args.observed, args.out_dir)
        elif args.command == "design-observer":
            code, _ = cmd_design_observer(args.graph, args.kappa, args.observed, args.out_dir)
        else:
            code, _ = cmd_repro_paper(args.eps, args.out_dir)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
