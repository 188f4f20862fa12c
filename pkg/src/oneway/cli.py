"""Command-line front end: ``oneway <subcommand> ...``.

Every run writes its payload files plus one ``manifest.json`` into
``--out``.  Exit status: 0 success, 1 a verification failed, 2 usage or
input error.  ``ONEWAY_THREADS`` sets the worker count for sweeps.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .entanglement import (
    BRUTE_FORCE,
    EXACT,
    MONTE_CARLO,
    UPPER_BOUND,
    entanglement_width,
    geometric_entanglement,
    vn_entropy,
)
from .stabilizer import GraphFormatError, graph_state, load_graph, path_graph
from .statevec import StateVector, new_plus_state

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def threads() -> int:
    raw = os.environ.get("ONEWAY_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"ONEWAY_THREADS must be an integer, got {raw!r}") from exc
    return max(n, 1)


def parallel_map(fn: Callable, items: Sequence) -> list:
    n = threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


class Run:
    """Collects output files and writes the manifest."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}
        self.start = time.perf_counter()

    def write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)
        self.files[name] = hashlib.sha256(text.encode()).hexdigest()

    def json(self, name: str, obj) -> None:
        self.write(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def csv(self, name: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.write(name, buf.getvalue())

    def finish(self, status: int) -> int:
        params = {k: v for k, v in vars(self.args).items() if k != "func"}
        manifest = {
            "subcommand": " ".join(x for x in (params.get("command"), params.get("action")) if x),
            "params": params,
            "seed": params.get("seed"),
            "version": __version__,
            "threads": threads(),
            "wall_time_s": round(time.perf_counter() - self.start, 6),
            "outputs": self.files,
            "exit_status": status,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
        return status


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args, run: Run) -> int:
    from .compiler import CircuitError, compile_circuit, grid_demo, parse_circuit, verify

    if args.grid:
        rep = grid_demo(args.zeta, args.eta, args.xi, seed=args.seed)
        d = rep.to_dict()
        d["provenance"] = EXACT
        run.json("grid_report.json", d)
        print(f"grid demo: {rep.branches} branches, carve fidelity {rep.carve_fidelity:.12f}, "
              f"min fidelity {rep.min_fidelity:.12f}")
        return EXIT_OK if rep.passed else EXIT_FAIL
    if args.circuit is None:
        raise UsageError("verify needs a circuit file or --grid")
    try:
        c = parse_circuit(Path(args.circuit).read_text())
        p = compile_circuit(c)
    except (OSError, CircuitError) as exc:
        raise UsageError(str(exc)) from exc
    exhaustive = args.trials is None
    if not exhaustive and args.seed is None:
        raise UsageError("sampled verification needs --seed")
    rep = verify(
        c, args.inputs, exhaustive=exhaustive, trials=args.trials or 0,
        seed=args.seed if args.seed is not None else 0, pattern=p,
    )
    d = rep.to_dict()
    d["provenance"] = EXACT if exhaustive else MONTE_CARLO
    run.json("report.json", d)
    run.write("pattern.json", p.to_json() + "\n")
    print(f"{rep.mode}: {rep.branches_verified} branches x {rep.inputs_tested} inputs, "
          f"{rep.pattern_qubits} qubits, {rep.rounds} rounds, min fidelity {rep.min_fidelity:.12f}")
    return EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# growth


def cmd_growth(args, run: Run) -> int:
    from .growth import GrowthParams, simulate, zero_crossing

    if args.points < 1 or not 0 <= args.p_min <= args.p_max <= 1:
        raise UsageError("need 0 <= p-min <= p-max <= 1 and at least one point")
    grid = np.linspace(args.p_min, args.p_max, args.points)
    rows = parallel_map(
        lambda p: simulate(GrowthParams(float(p), args.steps, args.trials, args.seed)), list(grid)
    )
    run.csv(
        "growth.csv",
        ["p", "drift", "ci", "stderr", "analytic", "extinction", "provenance"],
        [[f"{r.p:.6f}", f"{r.drift:.6f}", f"{r.half_width:.6f}", f"{r.stderr:.6f}",
          f"{r.analytic:.6f}", f"{r.extinction:.6f}", MONTE_CARLO] for r in rows],
    )
    for r in rows:
        print(f"p={r.p:.4f} drift={r.drift:+.5f} +- {r.half_width:.5f} (3p-2={r.analytic:+.5f})")
    cross = zero_crossing(rows)
    print("zero crossing:", "none in range" if cross is None else f"{cross:.5f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# aklt


def cmd_aklt_percolate(args, run: Run) -> int:
    from .aklt import percolation_mc

    results = parallel_map(lambda L: percolation_mc(L, args.trials, args.seed), args.L)
    run.csv(
        "percolation.csv",
        ["L", "trials", "spanning_fraction", "ci", "provenance"],
        [[r.L, r.trials, f"{r.fraction:.6f}", f"{r.half_width:.6f}", MONTE_CARLO] for r in results],
    )
    for r in results:
        print(f"L={r.L}: spanning fraction {r.fraction:.4f} +- {r.half_width:.4f}")
    return EXIT_OK


def cmd_aklt_verify(args, run: Run) -> int:
    from .aklt import AXES, build_aklt, check_reduction_consistency, povm_element, sample_povm

    if args.graph:
        try:
            lattice = load_graph(args.graph)
        except (OSError, GraphFormatError) as exc:
            raise UsageError(str(exc)) from exc
    else:
        lattice = path_graph(args.sites)
    if lattice.n > 6:
        raise UsageError("patches are limited to 6 sites")
    rng = np.random.default_rng(args.seed)
    completeness = float(np.abs(
        sum(povm_element(a).conj().T @ povm_element(a) for a in AXES) - np.eye(4)
    ).max())
    base = build_aklt(lattice)
    checks = []
    for _ in range(args.sets):
        # draw outcome sets from the exact POVM statistics so none is forbidden
        o = sample_povm(base, seed=rng).outcome
        rep = check_reduction_consistency(lattice, o)
        checks.append({
            "outcome": "".join(o[s] for s in range(lattice.n)),
            "passed": rep.passed,
            "max_deviation": rep.max_deviation,
            "cuts": rep.cuts_checked,
            "graph_edges": [list(e) for e in rep.graph.sorted_edges()],
            "deleted": rep.deleted,
        })
    ok = completeness < 1e-12 and all(c["passed"] for c in checks)
    run.json("patch_report.json", {
        "sites": lattice.n,
        "povm_completeness_error": completeness,
        "checks": checks,
        "passed": ok,
        "provenance": EXACT,
    })
    print(f"POVM completeness error {completeness:.2e}; "
          f"{sum(c['passed'] for c in checks)}/{len(checks)} outcome sets consistent")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# ent


def load_state(spec: str) -> StateVector:
    """``cluster:N`` | ``ghz:N`` | ``plus:N`` | ``graph:FILE`` | CSV state file."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "cluster":
            return graph_state(path_graph(int(arg)))
        if kind == "ghz":
            n = int(arg)
            amps = np.zeros(1 << n, dtype=complex)
            amps[0] = amps[-1] = 2**-0.5
            return StateVector(amps)
        if kind == "plus":
            return new_plus_state(int(arg))
        if kind == "graph":
            return graph_state(load_graph(arg))
        return StateVector.from_csv(Path(spec).read_text())
    except (ValueError, OSError) as exc:
        raise UsageError(f"cannot load state {spec!r}: {exc}") from exc


def cmd_ent(args, run: Run) -> int:
    state = load_state(args.state)
    n = state.n_qubits
    measures = [m.strip() for m in args.measures.split(",") if m.strip()]
    unknown = set(measures) - {"vn", "ewidth", "ge"}
    if unknown:
        raise UsageError(f"unknown measures {sorted(unknown)}")
    report: dict = {"state": args.state, "qubits": n, "results": []}
    if "vn" in measures and n > 1:
        e = vn_entropy(state, range(0, n, 2))
        report["results"].append({"measure": "vn_odd_even", "value": e, "provenance": EXACT})
        print(f"E(odd:even) = {e:.9f} bits")
    if "ewidth" in measures:
        w = entanglement_width(state)
        report["results"].append({
            "measure": "entanglement_width", "value": w.value,
            "trees": w.trees_examined, "provenance": BRUTE_FORCE,
        })
        print(f"E_wd = {w.value:.9f} bits over {w.trees_examined} trees")
    if "ge" in measures:
        if args.seed is None:
            raise UsageError("geometric entanglement needs --seed")
        g = geometric_entanglement(state, restarts=args.restarts, seed=args.seed)
        row = {"measure": "geometric_entanglement", "value": g.e_g, "provenance": UPPER_BOUND}
        report["results"].append(row)
        if g.bracket is not None:
            report["results"].append({
                "measure": "geometric_entanglement_grid_bracket",
                "value": list(g.bracket), "provenance": BRUTE_FORCE,
            })
        print(f"E_G <= {g.e_g:.9f}" + (f", grid bracket {g.bracket}" if g.bracket else ""))
    run.json("ent_report.json", report)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bell


def cmd_bell(args, run: Run) -> int:
    from .bell import ghz_checks, hvm_exhaustive, mbqc_or, mbqc_or_branches

    if args.action == "ghz":
        rep = ghz_checks()
        for k, v in rep.expectations.items():
            print(f"<{k}> = {v:+.12f}")
        print(f"fidelity(H1 H3 |GHZ>, |phi_3>) = {rep.cluster_fidelity:.12f}")
        run.json("ghz.json", {
            "expectations": rep.expectations, "cluster_fidelity": rep.cluster_fidelity,
            "passed": rep.passed, "provenance": EXACT,
        })
        return EXIT_OK if rep.passed else EXIT_FAIL
    if args.action == "hvm":
        count = hvm_exhaustive()
        print(f"satisfying assignments: {count}")
        run.json("hvm.json", {"satisfying": count, "total": 64, "provenance": EXACT})
        return EXIT_OK if count == 0 else EXIT_FAIL
    a, b = args.a, args.b
    if args.all_branches:
        runs = mbqc_or_branches(a, b)
        ok = all(r.output == (a | b) for r in runs)
        print("s1 s2 s3  o  probability")
        for r in runs:
            print(f" {r.outcomes[0]}  {r.outcomes[1]}  {r.outcomes[2]}  {r.output}  {r.probability:.6f}")
        provenance = EXACT
    else:
        if args.seed is None:
            raise UsageError("sampled OR runs need --seed (or use --all-branches)")
        runs = [mbqc_or(a, b, seed=args.seed)]
        ok = runs[0].output == (a | b)
        print(f"o = {runs[0].output}  (outcomes {runs[0].outcomes})")
        provenance = MONTE_CARLO
    run.json("or.json", {
        "a": a, "b": b, "bases": list(runs[0].bases),
        "branches": [{"outcomes": list(r.outcomes), "o": r.output, "probability": r.probability} for r in runs],
        "passed": ok, "provenance": provenance,
    })
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# pattern


def cmd_pattern(args, run: Run) -> int:
    from .compiler import CircuitError, compile_circuit, parse_circuit
    from .pattern import (
        MeasurementPattern,
        PatternError,
        branch_fidelities,
        cnot_pattern,
        rotation_pattern,
        temporal_rounds,
    )
    from .statevec import random_state

    if args.action == "export":
        if args.kind == "rotation":
            if args.angles is None:
                raise UsageError("rotation export needs --angles ZETA ETA XI")
            p = rotation_pattern(*args.angles)
        elif args.kind == "cnot":
            p = cnot_pattern()
        else:
            if not args.circuit:
                raise UsageError("circuit export needs --circuit FILE")
            try:
                p = compile_circuit(parse_circuit(Path(args.circuit).read_text()))
            except (OSError, CircuitError) as exc:
                raise UsageError(str(exc)) from exc
        run.write("pattern.json", p.to_json() + "\n")
        rounds = temporal_rounds(p)
        print(f"{p.name}: {len(p.qubits)} qubits, {len(p.edges)} edges, {len(rounds)} rounds")
        return EXIT_OK
    try:
        p = MeasurementPattern.from_json(Path(args.file).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load pattern: {exc}") from exc
    if len(p.measurements) > 16:
        raise UsageError("branch-exhaustive check is limited to 16 measured qubits")
    rng = np.random.default_rng(args.seed)
    inputs = np.stack([random_state(p.width, rng).amplitudes for _ in range(args.inputs)], axis=1)
    worst, count = 1.0, 0
    for _, fid in branch_fidelities(p, inputs):
        worst = min(worst, float(fid.min()))
        count += 1
    ok = worst >= 1 - 1e-10
    run.json("check.json", {"branches": count, "min_fidelity": worst, "passed": ok, "provenance": EXACT})
    print(f"{count} branches, min fidelity {worst:.12f}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oneway", description="One-way quantum computation toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--out", default="oneway-out", help="output directory (default: oneway-out)")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="compile a circuit and verify it against the circuit model")
    v.add_argument("circuit", nargs="?", help="circuit file: ROT q zeta eta xi | CNOT c t | H q")
    mode = v.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", help="every outcome branch (default)")
    mode.add_argument("--trials", type=int, help="sample this many (input, branch) pairs")
    v.add_argument("--seed", type=int, help="seed for random inputs and sampling")
    v.add_argument("--inputs", type=int, default=4, help="random inputs besides |+...+> (default 4)")
    v.add_argument("--grid", action="store_true", help="run Rot(0)+CNOT(0,1) carved from a 3x6 cluster")
    v.add_argument("--zeta", type=float, default=0.3)
    v.add_argument("--eta", type=float, default=0.7)
    v.add_argument("--xi", type=float, default=-0.4)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("growth", help="heralded cluster growth Monte Carlo")
    gs = g.add_subparsers(dest="action", required=True)
    scan = gs.add_parser("scan", help="drift over a grid of success probabilities")
    scan.add_argument("--p-min", type=float, required=True)
    scan.add_argument("--p-max", type=float, required=True)
    scan.add_argument("--points", type=int, required=True)
    scan.add_argument("--trials", type=int, default=100_000)
    scan.add_argument("--steps", type=int, default=20)
    scan.add_argument("--seed", type=int, required=True)
    scan.set_defaults(func=cmd_growth)

    a = sub.add_parser("aklt", help="AKLT states: percolation and patch checks")
    acts = a.add_subparsers(dest="action", required=True)
    perc = acts.add_parser("percolate", help="spanning fraction on L x L brick walls")
    perc.add_argument("--L", type=int, nargs="+", required=True)
    perc.add_argument("--trials", type=int, default=1000)
    perc.add_argument("--seed", type=int, required=True)
    perc.set_defaults(func=cmd_aklt_percolate)
    vp = acts.add_parser("verify-patch", help="entropy check of POVM reduction on a small patch")
    vp.add_argument("--sites", type=int, default=4, help="path patch size (ignored with --graph)")
    vp.add_argument("--graph", help="edge-list file for the patch")
    vp.add_argument("--sets", type=int, default=50, help="number of sampled outcome sets")
    vp.add_argument("--seed", type=int, required=True)
    vp.set_defaults(func=cmd_aklt_verify)

    e = sub.add_parser("ent", help="entanglement measures")
    es = e.add_subparsers(dest="action", required=True)
    rep = es.add_parser("report", help="entropy, entanglement width, geometric entanglement")
    rep.add_argument("--state", required=True, help="cluster:N | ghz:N | plus:N | graph:FILE | CSV file")
    rep.add_argument("--measures", default="vn,ewidth")
    rep.add_argument("--restarts", type=int, default=8)
    rep.add_argument("--seed", type=int)
    rep.set_defaults(func=cmd_ent)

    b = sub.add_parser("bell", help="GHZ correlations and the measurement OR gate")
    bs = b.add_subparsers(dest="action", required=True)
    bs.add_parser("ghz", help="stabilizer expectations of |GHZ>").set_defaults(func=cmd_bell)
    bs.add_parser("hvm", help="count consistent hidden-variable assignments").set_defaults(func=cmd_bell)
    orp = bs.add_parser("or", help="OR gate from GHZ measurements")
    orp.add_argument("--a", type=int, choices=(0, 1), required=True)
    orp.add_argument("--b", type=int, choices=(0, 1), required=True)
    orp.add_argument("--all-branches", action="store_true")
    orp.add_argument("--seed", type=int)
    orp.set_defaults(func=cmd_bell)

    p = sub.add_parser("pattern", help="export or check measurement patterns")
    ps = p.add_subparsers(dest="action", required=True)
    ex = ps.add_parser("export", help="write a pattern as JSON")
    ex.add_argument("kind", choices=("rotation", "cnot", "circuit"))
    ex.add_argument("--angles", type=float, nargs=3, metavar=("ZETA", "ETA", "XI"))
    ex.add_argument("--circuit")
    ex.set_defaults(func=cmd_pattern)
    ck = ps.add_parser("check", help="verify a pattern JSON against its reference unitary")
    ck.add_argument("file")
    ck.add_argument("--inputs", type=int, default=4)
    ck.add_argument("--seed", type=int, required=True)
    ck.set_defaults(func=cmd_pattern)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        threads()
        run = Run(args)
        status = args.func(args, run)
    except UsageError as exc:
        print(f"oneway: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run.finish(status)


if __name__ == "__main__":
    sys.exit(main())
