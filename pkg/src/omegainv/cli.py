"""Command-line entry point ``omegainv``.

Exit codes: 0 success, 1 error (including an uncertified set), 2 empty
synthesis result, 64 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import complexity as cx
from . import controller as ctl
from . import synthesis as syn
from .fileio import (ProblemFormatError, builtin_problem, dump_json, hybrid_from_dict,
                     hybrid_to_dict, load_json, parse_problem)
from .product import HybridSet, SynthesisImpossibleError, build_product

EXIT_OK, EXIT_ERROR, EXIT_EMPTY, EXIT_USAGE = 0, 1, 2, 64

logger = logging.getLogger("omegainv")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _problem_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    builtin = builtin_problem(name)
    if builtin.exists():
        return builtin
    raise ProblemFormatError(name, "no such file or built-in problem")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", default="running_example",
                        help="problem JSON file or built-in name (default: running_example)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--plot-data", action="store_true",
                        help="also write 2D vertex loops of every slice member")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="omegainv", description="Controlled invariant sets for omega-regular properties.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("check", parents=[common], help="assumption report")

    p = sub.add_parser("synth-max", parents=[common], help="maximal HCI iteration")
    p.add_argument("--max-iter", type=int, default=None)

    p = sub.add_parser("synth-contract", parents=[common], help="contraction-based approximation")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--nprime", type=int, default=None, help="LP-vertex constants with this n'")
    g.add_argument("--closed-form", action="store_true", help="closed-form constants (n' = n)")
    g.add_argument("--lp", action="store_true", help="LP-vertex constants (default)")

    p = sub.add_parser("synth-expand", parents=[common], help="expansion-based approximation")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)

    p = sub.add_parser("certify", parents=[common], help="check a stored set is an HCI set")
    p.add_argument("set_file")

    p = sub.add_parser("simulate", parents=[common], help="closed-loop simulations")
    p.add_argument("--set", required=True, dest="set_file")
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("complexity", parents=[common], help="worst-case space bound")
    p.add_argument("--i", type=int, required=True, dest="iteration")
    p.add_argument("--report", default=None, help="synthesis report for the growth table")
    return ap


def _load_set(path) -> HybridSet:
    d = load_json(path)
    return hybrid_from_dict(d["result"] if "result" in d else d, "result" if "result" in d else "set")


def _plot_data(H: HybridSet) -> dict:
    out = []
    for (q, qp), C in H.items():
        loops = []
        for P in C.members:
            V = P.vertices()
            if V.shape[1] >= 2 and len(V):
                V2 = V[:, :2]
                c = V2.mean(axis=0)
                order = np.argsort(np.arctan2(V2[:, 1] - c[1], V2[:, 0] - c[0]))
                loops.append(V2[order].tolist())
        out.append({"q": q, "qp": qp, "loops": loops})
    return {"slices": out}


def _default(prob, key, value, fallback):
    return value if value is not None else prob.defaults.get(key, fallback)


def _write_report(args, report, out: Path) -> int:
    name = f"{report.scheme}"
    dump_json(report.to_dict(timing=False), out / f"report_{name}.json")
    dump_json(hybrid_to_dict(report.result), out / f"set_{name}.json")
    if args.plot_data:
        dump_json(_plot_data(report.result), out / f"plot_{name}.json")
    print(f"{name}: {report.terminated} after {report.iterations} iterations, "
          f"{report.numh} hyperplanes, certified={report.certified}, {report.elapsed:.2f} s")
    if report.result.is_empty():
        return EXIT_EMPTY
    return EXIT_OK


def run_command(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        prob = parse_problem(_problem_path(args.problem))
        if args.command == "check":
            rep = prob.assumptions
            dump_json(rep.to_dict(), out / "assumptions.json")
            for c in rep.checks:
                print(f"{c.name}: {'pass' if c.passed else 'FAIL'}")
            return EXIT_OK if rep.passed else EXIT_ERROR
        prod = build_product(prob.system, prob.automaton, prob.labeling)
        if args.command == "synth-max":
            r = syn.maximal_hci(prod, _default(prob, "max_iter", args.max_iter, 200))
            return _write_report(args, r, out)
        if args.command == "synth-contract":
            gamma = _default(prob, "gamma", args.gamma, 0.01)
            if args.closed_form:
                consts = syn.contraction_constants(prod.sys.A, prod.sys.B, "closed_form")
            else:
                k = args.nprime if args.nprime is not None else prob.defaults.get("n_prime")
                consts = syn.contraction_constants(prod.sys.A, prod.sys.B, "lp_vertex", k)
            r = syn.synth_contraction(prod, gamma, consts,
                                      _default(prob, "max_iter", args.max_iter, 200))
            return _write_report(args, r, out)
        if args.command == "synth-expand":
            r = syn.synth_expansion(prod, _default(prob, "eps", args.eps, 0.1),
                                    _default(prob, "max_iter", args.max_iter, 200))
            return _write_report(args, r, out)
        if args.command == "certify":
            H = _load_set(args.set_file)
            cert = syn.certify_hci(prod, H)
            dump_json({"certified": cert.certified,
                       "slice": None if cert.key is None else list(cert.key),
                       "witness": None if cert.point is None else cert.point.tolist(),
                       "reason": cert.reason}, out / "certificate.json")
            print(f"certified={cert.certified}" + (f" ({cert.reason} at {cert.key})" if not cert else ""))
            return EXIT_OK if cert else EXIT_ERROR
        if args.command == "simulate":
            return _simulate(args, prob, prod, out)
        if args.command == "complexity":
            inp = cx.complexity_inputs(prod, args.iteration)
            try:
                bound = cx.worst_case(inp)
                g = cx.g_bound(inp.n, inp.p_prime, inp.p_U, inp.i)
            except cx.UnsupportedDimensionError as exc:
                bound, g = None, None
                print(f"note: {exc}")
            dump_json({"inputs": inp.to_dict(), "g_bound": g, "bound_num": cx.bound_num(inp),
                       "worst_case": None if bound is None else str(bound)},
                      out / "complexity.json")
            print(f"worst case at i={inp.i}: {bound}")
            if args.report:
                rep = load_json(args.report)
                rows = cx.empirical_growth(_StatsView(rep), inp)
                cx.write_growth_csv(rows, out / "growth.csv")
            return EXIT_OK
    except SynthesisImpossibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (ProblemFormatError, ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_USAGE


class _StatsView:
    """Minimal report view rebuilt from a report JSON."""

    def __init__(self, d):
        self.stats = [syn.IterationStats(it["iteration"],
                                         {(s["q"], s["qp"]): (s["num"], s["larg"]) for s in it["slices"]})
                      for it in d.get("per_iteration", [])]


def _initial_points(prod, H: HybridSet, runs: int, rng) -> list:
    q0 = prod.aut.initial
    keys = [k for k in H.keys() if k[0] == q0]
    if not keys:
        raise ValueError("invariant set has no slice at the initial automaton state")
    X0 = prod.sys.X0
    points = []
    for _ in range(1000 * runs):
        key = keys[rng.integers(len(keys))]
        x = ctl.sample_collection(H[key], rng)
        hs = ctl.initial_state(prod, x)
        if hs.key == key and (X0 is None or X0.contains(x)):
            points.append(x)
            if len(points) == runs:
                return points
    raise ValueError("could not sample initial states consistent with the labeling")


def _simulate(args, prob, prod, out: Path) -> int:
    H = _load_set(args.set_file)
    steps = _default(prob, "steps", args.steps, 30)
    runs = _default(prob, "runs", args.runs, 10)
    seed = _default(prob, "seed", args.seed, 0)
    ctrl = ctl.HciController(prod, H)
    rng = np.random.default_rng(seed)
    x0s = _initial_points(prod, H, runs, rng)

    def one(r):
        tr = ctl.simulate(ctrl, x0s[r], steps, seed + 1 + r)
        return tr, ctl.monitor(tr, prod)

    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(one, range(runs)))
    summary = []
    for r, (tr, verdict) in enumerate(results):
        tr.to_csv(out / f"trace_{r}.csv")
        summary.append({"run": r, "seed": seed + 1 + r, "verdict": str(verdict),
                        "in_inv": all(tr.in_inv)})
        print(f"run {r}: {verdict}")
    dump_json({"steps": steps, "runs": summary}, out / "simulation.json")
    logger.info("simulated %d runs in %.2f s", runs, time.perf_counter() - t0)
    return EXIT_OK if all(v for _, v in results) else EXIT_ERROR


def main(argv=None):
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
