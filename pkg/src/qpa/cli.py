"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 I/O error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import circuit_oracle, ensemble_mc, noise_models, qpa_map, verify
from .errors import DomainError, NumericError
from .quantum_core import BellDiagonal, bell_diagonal_to_density, chsh_max

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4
STRICT_SUM_TOL = 1e-9
RENORMALIZE_TOL = 1e-6


class InputError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _round_floats(obj):
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def parse_state(text: str) -> BellDiagonal:
    """Parse 'A,B,C,D'; sums off by at most 1e-6 are renormalised."""
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"cannot parse state {text!r}") from None
    if len(vals) != 4:
        raise InputError(f"state needs four comma-separated weights, got {len(vals)}")
    if any(not math.isfinite(v) or v < 0 for v in vals):
        raise InputError(f"state weights must be finite and non-negative: {text!r}")
    total = sum(vals)
    err = abs(total - 1.0)
    if err > RENORMALIZE_TOL:
        raise InputError(f"state weights sum to {total:.12g}, not 1")
    if err > STRICT_SUM_TOL:
        print(f"warning: state weights sum to {total:.12g}; renormalising", file=sys.stderr)
    return BellDiagonal.from_array(np.array(vals) / total)


def parse_grid(text: str) -> list[float]:
    """Parse 'lo:hi:step' into an inclusive grid."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise InputError(f"grid must be lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise InputError(f"bad grid {text!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(_round_floats(obj), indent=2) + "\n"


def _kv(pairs) -> str:
    return "\n".join(f"{k}={fmt(v) if not isinstance(v, str) else v}" for k, v in pairs) + "\n"


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc}") from exc


def _state_fields(bd):
    return list(zip(("A", "B", "C", "D"), bd))


def cmd_step(args):
    bd = parse_state(args.state)
    out = qpa_map.step_mixed(bd, parse_state(args.other)) if args.other else qpa_map.step_identical(bd)
    rec = {"state": list(out.state), "success_prob": out.success_prob}
    if args.format == "json":
        return _json(rec)
    if args.format == "csv":
        return _csv(["a", "b", "c", "d", "success_prob"], [list(out.state) + [out.success_prob]])
    return _kv(_state_fields(out.state) + [("N", out.success_prob)])


def cmd_fig1(args):
    grid = parse_grid(args.grid)
    rounds = args.rounds if args.rounds is not None else 15
    rows = qpa_map.sweep_fig1(grid, rounds)
    flagged = sorted({r.initial_fidelity for r in rows if r.below_threshold})
    if flagged:
        print(f"warning: initial fidelities {flagged} are not above 1/2", file=sys.stderr)
    if args.format == "json":
        return _json([r._asdict() for r in rows])
    return _csv(["initial_fidelity", "iteration", "fidelity"],
                [(r.initial_fidelity, r.iteration, r.fidelity) for r in rows])


def cmd_fig2(args):
    grid = parse_grid(args.grid)
    rounds = args.rounds if args.rounds is not None else 10
    rows = qpa_map.sweep_fig2(grid, rounds)
    if args.format == "json":
        return _json([r._asdict() for r in rows])
    return _csv(["initial_fidelity", "yield_fraction", f"yield_units_2pow{rounds}"], rows)


def cmd_verify(args):
    if not 0 < args.tol < 1:
        raise InputError("--tol must lie in (0, 1)")
    report = verify.run_all(samples=args.samples, oracle_samples=args.oracle_samples, seed=args.seed,
                            fid_tol=args.tol)
    for name in report["failed"]:
        print(f"FAILED suite: {name}", file=sys.stderr)
    return _json(report), (EXIT_OK if report["passed"] else EXIT_FAILED)


def cmd_mc(args):
    bd = parse_state(args.state)
    if args.l < 2:
        raise InputError("--l must be at least 2")
    rounds = args.rounds if args.rounds is not None else 10
    rep = ensemble_mc.mc_run(bd, args.l, rounds, args.seed)
    if args.format == "json":
        return _json(rep.to_dict())
    rows = []
    for k in range(rep.rounds_completed):
        rows.append((k + 1, rep.yield_curve[k + 1], rep.couples[k], rep.empirical_success_rates[k],
                     rep.analytic_success_probs[k], rep.yield_curve[k + 1] / rep.l,
                     rep.analytic_yield[k]))
    return _csv(["round", "survivors", "couples", "empirical_success_rate", "analytic_success_prob",
                 "survivor_fraction", "analytic_yield_fraction"], rows)


def cmd_eve(args):
    bd = parse_state(args.state)
    before, after, prob = circuit_oracle.eve_step_entropy(bd)
    unit = "bits" if args.bits else "nats"
    if args.bits:
        before, after = before / math.log(2), after / math.log(2)
    rec = {"entropy_before": before, "entropy_after": after, "success_prob": prob, "unit": unit}
    if args.format == "json":
        return _json(rec)
    return _kv(list(rec.items()))


def cmd_noise(args):
    bd = parse_state(args.state)
    spec = noise_models.NoiseSpec(args.kind, args.strength, args.placement, args.sides)
    rounds = args.rounds if args.rounds is not None else 50
    traj = noise_models.noisy_iterate(bd, spec, rounds)
    if args.format == "json":
        return _json({
            "initial": list(bd),
            "spec": vars(spec),
            "fidelities": traj.fidelities,
            "success_probs": [p.success_prob for p in traj.points],
            "plateau": traj.plateau,
            "purifying": traj.purifying,
        })
    print(f"plateau={fmt(traj.plateau)} purifying={fmt(traj.purifying)}", file=sys.stderr)
    rows = [(k + 1, p.state.a, p.success_prob) for k, p in enumerate(traj.points)]
    return _csv(["round", "fidelity", "success_prob"], rows)


def cmd_purifiable(args):
    bd = parse_state(args.state)
    verdict = qpa_map.is_purifiable(bd)
    canon, tag = qpa_map.canonicalize(bd)
    word = "indeterminate" if verdict is None else fmt(verdict)
    if args.format == "json":
        return _json({"purifiable": verdict, "canonical": list(canon), "relabeling": tag})
    return _kv([("purifiable", word), ("relabeling", tag)])


def cmd_witness(args):
    bd = qpa_map.find_cond_no_chsh(args.seed)
    chsh = chsh_max(bell_diagonal_to_density(bd))
    rec = {"state": list(bd), "max_weight": bd.max(), "chsh_max": chsh,
           "purifiable": qpa_map.is_purifiable(bd)}
    if args.format == "json":
        return _json(rec)
    return _kv(_state_fields(bd) + [("max_weight", bd.max()), ("chsh_max", chsh),
                                   ("purifiable", rec["purifiable"])])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qpa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help, formats=("text", "csv", "json"), default="text"):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=formats, default=default)
        return sp

    sp = add("step", cmd_step, "one round of the analytic map")
    sp.add_argument("--state", required=True, help="A,B,C,D")
    sp.add_argument("--other", help="target-pair weights A,B,C,D (default: same as --state)")

    sp = add("fig1", cmd_fig1, "fidelity vs iteration for Werner inputs", ("csv", "json"), "csv")
    sp.add_argument("--grid", default="0.55:0.95:0.05", help="lo:hi:step of initial fidelities")
    sp.add_argument("--rounds", "--iters", dest="rounds", type=int, help="iterations (default 15)")

    sp = add("fig2", cmd_fig2, "yield after k rounds for Werner inputs", ("csv", "json"), "csv")
    sp.add_argument("--grid", default="0.25:1:0.025", help="lo:hi:step of initial fidelities")
    sp.add_argument("--rounds", type=int, help="rounds (default 10)")

    sp = add("verify", cmd_verify, "run the self-check suites", ("json",), "json")
    sp.add_argument("--samples", type=int, default=10_000, help="points per random scan")
    sp.add_argument("--oracle-samples", type=int, default=100)
    sp.add_argument("--tol", type=float, default=qpa_map.DEFAULT_FID_TOL,
                    help="convergence tolerance on 1 - A (default 1e-6)")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("mc", cmd_mc, "finite-ensemble Monte Carlo", ("csv", "json"), "csv")
    sp.add_argument("--state", required=True)
    sp.add_argument("--l", type=int, default=2**10 * 64, help="initial number of pairs")
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("eve", cmd_eve, "pair-environment entropy before/after one round")
    sp.add_argument("--state", required=True)
    sp.add_argument("--bits", action="store_true", help="report entropies in bits")

    sp = add("noise", cmd_noise, "iterate with imperfect local operations", ("csv", "json"), "csv")
    sp.add_argument("--state", required=True)
    sp.add_argument("--kind", choices=noise_models.KINDS, default="depolarizing")
    sp.add_argument("--strength", type=float, default=0.01)
    sp.add_argument("--placement", choices=noise_models.PLACEMENTS, default="before-step")
    sp.add_argument("--sides", choices=noise_models.SIDES, default="both")
    sp.add_argument("--rounds", type=int)

    sp = add("purifiable", cmd_purifiable, "check the purifiability condition")
    sp.add_argument("--state", required=True)

    sp = add("witness", cmd_witness, "purifiable state that satisfies CHSH")
    sp.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    for name in ("rounds", "samples", "oracle_samples"):
        val = getattr(args, name, None)
        if val is not None and val < 1:
            print(f"error: --{name.replace('_', '-')} must be >= 1", file=sys.stderr)
            return EXIT_INPUT
    try:
        result = args.func(args)
        text, code = result if isinstance(result, tuple) else (result, EXIT_OK)
        _emit(text, args.out)
        return code
    except (InputError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
