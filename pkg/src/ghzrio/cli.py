"""Command-line front end.

    ghzrio run --family controlled1q --variant 1 --x 2 --outcomes all --json
    ghzrio verify-catalog [--strict-index]
    ghzrio sweep --family controlled-nq --n-qubits 2 --controllers 1 --all-x --trials 3 --seed 7
    ghzrio audit --report report.json

Exit codes: 0 success, 1 contract failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .protocol import (
    COMBINED_1Q,
    CONTROLLED_1Q,
    CONTROLLED_NQ,
    FAMILIES,
    FIDELITY_TOL,
    OpSpec,
    ProtocolConfig,
    audit_bits,
    config_from_dict,
    config_to_dict,
    run_all,
)
from .protocol.audit import load_messages
from .recovery2 import verify_catalog
from .restricted import set_count

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# ------------------------------------------------------------------ parsing

def _numbers(text: str) -> list[float]:
    if text.startswith("@"):
        try:
            with open(text[1:]) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read phases file: {exc}") from None
    parts = [p for p in re.split(r"[,;\s]+", text.strip()) if p]
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"phases must be numbers, got {text!r}") from None


def parse_phases(text: str, form: str, N: int) -> tuple[complex, ...]:
    vals = _numbers(text)
    if form == "complex":
        if len(vals) % 2:
            raise UsageError("complex phases need re,im pairs")
        out = tuple(complex(vals[i], vals[i + 1]) for i in range(0, len(vals), 2))
    else:
        out = tuple(np.exp(1j * np.array(vals)))
    if len(out) != 2**N:
        raise UsageError(f"expected {2**N} phases for N={N}, got {len(out)}")
    return out


def parse_state(text: str) -> tuple[Optional[tuple[complex, ...]], Optional[int]]:
    """'seed:N' -> (None, N); 'a,b,...' -> (amplitudes, None)."""
    if text.startswith("seed:"):
        try:
            return None, int(text[5:])
        except ValueError:
            raise UsageError(f"bad state seed {text!r}") from None
    try:
        return tuple(complex(p.replace(" ", "")) for p in text.split(",") if p.strip()), None
    except ValueError:
        raise UsageError(f"bad amplitudes {text!r}") from None


def parse_outcomes(text: str) -> tuple[str, tuple[int, ...], int]:
    if text == "all":
        return "all", (), 0
    if text.startswith("bits:"):
        bits = text[5:]
        if not bits or set(bits) - {"0", "1"}:
            raise UsageError(f"bits must be a 0/1 string, got {bits!r}")
        return "fixed", tuple(int(b) for b in bits), 0
    if text.startswith("seed:"):
        try:
            return "sample", (), int(text[5:])
        except ValueError:
            pass
    raise UsageError(f"--outcomes must be all, bits:<0101..> or seed:<int>; got {text!r}")


def default_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("RIO_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"RIO_SEED must be an integer, got {env!r}") from None


def _controllers(args) -> int:
    if args.controllers is not None:
        return args.controllers
    return 1 if args.family == CONTROLLED_1Q else 0


def _n_qubits(args) -> int:
    if args.family in (CONTROLLED_1Q, COMBINED_1Q):
        return 1
    return args.n_qubits


def config_from_args(args, seed: int) -> ProtocolConfig:
    N = _n_qubits(args)
    rng = np.random.default_rng(seed)
    combined = args.family not in (CONTROLLED_1Q, CONTROLLED_NQ)

    def op(x, text):
        if text is None:
            return OpSpec.random(x, N, rng)
        return OpSpec(x, parse_phases(text, args.phase_form, N))

    try:
        first = op(args.x, args.phases)
        second = op(args.y if args.y is not None else 1, args.phases2) if combined else None
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not combined and (args.y is not None or args.phases2 is not None):
        raise UsageError(f"{args.family} takes a single operator; drop --y/--phases2")
    amps, state_seed = (None, seed) if args.state is None else parse_state(args.state)
    mode, bits, sample_seed = parse_outcomes(args.outcomes)
    roles = tuple(args.roles.split(",")) if args.roles else None
    try:
        return ProtocolConfig(
            family=args.family,
            op=first,
            op2=second,
            N=N,
            n=_controllers(args),
            variant=args.variant,
            outcome_mode=mode,
            fixed_bits=bits,
            sample_seed=sample_seed,
            unknown_state=amps,
            state_seed=state_seed if state_seed is not None else seed,
            roles=roles,
            placement=args.placement,
            skip_startup=args.skip_startup,
            withhold_password=args.withhold_password,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# ------------------------------------------------------------------ reports

def build_report(cfg: ProtocolConfig, results, wall: Optional[float] = None) -> dict:
    fids = [r.fidelity for r in results]
    audits = [audit_bits(r.transcript, cfg) for r in results]
    audit_ok = all(a.passed for a in audits)
    doc = {
        "tool": "ghzrio",
        "version": __version__,
        "config": config_to_dict(cfg),
        "branches": [r.to_dict() for r in results],
        "aggregate": {
            "branches": len(results),
            "min_fidelity": min(fids),
            "mean_fidelity": float(np.mean(fids)),
            "probability_sum": float(sum(r.branch_probability for r in results)),
            "substituted_branches": sum(1 for r in results if r.substitutions),
        },
        "audit": {
            "passed": audit_ok,
            "failures": sorted({f for a in audits for f in a.failures}),
            "widths": list(audits[0].widths) if audits else [],
        },
        "passed": audit_ok and min(fids) >= 1 - FIDELITY_TOL,
    }
    if wall is not None:
        doc["wall_time"] = wall
    return doc


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True)


def _summary(doc: dict) -> str:
    agg = doc["aggregate"]
    lines = [
        f"{doc['config']['family']}  N={doc['config']['N']}  n={doc['config']['n']}  "
        f"variant={doc['config']['variant']}",
        f"branches: {agg['branches']}  min fidelity: {agg['min_fidelity']:.12f}  "
        f"probability sum: {agg['probability_sum']:.12f}",
        f"message widths: {tuple(doc['audit']['widths'])}  audit: "
        + ("pass" if doc["audit"]["passed"] else "FAIL " + "; ".join(doc["audit"]["failures"])),
    ]
    if agg["substituted_branches"]:
        lines.append(f"derived placement used on {agg['substituted_branches']} branch(es)")
    lines.append("PASS" if doc["passed"] else "FAIL")
    return "\n".join(lines)


# ------------------------------------------------------------------ commands

def cmd_run(args) -> int:
    cfg = config_from_args(args, default_seed(args.seed))
    t0 = time.perf_counter()
    try:
        results = run_all(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    wall = time.perf_counter() - t0 if args.timing else None
    doc = build_report(cfg, results, wall)
    print(_dump(doc) if args.json else _summary(doc))
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def cmd_verify_catalog(args) -> int:
    rep = verify_catalog()
    doc = rep.to_dict()
    doc["strict_index"] = bool(args.strict_index)
    ok = rep.passed and (rep.identity_order or not args.strict_index)
    doc["passed"] = ok
    print(_dump(doc))
    return EXIT_OK if ok else EXIT_FAIL


SWEEP_FIELDS = (
    "family", "N", "n", "variant", "x", "y", "trial", "branch",
    "outcomes", "branch_probability", "fidelity", "substituted", "pass",
)


def _sweep_job(job: dict) -> list[dict]:
    cfg = config_from_dict(job["config"])
    rows = []
    for k, r in enumerate(run_all(cfg)):
        rows.append({
            "family": cfg.family,
            "N": cfg.N,
            "n": cfg.n,
            "variant": cfg.variant if cfg.controlled else "",
            "x": cfg.op.x,
            "y": cfg.op2.x if cfg.op2 is not None else "",
            "trial": job["trial"],
            "branch": k,
            "outcomes": "".join(str(b) for b in r.outcomes.values()),
            "branch_probability": repr(r.branch_probability),
            "fidelity": repr(r.fidelity),
            "substituted": int(bool(r.substitutions)),
            "pass": int(r.ok),
        })
    return rows


def _sweep_indices(args, seed: int, combined: bool, N: int) -> list[tuple[int, Optional[int]]]:
    count = set_count(N)
    if args.all_x:
        if N > 2:
            raise UsageError("--all-x is limited to N <= 2; use --sample-x")
        xs = range(1, count + 1)
        return [(x, y) for x in xs for y in xs] if combined else [(x, None) for x in xs]
    if args.sample_x:
        rng = np.random.default_rng([seed, 0x5EED])
        picked: list[tuple[int, Optional[int]]] = []
        seen = set()
        limit = count * count if combined else count
        if args.sample_x > limit:
            raise UsageError(f"cannot sample {args.sample_x} distinct indices from {limit}")
        while len(picked) < args.sample_x:
            x = int(rng.integers(1, count + 1))
            y = int(rng.integers(1, count + 1)) if combined else None
            if (x, y) not in seen:
                seen.add((x, y))
                picked.append((x, y))
        return picked
    return [(args.x, (args.y or 1) if combined else None)]


def cmd_sweep(args) -> int:
    seed = default_seed(args.seed)
    combined = args.family not in (CONTROLLED_1Q, CONTROLLED_NQ)
    N = _n_qubits(args)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    base = config_from_args(args, seed)
    if base.outcome_mode != "all":
        raise UsageError("sweeps enumerate every branch; use --outcomes all")
    jobs = []
    for x, y in _sweep_indices(args, seed, combined, N):
        for trial in range(args.trials):
            rng = np.random.default_rng([seed, trial, x, y or 0])
            op = OpSpec.random(x, N, rng)
            op2 = OpSpec.random(y, N, rng) if combined else None
            cfg = base.with_(op=op, op2=op2, state_seed=int(rng.integers(2**31)), unknown_state=None)
            jobs.append({"config": config_to_dict(cfg), "trial": trial})
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            chunks = list(pool.map(_sweep_job, jobs))  # map keeps job order
    else:
        chunks = [_sweep_job(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    ok = all(r["pass"] for r in rows)
    if args.format == "json":
        print(_dump({"rows": rows, "passed": ok}))
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())
    print(f"{len(rows)} rows, {'all pass' if ok else 'FAILURES'}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_audit(args) -> int:
    if args.report:
        try:
            with open(args.report) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise UsageError(f"report not found: {args.report}") from None
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read report: {exc}") from None
        try:
            cfg = config_from_dict(doc["config"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"report has no usable config echo: {exc}") from None
        branches = doc.get("branches") or []
        transcripts = [b.get("messages", []) for b in branches] or [load_messages(args.report)[0]]
    else:
        cfg = config_from_args(args, default_seed(args.seed))
        transcripts = [r.transcript for r in run_all(cfg)]
    reports = [audit_bits(t, cfg) for t in transcripts]
    first_bad = next((r for r in reports if not r.passed), reports[0])
    print(first_bad.table())
    ok = all(r.passed for r in reports)
    if len(reports) > 1:
        print(f"{sum(r.passed for r in reports)}/{len(reports)} branch transcripts pass")
    return EXIT_OK if ok else EXIT_FAIL


# ------------------------------------------------------------------ parser

def _protocol_flags(p: argparse.ArgumentParser, family_required: bool = True):
    p.add_argument("--family", choices=FAMILIES, required=family_required)
    p.add_argument("--n-qubits", type=int, default=1, help="N (1..4); forced to 1 for the 1q families")
    p.add_argument("--controllers", type=int, default=None, help="n, number of controllers (controlled-nq)")
    p.add_argument("--variant", type=int, default=1, help="password routing variant 1..4")
    p.add_argument("--x", type=int, default=1, help="first set index (1-based; for 1q families d = x-1)")
    p.add_argument("--y", type=int, default=None, help="second set index (combined families)")
    p.add_argument("--phases", default=None, help="phases of the first operator, inline or @file")
    p.add_argument("--phases2", default=None, help="phases of the second operator, inline or @file")
    p.add_argument("--phase-form", choices=("angle", "complex"), default="angle",
                   help="angle: t_m = exp(i*phi_m); complex: re,im pairs")
    p.add_argument("--state", default=None, help="seed:<int> or comma-separated amplitudes")
    p.add_argument("--outcomes", default="all", help="all | bits:<0101..> | seed:<int>")
    p.add_argument("--roles", default=None, help="comma-separated party names for the 1q families")
    p.add_argument("--placement", choices=("fallback", "literal", "derived"), default="fallback")
    p.add_argument("--skip-startup", action="store_true", help="negative control: controller stays idle")
    p.add_argument("--withhold-password", action="store_true", help="negative control: no password message")
    p.add_argument("--seed", type=int, default=None, help="default seed (falls back to RIO_SEED, then 0)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ghzrio", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"ghzrio {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one configuration")
    _protocol_flags(run)
    run.add_argument("--json", action="store_true", help="emit the full JSON report")
    run.add_argument("--timing", action="store_true", help="include wall time (breaks byte-identity)")
    run.set_defaults(func=cmd_run)

    cat = sub.add_parser("verify-catalog", help="check the two-qubit gate catalog")
    cat.add_argument("--strict-index", action="store_true", help="also require identical indexing")
    cat.set_defaults(func=cmd_verify_catalog)

    sw = sub.add_parser("sweep", help="sweep set indices and trials, one CSV row per branch")
    _protocol_flags(sw)
    grp = sw.add_mutually_exclusive_group()
    grp.add_argument("--all-x", action="store_true", help="every index (pairs for combined families)")
    grp.add_argument("--sample-x", type=int, default=0, help="number of sampled indices or pairs")
    sw.add_argument("--trials", type=int, default=1)
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.set_defaults(func=cmd_sweep)

    au = sub.add_parser("audit", help="bit-count audit of a stored report or a live run")
    au.add_argument("--report", default=None, help="JSON report written by 'run --json'")
    _protocol_flags(au, family_required=False)
    au.set_defaults(func=cmd_audit)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "audit" and not args.report and not args.family:
        ap.error("audit needs --report or --family")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ghzrio: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
