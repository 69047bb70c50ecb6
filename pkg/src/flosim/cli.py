"""``flosim`` command line: run, probs, certify, pfaffian.

Exit codes: 0 success, 1 parse / validation / numerical error,
2 impossible forced measurement outcome.  JSON on stdout is the stable
interface; ``--text`` is for people.
"""

from __future__ import annotations

import argparse
import sys
import time
from collections import Counter

import numpy as np

from . import fileio
from .fileio import SCHEMA, FileFormatError, dumps, encode_matrix, encode_number
from .flo import PRNG_NAME, ImpossibleOutcome, Measure, exact_distribution, run_shots
from .gaussian import certify, decompose_bistochastic
from .skewlin import block_diagonalize, pfaffian

EXIT_OK, EXIT_ERROR, EXIT_IMPOSSIBLE = 0, 1, 2
PF_REL_TOL = 1e-8
ORACLE_TOL = 1e-9
ORACLE_MAX_MODES = 5


class CommandError(Exception):
    pass


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror}") from None


def _state_record(state) -> dict:
    return {
        "corr": encode_matrix(state.corr),
        "williamson": [float(x) for x in state.williamson()],
    }


def _measure_ops(circuit) -> list[int]:
    return [i for i, op in enumerate(circuit.ops) if isinstance(op, Measure)]


def _impossible(exc: ImpossibleOutcome, cf, args) -> int:
    op = exc.op_index
    line = cf.op_lines[op] if op is not None and op < len(cf.op_lines) else None
    where = f"op {op + 1}" + (f" (line {line})" if line else "") if op is not None else "unknown op"
    outcome = "any outcome" if exc.outcome is None else f"outcome {exc.outcome}"
    msg = f"{args.file}: {where}: {outcome} on mode {exc.mode + 1} is impossible"
    print(f"flosim: {msg}", file=sys.stderr)
    if not args.text:
        sys.stdout.write(dumps({
            "schema_version": SCHEMA,
            "command": args.command,
            "error": "impossible_outcome",
            "op": None if op is None else op + 1,
            "line": line,
            "mode": exc.mode + 1,
            "outcome": exc.outcome,
            "probability": float(exc.probability),
        }))
    return EXIT_IMPOSSIBLE


# -- run -----------------------------------------------------------------


def cmd_run(args) -> int:
    cf = fileio.parse_circuit(_read(args.file), args.file)
    seed = args.seed if args.seed is not None else (cf.seed if cf.seed is not None else 0)
    if args.shots < 1:
        raise CommandError("--shots must be positive")
    t0 = time.perf_counter()
    try:
        records = run_shots(cf.circuit, cf.initial, seed, args.shots)
    except ImpossibleOutcome as exc:
        return _impossible(exc, cf, args)
    wall = time.perf_counter() - t0
    meas = _measure_ops(cf.circuit)
    hist = Counter(r.outcomes for r in records)
    finals = {}
    for r in records:
        finals.setdefault(r.outcomes, r.final_state)
    report = {
        "schema_version": SCHEMA,
        "command": "run",
        "n_modes": cf.circuit.n_modes,
        "seed": seed,
        "shots": args.shots,
        "prng": PRNG_NAME,
        "histogram": {k: hist[k] for k in sorted(hist)},
        "trajectories": [
            {
                "shot": r.shot,
                "outcomes": r.outcomes,
                "events": [
                    {"op": i + 1, "mode": e.mode + 1, "outcome": e.outcome, "probability": e.probability}
                    for i, e in zip(meas, r.events)
                ],
            }
            for r in records
        ],
        "final_states": {k: _state_record(finals[k]) for k in sorted(finals)},
    }
    if args.timing:
        report["wall_seconds"] = wall
    if not args.text:
        sys.stdout.write(dumps(report))
        return EXIT_OK
    print(f"{args.shots} shot(s), seed {seed}, {len(meas)} measurement(s), prng {PRNG_NAME}")
    width = max(len(meas), len("outcome"))
    print(f"{'outcome':<{width}}  {'count':>10}  frequency")
    for k in sorted(hist):
        print(f"{k or '-':<{width}}  {hist[k]:>10d}  {hist[k] / args.shots:.6f}")
    for k in sorted(finals):
        w = " ".join(f"{x:.6f}" for x in finals[k].williamson())
        print(f"final [{k or '-'}] williamson: {w}")
    if args.timing:
        print(f"wall clock: {wall:.6f} s")
    return EXIT_OK


# -- probs ---------------------------------------------------------------


def cmd_probs(args) -> int:
    cf = fileio.parse_circuit(_read(args.file), args.file)
    try:
        table, weight, finals = exact_distribution(cf.circuit, cf.initial)
    except ImpossibleOutcome as exc:
        return _impossible(exc, cf, args)
    except ValueError as exc:
        raise CommandError(str(exc)) from None
    keys = sorted(table)
    report = {
        "schema_version": SCHEMA,
        "command": "probs",
        "n_modes": cf.circuit.n_modes,
        "n_measurements": cf.circuit.n_measurements,
        "postselection_weight": float(weight),
        "probabilities": {k: table[k] for k in keys},
        "total": float(sum(table.values())),
    }
    ok = True
    if args.oracle_check:
        from . import oracle

        n = cf.circuit.n_modes
        if n > ORACLE_MAX_MODES:
            raise CommandError(f"--oracle-check supports at most {ORACLE_MAX_MODES} modes, got {n}")
        dense, _, _ = oracle.dense_distribution(cf.circuit, cf.initial.corr)
        keys_all = set(table) | set(dense)
        dev = float(max((abs(table.get(k, 0.0) - dense.get(k, 0.0)) for k in keys_all), default=0.0))
        ok = dev <= ORACLE_TOL
        report["oracle_check"] = {"max_abs_deviation": dev, "tolerance": ORACLE_TOL, "passed": ok}
    if not args.text:
        sys.stdout.write(dumps(report))
    else:
        width = max(cf.circuit.n_measurements, len("outcome"))
        print(f"{'outcome':<{width}}  probability")
        for k in keys:
            print(f"{k or '-':<{width}}  {table[k]:.6f}")
        print(f"{'total':<{width}}  {report['total']:.6f}")
        if any(isinstance(op, Measure) and op.force is not None for op in cf.circuit.ops):
            print(f"postselection weight: {weight:.6f}")
        if args.oracle_check:
            verdict = "passed" if ok else "FAILED"
            print(f"oracle check {verdict}: max deviation {report['oracle_check']['max_abs_deviation']:.3e}")
    if not ok:
        print("flosim: probability table disagrees with the dense oracle", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


# -- certify -------------------------------------------------------------


def cmd_certify(args) -> int:
    emap = fileio.parse_map(_read(args.file), args.file)
    cert = certify(emap)
    blk = emap.block_matrix()
    williamson = None
    if cert.block_imag <= 1e-10:
        williamson = [float(x) for x in block_diagonalize(np.real(blk)).williamson]
    report = {
        "schema_version": SCHEMA,
        "command": "certify",
        "n_modes": emap.n_modes,
        "tp": cert.tp,
        "bistochastic": cert.bistochastic,
        "cp": cert.cp,
        "measured": {
            "d_norm": cert.d_norm,
            "a_norm": cert.a_norm,
            "c_deviation": cert.c_deviation,
            "c_imag": cert.c_imag,
            "c_real": cert.c_real,
            "block_imag": cert.block_imag,
            "block_sv_max": cert.block_sv_max,
        },
        "margins": cert.margins(),
        "williamson_of_dual": williamson,
    }
    if cert.bistochastic and cert.cp:
        pd = decompose_bistochastic(emap)
        report["product_decomposition"] = {
            "left": encode_matrix(pd.left),
            "diag": [float(x) for x in pd.diag],
            "right": encode_matrix(pd.right),
        }
    if not args.text:
        sys.stdout.write(dumps(report))
        return EXIT_OK
    for key in ("tp", "bistochastic", "cp"):
        print(f"{key}: {'yes' if report[key] else 'no'}")
    for key, v in report["margins"].items():
        print(f"margin {key}: {v:.6g}")
    if williamson is not None:
        print("williamson of dual: " + " ".join(f"{x:.6f}" for x in williamson))
    if "product_decomposition" in report:
        print("product decomposition diag: " + " ".join(f"{x:.6f}" for x in report["product_decomposition"]["diag"]))
    return EXIT_OK


# -- pfaffian ------------------------------------------------------------


def cmd_pfaffian(args) -> int:
    S = fileio.parse_matrix(_read(args.file), args.file)
    pf = pfaffian(S)
    det = np.linalg.det(S)
    err = abs(pf * pf - det)
    scale = max(abs(det), abs(pf) ** 2)
    floor = 1e-12 * np.linalg.norm(S, 2) ** S.shape[0]
    if err > PF_REL_TOL * scale and err > floor:
        raise CommandError(f"Pf^2 = det check failed: |Pf^2 - det| = {err:.3e}")
    report = {
        "schema_version": SCHEMA,
        "command": "pfaffian",
        "dim": S.shape[0],
        "pfaffian": encode_number(pf),
        "det": encode_number(det),
        "abs_residual": float(err),
    }
    if not args.text:
        sys.stdout.write(dumps(report))
    else:
        fmt = (lambda z: f"{z.real:.6g}{z.imag:+.6g}j") if np.iscomplexobj(S) else (lambda z: f"{z:.6g}")
        print(f"pfaffian: {fmt(pf)}")
        print(f"det: {fmt(det)}")
    return EXIT_OK


# -- entry point ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flosim", description="Fermionic linear optics simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file", help="input file (YAML or JSON), '-' for stdin")
        fmt = sp.add_mutually_exclusive_group()
        fmt.add_argument("--json", dest="text", action="store_false", help="JSON report (default)")
        fmt.add_argument("--text", dest="text", action="store_true", help="human-readable report")
        sp.set_defaults(text=False)

    sp = sub.add_parser("run", help="sample seeded trajectories of a circuit")
    common(sp)
    sp.add_argument("--seed", type=int, default=None, help="overrides the file's seed (default 0)")
    sp.add_argument("--shots", type=int, default=1)
    sp.add_argument("--timing", action="store_true", help="include wall-clock time (breaks byte-identity)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("probs", help="exact joint outcome distribution")
    common(sp)
    sp.add_argument("--oracle-check", action="store_true", help="compare against dense simulation")
    sp.set_defaults(func=cmd_probs)

    sp = sub.add_parser("certify", help="TP / bistochastic / CP verdicts for a Gaussian map")
    common(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("pfaffian", help="Pfaffian and determinant of an antisymmetric matrix")
    common(sp)
    sp.set_defaults(func=cmd_pfaffian)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileFormatError, CommandError) as exc:
        print(f"flosim: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"flosim: error: {args.file}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
