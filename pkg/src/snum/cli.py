"""Batch front end: run estimator suites, emit result tables and witness
files, drive the structural checks.

Exit status: 0 on success, 1 when a certified invariant is violated, 2 on
usage errors.  Identical configurations (including the seed) reproduce the
result JSON byte for byte; there are no timestamps in the output.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import selftest as selftest_mod
from .hilbert import check_face_adjacency, check_prefix_nesting, hilbert_order
from .john import john_bound_constructive, segment_domain, verify_john_certificate
from .snumbers import (
    SNumberBound,
    Subspace,
    approximation_upper,
    bernstein_upper_1d,
    bernstein_upper_ddim,
    gelfand_lower_bound,
    hat_functions,
    hat_subspace_ratio_grid,
    isomorphism_lower_1d,
    isomorphism_lower_ddim,
    kolmogorov_lower_witness,
    kolmogorov_upper_1d,
    random_mean_zero_step_subspace,
    snumber_axiom_suite,
)
from .spaces import EXACT, FLOAT, LorentzParams, random_step_function, step_to_json_dict
from .volterra import operator_norm_discrete

KIND_LETTERS = {"a": "approximation", "c": "gelfand", "d": "kolmogorov",
                "b": "bernstein", "i": "isomorphism"}


@dataclass
class RunConfig:
    """Everything that determines a run; the seed fixes every search."""

    command: str
    dimension: int = 1
    grid: int = 64
    n_list: tuple = ()
    kinds: tuple = ()
    mode: str = FLOAT
    seed: int = 0
    eps: float = 1e-3
    zigzag_eps: float = 0.05
    subspaces: int = 20
    space: tuple = ()
    curve_order: int = 3
    samples: int = 10_000
    out: str | None = None
    csv: str | None = None
    plot_data: str | None = None

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["n_list"] = list(self.n_list)
        d["kinds"] = list(self.kinds)
        d["space"] = [
            f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else x
            for x in self.space
        ]
        return d


def _parse_exponent(text: str):
    value = Fraction(text.strip())
    return int(value) if value.denominator == 1 else value


def _parse_n_list(text: str):
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out or any(n < 1 for n in out):
        raise ValueError(f"bad n list {text!r}")
    return tuple(dict.fromkeys(out))


def _threads() -> int:
    raw = os.environ.get("SNUM_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return 1


def _rng_for(config: RunConfig, kind: str, n: int):
    kind_id = sorted(KIND_LETTERS.values()).index(kind)
    return np.random.default_rng([config.seed, kind_id, n])


def _volterra_task(config: RunConfig, kind: str, n: int) -> list:
    rng = _rng_for(config, kind, n)
    if kind == "isomorphism":
        return [isomorphism_lower_1d(n, config.grid)]
    if kind == "approximation":
        return [approximation_upper(n)]
    if kind == "gelfand":
        sets = []
        for _ in range(config.subspaces):
            m = int(rng.integers(0, min(4, n - 1) + 1))
            sets.append([random_step_function(rng, max_pieces=16, exact=True)
                         for _ in range(m)])
        return [gelfand_lower_bound(n, sets, Fraction(config.eps).limit_denominator(10**9))]
    if kind == "kolmogorov":
        if n == 1:
            value, attaining = operator_norm_discrete(max(config.grid, 2))
            return [SNumberBound(
                kind="kolmogorov", n=1, lower=value, upper=value,
                witness={"note": "first scale equals the operator norm",
                         "attaining_element": step_to_json_dict(attaining)},
                mode=EXACT, status="certified",
                label="interval embedding: kolmogorov at n=1 = 1/2",
            )]
        return [
            kolmogorov_upper_1d(n),
            kolmogorov_lower_witness(10, n=n, rng=rng),
        ]
    if kind == "bernstein":
        records = []
        ratios = []
        worst = None
        for _ in range(config.subspaces):
            subspace = random_mean_zero_step_subspace(rng, n, config.grid)
            bound = bernstein_upper_1d(subspace, eps=config.zigzag_eps, rng=rng)
            ratios.append(bound.witness.get("ratio_bound_for_subspace"))
            if worst is None or (bound.upper or np.inf) >= (worst.upper or np.inf):
                worst = bound
        worst.witness["subspace_ratio_bounds"] = ratios
        worst.witness["subspaces_tested"] = config.subspaces
        records.append(worst)
        return records
    raise AssertionError(kind)


def _run_volterra(config: RunConfig) -> tuple[int, dict]:
    for n in config.n_list:
        if "isomorphism" in config.kinds and config.grid % (2 * n):
            return 2, {"error": f"grid {config.grid} is not divisible by 2n = {2*n}"}
    tasks = [(kind, n) for kind in config.kinds for n in config.n_list]
    results: list = [None] * len(tasks)
    with ThreadPoolExecutor(max_workers=min(_threads(), max(len(tasks), 1))) as pool:
        futures = {
            pool.submit(_volterra_task, config, kind, n): slot
            for slot, (kind, n) in enumerate(tasks)
        }
        for fut, slot in futures.items():
            results[slot] = fut.result()
    bounds = [b for group in results for b in group]
    report = snumber_axiom_suite(bounds)
    payload = {
        "config": config.to_json_dict(),
        "results": [b.to_json_dict() for b in bounds],
        "consistency": {"passed": report.passed, "checked": report.checked,
                        "violations": report.violations},
    }
    return (0 if report.passed else 1), payload


def _run_cube(config: RunConfig) -> tuple[int, dict]:
    params = LorentzParams(*config.space) if config.space else LorentzParams(config.dimension, 1)
    bounds = []
    for m in config.n_list:  # here the list holds m values, n = m^d
        rng = _rng_for(config, "isomorphism", m)
        grid = config.grid
        block = 1 << (config.curve_order + 1)
        if grid % (2 * m) or grid % block:
            lcm = np.lcm(2 * m, block)
            grid = int(lcm * max(1, round(config.grid / lcm)))
        bounds.append(isomorphism_lower_ddim(config.dimension, m, params, grid))
        if "bernstein" in config.kinds:
            hats = hat_functions(config.dimension, m, grid)
            bound = bernstein_upper_ddim(
                Subspace(f"grid[{config.dimension},{grid}]", hats),
                curve_order=config.curve_order,
                eps=config.zigzag_eps,
                rng=rng,
            )
            bound.witness["grid_ratio_equal_coefficients"] = hat_subspace_ratio_grid(
                config.dimension, m, grid, params
            )
            bounds.append(bound)
    report = snumber_axiom_suite(bounds)
    payload = {
        "config": config.to_json_dict(),
        "results": [b.to_json_dict() for b in bounds],
        "consistency": {"passed": report.passed, "checked": report.checked,
                        "violations": report.violations},
    }
    return (0 if report.passed else 1), payload


def _emit(config: RunConfig, payload: dict) -> None:
    if config.out:
        out = Path(config.out)
        results = payload.get("results", [])
        if results:
            wdir = out.with_name(out.stem + "-witnesses")
            wdir.mkdir(parents=True, exist_ok=True)
            used = set()
            for row in results:
                name = f"{row['kind']}-{row['n']}.json"
                serial = 2
                while name in used:  # e.g. upper and lower records at one scale
                    name = f"{row['kind']}-{row['n']}-{serial}.json"
                    serial += 1
                used.add(name)
                (wdir / name).write_text(
                    json.dumps(row["witness"], indent=2, sort_keys=True)
                )
                row["witness_path"] = str(wdir / name)
                del row["witness"]
        out.write_text(json.dumps(payload, indent=2, sort_keys=True))
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    if config.csv and "results" in payload:
        with open(config.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "n", "lower", "upper", "status", "witness_path"])
            for row in payload["results"]:
                writer.writerow([
                    row["kind"], row["n"], row["lower"], row["upper"],
                    row["status"], row.get("witness_path", ""),
                ])
    if config.plot_data and "results" in payload:
        with open(config.plot_data, "w") as fh:
            fh.write("kind\tn\tlower\tupper\tlog_n\tlog_lower\tlog_upper\n")
            for row in payload["results"]:
                lo, up, n = row["lower"], row["upper"], row["n"]

                def flog(x):
                    v = _as_float(x)
                    return "" if v is None or v <= 0 else f"{np.log(v):.12g}"

                fh.write(
                    f"{row['kind']}\t{n}\t{_fmt(lo)}\t{_fmt(up)}\t"
                    f"{np.log(n):.12g}\t{flog(lo)}\t{flog(up)}\n"
                )


def _as_float(x):
    if x is None:
        return None
    if isinstance(x, str):
        num, den = x.split("/")
        return int(num) / int(den)
    return float(x)


def _fmt(x):
    v = _as_float(x)
    return "" if v is None else f"{v:.12g}"


def _run_hilbert(args) -> int:
    ordering = hilbert_order(args.dim, args.order)
    status = 0
    if args.check:
        ok_adj, where = check_face_adjacency(ordering)
        ok_nest, cube = check_prefix_nesting(ordering)
        if not ok_adj:
            sys.stderr.write(f"check_face_adjacency: FAIL at index {where}\n")
            status = 1
        if not ok_nest:
            sys.stderr.write(f"check_prefix_nesting: FAIL at cube {cube}\n")
            status = 1
        if status == 0:
            sys.stdout.write("check_face_adjacency: ok\ncheck_prefix_nesting: ok\n")
    table = [
        {"index": i + 1, "coords": list(c.coords)}
        for i, c in enumerate(ordering.index_to_cube)
    ]
    if args.format == "json":
        text = json.dumps(
            {"dim": args.dim, "order": args.order, "cells": table},
            indent=2, sort_keys=True,
        )
        if args.out:
            Path(args.out).write_text(text)
        elif not args.check:
            sys.stdout.write(text + "\n")
    else:
        rows = [[str(r["index"])] + [str(z) for z in r["coords"]] for r in table]
        if args.out:
            with open(args.out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["index"] + [f"z{a}" for a in range(args.dim)])
                writer.writerows(rows)
        elif not args.check:
            for row in rows:
                sys.stdout.write(",".join(row) + "\n")
    return status


def _run_john(args) -> int:
    ordering = hilbert_order(args.dim, args.order)
    rng = np.random.default_rng(args.seed)
    total = len(ordering)
    if args.exhaustive:
        pairs = [(i, j) for i in range(1, total + 1) for j in range(i, total + 1)]
    else:
        pairs = []
        for _ in range(args.pairs):
            i = int(rng.integers(1, total + 1))
            pairs.append((i, int(rng.integers(i, total + 1))))
    rows = []
    status = 0
    for i, j in pairs:
        omega = segment_domain(ordering, i, j)
        cert = john_bound_constructive(omega)
        ok, worst = verify_john_certificate(omega, cert, args.samples, rng=rng)
        if not ok:
            status = 1
        rows.append([i, j, f"{cert.constant:.12g}", f"{cert.profile_bound:.12g}",
                     f"{worst:.12g}", "pass" if ok else "fail"])
    target = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(target)
        writer.writerow(["i", "j", "constant", "profile_bound", "worst_ratio", "verdict"])
        writer.writerows(rows)
    finally:
        if args.out:
            target.close()
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snum",
        description="certified s-number bounds with inspectable witnesses",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_vol = sub.add_parser("volterra", help="interval embedding estimators")
    p_vol.add_argument("--n", required=True, help="scale list, e.g. 1..5 or 1,2,8")
    p_vol.add_argument("--grid", type=int, default=240)
    p_vol.add_argument("--kinds", default="i,b,c,d,a")
    p_vol.add_argument("--mode", choices=[EXACT, FLOAT], default=EXACT)
    p_vol.add_argument("--seed", type=int, default=0)
    p_vol.add_argument("--eps", type=float, default=1e-3,
                       help="functional quantization step")
    p_vol.add_argument("--zigzag-eps", type=float, default=0.05)
    p_vol.add_argument("--subspaces", type=int, default=20)
    p_vol.add_argument("--out")
    p_vol.add_argument("--csv")
    p_vol.add_argument("--plot-data")

    p_cube = sub.add_parser("cube", help="cube embedding estimators")
    p_cube.add_argument("--dim", type=int, default=2)
    p_cube.add_argument("--m", required=True, help="balls per side, e.g. 1,2,4")
    p_cube.add_argument("--space", default="", help="Lorentz exponents p,q")
    p_cube.add_argument("--curve-order", type=int, default=3)
    p_cube.add_argument("--grid", type=int, default=32)
    p_cube.add_argument("--kinds", default="i,b")
    p_cube.add_argument("--zigzag-eps", type=float, default=0.05)
    p_cube.add_argument("--seed", type=int, default=0)
    p_cube.add_argument("--out")
    p_cube.add_argument("--csv")
    p_cube.add_argument("--plot-data")

    p_hil = sub.add_parser("hilbert", help="emit and check the cube ordering")
    p_hil.add_argument("--dim", type=int, required=True)
    p_hil.add_argument("--order", type=int, required=True)
    p_hil.add_argument("--check", action="store_true")
    p_hil.add_argument("--format", choices=["json", "csv"], default="json")
    p_hil.add_argument("--out")

    p_john = sub.add_parser("john", help="segment-domain certificates")
    p_john.add_argument("--dim", type=int, required=True)
    p_john.add_argument("--order", type=int, required=True)
    group = p_john.add_mutually_exclusive_group()
    group.add_argument("--pairs", type=int, default=100)
    group.add_argument("--exhaustive", action="store_true")
    p_john.add_argument("--samples", type=int, default=10_000)
    p_john.add_argument("--seed", type=int, default=0)
    p_john.add_argument("--out")

    p_self = sub.add_parser("selftest", help="run the acceptance matrix")
    p_self.add_argument("--only", default="", help="comma list of check names")
    return parser


def run(config: RunConfig) -> int:
    """Run an estimator suite described by a configuration record."""
    if config.command == "volterra":
        status, payload = _run_volterra(config)
    elif config.command == "cube":
        status, payload = _run_cube(config)
    else:
        raise ValueError(f"run() drives volterra/cube, not {config.command!r}")
    if status == 2:
        sys.stderr.write(payload["error"] + "\n")
        return 2
    _emit(config, payload)
    if status:
        sys.stderr.write(
            "consistency violations:\n  "
            + "\n  ".join(payload["consistency"]["violations"]) + "\n"
        )
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "volterra":
            config = RunConfig(
                command="volterra",
                grid=args.grid,
                n_list=_parse_n_list(args.n),
                kinds=tuple(KIND_LETTERS[k.strip()] for k in args.kinds.split(",")),
                mode=args.mode,
                seed=args.seed,
                eps=args.eps,
                zigzag_eps=args.zigzag_eps,
                subspaces=args.subspaces,
                out=args.out,
                csv=args.csv,
                plot_data=args.plot_data,
            )
            return run(config)
        if args.command == "cube":
            space = tuple(_parse_exponent(x) for x in args.space.split(",")) if args.space else ()
            config = RunConfig(
                command="cube",
                dimension=args.dim,
                grid=args.grid,
                n_list=_parse_n_list(args.m),
                kinds=tuple(KIND_LETTERS[k.strip()] for k in args.kinds.split(",")),
                seed=args.seed,
                zigzag_eps=args.zigzag_eps,
                space=space,
                curve_order=args.curve_order,
                out=args.out,
                csv=args.csv,
                plot_data=args.plot_data,
            )
            return run(config)
        if args.command == "hilbert":
            return _run_hilbert(args)
        if args.command == "john":
            return _run_john(args)
        if args.command == "selftest":
            names = {s.strip() for s in args.only.split(",") if s.strip()} or None
            return selftest_mod.run_selftest(names)
    except (KeyError, ValueError) as exc:
        parser.error(str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())
