"""Command-line front end (``loggas``).

Subcommands: ``partition``, ``correlate``, ``verify``, ``omega-dump`` and
``cache {inspect,clear}``.  Tables are comma-separated with a header; a JSON
summary follows (or is written next to ``--out`` as ``<stem>.json``).

Exit codes: 0 success, 1 invalid configuration, 2 numerical failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from itertools import product
from pathlib import Path

import numpy as np

from .cache import CacheFormatError, CoefficientCache
from .config import ConfigError, RunConfig, load_config
from .correlations import InsertionSet, UnsupportedSpeciesError, correlation_canonical, correlation_grand
from .ensemble import (
    SpecError,
    admissible_populations,
    build_omegas,
    laplace_tuple_count,
    omega_keys,
    partition_canonical_laplace,
    partition_grand,
    population_probability,
)
from .oracle import direct_partition, gaussian_partition_reference
from .poly import CompleteFamily
from .quadrature import MAX_MC_DIM, MAX_QUAD_DIM, PotentialError, QuadratureError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3
VERIFY_LAPLACE_CAP = 200_000


def fmt(x) -> str:
    """Fixed float formatting so repeated runs are byte-identical."""
    return format(float(x), ".17g")


class _Output:
    def __init__(self, out):
        self.out = Path(out) if out else None

    def emit(self, header, rows, summary):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = json.dumps(summary, sort_keys=True, indent=2) + "\n"
        if self.out is None:
            sys.stdout.write(buf.getvalue())
            sys.stdout.write(text)
        else:
            self.out.parent.mkdir(parents=True, exist_ok=True)
            self.out.write_text(buf.getvalue())
            self.out.with_suffix(".json").write_text(text)


def _open_cache(args):
    return CoefficientCache(args.cache) if args.cache else None


def _population_columns(cfg: RunConfig):
    return [f"M{j + 1}" for j in range(cfg.spec.J)]


def cmd_partition(cfg: RunConfig, args) -> int:
    spec = cfg.spec
    cache = _open_cache(args)
    omegas = build_omegas(spec, cache)
    grand = partition_grand(spec, omegas, convention=cfg.convention)
    z = np.array(cfg.fugacities)
    ZN = grand(z)
    if cfg.convention == "pair":
        degrees = admissible_populations(spec)
    else:
        degrees = grand.multidegrees()
    rows = []
    total = 0.0
    for M in degrees:
        ZM = grand.coefficient(M)
        prob = float(np.prod(z ** np.array(M))) * ZM / ZN
        total += prob
        rows.append([*M, fmt(ZM), fmt(math.log(abs(ZM))) if ZM else "-inf", fmt(prob)])
    summary = {
        "command": "partition",
        "b": spec.b,
        "charges": list(spec.q),
        "N": spec.N,
        "K": spec.K,
        "family": spec.family.name,
        "convention": cfg.convention,
        "fugacities": [fmt(v) for v in cfg.fugacities],
        "Z_N": fmt(ZN),
        "log_Z_N": fmt(math.log(ZN)) if ZN > 0 else None,
        "probability_sum": fmt(total),
        "rows": len(rows),
    }
    _Output(args.out).emit(_population_columns(cfg) + ["Z_M", "log_abs_Z_M", "prob"], rows, summary)
    return EXIT_OK


def cmd_correlate(cfg: RunConfig, args) -> int:
    spec = cfg.spec
    m = cfg.m if cfg.m is not None else tuple(1 if j == 0 else 0 for j in range(spec.J))
    if spec.odd_species is not None:
        raise UnsupportedSpeciesError(
            f"species {spec.odd_species} has odd L; correlations need every L_j even"
        )
    cache = _open_cache(args)
    omegas = build_omegas(spec, cache)
    grand = partition_grand(spec, omegas)
    k = sum(m)
    rows = []
    for pts in product(cfg.grid, repeat=k):
        it = iter(pts)
        ins = InsertionSet(tuple(tuple(next(it) for _ in range(mj)) for mj in m))
        if cfg.population is not None:
            R = correlation_canonical(spec, ins, cfg.population, omegas, grand=grand)
        else:
            R = correlation_grand(spec, ins, cfg.fugacities, omegas, grand=grand)
        rows.append([*m, *(fmt(p) for p in pts), fmt(R)])
    summary = {
        "command": "correlate",
        "m": list(m),
        "ensemble": "canonical" if cfg.population is not None else "grand",
        "population": list(cfg.population) if cfg.population is not None else None,
        "fugacities": [fmt(v) for v in cfg.fugacities],
        "points": len(rows),
    }
    header = [f"m{j + 1}" for j in range(spec.J)] + [f"zeta{i + 1}" for i in range(k)] + ["R"]
    _Output(args.out).emit(header, rows, summary)
    return EXIT_OK


def cmd_omega_dump(cfg: RunConfig, args) -> int:
    spec = cfg.spec
    omegas = build_omegas(spec, _open_cache(args))
    rows = []
    for om in omegas:
        for key, val in om.integrals.items():
            t, u = key if om.odd else (key, ())
            rows.append([om.species + 1, "odd" if om.odd else "even", " ".join(map(str, t)),
                         " ".join(map(str, u)), fmt(val), fmt(om.errors[key])])
    summary = {"command": "omega-dump", "K": spec.K, "L": list(spec.L), "coefficients": len(rows)}
    _Output(args.out).emit(["species", "parity", "t", "u", "value", "error"], rows, summary)
    return EXIT_OK


def _check(name, engine, reference, tolerance, detail=""):
    ok = bool(abs(engine - reference) <= tolerance)
    return {"check": name, "engine": engine, "reference": reference, "tolerance": tolerance,
            "passed": ok, "detail": detail}


def audit_cache(spec, cache, rtol=1e-9) -> list:
    """Compare every cached coefficient of ``spec`` with a fresh computation."""
    checks = []
    if cache is None:
        return checks
    fresh = build_omegas(spec, None)
    for om in fresh:
        for label, key in omega_keys(spec, om.species):
            hit = cache.get(key)
            if hit is None:
                continue
            val = om.integrals[label]
            tol = rtol * max(1.0, abs(val))
            if abs(hit[0] - val) > tol:
                checks.append(_check("cache-entry", hit[0], val, tol, key))
    checks.append(_check("cache-audit", 0.0, 0.0, 0.0, f"{len(cache)} entries scanned"))
    return checks


def run_verify(cfg: RunConfig, cache=None, *, mc=False, paranoid=False, seed=0) -> list:
    spec = cfg.spec
    checks = audit_cache(spec, cache)
    omegas = build_omegas(spec, cache)
    grand = partition_grand(spec, omegas)
    for M in admissible_populations(spec):
        ZM = grand.coefficient(M)
        d = sum(M)
        cap = MAX_MC_DIM if mc else MAX_QUAD_DIM
        if d <= cap:
            res = direct_partition(spec, M, method="montecarlo" if mc else "quadrature",
                                   n_samples=cfg.n_samples, seed=seed, shards=cfg.shards, paranoid=paranoid)
            if res.method == "monte-carlo":
                tol, detail = 4.0 * res.error_bound, f"monte-carlo stderr={fmt(res.error_bound)} band=4sigma"
            else:
                tol, detail = max(cfg.verify_rtol * abs(res.value), res.error_bound), res.method
            checks.append(_check(f"oracle Z{M}", ZM, res.value, tol, detail))
        try:
            ref = gaussian_partition_reference(spec, M)
            checks.append(_check(f"closed-form Z{M}", ZM, ref, 1e-8 * abs(ref), "gaussian closed form"))
        except ValueError:
            pass
        if laplace_tuple_count(spec, M) <= VERIFY_LAPLACE_CAP:
            lap = partition_canonical_laplace(spec, M, omegas)
            checks.append(_check(f"laplace Z{M}", ZM, lap, 1e-12 * max(1.0, abs(lap)), "shared integrals"))
    other = CompleteFamily.hermite_monic() if spec.family.name == "monomial" else CompleteFamily.monomial()
    alt = partition_grand(replace(spec, family=other))
    for M in admissible_populations(spec):
        a, b_ = grand.coefficient(M), alt.coefficient(M)
        checks.append(_check(f"family Z{M}", a, b_, 1e-8 * max(abs(a), abs(b_)), other.name))
    probs = population_probability(spec, cfg.fugacities, grand=grand)
    checks.append(_check("probability-sum", sum(probs.values()), 1.0, 1e-10))
    if spec.odd_species is None and spec.N:
        j = next(j for j, L in enumerate(spec.L) if L <= spec.K)
        ins = InsertionSet.single(spec.J, j, 0.0)
        a = correlation_grand(spec, ins, cfg.fugacities, omegas, grand=grand, method="extract")
        b_ = correlation_grand(spec, ins, cfg.fugacities, omegas, grand=grand, method="wedge")
        checks.append(_check("correlation-paths", a, b_, 1e-12 * max(1.0, abs(b_)), "extract vs wedge"))
    return checks


def cmd_verify(cfg: RunConfig, args) -> int:
    checks = run_verify(cfg, _open_cache(args), mc=args.mc, paranoid=args.paranoid, seed=args.seed)
    rows = [[c["check"], fmt(c["engine"]), fmt(c["reference"]), fmt(c["tolerance"]),
             "pass" if c["passed"] else "FAIL", c["detail"]] for c in checks]
    failed = [c["check"] + (f" [{c['detail']}]" if c["check"] == "cache-entry" else "") for c in checks
              if not c["passed"]]
    summary = {"command": "verify", "checks": len(checks), "failed": failed, "passed": not failed,
               "mode": "monte-carlo" if args.mc else ("paranoid" if args.paranoid else "quadrature"),
               "seed": args.seed}
    _Output(args.out).emit(["check", "engine", "reference", "tolerance", "status", "detail"], rows, summary)
    for name in failed:
        print(f"verification failed: {name}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_VERIFY


def cmd_cache(args) -> int:
    if not args.cache:
        print("error: cache commands need --cache PATH", file=sys.stderr)
        return EXIT_CONFIG
    cache = CoefficientCache(args.cache)
    if args.action == "clear":
        cache.clear()
        print(json.dumps({"command": "cache clear", "path": str(cache.path)}, sort_keys=True))
        return EXIT_OK
    s = cache.summary()
    print(json.dumps({"command": "cache inspect", "path": s.path, "version": s.version, "records": s.records,
                      "unique": s.unique, "size_bytes": s.size_bytes}, sort_keys=True, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--out", help="output table path (JSON summary goes to <stem>.json)")
    common.add_argument("--cache", help="coefficient cache file")
    common.add_argument("--seed", type=int, default=0, help="Monte Carlo seed")
    common.add_argument("--mc", action="store_true", help="Monte Carlo oracle in verify")
    common.add_argument("--paranoid", action="store_true", help="independent fixed-grid oracle integrator")
    parser = argparse.ArgumentParser(prog="loggas", description="Berezin-integral log-gas partition functions")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("partition", "canonical and grand canonical partition functions"),
        ("correlate", "correlation functions on a grid"),
        ("verify", "check the engine against the brute-force oracle"),
        ("omega-dump", "print the omega coefficients with their index maps"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    cache = sub.add_parser("cache", parents=[common], help="inspect or clear the coefficient cache")
    cache.add_argument("action", choices=["inspect", "clear"])
    return parser


_COMMANDS = {
    "partition": cmd_partition,
    "correlate": cmd_correlate,
    "verify": cmd_verify,
    "omega-dump": cmd_omega_dump,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "cache":
            return cmd_cache(args)
        if not args.config:
            raise ConfigError("--config is required")
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, SpecError, UnsupportedSpeciesError, CacheFormatError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, PotentialError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
