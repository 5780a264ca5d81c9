"""Command-line front end: bounds, stats-check, gamma, definetti-demo, budget.

Every command prints one JSON document {manifest, rows, summary} (or CSV of
the rows) to stdout; diagnostics go to stderr.

Exit codes: 0 pass, 1 inequality violation, 2 usage error, 3 resource guard.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from importlib import metadata

import numpy as np

from . import exchangeable_stats as xs
from . import scalar_bounds as sb
from .definetti import (VectorFamily, build_vector_family, component_residual, definetti_decompose,
                        random_supported_density, theorem1_decompose)
from .errors import DefinettiKitError, DomainError, NumericalError, PreconditionError, ResourceGuardError
from .gamma import gamma_generic, verify_lemma2
from .linalg import HermitianMatrix
from .logvalue import LogValue
from .qkd_budget import compose_budget, compose_budget_with_envelope, find_min_m, window_lower
from .quantum_checks import quantum_lemma1_check, random_lemma1_instance, support_restriction_check
from .symmetric import (SubspaceBasis, check_size, product_vector, purification_checks,
                        purify_symmetric, random_permutation_invariant_density,
                        random_symmetric_vector, random_unit_vectors)

EXIT_PASS, EXIT_VIOLATION, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


def tool_version() -> str:
    try:
        return metadata.version("definetti-kit")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# ------------------------------------------------------------- parsing


def parse_grid(text: str) -> list[float]:
    """'start:step:count' (start + i*step for i < count), 'a,b,c', or a single number."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, step, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError
            # multiply rather than accumulate so 0:0.1:11 ends at 1.0 exactly
            return [start + i * step for i in range(count)]
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}; expected start:stop:count or a,b,c") from None


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise UsageError(f"cannot parse integer list {text!r}") from None


def read_matrix(path: str) -> np.ndarray:
    """Plain text: a 'dim' line, then dim^2 lines 're im' in row-major order."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        dim = int(lines[0])
        vals = [complex(float(a), float(b)) for a, b in (ln.split() for ln in lines[1:])]
    except (ValueError, IndexError):
        raise UsageError(f"{path}: malformed matrix file") from None
    if len(vals) != dim * dim:
        raise UsageError(f"{path}: expected {dim * dim} entries, found {len(vals)}")
    return np.array(vals).reshape(dim, dim)


def write_matrix(path: str, a) -> None:
    a = np.asarray(a, dtype=complex)
    with open(path, "w") as fh:
        fh.write(f"{a.shape[0]}\n")
        for z in a.reshape(-1):
            fh.write(f"{z.real:.17g} {z.imag:.17g}\n")


# ------------------------------------------------------------- output


def jsonable(v):
    if isinstance(v, LogValue):
        return v.to_dict()
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        if math.isnan(f) or math.isinf(f):
            return str(f)
        return f
    return v


def _csv_cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return v


def _flatten(row: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in row.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, list):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def rows_to_csv(rows: list[dict]) -> str:
    flat = [_flatten(jsonable(r)) for r in rows]
    cols = []
    for r in flat:
        for c in r:
            if c not in cols:
                cols.append(c)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in flat:
        w.writerow([_csv_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def make_document(command: str, args: argparse.Namespace, rows: list[dict], summary: dict,
                  started: float) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    manifest = {
        "command": command,
        "parameters": params,
        "seed": int(getattr(args, "seed", 0) or 0),
        "version": tool_version(),
        "duration_s": round(time.perf_counter() - started, 6),
        "passed": bool(summary.get("passed", True)),
    }
    return jsonable({"manifest": manifest, "rows": rows, "summary": summary})


def emit(doc: dict, args) -> None:
    if getattr(args, "csv_out", None):
        with open(args.csv_out, "w") as fh:
            fh.write(rows_to_csv(doc["rows"]))
    if getattr(args, "format", "json") == "csv":
        sys.stdout.write(rows_to_csv(doc["rows"]))
    else:
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")


# ------------------------------------------------------------ commands


def cmd_bounds(args) -> tuple[list, dict]:
    kinds = [name for name in ("lemma1", "lemma2", "lemma3", "definetti", "theorem2_delta") if getattr(args, name)]
    if not kinds:
        raise UsageError("choose at least one of --lemma1 --lemma2 --lemma3 --definetti --theorem2-delta")
    deltas = parse_grid(args.delta_grid) if args.delta_grid else ([args.delta] if args.delta is not None else [])
    ks = parse_int_list(args.k) if args.k else []
    ns = parse_int_list(args.n) if args.n else []

    def need(name, vals):
        if not vals:
            raise UsageError(f"--{name} is required for this bound")
        return vals

    rows = []
    for kind in kinds:
        if kind == "lemma1":
            for k, dl in itertools.product(need("k", ks), need("delta", deltas)):
                rows.append({"bound": "lemma1", "k": k, "delta": dl, "value": sb.lemma1_bound(k, dl)})
        elif kind == "lemma2":
            if args.n0 is None:
                raise UsageError("--n0 is required for --lemma2")
            for dl in need("delta", deltas):
                v = sb.lemma2_bound(args.n0, dl)
                rows.append({"bound": "lemma2", "n0": args.n0, "delta": dl, "value": LogValue.from_float(v)})
        elif kind == "lemma3":
            for k, n in itertools.product(need("k", ks), need("n", ns)):
                rows.append({"bound": "lemma3", "k": k, "n": n, "value": sb.lemma3_bound(k, n),
                             "hypothesis_n_ge_2k": n >= 2 * k})
        elif kind == "definetti":
            if args.d is None:
                raise UsageError("--d is required for --definetti")
            mode = {"2kn": "2k+n", "4kn": "4k+n"}.get(args.mode, args.mode)
            for k, n in itertools.product(need("k", ks), need("n", ns)):
                v = sb.definetti_overlap_bound(k, n, args.d, mode)
                rows.append({"bound": "definetti", "mode": mode, "k": k, "n": n, "d": args.d, "value": v,
                             "vacuous": v.is_vacuous()})
        else:
            ks0 = ks if ks else [0]
            for k, n in itertools.product(ks0, need("n", ns)):
                v = sb.theorem2_delta(k, n, args.eps, args.dimx)
                rows.append({"bound": "theorem2_delta", "k": k, "n": n, "eps": args.eps,
                             "dim_x": args.dimx, "value": v})
    return rows, {"passed": True, "count": len(rows)}


def _classical_rows(k_max: int) -> tuple[list, dict]:
    rows, violations = [], 0
    deltas = [j / 20 for j in range(1, 21)]
    for k in range(1, k_max + 1):
        env = xs.moment_envelope(k)
        worst = max(xs.log_exact_moment(k, r) for r in range(2 * k + 1))
        documented = k == 1
        ok_moment = worst <= LogValue.from_float(env)
        row = {"check": "moment", "k": k, "max_moment": worst, "envelope": env,
               "holds": bool(ok_moment), "documented_deviation": documented}
        if documented:
            row["exact_value"] = math.e
        elif not ok_moment:
            violations += 1
        rows.append(row)
        if k < 2:
            continue
        worst_ratio, count = -math.inf, 0
        for total in range(2 * k, 3 * k + 1):
            for r in range(total + 1):
                dist = xs.TypeClassDistribution(total, r)
                tails = xs.conditional_tail_grid(dist, k, deltas)
                for dl, t in zip(deltas, tails):
                    b = sb.lemma5_bound(k, dl)
                    count += 1
                    if t.is_zero():
                        continue
                    ratio = t.log() - b.log()
                    worst_ratio = max(worst_ratio, ratio)
                    if ratio > 0:
                        violations += 1
        rows.append({"check": "tail", "k": k, "cases": count, "max_log_ratio": worst_ratio,
                     "holds": worst_ratio <= 0})
    return rows, {"violations": violations}


def cmd_stats_check(args) -> tuple[list, dict]:
    if args.k_max < 1 or args.k_max > 200:
        raise UsageError("--k-max must lie in [1, 200]")
    rows, summary = [], {}
    if not args.quantum:
        rows, summary = _classical_rows(args.k_max)
    else:
        if args.parts < 3:
            raise UsageError("--parts must be at least 3")
        check_size(2, args.parts)
        if args.parts > 16:
            raise ResourceGuardError("outcome enumeration is limited to 16 parts")
        k = args.parts // 3
        n = args.parts - k
        rng = np.random.default_rng(args.seed)
        deltas = [j / 20 for j in range(1, 21)]
        violations = 0
        for trial in range(args.states):
            rho, U, V = random_lemma1_instance(2, args.parts, rng)
            for r in quantum_lemma1_check(rho, 2, k, n, U, V, deltas):
                rows.append({"check": "lemma1", "state": trial, "k": k, "n": n} | r.to_dict())
                violations += not r.holds
            sr = support_restriction_check(rho, 2, k, n, U, V)
            rows.append({"check": "support_restriction", "state": trial, "k": k, "n": n,
                         "probability": sr.probability, "hypothesis": sr.hypothesis, "bound": sr.bound,
                         "holds": sr.holds})
            violations += not sr.holds
        summary = {"violations": violations, "all_vacuous": all(r.get("vacuous", True) for r in rows)}
    summary["passed"] = summary["violations"] == 0
    return rows, summary


def cmd_gamma(args) -> tuple[list, dict]:
    if args.generic:
        if not (args.u1_file and args.proj_file and args.delta is not None):
            raise UsageError("--generic needs --u1-file, --proj-file and --delta")
        U1 = HermitianMatrix(read_matrix(args.u1_file))
        P = HermitianMatrix(read_matrix(args.proj_file))
        res = gamma_generic(U1, P, args.delta)
        try:
            res.check_certificate(args.delta)
            cert = True
        except NumericalError:
            cert = False
        row = {"delta": args.delta, "gamma": res.value, "lambda_star": res.lambda_star,
               "duality_gap": res.duality_gap, "primal_value": res.primal_value,
               "constraint_value": res.constraint_value, "iterations": res.iterations,
               "certificate": cert}
        return [row], {"passed": bool(row["certificate"])}
    if args.n0 is None:
        raise UsageError("--n0 is required (or use --generic)")
    n_cut = args.ncut if args.ncut is not None else 4 * args.n0
    if n_cut > 4096:
        raise ResourceGuardError(f"n_cut={n_cut} exceeds the dense guard 4096")
    grid = parse_grid(args.delta_grid)
    table = verify_lemma2(args.n0, n_cut, grid, args.construction, args.v1_threshold,
                          doubled=not args.no_doubled)
    rows = [r.to_dict() for r in table.rows]
    summary = {"n0": args.n0, "n_cut": n_cut, "max_drift": table.max_drift, "max_gap": table.max_gap,
               "violations": len(table.violations), "passed": not table.violations}
    return rows, summary


def cmd_definetti_demo(args) -> tuple[list, dict]:
    rng = np.random.default_rng(args.seed)
    rows, failures = [], 0
    if args.theorem1:
        d, h, k, n = args.ambient, args.subspace, args.k, args.n
        if not 1 <= h < d:
            raise UsageError("--subspace must lie in [1, ambient)")
        check_size(d, 4 * k + n)
        sub = SubspaceBasis.coordinate(d, h)
        fam = build_vector_family(h, k, args.family_count, seed=args.seed)
        for trial in range(args.states):
            rho = random_supported_density(sub, k, n, rng)
            res = theorem1_decompose(rho, sub, k, n, fam, check=False)
            failures += not res.holds or res.max_residual > 1e-8
            rows.append({"pipeline": "theorem1", "state": trial} | res.summary())
        return rows, {"failures": failures, "passed": failures == 0}

    d, k, n = args.d, args.k, args.n
    N = 2 * k + n
    check_size(d, N)
    fam = build_vector_family(d, k, args.family_count, seed=args.seed)
    if args.iid:
        nu = random_unit_vectors(d, 1, rng)[0]
        states = [product_vector([nu] * N)]
    else:
        states = [random_symmetric_vector(d, N, rng) for _ in range(args.states)]
    for trial, phi in enumerate(states):
        res = definetti_decompose(phi, d, k, n, fam, check=False)
        top = np.argsort(res.weights)[::-1][:5]
        resid = max(component_residual(res.components[i], fam.vectors[i], k, n) for i in top)
        failures += not (res.holds and res.per_vector_holds) or resid > 1e-8
        row = {"pipeline": "iid" if args.iid else "definetti", "state": trial,
               "component_residual": resid} | res.summary()
        if args.iid:
            own = definetti_decompose(phi, d, k, n, VectorFamily(nu[None, :], k), check=False)
            row["own_vector_overlap"] = own.overlap
        rows.append(row)
    if (d * d) ** N <= 4096 and not args.iid:
        rho = random_permutation_invariant_density(d, N, rng)
        phi = purify_symmetric(rho, d, N)
        checks = purification_checks(phi, rho, d, N)
        ok = checks["partial_trace"] <= 1e-9 and checks["permutation"] <= 1e-9
        failures += not ok
        rows.append({"pipeline": "purification", "parts": N} | checks | {"holds": ok})
    return rows, {"failures": failures, "achieved_mu": fam.achieved_mu, "passed": failures == 0}


def cmd_budget(args) -> tuple[list, dict]:
    if args.find_min_m:
        res = find_min_m(args.target, args.eps, args.dimx)
        row = {"m_star": res.m_star, "found": res.found, "evaluations": res.evaluations,
               "report": res.report.to_dict()}
        return [row], {"passed": True, "found": res.found}
    if args.m is None:
        raise UsageError("--m is required (or use --find-min-m)")
    if args.m < 2:
        raise UsageError("--m must be at least 2")
    n0 = args.n0 if args.n0 is not None else window_lower(args.m)
    if args.gamma_slope is not None or args.gamma_offset is not None:
        if args.gamma_slope is None or args.gamma_offset is None:
            raise UsageError("--gamma-slope and --gamma-offset go together")
        rep = compose_budget_with_envelope(args.m, n0, args.eps, args.dimx, args.gamma_slope, args.gamma_offset)
    else:
        rep = compose_budget(args.m, n0, args.eps, args.dimx)
    return [rep.to_dict()], {"passed": True, "chain_valid": rep.feasibility_flags["chain_valid"]}


# ------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="definetti-kit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=tool_version())
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--csv-out", help="also write the rows as CSV to this path")
        sp.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bounds", help="tabulate scalar bounds over parameter grids")
    common(b)
    for name in ("lemma1", "lemma2", "lemma3", "definetti"):
        b.add_argument(f"--{name}", action="store_true")
    b.add_argument("--theorem2-delta", dest="theorem2_delta", action="store_true")
    b.add_argument("--k", help="integer or comma list")
    b.add_argument("--n", help="integer or comma list")
    b.add_argument("--d", type=float)
    b.add_argument("--n0", type=int)
    b.add_argument("--delta", type=float)
    b.add_argument("--delta-grid")
    b.add_argument("--mode", default="2kn", choices=("2kn", "4kn", "2k+n", "4k+n"))
    b.add_argument("--eps", type=float, default=1e-9)
    b.add_argument("--dimx", type=int, default=2)
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("stats-check", help="exhaustive moment and tail checks")
    common(s)
    s.add_argument("--k-max", type=int, default=40)
    s.add_argument("--quantum", action="store_true")
    s.add_argument("--parts", type=int, default=6)
    s.add_argument("--states", type=int, default=5)
    s.set_defaults(func=cmd_stats_check)

    g = sub.add_parser("gamma", help="energy-cut gamma table or a generic solve")
    common(g)
    g.add_argument("--n0", type=int)
    g.add_argument("--ncut", type=int)
    g.add_argument("--delta-grid", default="0:0.1:11")
    g.add_argument("--construction", choices=("compressed", "truncated"), default="compressed")
    g.add_argument("--v1-threshold", choices=("quadrature", "photon"), default="quadrature")
    g.add_argument("--no-doubled", action="store_true")
    g.add_argument("--generic", action="store_true")
    g.add_argument("--u1-file")
    g.add_argument("--proj-file")
    g.add_argument("--delta", type=float)
    g.set_defaults(func=cmd_gamma)

    dd = sub.add_parser("definetti-demo", help="purification, decomposition and extended pipeline")
    common(dd)
    dd.add_argument("--d", type=int, default=2)
    dd.add_argument("--k", type=int, default=1)
    dd.add_argument("--n", type=int, default=2)
    dd.add_argument("--family-count", type=int, default=2000)
    dd.add_argument("--states", type=int, default=1)
    dd.add_argument("--iid", action="store_true")
    dd.add_argument("--theorem1", action="store_true")
    dd.add_argument("--ambient", type=int, default=3)
    dd.add_argument("--subspace", type=int, default=2)
    dd.set_defaults(func=cmd_definetti_demo)

    bu = sub.add_parser("budget", help="parameter chain for N = m^4 signals")
    common(bu)
    bu.add_argument("--m", type=int)
    bu.add_argument("--n0", type=int)
    bu.add_argument("--eps", type=float, default=1e-9)
    bu.add_argument("--dimx", type=int, default=2)
    bu.add_argument("--find-min-m", action="store_true")
    bu.add_argument("--target", type=float, default=1e-10)
    bu.add_argument("--gamma-slope", type=float)
    bu.add_argument("--gamma-offset", type=float)
    bu.set_defaults(func=cmd_budget)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        rows, summary = args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceGuardError as e:
        print(f"resource guard: {e}", file=sys.stderr)
        return EXIT_GUARD
    except (DomainError, PreconditionError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DefinettiKitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    doc = make_document(args.command, args, rows, summary, started)
    emit(doc, args)
    return EXIT_PASS if summary.get("passed", True) else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
