"""errbound command line.

Exit codes: 0 success, 1 bad input, 2 numeric failure or oracle mismatch,
3 inconclusive certification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .common import (
    UNBOUNDED,
    ErrboundError,
    InconclusiveError,
    InvalidInputError,
    NotApplicableError,
    NumericFailure,
    fmt_real,
)
from .convex_model import MaxAffineSystem, as_function, distance_to_level_set, named_function, named_functions
from .geometry import NormSpec, Polyhedron, min_norm_point, project_polyhedron, sample_ball
from .hoffman import SweepResult, enumerate_active_sets, hoffman_report, perturbation_sweep
from .moduli import SamplerSpec, global_modulus_direct, global_modulus_primal, local_modulus
from .oracle import OracleConfig, brute_distance, brute_min_norm_distance, brute_sphere_min
from .sphere_min import phi, sphere_min_over_set
from .stability import (
    boundary_condition_3_9,
    destabilizer_search,
    interior_condition_3_20,
    point_stability,
)

CSV_HEADER = ["eps", "anchor_id", "direction_id", "lower_bound", "sigma_sampled"]
ORACLE_TOL = 1e-3

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# input


def resolve_path(path: str) -> Path:
    """An existing file, else a shipped corpus file of the same name."""
    p = Path(path)
    if p.is_file():
        return p
    shipped = resources.files("errbound") / "corpus" / p.name
    if shipped.is_file():
        return Path(str(shipped))
    raise InvalidInputError(f"no such system file: {path}")


def parse_system(text: str) -> MaxAffineSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInputError("system file must hold a JSON object")
    extra = set(doc) - {"space_dim", "norm", "rows"}
    if extra:
        raise InvalidInputError(f"unknown keys: {sorted(extra)}")
    if "space_dim" not in doc or "rows" not in doc:
        raise InvalidInputError("system file needs 'space_dim' and 'rows'")
    dim = doc["space_dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InvalidInputError("space_dim must be a positive integer")
    rows = doc["rows"]
    if not isinstance(rows, list) or not rows:
        raise InvalidInputError("rows must be a nonempty list")
    parsed = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict) or set(row) != {"label", "a", "b"}:
            raise InvalidInputError(f"row {i} must have exactly the keys label, a, b")
        label, a, b = row["label"], row["a"], row["b"]
        if not isinstance(label, str):
            raise InvalidInputError(f"row {i}: label must be a string")
        if not isinstance(a, list) or len(a) != dim or not all(_is_real(v) for v in a):
            raise InvalidInputError(f"row {i}: a must be a list of {dim} numbers")
        if not _is_real(b):
            raise InvalidInputError(f"row {i}: b must be a number")
        parsed.append((label, [float(v) for v in a], float(b)))
    return MaxAffineSystem.from_rows(parsed, NormSpec(doc.get("norm", "euclidean")))


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def load_system(path: str) -> MaxAffineSystem:
    p = resolve_path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc
    return parse_system(text)


def parse_vec(text: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise InvalidInputError(f"bad coordinate list {text!r}") from exc
    if not all(math.isfinite(v) for v in vals):
        raise InvalidInputError(f"non-finite coordinate in {text!r}")
    return np.array(vals)


def parse_list(text: str) -> list[float]:
    return [float(v) for v in parse_vec(text)]


def load_target(args):
    """The max-affine system from a path, or a named function."""
    if args.function is not None:
        if args.path is not None:
            raise InvalidInputError("give either a system path or --function, not both")
        if args.function not in named_functions():
            raise InvalidInputError(f"unknown function {args.function!r}; known: {', '.join(named_functions())}")
        return named_function(args.function)
    if args.path is None:
        raise InvalidInputError("a system path or --function is required")
    return load_system(args.path)


# ---------------------------------------------------------------------------
# output


def num(v) -> str:
    """Shortest round-trip form; the sentinel and infinities as ``inf``."""
    if v is UNBOUNDED or v is None:
        return "inf" if v is UNBOUNDED else "-"
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v + 0.0)


def vec(x) -> str:
    if x is None:
        return "-"
    return "(" + ", ".join(num(v) for v in np.asarray(x, dtype=float)) + ")"


def jnum(v):
    if v is UNBOUNDED or v is None:
        return "inf" if v is UNBOUNDED else None
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def jvec(x):
    return None if x is None else [jnum(v) for v in np.asarray(x, dtype=float)]


class Report:
    def __init__(self, command: str, argv: list[str]):
        self.lines = [f"command: errbound {' '.join(argv)}"]
        self.data: dict = {"command": command, "argv": list(argv)}
        self.exit = EXIT_OK

    def line(self, text: str = ""):
        self.lines.append(text)

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in sorted(result.cells, key=lambda c: (c.eps, c.anchor_id, c.direction_id)):
        w.writerow([fmt_real(c.eps), c.anchor_id, c.direction_id, fmt_real(c.lower_bound), fmt_real(c.sigma_sampled)])
    return buf.getvalue()


def _sampler(args) -> SamplerSpec:
    return SamplerSpec(seed=args.seed, count=args.samples, radii=tuple(parse_list(args.radii)))


# ---------------------------------------------------------------------------
# commands


def cmd_hoffman(args, rep: Report):
    system = load_system(args.path)
    sampler = _sampler(args)
    rep.line(f"config: max_size={args.max_size or len(system)} seed={args.seed} samples={args.samples} radii={args.radii}")
    report = hoffman_report(system, args.max_size, sampler)
    cat = report.catalog
    rep.line(f"realizable active sets: {len(cat)}")
    entries = []
    for e in cat.entries:
        flag = "" if e.op.certified else "  (uncertified)"
        box = "  (box-active)" if e.box_active else ""
        rep.line(f"  J={{{','.join(e.labels)}}}  op={num(e.op.value)}  method={e.op.method}  witness={vec(e.witness)}{flag}{box}")
        entries.append({"J": list(e.labels), "op": jnum(e.op.value), "method": e.op.method, "certified": e.op.certified, "witness": jvec(e.witness)})
    cert = "certified" if report.lower_bound_certified else "estimate"
    rep.line(f"lower_bound: {num(report.lower_bound)} ({cert})")
    rep.line(f"sigma_sampled: {num(report.sigma_sampled)}  witness={vec(report.sigma_witness)}")
    rep.line(f"verdict: {report.stability_verdict}")
    for note in report.notes:
        rep.line(f"note: {note}")
    rep.data.update(
        catalog=entries,
        lower_bound=jnum(report.lower_bound),
        lower_bound_certified=report.lower_bound_certified,
        sigma_sampled=jnum(report.sigma_sampled),
        verdict=report.stability_verdict,
    )
    if args.sweep:
        anchors = [parse_vec(a) for a in args.anchor] or None
        directions = [parse_vec(d) for d in args.direction] or None
        result = perturbation_sweep(
            system, parse_list(args.sweep), args.directions, anchors, directions, args.seed, sampler, args.max_size
        )
        rep.line("sweep (eps, min lower_bound, min sigma_sampled):")
        for eps, lb, sg in result.summary():
            rep.line(f"  {num(eps)}  {num(lb)}  {num(sg)}")
        failed = [c for c in result.cells if c.error]
        for c in failed:
            rep.line(f"  cell eps={num(c.eps)} anchor={c.anchor_id} direction={c.direction_id} failed: {c.error}")
        text = sweep_csv(result)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
            rep.line(f"sweep csv: {args.out}")
        else:
            rep.line("sweep csv:")
            rep.lines.extend(text.rstrip("\n").split("\n"))
        rep.data["sweep"] = [
            {"eps": c.eps, "anchor_id": c.anchor_id, "direction_id": c.direction_id, "lower_bound": jnum(c.lower_bound), "sigma_sampled": jnum(c.sigma_sampled), "error": c.error}
            for c in result.cells
        ]
    if report.stability_verdict == "inconclusive":
        rep.exit = EXIT_INCONCLUSIVE


def cmd_phi(args, rep: Report):
    f = as_function(load_target(args))
    x = parse_vec(args.at)
    res = phi(f, x, seed=args.seed)
    rep.line(f"x: {vec(x)}")
    rep.line(f"f(x): {num(f(x))}")
    rep.line(f"phi: {num(res.value)}")
    rep.line(f"argmin_h: {vec(res.argmin_h)}")
    if res.active:
        rep.line(f"active: {{{','.join(res.active)}}}")
    rep.line(f"method: {res.method}")
    rep.line(f"certified: {'yes' if res.certified else 'no'}")
    rep.data.update(x=jvec(x), phi=jnum(res.value), argmin_h=jvec(res.argmin_h), method=res.method, certified=res.certified, active=list(res.active))
    if not res.certified:
        rep.exit = EXIT_INCONCLUSIVE


def _route(rep: Report, name: str, est):
    rep.line(f"{name}: {num(est.value)}  witness={vec(est.witness)}  samples={est.sample_count}")
    rep.line(f"  per region: {' '.join(num(v) for v in est.per_region)}")
    for note in est.notes:
        rep.line(f"  note: {note}")
    return {"value": jnum(est.value), "witness": jvec(est.witness), "samples": est.sample_count, "per_region": [jnum(v) for v in est.per_region], "certified": est.certified}


def _gap(a, b) -> float:
    if a is UNBOUNDED or b is UNBOUNDED:
        return 0.0 if a is b else math.inf
    return abs(a - b)


def cmd_modulus(args, rep: Report):
    f = as_function(load_target(args))
    if args.local:
        if args.at is None:
            raise InvalidInputError("--local needs --at")
        anchor = parse_vec(args.at)
        radii = tuple(parse_list(args.radii)) if args.radii else (1e-1, 1e-2, 1e-3)
        rep.line(f"config: local at={vec(anchor)} radii={','.join(num(r) for r in radii)} samples={args.samples} seed={args.seed}")
        lm = local_modulus(f, anchor, radii, args.samples, args.seed)
        direct, primal = lm.direct, lm.primal
    else:
        sampler = SamplerSpec(seed=args.seed, count=args.samples, radii=tuple(parse_list(args.radii or "1,10,100")))
        rep.line(f"config: global radii={','.join(num(r) for r in sampler.radii)} samples={args.samples} seed={args.seed}")
        direct = global_modulus_direct(f, sampler=sampler)
        primal = global_modulus_primal(f, sampler=sampler)
    rep.data["direct"] = _route(rep, "direct ratio", direct)
    rep.data["primal"] = _route(rep, "primal phi", primal)
    gap = _gap(direct.value, primal.value)
    rep.line(f"gap: {num(gap)}")
    rep.data["gap"] = jnum(gap)
    if not primal.certified:
        rep.line("note: primal route uses uncertified phi values")


def _witness_ratio(g, z) -> float:
    d = distance_to_level_set(g, z)
    return 0.0 if math.isinf(d) else as_function(g)(z) / d


def cmd_stability(args, rep: Report):
    target = load_target(args)
    f = as_function(target)
    if args.at is not None:
        x = parse_vec(args.at)
        cert = point_stability(f, x, args.tol)
        rep.line(f"scope: point at {vec(x)}")
        rep.line(f"phi: {num(cert.phi_value)}")
        rep.line(f"verdict: {cert.verdict}")
        rep.data.update(scope="point", phi=jnum(cert.phi_value), verdict=cert.verdict)
        if cert.verdict == "stable":
            rep.line(f"tau: {num(cert.tau)}")
            if args.eps < cert.tau:
                rep.line(f"tilt margin at eps={num(args.eps)}: |phi_g| >= {num(cert.margin(args.eps))}")
        elif cert.verdict == "unstable":
            d = destabilizer_search(target, args.eps, anchor=x)
            _destabilizer_lines(rep, d)
        else:
            rep.exit = EXIT_INCONCLUSIVE
        return
    tau, cert = boundary_condition_3_9(target)
    rep.line("scope: global")
    rep.line(f"boundary min |phi|: {num(tau)}  ({cert.notes[0]})")
    rep.line(f"boundary condition: {'holds' if cert.verdict == 'stable' else 'fails'}")
    t = args.tau if args.tau is not None else tau
    check = interior_condition_3_20(target, t, args.seed)
    rep.line(f"interior condition at tau={num(t)}: {'holds' if check.holds else 'refuted'} ({check.label})")
    for s, v, pair in check.tiers:
        where = "-" if pair is None else f"z={vec(pair.z)} x={vec(pair.x)} slope={num(pair.slope)}"
        rep.line(f"  slope <= {num(s)}: min |phi(z)| = {num(v)}  {where}")
    for note in check.notes:
        rep.line(f"  note: {note}")
    rep.data.update(scope="global", boundary_tau=jnum(tau), boundary_verdict=cert.verdict, interior_holds=check.holds)
    if not check.holds:
        try:
            d = destabilizer_search(target, args.eps, seed=args.seed)
        except NotApplicableError as exc:
            rep.line(f"destabilizer: not found ({exc})")
        else:
            _destabilizer_lines(rep, d)
    if cert.verdict == "inconclusive":
        rep.exit = EXIT_INCONCLUSIVE


def _destabilizer_lines(rep: Report, d):
    t = d.tilt
    rep.line(f"destabilizer ({d.case}): eps={num(t.magnitude)} direction={vec(t.direction)} anchor={vec(t.anchor)}")
    rep.line(f"  witness z={vec(d.witness)}  -phi_g(z)={num(-d.phi_g)}  bound={num(d.bound)}")
    ratio = _witness_ratio(d.g, d.witness)
    rep.line(f"  perturbed modulus <= {num(-d.phi_g)}  (ratio g(z)/d(z) = {num(ratio)})")
    rep.data["destabilizer"] = {"case": d.case, "witness": jvec(d.witness), "minus_phi_g": jnum(-d.phi_g), "bound": jnum(d.bound), "ratio": jnum(ratio)}


def cmd_oracle_check(args, rep: Report):
    system = load_system(args.path)
    if system.dim > 3:
        raise InvalidInputError("oracle-check supports dimension <= 3")
    cfg = OracleConfig(seed=args.seed)
    rep.line(f"config: seed={args.seed} resolution={cfg.resolution} tolerance={num(ORACLE_TOL)}")
    cat = enumerate_active_sets(system)
    failures = []
    worst = {"sphere_min": 0.0, "min_norm": 0.0, "projection": 0.0}
    sets = [e.labels for e in cat.entries] or [tuple(system.labels)]
    for J in sets:
        A = system.rows_for(J)
        k = sphere_min_over_set(A, system.norm).value
        o = brute_sphere_min(A, cfg, system.norm.kind)
        err = abs(k - o) / max(1.0, abs(o))
        worst["sphere_min"] = max(worst["sphere_min"], err)
        if err > ORACLE_TOL:
            failures.append({"check": "sphere_min", "J": list(J), "kernel": k, "oracle": o})
        if system.norm.kind == "euclidean":
            k = min_norm_point(A).distance
            o = brute_min_norm_distance(A, cfg)
            err = abs(k - o) / max(1.0, abs(o))
            worst["min_norm"] = max(worst["min_norm"], err)
            if err > ORACLE_TOL:
                failures.append({"check": "min_norm", "J": list(J), "kernel": k, "oracle": o})
    P = Polyhedron(system.A, system.b)
    rng = np.random.default_rng(args.seed)
    pts = np.vstack([sample_ball(rng, args.points, system.dim, r) for r in (1.0, 10.0)])
    for x in pts:
        k = project_polyhedron(x, P).distance
        o = brute_distance(x, P, cfg).distance
        if math.isinf(k) and math.isinf(o):
            continue
        err = abs(k - o) / max(1.0, abs(o))
        worst["projection"] = max(worst["projection"], err)
        if err > ORACLE_TOL:
            failures.append({"check": "projection", "x": [float(v) for v in x], "kernel": k, "oracle": o})
    for name, w in worst.items():
        rep.line(f"{name}: max relative discrepancy {num(w)}")
    rep.line(f"result: {'pass' if not failures else 'FAIL'}")
    for fcase in failures:
        rep.line("failing case: " + json.dumps(fcase, sort_keys=True))
    rep.data.update(worst={k: jnum(v) for k, v in worst.items()}, failures=failures)
    if failures:
        rep.exit = EXIT_NUMERIC


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="errbound", description="Error bounds, their moduli and stability for convex inequalities.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, target=True):
        if target:
            sp.add_argument("path", nargs="?", help="system file (JSON); shipped corpus names also work")
            sp.add_argument("--function", help=f"named function: {', '.join(named_functions())}")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--json", help="also write the report as JSON to this path")

    h = sub.add_parser("hoffman", help="active sets, Hoffman bounds and perturbation sweeps")
    h.add_argument("path")
    common(h, target=False)
    h.add_argument("--max-size", type=int, default=None)
    h.add_argument("--sweep", help="comma-separated eps grid")
    h.add_argument("--directions", type=int, default=2, help="random directions per sweep, besides +/- units")
    h.add_argument("--anchor", action="append", default=[], help="sweep anchor (repeatable); default: catalog witnesses")
    h.add_argument("--direction", action="append", default=[], help="sweep direction (repeatable)")
    h.add_argument("--samples", type=int, default=500)
    h.add_argument("--radii", default="1,10")
    h.add_argument("--out", help="CSV path for the sweep table")

    ph = sub.add_parser("phi", help="inf over unit h of the directional derivative")
    common(ph)
    ph.add_argument("--at", required=True)

    m = sub.add_parser("modulus", help="global or local error-bound modulus, two routes")
    common(m)
    g = m.add_mutually_exclusive_group(required=True)
    g.add_argument("--global", dest="global_", action="store_true")
    g.add_argument("--local", action="store_true")
    m.add_argument("--at")
    m.add_argument("--radii", help="comma-separated radii (shells, or shrinking balls with --local)")
    m.add_argument("--samples", type=int, default=200)

    s = sub.add_parser("stability", help="point or global stability verdicts")
    common(s)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--at")
    g.add_argument("--global", dest="global_", action="store_true")
    s.add_argument("--tau", type=float, default=None)
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--tol", type=float, default=None, help="zero band for phi (default scales with gradients)")

    o = sub.add_parser("oracle-check", help="compare kernels against brute-force oracles")
    o.add_argument("path")
    common(o, target=False)
    o.add_argument("--points", type=int, default=20)
    return p


COMMANDS = {
    "hoffman": cmd_hoffman,
    "phi": cmd_phi,
    "modulus": cmd_modulus,
    "stability": cmd_stability,
    "oracle-check": cmd_oracle_check,
}


def main(argv: list[str] | None = None, out=None, err=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"errbound: {exc}", file=err)
        return EXIT_INPUT
    rep = Report(args.command, argv)
    try:
        COMMANDS[args.command](args, rep)
    except (InvalidInputError, NotApplicableError, ValueError) as exc:
        print(f"errbound: {exc}", file=err)
        return EXIT_INPUT
    except NumericFailure as exc:
        print(f"errbound: numeric failure: {exc}", file=err)
        return EXIT_NUMERIC
    except InconclusiveError as exc:
        rep.line(f"inconclusive: {exc}")
        out.write(rep.text())
        return EXIT_INCONCLUSIVE
    except ErrboundError as exc:
        print(f"errbound: {exc}", file=err)
        return EXIT_NUMERIC
    out.write(rep.text())
    if args.json:
        rep.data["exit"] = rep.exit
        Path(args.json).write_text(json.dumps(rep.data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return rep.exit


def main_entry() -> None:
    sys.exit(main())
