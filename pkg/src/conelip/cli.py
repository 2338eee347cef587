"""Command-line front end.

Exit codes: 0 when every check passes, 1 for a refused certificate or a
failed check, 2 for unreadable or malformed input.
"""

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import io
from .convex_core import (
    ScalarSection,
    chord_slope_check,
    convexity_margin,
    epigraph_midpoint_margin,
    map_from_dict,
)
from .errors import CertificationRefused, InputError, ResourceError
from .lipschitz_certify import (
    certify_1d,
    certify_ball,
    certify_compact,
    certify_equi,
    certify_o_lipschitz,
    check_certificate,
    grid_slope_max,
)
from .metric_variants import GraduatedMetric, lcs_certify, lp_certify, metric_from_dict
from .order_core import (
    cone_from_dict,
    dyadic_samples,
    identity_residuals,
    seminorm_from_dict,
    sup_norm,
)
from .order_core.lattice import ZERO_TOL_KEYS
from .pathology import (
    build_block_pairs,
    polynomial_example,
    vesely_step1,
    vesely_step2,
    vesely_step3,
    write_polynomial_csv,
    write_step1_csv,
)

DEFAULT_TOL = 1e-9
COMMANDS = ("certify", "verify", "pathology", "lattice-check")


@dataclass
class RunConfig:
    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    seed: int = 0
    pairs: int = 10_000
    tolerance: float = DEFAULT_TOL
    options: Optional[argparse.Namespace] = None


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------

def _map(doc, where):
    return io.parse_with(map_from_dict, io.field(doc, "map", where), f"{where}.map")


def _seminorm(doc, key, where, default=None, required=True):
    if key not in doc:
        if required and default is None:
            raise io.ParseError(f"missing field {key!r}", where)
        return default
    return io.parse_with(seminorm_from_dict, doc[key], f"{where}.{key}")


def _num(doc, key, where):
    v = io.field(doc, key, where)
    try:
        return float(v)
    except (TypeError, ValueError):
        raise io.ParseError(f"field {key!r} must be a number", where) from None


def _vec(doc, key, where):
    v = io.field(doc, key, where)
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise io.ParseError(f"field {key!r} must be a list of numbers", where) from None
    return arr


def _build_certificate(doc, cfg):
    w = "$"
    formula = io.field(doc, "formula", w)
    if formula == "scalar-1d":
        f = _map(doc, w)
        a, alpha, beta, b = (float(v) for v in io.field(doc, "points", w))
        phi = ScalarSection.of(f, int(doc.get("index", 0)))
        cert = certify_1d(phi, a, alpha, beta, b)
        cert.inputs["grid_slope_max"] = grid_slope_max(phi, alpha, beta, int(doc.get("grid", 100_001)))
        return cert, phi
    if formula == "ball-2beta":
        f = _map(doc, w)
        q = _seminorm(doc, "q", w, required=False)
        p = _seminorm(doc, "p", w)
        beta = doc.get("beta")
        return certify_ball(f, q, p, _vec(doc, "x0", w), _num(doc, "R", w), _num(doc, "r", w),
                            None if beta is None else float(beta), seed=cfg.seed), f
    if formula == "o-lipschitz":
        f = _map(doc, w)
        p = _seminorm(doc, "p", w, default=sup_norm(f.domain_dim))
        return certify_o_lipschitz(f, _vec(doc, "x0", w), _num(doc, "R", w), _num(doc, "r", w),
                                   _vec(doc, "z", w), p, seed=cfg.seed), f
    if formula == "equi-family":
        maps = [io.parse_with(map_from_dict, m, f"$.maps[{i}]")
                for i, m in enumerate(io.field(doc, "maps", w))]
        q = _seminorm(doc, "q", w, required=False)
        p = _seminorm(doc, "p", w)
        cert = certify_equi(maps, q, p, _vec(doc, "x0", w), _num(doc, "R", w), _num(doc, "r", w),
                            seed=cfg.seed)
        return cert, maps
    if formula == "compact-cover":
        f = _map(doc, w)
        q = _seminorm(doc, "q", w, required=False)
        local = []
        for i, loc in enumerate(io.field(doc, "local", w)):
            lw = f"$.local[{i}]"
            p = _seminorm(loc, "p", lw)
            beta = loc.get("beta")
            local.append(certify_ball(f, q, p, _vec(loc, "x0", lw), _num(loc, "R", lw), _num(loc, "r", lw),
                                      None if beta is None else float(beta), seed=cfg.seed))
        return certify_compact(f, _vec(doc, "cloud", w), local), f
    if formula == "lp-metric":
        f = _map(doc, w)
        a = doc.get("a")
        return lp_certify(f, _vec(doc, "x0", w), _num(doc, "r", w), None if a is None else float(a),
                          float(doc.get("p", 0.5)), f.domain_dim, seed=cfg.seed), f
    if formula == "lcs-metric":
        f = _map(doc, w)
        metric = io.parse_with(metric_from_dict, io.field(doc, "metric", w), "$.metric")
        if not isinstance(metric, GraduatedMetric):
            raise io.ParseError("lcs-metric needs a graduated metric", "$.metric")
        m = int(io.field(doc, "m", w))
        if not 1 <= m <= len(metric.seminorms):
            raise io.ParseError("m is outside the seminorm family", "$.m")
        pr = io.field(doc, "prior", w)
        beta = pr.get("beta")
        prior = certify_ball(f, None, metric.seminorms[m - 1], _vec(pr, "x0", "$.prior"),
                             _num(pr, "R", "$.prior"), _num(pr, "r", "$.prior"),
                             None if beta is None else float(beta), seed=cfg.seed)
        return lcs_certify(f, metric, prior, m), f
    raise io.ParseError(f"unknown formula {formula!r}", "$.formula")


def run_certify(cfg):
    doc = io.load_file(cfg.input)
    try:
        cert, target = _build_certificate(doc, cfg)
    except CertificationRefused as exc:
        report = {"status": "refused", "reason": exc.reason,
                  "witness": None if exc.witness is None else np.asarray(exc.witness).tolist(),
                  "detail": exc.detail}
        return 1, report
    members = target if isinstance(target, list) else [target]
    ok = True
    ratios = []
    for i, f in enumerate(members):
        ok &= check_certificate(cert, f, cfg.pairs, cfg.seed + i, cfg.tolerance)
        ratios.append(cert.oracle["max_ratio"])
    if len(members) > 1:
        cert.oracle = {"pairs": cfg.pairs, "max_ratio": max(ratios), "seed": cfg.seed,
                       "members": len(members)}
    report = {"status": "certified" if ok else "oracle-violation", "certificate": cert.to_dict()}
    return (0 if ok else 1), report


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _check(value, passed):
    return {"pass": bool(passed), "value": value}


def run_verify(cfg):
    doc = io.load_file(cfg.input)
    rng = np.random.default_rng(cfg.seed)
    n = 2000
    checks = {}
    if "cone" in doc:
        C = io.parse_with(cone_from_dict, doc["cone"], "$.cone")
        G = C.unit_generators
        lam = rng.exponential(size=(n, G.shape[0]))
        V, W = lam @ G, rng.exponential(size=(n, G.shape[0])) @ G
        a, b = rng.uniform(0, 3, size=(2, n, 1))
        checks["cone.closure"] = _check(int(np.sum(~C.contains(a * V + b * W))), np.all(C.contains(a * V + b * W)))
        X = rng.normal(size=(n, C.dim))
        checks["order.reflexive"] = _check(int(np.sum(~C.contains(X - X))), np.all(C.contains(X - X)))
        trans = np.all(C.contains((X + V) + W - X))
        checks["order.transitive"] = _check(bool(trans), trans)
        checks["cone.pointed"] = _check(C.is_pointed(), True)
    if "seminorm" in doc:
        p = io.parse_with(seminorm_from_dict, doc["seminorm"], "$.seminorm")
        X, Y = rng.normal(size=(2, n, p.dim))
        lam = rng.normal(size=n)
        hom = float(np.max(np.abs(p(lam[:, None] * X) - np.abs(lam) * p(X)) / (1 + p(X))))
        sub = float(np.max((p(X + Y) - p(X) - p(Y)) / (1 + p(X) + p(Y))))
        checks["seminorm.homogeneous"] = _check(hom, hom <= cfg.tolerance)
        checks["seminorm.subadditive"] = _check(sub, sub <= cfg.tolerance)
    for i, md in enumerate(doc.get("maps", [])):
        f = io.parse_with(map_from_dict, md, f"$.maps[{i}]")
        conv = convexity_margin(f, samples=n, seed=cfg.seed)
        checks[f"map[{i}].convexity"] = _check(conv, conv >= -cfg.tolerance)
        if f.target_dim == 1:
            epi = epigraph_midpoint_margin(f, samples=n, seed=cfg.seed)
            checks[f"map[{i}].epigraph_midpoint"] = _check(epi, epi >= -cfg.tolerance)
        worst = np.inf
        sub_rng = np.random.default_rng(cfg.seed)
        region = f.domain
        for _ in range(200):
            base = region.sample(1, sub_rng)[0] if region is not None else sub_rng.uniform(-1, 1, f.domain_dim)
            other = region.sample(1, sub_rng)[0] if region is not None else sub_rng.uniform(-1, 1, f.domain_dim)
            ts = np.sort(sub_rng.uniform(0, 1, 3))
            if len(set(ts)) < 3:
                continue
            rep = chord_slope_check(ScalarSection(f, base, other - base, None), *ts)
            worst = min(worst, min(rep.margins.values()))
        checks[f"map[{i}].chords"] = _check(float(worst), worst >= -cfg.tolerance)
    if not checks:
        raise io.ParseError("nothing to verify: give 'cone', 'seminorm' or 'maps'", "$")
    ok = all(c["pass"] for c in checks.values())
    return (0 if ok else 1), {"status": "pass" if ok else "fail", "checks": checks}


# ---------------------------------------------------------------------------
# pathology
# ---------------------------------------------------------------------------

def run_pathology(cfg):
    o = cfg.options
    chosen = {k for k in ("step1", "step2", "step3", "polynomial") if getattr(o, k)}
    chosen = chosen or {"step1", "step2", "step3", "polynomial"}
    report, ok = {}, True
    csv_dir = Path(o.csv_dir) if o.csv_dir else None
    if csv_dir:
        csv_dir.mkdir(parents=True, exist_ok=True)
    if "step1" in chosen:
        pairs = build_block_pairs(o.blocks)
        reps = [vesely_step1(pairs, k) for k in range(1, o.blocks + 1)]
        good = all(r.order_ok and r.norm_z_n >= 1.5 ** r.n - 0.5 ** r.n - 1e-12 for r in reps)
        ok &= good
        report["step1"] = {"blocks": o.blocks, "pass": good,
                           "rows": [{"n": r.n, "norm_z_n": r.norm_z_n, "tail_norm": r.tail_norm,
                                     "lower_bound": r.lower_bound, "order_ok": r.order_ok} for r in reps]}
        if csv_dir:
            write_step1_csv(csv_dir / "step1.csv", reps)
    if "step2" in chosen or "step3" in chosen:
        pairs = build_block_pairs(o.step2_blocks)
        s2 = vesely_step2(o.lam, o.alpha, pairs, o.n_max)
        good = all(v for k, v in s2.checks.items() if isinstance(v, bool))
        ok &= good
        report["step2"] = {"lambda": o.lam, "alpha": o.alpha, "n_max": o.n_max, "pass": good,
                           "blocks_used": s2.blocks_used, "checks": s2.checks}
        if "step3" in chosen:
            d = 2
            x_star, v = np.eye(d)[0], np.eye(d)[0]
            s3 = vesely_step3(s2.phi, x_star, v, d, lam=o.lam, n_max=o.n_max, seed=cfg.seed)
            good = s3.slab_bounded and all(nv > n for n, nv in enumerate(s3.norms_along_v))
            ok &= good
            report["step3"] = {"dim": d, "x_star": x_star, "v": v, "norms_along_v": s3.norms_along_v,
                               "slab_order_bounded": s3.slab_bounded, "pass": good}
    if "polynomial" in chosen:
        ns = o.n or [1, 4, 100]
        reps = [polynomial_example(k) for k in ns]
        rows = [{"n": r.n, "norm_Pn": r.norm_Pn, "f_Pn": r.f_Pn, "ratio": r.ratio,
                 "sampled_norm": r.sampled_norm} for r in reps]
        good = all(abs(r.sampled_norm - r.norm_Pn) <= 1e-6 * r.norm_Pn for r in reps)
        ok &= good
        report["polynomial"] = {"rows": rows, "pass": good}
        if csv_dir:
            write_polynomial_csv(csv_dir / "polynomial.csv", reps)
    report["status"] = "pass" if ok else "fail"
    return (0 if ok else 1), report


# ---------------------------------------------------------------------------
# lattice-check
# ---------------------------------------------------------------------------

def run_lattice_check(cfg):
    o = cfg.options
    rng = np.random.default_rng(cfg.seed)
    X, Y, Z = (dyadic_samples(rng, (o.samples, o.dim)) for _ in range(3))
    res = identity_residuals(X, Y, Z)
    table = {}
    for key, val in res.items():
        tol = 0.0 if key in ZERO_TOL_KEYS else 1e-12
        table[key] = {"residual": val, "tolerance": tol, "pass": val <= tol}
    ok = all(r["pass"] for r in table.values())
    return (0 if ok else 1), {"status": "pass" if ok else "fail", "seed": cfg.seed,
                              "samples": o.samples, "dim": o.dim, "identities": table}


RUNNERS = {"certify": run_certify, "verify": run_verify, "pathology": run_pathology,
           "lattice-check": run_lattice_check}


def run(cfg):
    """Execute one command; returns (exit status, report dict)."""
    try:
        return RUNNERS[cfg.command](cfg)
    except io.ParseError as exc:
        return 2, {"status": "parse-error", "error": str(exc), "location": exc.location}
    except (InputError, ResourceError) as exc:
        return 2, {"status": "input-error", "error": str(exc)}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _env_seed():
    raw = os.environ.get("CONELIP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"CONELIP_SEED must be an integer, got {raw!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $CONELIP_SEED or 0)")
    common.add_argument("--pairs", type=int, default=10_000, help="oracle pair count")
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOL, help="relative check tolerance")

    ap = argparse.ArgumentParser(prog="conelip", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("certify", "verify"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--input", required=True, help="JSON problem description")
    sp = sub.add_parser("pathology", parents=[common])
    sp.add_argument("--input", help="ignored; accepted for uniformity")
    sp.add_argument("--step1", action="store_true")
    sp.add_argument("--step2", action="store_true")
    sp.add_argument("--step3", action="store_true")
    sp.add_argument("--polynomial", action="store_true")
    sp.add_argument("--n", type=int, action="append", help="polynomial degree (repeatable)")
    sp.add_argument("--blocks", type=int, default=8, help="block count for step 1")
    sp.add_argument("--step2-blocks", type=int, default=30, help="block count for steps 2-3")
    sp.add_argument("--lam", type=float, default=0.5)
    sp.add_argument("--alpha", type=float, default=1.25)
    sp.add_argument("--n-max", type=int, default=6)
    sp.add_argument("--csv-dir", help="also write CSV tables into this directory")
    sp = sub.add_parser("lattice-check", parents=[common])
    sp.add_argument("--input", help="ignored; accepted for uniformity")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--dim", type=int, default=8)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, getattr(args, "input", None), args.output,
                    args.seed if args.seed is not None else _env_seed(), args.pairs, args.tolerance, args)
    status, report = run(cfg)
    text = io.dumps(report) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    if status == 2:
        sys.stderr.write(f"conelip: {report.get('error')}\n")
    return status


if __name__ == "__main__":
    sys.exit(main())
