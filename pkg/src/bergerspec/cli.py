"""Command-line entry point: ``bergerspec <command> [options]``.

Exit codes: 0 all checks pass, 1 a certification failed, 2 invalid configuration.
"""

from dataclasses import dataclass, field, fields
import argparse
import csv
import io
import json
import logging
import math
import os
import sys

import numpy as np

from .config import DEFAULT_T_GRID, DEFAULT_TOLERANCES, T_MIN_MARGIN, Tolerances
from .errors import BergerError, KillingPreconditionError, NotFiniteError, NotFreeError
from .groups import (
    FiniteGroup,
    icosian_relation_residual,
    invariance_residual,
    is_free_action,
    load_group,
    noninvariance_witness,
    shipped_group_path,
)
from .liegroup import (
    LeftInvariantMetric,
    corollary_invariance,
    left_invariant_spectrum,
    predicted_stretched_lambda1,
    shrinking_family,
    stretched_family,
)
from .sampling import sphere_points, unit_vectors
from .spectral import (
    QUADRATURE_T_MIN,
    lambda1_branch,
    lambda1_functional,
    predicted_functional,
    quadrature_rayleigh_spectrum,
    spectra_to_csv,
    spectrum,
)
from .sphere import RoundSphere, VOL_S3, berger_metric
from .tensor import (
    DeformedMetric,
    ResidualReport,
    christoffel_delta_bruteforce,
    deformed_christoffel_delta,
    killing_report,
    sasaki_residual,
    trace_residuals,
    verify_deformed_laplacian,
)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

LIE_T_GRID = (1.0, 10.0, 100.0, 1000.0)
SHRINK_T_GRID = (10.0, 100.0, 1000.0, 10000.0)
CROSS_T_GRID = (0.0, 1.0, 10.0)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    t_grid: tuple = DEFAULT_T_GRID
    L: int = 4
    N: int = 1 << 16
    seed: int = 0
    group: str = None
    out: str = None
    verify: bool = False
    samples: int = 200
    field_kind: str = "hopf"
    tolerances: Tolerances = field(default_factory=Tolerances)
    shrink_grid: tuple = SHRINK_T_GRID
    metric: str = None

    def validate(self):
        if not self.t_grid:
            raise ConfigError("empty t grid")
        if any(not math.isfinite(t) for t in self.t_grid):
            raise ConfigError("t grid contains non-finite values")
        if self.command in ("verify-lemma", "spectrum", "lambda1-curve", "group-certify"):
            bad = [t for t in self.t_grid if t <= -1.0 + T_MIN_MARGIN]
            if bad:
                raise ConfigError(f"singular deformation: t = {bad[0]} <= -1")
        if self.command in ("spectrum", "lambda1-curve"):
            if not 2 <= self.L <= 8:
                raise ConfigError(f"L must be in 2..8, got {self.L}")
            low = [t for t in self.t_grid if t < -0.99]
            if low:
                raise ConfigError(f"exact spectra need t >= -0.99, got {low[0]}")
        if self.command == "spectrum" and self.verify:
            if self.N < 1 << 14:
                raise ConfigError("quadrature needs N >= 2^14")
        if self.command == "liegroup":
            if any(t < 0 for t in self.t_grid) or any(t < 0 for t in self.shrink_grid):
                raise ConfigError("Lie-group family parameters must be >= 0")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        if self.field_kind not in ("hopf", "gradient"):
            raise ConfigError(f"unknown field {self.field_kind!r}")
        if self.group is not None and not os.path.exists(self.group):
            raise ConfigError(f"group file not found: {self.group}")
        if self.metric is not None and not os.path.exists(self.metric):
            raise ConfigError(f"metric file not found: {self.metric}")
        for f in fields(self.tolerances):
            if not getattr(self.tolerances, f.name) > 0:
                raise ConfigError(f"tolerance {f.name} must be positive")
        return self


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _write(cfg, name, text):
    if cfg.out is None:
        return
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit(cfg, name, payload):
    text = _dump(payload)
    _write(cfg, name, text)
    sys.stdout.write(text)


# --------------------------------------------------------------------------


def cmd_verify_lemma(cfg):
    tol = cfg.tolerances
    checks = []
    for n in (3, 5):
        sphere = RoundSphere(n)
        samples = sphere.sample_points(cfg.samples, cfg.seed)
        if cfg.field_kind == "hopf":
            Y = sphere.hopf_field()
        else:
            Y = sphere.gradient_field(sphere.coordinate_function(1))
        rep = killing_report(Y, sphere.metric, samples)
        ktol = tol.killing_tol if Y.deriv_mode == "analytic" else tol.fd_tol
        checks.append(
            ResidualReport(f"killing[n={n}]", len(samples), rep.residuals(), ktol, rep.passes(ktol)).to_dict()
        )
        u = sphere.coordinate_function(1)
        sub = samples[: min(100, len(samples))]
        for t in cfg.t_grid:
            unit = cfg.field_kind == "hopf"
            dm = DeformedMetric(sphere.metric, Y, t, unit_length=unit)
            try:
                chris = max(
                    float(np.max(np.abs(deformed_christoffel_delta(dm, p, tol) - christoffel_delta_bruteforce(dm, p))))
                    for p in sub
                )
                traces = [trace_residuals(dm, p, tol) for p in sub]
                tr = max(max(a, b) for a, b in traces)
                lemma = verify_deformed_laplacian(dm, u, samples, tol)
            except KillingPreconditionError as exc:
                checks.append(
                    ResidualReport(
                        f"killing_precondition[n={n},t={t}]",
                        len(samples),
                        {"killing": exc.residual},
                        ktol,
                        False,
                    ).to_dict()
                )
                continue
            checks.append(
                ResidualReport(f"christoffel_closed_form[n={n},t={t}]", len(sub), {"max_abs": chris},
                               tol.christoffel_tol, chris <= tol.christoffel_tol).to_dict()
            )
            checks.append(
                ResidualReport(f"trace_identities[n={n},t={t}]", len(sub), {"max_abs": tr},
                               tol.identity_tol, tr <= tol.identity_tol).to_dict()
            )
            checks.append(
                ResidualReport(f"deformed_laplacian[n={n},t={t}]", len(samples), {"max_abs": lemma},
                               tol.lemma_tol, lemma <= tol.lemma_tol).to_dict()
            )
        pts = samples[:50]
        vecs = unit_vectors(20, n, cfg.seed)
        pairs = list(zip(vecs[:10], vecs[10:]))
        try:
            sas = sasaki_residual(sphere.metric, Y, pts, pairs, tol)
            checks.append(
                ResidualReport(f"sasaki[n={n}]", len(pts), {"max_norm": sas}, tol.sasaki_tol,
                               sas <= tol.sasaki_tol).to_dict()
            )
        except KillingPreconditionError as exc:
            checks.append(
                ResidualReport(f"sasaki_killing_precondition[n={n}]", len(pts), {"killing": exc.residual},
                               ktol, False).to_dict()
            )
    ok = all(c["pass"] for c in checks)
    failed = [c["check"] for c in checks if not c["pass"]]
    _emit(cfg, "verify_lemma.json", {
        "schema": SCHEMA, "command": "verify-lemma", "pass": ok, "failed": failed, "checks": checks,
        "tolerances": cfg.tolerances.as_dict(),
    })
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spectrum(cfg):
    results = [spectrum(cfg.L, t) for t in cfg.t_grid]
    branch = lambda1_branch(cfg.t_grid, cfg.L, cfg.tolerances.branch_tol)
    payload = {
        "schema": SCHEMA, "command": "spectrum", "L": cfg.L,
        "branch": branch.to_dict(), "spectra": [r.to_dict() for r in results],
    }
    ok = branch.branch_intact and branch.continuity_ok
    all_results = list(results)
    if cfg.verify:
        comparisons = []
        qL = min(cfg.L, 3)
        for t in cfg.t_grid:
            if t < QUADRATURE_T_MIN:
                comparisons.append({"t": t, "skipped": "quadrature refuses t < -0.9"})
                continue
            quad = quadrature_rayleigh_spectrum(qL, t, cfg.N, cfg.seed)
            exact = spectrum(qL, t)
            rel = np.abs(quad.eigenvalues - exact.eigenvalues) / np.maximum(np.abs(exact.eigenvalues), 1.0)
            worst = float(rel.max())
            passed = worst <= cfg.tolerances.quadrature_rel_tol
            ok = ok and passed
            comparisons.append({"t": t, "L": qL, "max_rel_error": worst, "pass": passed,
                                "lambda1_quadrature": quad.lambda1, "lambda1_exact": exact.lambda1})
            all_results.append(quad)
        payload["quadrature"] = comparisons
    payload["pass"] = ok
    _write(cfg, "spectrum.csv", spectra_to_csv(all_results))
    _emit(cfg, "spectrum.json", payload)
    return EXIT_OK if ok else EXIT_FAIL


LAMBDA1_COLUMNS = ["t", "lambda1", "volume", "Lambda1", "predicted_Lambda1", "rel_error"]


def cmd_lambda1_curve(cfg):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=LAMBDA1_COLUMNS, lineterminator="\n")
    writer.writeheader()
    rows = []
    for t in cfg.t_grid:
        lam = spectrum(cfg.L, t).lambda1
        vol = math.sqrt(1.0 + t) * VOL_S3
        big = lambda1_functional(t, cfg.L, volume=vol)
        pred = predicted_functional(t)
        rows.append({"t": t, "lambda1": lam, "volume": vol, "Lambda1": big,
                     "predicted_Lambda1": pred, "rel_error": abs(big - pred) / pred})
    for r in rows:
        writer.writerow({k: repr(float(v)) for k, v in r.items()})
    text = buf.getvalue()
    _write(cfg, "lambda1_curve.csv", text)
    sys.stdout.write(text)
    ok = all(r["rel_error"] <= cfg.tolerances.branch_tol for r in rows)
    tail = [r["Lambda1"] for r in rows if r["t"] >= 1]
    ok = ok and all(b > a for a, b in zip(tail, tail[1:]))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_group_certify(cfg):
    path = cfg.group or str(shipped_group_path("binary_icosahedral"))
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"group file is not valid JSON: {exc}") from exc
    name = spec.get("name", os.path.basename(path))
    report = {"schema": SCHEMA, "command": "group-certify", "name": name}
    try:
        G = load_group(spec)
    except (ValueError, NotFiniteError, KeyError, TypeError) as exc:
        report.update({"pass": False, "error": f"{type(exc).__name__}: {exc}"})
        _emit(cfg, "group_certificate.json", report)
        return EXIT_FAIL
    sphere = RoundSphere(3)
    X = sphere_points(1000, 4, cfg.seed)
    report["order"] = G.order
    try:
        cert = is_free_action(G, X)
        report.update({"free": True, "delta_min": cert.delta_min, "delta_exact": cert.delta_exact})
    except NotFreeError as exc:
        report.update({"free": False, "delta_min": exc.distance, "error": str(exc)})
    if isinstance(G, FiniteGroup):
        report["axioms"] = G.axiom_residuals()
        if G.order == 120 and len(G.generators) == 2:
            report["relation_residual"] = icosian_relation_residual(*G.generators)
    samples = sphere.sample_points(min(cfg.samples, 50), cfg.seed)
    inv = {"hopf_field": invariance_residual(sphere.hopf_field(), G, sphere, samples)}
    for t in cfg.t_grid:
        inv[f"berger_t={t}"] = invariance_residual(berger_metric(sphere, t), G, sphere, samples)
    report["invariance_residuals"] = inv
    report["noninvariance_witness"] = noninvariance_witness(sphere.coordinate_function(1), G, sphere, samples)
    ok = (
        report["free"]
        and max(inv.values()) <= cfg.tolerances.invariance_tol
        and (G.order == 1 or report["noninvariance_witness"] > 0.1)
        and all(report.get("axioms", {"ok": True}).values())
    )
    report["pass"] = bool(ok)
    _emit(cfg, "group_certificate.json", report)
    return EXIT_OK if ok else EXIT_FAIL


LIE_COLUMNS = ["family", "t", "lambda1", "volume", "Lambda1", "attaining_spin"]


def cmd_liegroup(cfg):
    rows = []
    for family, grid, fn in (("stretch", cfg.t_grid, stretched_family), ("shrink", cfg.shrink_grid, shrinking_family)):
        for t in grid:
            metric, lam = fn(t)
            spec = left_invariant_spectrum(metric)
            rows.append({"family": family, "t": t, "lambda1": lam, "volume": metric.volume,
                         "Lambda1": lam * metric.volume ** (2 / 3), "attaining_spin": spec.attaining_spin})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=LIE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (v if k == "family" else repr(float(v))) for k, v in r.items()})
    _write(cfg, "liegroup.csv", buf.getvalue())

    stretch = [r["lambda1"] for r in rows if r["family"] == "stretch"]
    shrink = [r["lambda1"] for r in rows if r["family"] == "shrink"]
    vols = [r["volume"] for r in rows]
    volume_spread = max(abs(v - VOL_S3) for v in vols)
    cross = []
    for t in CROSS_T_GRID:
        a = left_invariant_spectrum(np.diag([1.0, 1.0, 1.0 + t])).lambda1
        b = spectrum(4, t).lambda1
        cross.append({"t": t, "irrep": a, "sphere": b, "abs_diff": abs(a - b)})
    predicted = [predicted_stretched_lambda1(t) for t in cfg.t_grid]

    path = cfg.group or str(shipped_group_path("binary_icosahedral"))
    G = load_group(path)
    sphere = RoundSphere(3)
    samples = sphere.sample_points(min(cfg.samples, 30), cfg.seed)
    corollary = []
    if isinstance(G, FiniteGroup):
        for t in cfg.t_grid:
            metric, _ = stretched_family(t)
            c = corollary_invariance(metric, G, sphere, samples, cfg.tolerances.invariance_tol)
            corollary.append({"t": t, "residual": c.residual, "pass": c.passed})

    checks = {
        "stretch_increasing": all(b > a for a, b in zip(stretch, stretch[1:])),
        "shrink_decreasing": all(b < a for a, b in zip(shrink, shrink[1:])),
        "volume_constant": volume_spread <= 1e-12 * VOL_S3,
        "cross_check": all(c["abs_diff"] <= 1e-8 for c in cross),
        "closed_form": all(abs(a - b) <= 1e-9 * b for a, b in zip(stretch, predicted)),
        "corollary": all(c["pass"] for c in corollary),
    }
    payload = {
        "schema": SCHEMA, "command": "liegroup", "rows": rows, "cross_check": cross,
        "corollary": {"group": getattr(G, "name", ""), "order": G.order, "results": corollary},
        "volume_spread": volume_spread, "checks": checks, "pass": all(checks.values()),
    }
    if cfg.metric:
        with open(cfg.metric, encoding="utf-8") as fh:
            Q = np.array(json.load(fh), dtype=float)
        try:
            spec = left_invariant_spectrum(LeftInvariantMetric(Q))
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ConfigError(f"invalid metric: {exc}") from exc
        _write(cfg, "liegroup_spectrum.csv", _irrep_csv(spec))
        payload["metric_spectrum"] = {"lambda1": spec.lambda1, "attaining_spin": spec.attaining_spin,
                                      "volume": spec.volume}
    _emit(cfg, "liegroup.json", payload)
    return EXIT_OK if payload["pass"] else EXIT_FAIL


def _irrep_csv(spec):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["t", "k", "lambda_k", "multiplicity", "method"], lineterminator="\n")
    writer.writeheader()
    for row in spec.rows(t=""):
        writer.writerow({**row, "lambda_k": repr(float(row["lambda_k"]))})
    return buf.getvalue()


COMMANDS = {
    "verify-lemma": cmd_verify_lemma,
    "spectrum": cmd_spectrum,
    "lambda1-curve": cmd_lambda1_curve,
    "group-certify": cmd_group_certify,
    "liegroup": cmd_liegroup,
}


def _float_list(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="bergerspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--t-grid", type=_float_list, default=None, help="comma-separated t values")
        p.add_argument("--L", type=int, default=4, help="degree cutoff")
        p.add_argument("--N", type=int, default=1 << 16, help="quadrature points")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--group", default=None, help="group definition JSON file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--verify", action="store_true", help="cross-check with quadrature")
        p.add_argument("--samples", type=int, default=200)
        p.add_argument("--field", default="hopf", help="hopf | gradient (non-Killing control)")
        p.add_argument("--shrink-grid", type=_float_list, default=None)
        p.add_argument("--metric", default=None, help="3x3 JSON matrix for liegroup")
        for f in fields(Tolerances):
            flag = "--tol-" + f.name.removesuffix("_tol").replace("_", "-")
            p.add_argument(flag, dest=f"tol_{f.name}", type=float, default=None)
    return parser


def config_from_args(args):
    default_grid = LIE_T_GRID if args.command == "liegroup" else DEFAULT_T_GRID
    tol = DEFAULT_TOLERANCES.override(**{f.name: getattr(args, f"tol_{f.name}") for f in fields(Tolerances)})
    return RunConfig(
        command=args.command,
        t_grid=default_grid if args.t_grid is None else args.t_grid,
        L=args.L,
        N=args.N,
        seed=args.seed,
        group=args.group,
        out=args.out,
        verify=args.verify,
        samples=args.samples,
        field_kind=args.field,
        tolerances=tol,
        shrink_grid=SHRINK_T_GRID if args.shrink_grid is None else args.shrink_grid,
        metric=args.metric,
    )


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args).validate()
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except BergerError as exc:
        sys.stderr.write(f"check failed: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
