"""Command-line entry point: runs verification checks on catalog examples
and emits a versioned JSON report plus CSV artifacts.

Exit codes: 0 all checks passed, 1 at least one verification failed,
2 usage or configuration error.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import actions, catalog, convexity, fiber, fields, morse
from . import report as rep

CHUNK = 65536
EXACT_TOL = 1e-8       # equivariance / invariance / commutation checks
SPREAD_TOL = 1e-8      # moment spread over a fixed component
RASTER_LIMIT = 100     # upper bound for the deficiency raster


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    example: str = ""
    resolution: int = 64
    step: float = 1e-4
    hessian_step: float = 1e-3
    tol_structure: float = 1e-10
    tol_residual: float = 1e-6
    tol_fixed: float = 1e-6
    tol_identity: float = 1e-5
    deficiency_limit: float = 0.02
    jobs: int = 0
    seed: int = 0
    out: str = "gcverify_out"

    def __post_init__(self):
        if self.command != "list":
            if self.example not in catalog.NAMES:
                raise ConfigError(
                    f"unknown example {self.example!r}; run `gcverify list`")
        if self.resolution < 16:
            raise ConfigError("resolution must be at least 16")
        for name in ("step", "hessian_step", "tol_structure", "tol_residual",
                     "tol_fixed", "tol_identity", "deficiency_limit"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.jobs <= 0:
            self.jobs = os.cpu_count() or 1


def chunked_eval(manifold, fn, jobs: int, subset=None,
                 chunk: int = CHUNK) -> np.ndarray:
    """eval_samples in fixed-size chunks, optionally on a thread pool.

    Chunk boundaries do not depend on the job count, so results are
    byte-identical for any parallelism degree.
    """
    idx = np.arange(manifold.n_samples) if subset is None else np.asarray(subset)
    blocks = [idx[i:i + chunk] for i in range(0, len(idx), chunk)]
    if not blocks:
        return np.zeros(0)

    def one(block):
        return actions.eval_samples(manifold, fn, subset=block)

    if jobs <= 1 or len(blocks) == 1:
        parts = [one(b) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(one, blocks))
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# check runners


def run_structure(ex, cfg: RunConfig, artifacts: dict) -> list:
    def residuals(chart, uv):
        r_sq, r_pair = fiber.structure_residuals(ex.structure(chart, uv))
        return np.stack([r_sq, r_pair], axis=1)

    both = chunked_eval(ex.manifold, residuals, cfg.jobs)
    checks = [
        rep.summarize(both[:, 0], "structure", "square_residual",
                      cfg.tol_structure),
        rep.summarize(both[:, 1], "structure", "pairing_residual",
                      cfg.tol_structure),
    ]

    def integrability(chart, uv):
        return fields.integrability_residual(
            ex.structure, ex.twist, chart, uv, cfg.step).residuals

    res = chunked_eval(ex.manifold, integrability, cfg.jobs)
    skipped = int(np.sum(~np.isfinite(res)))
    check = rep.summarize(res, "structure", "integrability", cfg.tol_residual)
    if skipped:
        check.detail = f"{skipped} samples skipped (gauge failure)"
    checks.append(check)
    return checks


def run_hamiltonian(ex, cfg: RunConfig, artifacts: dict) -> list:
    checks = []
    man, action, md = ex.manifold, ex.action, ex.moment
    moment_res = np.zeros(man.n_samples)
    twist_res = np.zeros(man.n_samples)
    for k in range(action.m):
        xi = np.zeros(action.m)
        xi[k] = 1.0
        moment_res = np.maximum(moment_res, chunked_eval(
            man, lambda c, uv: actions.moment_condition_residual(
                action, md, ex.structure, c, uv, xi, cfg.step), cfg.jobs))
        twist_res = np.maximum(twist_res, chunked_eval(
            man, lambda c, uv: actions.twist_condition_residual(
                action, md, c, uv, xi, cfg.step), cfg.jobs))
    checks.append(rep.summarize(moment_res, "hamiltonian",
                                "moment_condition", cfg.tol_residual))
    checks.append(rep.summarize(twist_res, "hamiltonian",
                                "twist_condition", cfg.tol_residual))

    checks.append(rep.CheckResult(
        "hamiltonian", "moment_equivariance",
        passed=(eq := actions.equivariance_residual(
            action, md, man, seed=cfg.seed)) <= EXACT_TOL,
        max_residual=eq, tolerance=EXACT_TOL))
    checks.append(rep.CheckResult(
        "hamiltonian", "generators_commute",
        passed=(cm := actions.commuting_residual(
            action, man, cfg.step, seed=cfg.seed)) <= EXACT_TOL,
        max_residual=cm, tolerance=EXACT_TOL))

    rng = np.random.default_rng(cfg.seed)
    inv = 0.0
    for _ in range(3):
        theta = rng.random(action.m)
        inv = max(inv, actions.structure_invariance_residual(
            action, ex.structure, man, theta))
        inv = max(inv, actions.metric_invariance_residual(
            action, ex.metric, man, theta))
        inv = max(inv, actions.twist_invariance_residual(
            action, ex.twist, man, theta))
    checks.append(rep.CheckResult(
        "hamiltonian", "field_invariance", passed=inv <= EXACT_TOL,
        max_residual=inv, tolerance=EXACT_TOL))

    comps = actions.fixed_point_components(action, md, man, cfg.tol_fixed)
    even = all(c.dim % 2 == 0 for c in comps)
    spread = max((c.moment_spread for c in comps), default=0.0)
    checks.append(rep.CheckResult(
        "hamiltonian", "fixed_components_even_dimensional", passed=even,
        detail=f"dims {[c.dim for c in comps]}"))
    checks.append(rep.CheckResult(
        "hamiltonian", "moment_constant_on_fixed_components",
        passed=spread <= SPREAD_TOL, max_residual=spread,
        tolerance=SPREAD_TOL))
    artifacts["fixed_components"] = comps
    return checks


def _fixed_components(ex, cfg: RunConfig, artifacts: dict):
    if "fixed_components" not in artifacts:
        artifacts["fixed_components"] = actions.fixed_point_components(
            ex.action, ex.moment, ex.manifold, cfg.tol_fixed)
    return artifacts["fixed_components"]


def run_morse(ex, cfg: RunConfig, artifacts: dict) -> list:
    checks = []
    man, action, md = ex.manifold, ex.action, ex.moment
    cases = ex.expected.morse_cases or tuple(
        catalog.MorseCase(xi=tuple(np.eye(action.m)[k]), components=None)
        for k in range(action.m))
    critical_rows = []
    for case in cases:
        label = "xi=" + ",".join(f"{x:g}" for x in case.xi)
        report = morse.analyze_direction(action, md, man, case.xi,
                                         cfg.hessian_step, cfg.tol_fixed)
        checks.append(rep.CheckResult(
            "morse", f"even_index_coindex[{label}]", passed=report.parity_ok,
            detail=str(report.component_signature())))
        if case.components is not None:
            checks.append(rep.CheckResult(
                "morse", f"expected_indices[{label}]",
                passed=report.component_signature() == case.components,
                detail=f"got {report.component_signature()}"))
        from .manifold import local_dimension
        nullity_ok = all(
            c.nullity == local_dimension(man, c.members)
            for c in report.components)
        checks.append(rep.CheckResult(
            "morse", f"nullity_matches_component_dimension[{label}]",
            passed=nullity_ok))
        cf = morse.crit_equals_fixed_check(action, md, man, case.xi,
                                           cfg.tol_fixed, cfg.step)
        checks.append(rep.CheckResult(
            "morse", f"critical_set_equals_fixed_set[{label}]",
            passed=cf.coincide,
            detail=f"{cf.n_both} common samples"))

        lxi = np.zeros(0)
        crit_ids = np.array([s.sample for s in report.samples], dtype=int)
        if len(crit_ids):
            lxi = chunked_eval(man, lambda c, uv: morse.lxi_identity_residual(
                ex.structure, ex.metric, action, md, c, uv, case.xi,
                cfg.hessian_step), cfg.jobs, subset=crit_ids)
            checks.append(rep.summarize(
                lxi, "morse", f"linearization_identity[{label}]",
                cfg.tol_identity, ids=False))
        for comp_id, comp in enumerate(report.components):
            for s in report.samples:
                if s.sample in set(comp.members):
                    critical_rows.append(
                        [int(s.sample), label, comp_id, s.index, s.coindex,
                         s.nullity] + [float(v) for v in s.eigenvalues])

        induced = chunked_eval(
            man, lambda c, uv: morse.induced_field_identity_residual(
                ex.structure, ex.metric, action, md, c, uv, case.xi,
                cfg.step), cfg.jobs)
        checks.append(rep.summarize(induced, "morse",
                                    f"induced_field_identity[{label}]",
                                    cfg.tol_identity))

    for case in ex.expected.slice_cases:
        if not case.regular:
            continue
        label = "slice=" + ",".join(f"{a:g}" for a in case.a_partial)
        sl = morse.slice_morse_check(action, md, man, case.a_partial,
                                     cfg.tol_fixed, cfg.step,
                                     cfg.hessian_step)
        ok = (sl.parity_ok and len(sl.components) == case.n_components
              and sl.component_signature() == case.components)
        checks.append(rep.CheckResult(
            "morse", f"slice_bott_morse[{label}]", passed=ok,
            detail=str(sl.component_signature())))
    artifacts["critical_rows"] = critical_rows
    return checks


def run_convexity(ex, cfg: RunConfig, artifacts: dict) -> list:
    checks = []
    man, md = ex.manifold, ex.moment
    cloud = convexity.sample_moment_image(md, man)
    artifacts["cloud"] = cloud
    poly = convexity.convex_hull(cloud)
    artifacts["hull"] = poly
    contain = convexity.hull_outside_distance(poly, cloud.values)
    checks.append(rep.summarize(contain, "convexity", "hull_contains_cloud",
                                1e-9))
    if cloud.m <= 2:
        eps = convexity.default_level_eps(cloud, man)
        span = float((cloud.bounds[1] - cloud.bounds[0]).min())
        raster = (max(4, min(RASTER_LIMIT, int(span / eps)))
                  if eps > 0 and span > 0 else 4)
        deficiency = convexity.convexity_deficiency(cloud, raster)
        checks.append(rep.CheckResult(
            "convexity", "image_convexity_deficiency",
            passed=deficiency <= cfg.deficiency_limit,
            max_residual=deficiency, tolerance=cfg.deficiency_limit,
            detail=f"raster {raster}"))
    comps = _fixed_components(ex, cfg, artifacts)
    if comps:
        tol = convexity.hull_tolerance(man, cloud)
        fixed_values = np.array([c.moment_value for c in comps])
        match = convexity.hull_matches_fixed_images(poly, cloud,
                                                    fixed_values, tol)
        checks.append(rep.CheckResult(
            "convexity", "hull_matches_fixed_images", passed=match.matched,
            max_residual=max(match.max_vertex_distance,
                             match.max_cloud_excess),
            tolerance=tol))
    return checks


def run_levels(ex, cfg: RunConfig, artifacts: dict) -> list:
    man, md = ex.manifold, ex.moment
    cloud = artifacts.get("cloud") or convexity.sample_moment_image(md, man)
    artifacts["cloud"] = cloud
    rows = []
    if cloud.m > 2:
        return [rep.CheckResult("levels", "level_connectivity", passed=True,
                                detail="skipped: more than 2 components")]
    eps = convexity.default_level_eps(cloud, man)
    counts = []
    for a in convexity.interior_level_grid(cloud, 5):
        n = convexity.level_connectivity(md, man, a, eps=eps, cloud=cloud)
        counts.append(n)
        rows.append(list(a) + [eps, n])
    artifacts["level_rows"] = rows
    passed = all(c == 1 for c in counts)
    return [rep.CheckResult(
        "levels", "level_connectivity", passed=passed,
        detail=f"component counts {sorted(set(counts))}, eps {eps:.6g}")]


RUNNERS = {
    "check-structure": (run_structure,),
    "check-hamiltonian": (run_hamiltonian,),
    "morse": (run_morse,),
    "convexity": (run_convexity,),
    "levels": (run_levels,),
    "all": (run_structure, run_hamiltonian, run_morse, run_convexity,
            run_levels),
}


def write_artifacts(ex, cfg: RunConfig, artifacts: dict) -> None:
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    if "cloud" in artifacts:
        cloud = artifacts["cloud"]
        rep.write_csv(os.path.join(out, "moment_cloud.csv"),
                      ["id"] + [f"mu{k}" for k in range(cloud.m)],
                      ([i] + list(v) for i, v in enumerate(cloud.values)))
    if "hull" in artifacts:
        poly = artifacts["hull"]
        rep.write_csv(os.path.join(out, "hull.csv"),
                      [f"v{k}" for k in range(poly.vertices.shape[1])],
                      (list(v) for v in np.atleast_2d(poly.vertices)))
    if artifacts.get("critical_rows"):
        n_eigs = len(artifacts["critical_rows"][0]) - 6
        rep.write_csv(os.path.join(out, "critical.csv"),
                      ["sample", "direction", "component", "index",
                       "coindex", "nullity"]
                      + [f"eig{k}" for k in range(n_eigs)],
                      artifacts["critical_rows"])
    if artifacts.get("level_rows"):
        m = len(artifacts["level_rows"][0]) - 2
        rep.write_csv(os.path.join(out, "levels.csv"),
                      [f"a{k}" for k in range(m)] + ["eps", "components"],
                      artifacts["level_rows"])
    if "fixed_components" in artifacts:
        rows = []
        for k, c in enumerate(artifacts["fixed_components"]):
            rows.append([k, c.dim, len(c.members), c.moment_spread]
                        + list(np.atleast_1d(c.moment_value)))
        m = len(rows[0]) - 4 if rows else 0
        rep.write_csv(os.path.join(out, "fixed_components.csv"),
                      ["component", "dim", "n_members", "moment_spread"]
                      + [f"mu{k}" for k in range(m)], rows)


def execute(cfg: RunConfig) -> int:
    if cfg.command == "list":
        for name, desc in catalog.describe():
            print(f"{name}: {desc}")
        return 0
    ex = catalog.load(cfg.example, cfg.resolution)
    artifacts = {}
    checks = []
    for runner in RUNNERS[cfg.command]:
        checks.extend(runner(ex, cfg, artifacts))
    extra = {}
    if "fixed_components" in artifacts:
        extra["fixed_components"] = [
            {"dim": c.dim, "n_members": len(c.members),
             "moment_value": list(np.atleast_1d(c.moment_value)),
             "moment_spread": c.moment_spread}
            for c in artifacts["fixed_components"]]
    if "hull" in artifacts:
        extra["hull_vertices"] = np.atleast_2d(
            artifacts["hull"].vertices).tolist()
    document = rep.build_report(cfg.example, asdict(cfg), checks, extra)
    os.makedirs(cfg.out, exist_ok=True)
    rep.write_report(os.path.join(cfg.out, "report.json"), document)
    write_artifacts(ex, cfg, artifacts)
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        detail = f" max={check.max_residual:.3e}" \
            if check.max_residual is not None else ""
        print(f"[{status}] {check.module}/{check.name}{detail}")
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed; "
          f"report written to {os.path.join(cfg.out, 'report.json')}")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcverify",
        description="verify Hamiltonian torus actions, Bott-Morse structure "
                    "and moment-image convexity on sampled generalized "
                    "complex manifolds")
    parser.add_argument("--config", help="JSON file with default options")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list catalog examples")
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("example", choices=list(catalog.NAMES))
    flags.add_argument("--resolution", type=int, default=None)
    flags.add_argument("--step", type=float, default=None,
                       help="finite-difference step (chart units)")
    flags.add_argument("--tol-residual", type=float, default=None,
                       dest="tol_residual")
    flags.add_argument("--tol-fixed", type=float, default=None,
                       dest="tol_fixed")
    flags.add_argument("--jobs", type=int, default=None)
    flags.add_argument("--seed", type=int, default=None)
    flags.add_argument("--out", default=None, help="output directory")
    for name in ("check-structure", "check-hamiltonian", "morse",
                 "convexity", "levels", "all"):
        sub.add_parser(name, parents=[flags])
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    options = {}
    if ns.config:
        try:
            with open(ns.config) as fh:
                options.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    options["command"] = ns.command
    for key, value in vars(ns).items():
        if key in ("config", "command") or value is None:
            continue
        options[key] = value
    try:
        cfg = RunConfig(**options)
        return execute(cfg)
    except (ConfigError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
