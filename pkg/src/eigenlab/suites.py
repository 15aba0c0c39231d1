"""Experiment runners: translate a configuration into checks, CSVs, and records.

Each runner returns a VerificationReport in which every inequality or identity
check appears exactly once; data files (curves, eigenfunctions, profiles,
traces) land in the configured output directory with deterministic contents.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, conformal_lab, domain_mesh, flow_lab, model_space, rearrangement
from .domain_mesh import ConformalSurface
from .eigensolver import faber_krahn_check, first_eigen, tolerance_policy
from .errors import ConfigurationError
from .report import VerificationReport


@dataclass
class ExperimentConfig:
    """Options shared by all experiment kinds; CLI flags override file values."""

    kind: str = "verify"
    shape: str = "disk"  # disk | square | ellipse | random | csv path
    surface: str = "euclidean"  # euclidean | poincare[:kappa]
    h: float = 0.03
    tol: float = 1e-12
    out: str = "out"
    seed: int = 0
    n: int = 2
    kappa: float = 0.0
    r: float = 1.0
    p: float = 1.0
    q: float = 2.0
    steps: int = 20
    dt: float = 0.0075
    law: str = "unit_normal"
    map_coefficients: tuple = (1.0, 0.1)
    t_min: float = 0.6
    t_max: float = 1.4
    t_points: int = 5
    n_boundary: int = 512
    n_levels: int = 256
    suite: str = "quick"
    assume_small: bool = False

    def surface_object(self):
        if self.surface == "euclidean":
            return ConformalSurface.euclidean()
        if self.surface.startswith("poincare"):
            parts = self.surface.split(":")
            kappa = float(parts[1]) if len(parts) > 1 else 1.0
            return ConformalSurface.poincare(kappa)
        raise ConfigurationError(f"unknown surface spec {self.surface!r}")

    def model_for_surface(self):
        surf = self.surface_object()
        kappa = surf.kappa if surf.curvature_tag == "hyperbolic" else 0.0
        return model_space.ModelSpace(2, kappa)

    def curve(self):
        rng = np.random.default_rng(self.seed)
        if self.shape == "disk":
            return domain_mesh.circle_curve(self.r, self.n_boundary)
        if self.shape == "square":
            return domain_mesh.square_curve(self.r, max(8, self.n_boundary // 4))
        if self.shape == "ellipse":
            return domain_mesh.ellipse_curve(self.r, 0.7 * self.r, self.n_boundary)
        if self.shape == "geodesic-disk":
            surf = self.surface_object()
            kappa = surf.kappa if surf.curvature_tag == "hyperbolic" else 1.0
            return domain_mesh.geodesic_disk_curve(self.r, kappa, self.n_boundary)
        if self.shape == "random":
            return domain_mesh.random_convex_curve(rng, n_vertices=self.n_boundary)
        if self.shape.endswith(".csv"):
            return domain_mesh.BoundaryCurve.from_csv(self.shape)
        raise ConfigurationError(f"unknown shape {self.shape!r}")


def parse_config_file(path):
    """Flat key = value configuration file; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigurationError(f"{path}:{line_no}: empty key")
            values[key] = value
    return values


def _out_path(config, name):
    os.makedirs(config.out, exist_ok=True)
    return os.path.join(config.out, name)


def _write_meta(config, extra=None):
    """Run metadata (including wall time) kept apart from deterministic outputs."""
    import time

    meta = {
        "version": __version__,
        "kind": config.kind,
        "seed": config.seed,
        "h": config.h,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
        "assume_small": config.assume_small,
    }
    if extra:
        meta.update(extra)
    with open(_out_path(config, "run_meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def run_model(config):
    """Model-space numbers and identities for one (n, kappa, r) triple."""
    report = VerificationReport()
    ms = model_space.ModelSpace(config.n, config.kappa)
    lam = model_space.ball_eigenvalue(ms, config.r)
    vol = model_space.ball_volume(ms, config.r)
    area = model_space.boundary_volume(ms, config.r)
    rt = model_space.volume_radius(ms, vol)
    report.add(
        "model.volume-radius-roundtrip",
        "volume-radius-inverse",
        rt,
        config.r,
        -abs(rt - config.r),
        1e-12 * config.r,
        abs(rt - config.r) <= 1e-12 * config.r,
    )
    rt_lam = model_space.ball_radius_for_eigenvalue(ms, lam)
    report.add(
        "model.eigenvalue-radius-roundtrip",
        "ball-eigenvalue-inverse",
        rt_lam,
        config.r,
        -abs(rt_lam - config.r),
        1e-8 * config.r,
        abs(rt_lam - config.r) <= 1e-8 * config.r,
    )
    if ms.kappa > 0:
        floor = ms.spectral_floor
        report.add(
            "model.spectral-floor",
            "hyperbolic-floor",
            lam,
            floor,
            lam - floor,
            0.0,
            lam > floor,
        )
    if config.p < config.q:
        K = model_space.euclidean_K(config.n, config.p, config.q)
        C = model_space.reverse_holder_constant(
            model_space.ModelSpace(config.n, 0.0), lam, config.p, config.q
        )
        scaled = K * lam ** (config.n * (config.p - config.q) / 2.0)
        gap = abs(C / scaled - 1.0)
        report.add(
            "model.reverse-holder-scaling",
            "reverse-holder-constant",
            C,
            scaled,
            -gap,
            1e-8,
            gap <= 1e-8,
        )
    with open(_out_path(config, "model.csv"), "w") as fh:
        fh.write("n,kappa,r,lambda,volume,boundary_area\n")
        fh.write(
            f"{ms.n},{ms.kappa:.12g},{config.r:.12g},"
            f"{lam:.12g},{vol:.12g},{area:.12g}\n"
        )
    _write_meta(config)
    return report


def run_eigen(config):
    """First eigenpair on the configured shape; consistency and comparison checks."""
    report = VerificationReport()
    surface = config.surface_object()
    curve = config.curve()
    mesh = domain_mesh.triangulate(curve, config.h)
    result = first_eigen(mesh, surface, tol=config.tol)
    result.export_eigenfunction_csv(_out_path(config, "eigenfunction.csv"))
    result.export_flux_csv(_out_path(config, "flux.csv"))
    mesh.to_off(_out_path(config, "mesh.off"))
    flux_total = float(np.sum(-result.boundary_flux * result.edge_lengths_g))
    target = result.lambda_h * result.mass_integral
    report.add(
        "eigen.flux-compatibility",
        "divergence-identity",
        flux_total,
        target,
        -abs(flux_total / target - 1.0),
        1e-8,
        abs(flux_total / target - 1.0) <= 1e-8,
    )
    fk = faber_krahn_check(result, surface, config.model_for_surface())
    tol = tolerance_policy(result)
    report.add(
        "eigen.faber-krahn",
        "faber-krahn",
        fk.lambda_h,
        fk.lambda_ball,
        fk.relative_margin,
        tol,
        fk.relative_margin >= -tol,
    )
    ratio = domain_mesh.isoperimetric_check(curve, surface)
    report.add(
        "eigen.isoperimetric-ratio",
        "isoperimetric",
        ratio,
        1.0,
        ratio - 1.0,
        1e-6,
        ratio >= 1.0 - 1e-6,
    )
    sv_margin = domain_mesh.small_volume_isoperimetric_check(
        curve, surface, config.model_for_surface()
    )
    anchor = "model-isoperimetric" + (" (assumed small)" if config.assume_small else "")
    _, perim = domain_mesh.measure(curve, surface)
    report.add(
        "eigen.model-isoperimetric",
        anchor,
        sv_margin,
        0.0,
        sv_margin,
        1e-6 * perim,
        sv_margin >= -1e-6 * perim,
    )
    _write_meta(config, {"lambda": result.lambda_h, "triangles": len(mesh.triangles)})
    return report


def run_rearrange(config):
    """Distribution profile plus the full chain of rearrangement inequalities."""
    report = VerificationReport()
    surface = config.surface_object()
    ms = config.model_for_surface()
    curve = config.curve()
    mesh = domain_mesh.triangulate(curve, config.h)
    result = first_eigen(mesh, surface, tol=config.tol)
    tol = tolerance_policy(result)
    profile = rearrangement.distribution_function(result, surface, config.n_levels)
    talenti = rearrangement.talenti_check(profile, result.lambda_h, ms, rel_tol=tol)
    report.add(
        "rearrange.talenti",
        "talenti",
        float(np.min(talenti.margins)),
        0.0,
        talenti.worst_relative_margin,
        tol,
        talenti.passed,
    )
    chiti = rearrangement.chiti_compare(profile, ms, result.lambda_h, rel_tol=tol)
    chiti.export_csv(_out_path(config, "profile.csv"))
    report.add(
        "rearrange.chiti",
        "chiti-majorization",
        chiti.min_margin,
        0.0,
        chiti.min_margin / profile.sup_norm,
        tol,
        chiti.passed,
    )
    for p in (1.0, 2.0):
        lp = rearrangement.lp_ratio_check(result, ms, p, rel_tol=tol)
        report.add(
            f"rearrange.lp-ratio-p{p:g}",
            "lp-ratio",
            lp.lhs,
            lp.rhs,
            lp.relative_margin,
            tol,
            lp.passed,
        )
    rh = rearrangement.reverse_holder_check(result, ms, config.p, config.q, rel_tol=tol)
    report.add(
        "rearrange.reverse-holder",
        "reverse-holder",
        rh.lhs,
        rh.rhs,
        rh.relative_margin,
        tol,
        rh.passed,
    )
    ci = rearrangement.conformal_isoperimetric_check(result, surface, rel_tol=tol)
    report.add(
        "rearrange.conformal-isoperimetric",
        "gradient-metric-isoperimetric",
        ci.boundary_energy_sq,
        ci.four_pi_area,
        ci.relative_margin,
        tol,
        ci.passed,
    )
    _write_meta(config, {"lambda": result.lambda_h})
    return report


def run_flow(config):
    """Boundary evolution with the configured law; per-step monotonicity bound."""
    report = VerificationReport()
    if config.n >= 3:
        t_grid = np.linspace(0.0, config.steps * config.dt, config.steps)
        law = "mean_curvature" if config.law == "curvature" else "unit_normal"
        rad = flow_lab.radial_flow_check(config.n, law, config.r, t_grid)
        report.add(
            "flow.radial-equality",
            "radial-flow-equality",
            float(rad.lhs[0]),
            float(rad.rhs[0]),
            -rad.max_relative_gap,
            1e-10,
            rad.passed,
        )
        _write_meta(config)
        return report
    surface = config.surface_object()
    curve = config.curve()
    cfg = flow_lab.FlowConfig(
        velocity_law=config.law,
        dt=config.dt,
        steps=config.steps,
        remesh_h=config.h,
        eigen_tol=config.tol,
    )
    trace = flow_lab.evolve(curve, surface, cfg)
    trace.to_csv(_out_path(config, "trace.csv"))
    rel_tol = max(0.01, 2.0 * 0.15 * float(trace.lam[0]) * config.h**2)
    mon = flow_lab.monotonicity_check(trace, 2, rel_tol=rel_tol)
    report.add(
        "flow.log-bound",
        "flow-log-bound",
        float(np.min(trace.margin)),
        0.0,
        mon.worst_relative_margin,
        rel_tol,
        mon.passed,
    )
    report.add(
        "flow.cauchy-schwarz-step",
        "boundary-cauchy-schwarz",
        float(np.min(trace.cauchy_schwarz_margin)),
        0.0,
        float(np.min(trace.cauchy_schwarz_margin)),
        0.0,
        bool(np.all(trace.cauchy_schwarz_margin >= -1e-9 * trace.flux_abs_total**2)),
    )
    rh_step = trace.flux_abs_total**2 - 4.0 * math.pi * trace.lam
    report.add(
        "flow.reverse-holder-step",
        "boundary-flux-lower-bound",
        float(np.min(trace.flux_abs_total**2)),
        float(np.max(4.0 * math.pi * trace.lam)),
        float(np.min(rh_step / (4.0 * math.pi * trace.lam))),
        rel_tol,
        bool(np.all(rh_step >= -rel_tol * 4.0 * math.pi * trace.lam)),
    )
    _write_meta(config)
    return report


def run_schwarz(config):
    """Conformal-image comparison along a radius grid (planar or Mobius channel)."""
    report = VerificationReport()
    t_grid = np.linspace(config.t_min, config.t_max, config.t_points)
    rows = []
    if config.n >= 3:
        cmap = conformal_lab.MobiusMap(config.n, "inversion")
        rep = conformal_lab.schwarz_check_mobius(config.n, cmap, t_grid)
        rows = list(rep.export_rows())
        asserted = [p for p in rep.points if p.asserted]
        worst = min((p.conclusion_margin for p in asserted), default=math.nan)
        report.add(
            "schwarz.mobius",
            "conformal-comparison-nd",
            worst,
            0.0,
            worst,
            0.0,
            rep.passed,
        )
    else:
        cmap = conformal_lab.PolynomialMap(config.map_coefficients)
        surface = config.surface_object()
        step = min(0.1, 0.45 * (cmap.t_max - config.t_max)) if math.isfinite(cmap.t_max) else 0.1
        rep = conformal_lab.schwarz_check_2d(
            cmap, t_grid, surface, n_boundary=config.n_boundary, h0=config.h, step=step
        )
        rows = list(rep.export_rows())
        if rep.linear:
            worst = max(abs(p.dlog_ratio) for p in rep.points)
            passed = worst <= 2e-3
            report.add(
                "schwarz.linear-flat",
                "conformal-comparison-2d",
                worst,
                0.0,
                2e-3 - worst,
                2e-3,
                passed,
            )
        else:
            worst = max(p.dlog_ratio + p.error_estimate for p in rep.points)
            report.add(
                "schwarz.decreasing",
                "conformal-comparison-2d",
                worst,
                0.0,
                -worst,
                0.0,
                worst < 0.0,
            )
        vc = conformal_lab.velocity_consistency_check(
            cmap, float(t_grid[len(t_grid) // 2]), surface,
            n_boundary=config.n_boundary, h0=config.h,
        )
        report.add(
            "schwarz.velocity-consistency",
            "image-boundary-speed",
            vc.hadamard,
            vc.finite_difference,
            -vc.residual,
            1e-2,
            vc.passed,
        )
    with open(_out_path(config, "schwarz.csv"), "w") as fh:
        fh.write("t,lambda,lambda_tilde,dlog_ratio,hypothesis_margin,conclusion_margin\n")
        for row in rows:
            fh.write(",".join(f"{x:.12g}" for x in row) + "\n")
    _write_meta(config)
    return report


def run_verify(config):
    """Composite suite: quick (seconds) or all (acceptance-scale runtimes)."""
    report = VerificationReport()
    quick = config.suite != "all"
    base = dict(out=config.out, seed=config.seed, assume_small=config.assume_small)

    cfg = ExperimentConfig(kind="model", n=2, kappa=0.0, r=1.0, **base)
    report.extend(run_model(cfg))
    cfg = ExperimentConfig(kind="model", n=2, kappa=1.0, r=1.0, **base)
    report.extend(run_model(cfg))

    nb = 256 if quick else 512
    cfg = ExperimentConfig(kind="eigen", shape="disk", h=0.05 if quick else 0.02, n_boundary=nb, **base)
    report.extend(run_eigen(cfg))
    # the rearrangement profile needs a finer mesh: its derivative noise
    # scales with h^2 against a 0.5% tolerance floor
    cfg = ExperimentConfig(kind="rearrange", shape="square", h=0.025 if quick else 0.02, n_boundary=nb, **base)
    report.extend(run_rearrange(cfg))

    steps = 8 if quick else 40
    cfg = ExperimentConfig(
        kind="flow", shape="disk", h=0.05 if quick else 0.03, steps=steps, dt=0.01, **base
    )
    report.extend(run_flow(cfg))
    cfg = ExperimentConfig(kind="flow", n=3, law="unit_normal", steps=9, dt=0.25, r=1.0, **base)
    report.extend(run_flow(cfg))

    cfg = ExperimentConfig(
        kind="schwarz",
        h=0.06 if quick else 0.03,
        n_boundary=192 if quick else 512,
        t_points=3 if quick else 9,
        **base,
    )
    report.extend(run_schwarz(cfg))
    _write_meta(config, {"suite": config.suite})
    return report


RUNNERS = {
    "model": run_model,
    "eigen": run_eigen,
    "rearrange": run_rearrange,
    "flow": run_flow,
    "schwarz": run_schwarz,
    "verify": run_verify,
}


def run(config):
    """Dispatch an experiment configuration; writes report.jsonl and returns the report."""
    if config.kind not in RUNNERS:
        raise ConfigurationError(f"unknown experiment kind {config.kind!r}")
    report = RUNNERS[config.kind](config)
    report.environment = {"version": __version__, "seed": config.seed}
    report.write_jsonl(_out_path(config, "report.jsonl"))
    return report
