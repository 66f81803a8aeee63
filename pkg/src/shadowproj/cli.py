"""Command-line entry point: ``shadowproj <command> [--config run.json] [flags]``.

Exit codes: 0 success, 1 input error, 2 a mathematical assertion failed
(e.g. the stability lower bound or the oracle agreement check).
"""

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import io
from ._rng import mix_seed
from .complexity import covering_profile, sample_complexity_experiment
from .exceptions import BoundViolation, ExperimentError, InputError, ShadowProjError
from .instances import random_projection_instance
from .measures import (
    MarginalVector,
    ProductMeasure,
    as_product,
    load_measure,
    save_measure,
)
from .mot_oracle import DEFAULT_VARIABLE_CAP, project_oracle
from .plot import PlotSpec, emit_plot
from .shadow import DEFAULT_SUPPORT_CAP, compose_shadow, is_map_induced
from .stability import (
    SmoothingSpec,
    holder_experiment,
    map_stability_fit,
    mass_swap_family,
    smooth,
    stability_report,
    translation_family,
)

OUTPUT_ENV = "SHADOWPROJ_OUTPUT_DIR"
AGREEMENT_TOL = 1e-7
COMMANDS = ("shadow", "project", "stability", "holder", "mapstab", "rates", "dim", "smooth")


@dataclass
class RunConfig:
    command: str = None
    rho: str = None
    xi: str = None
    mu: list = None
    nu: list = None
    lam: str = None
    measure: str = None
    p: float = 2.0
    q: float = 2.0
    delta: float = 0.01
    sigma: float = 0.05
    stencil: list = None
    family: str = "translation"
    scales: list = None
    n_grid: list = field(default_factory=lambda: [50, 100, 200, 400])
    m_grid: list = field(default_factory=lambda: [50, 100, 200, 400])
    trials: int = 20
    seed: int = 0
    instances: int = 0
    epsilons: list = None
    tau: float = 0.0
    support_cap: int = DEFAULT_SUPPORT_CAP
    variable_cap: int = DEFAULT_VARIABLE_CAP
    output_dir: str = None
    plot: bool = False

    @classmethod
    def from_dict(cls, d, source="<config>"):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise InputError(f"unknown config keys {unknown}", file=source, field=unknown[0])
        cfg = cls(**d)
        cfg.validate(source)
        return cfg

    def to_dict(self):
        return asdict(self)

    def validate(self, source="<config>"):
        def bad(name, msg):
            raise InputError(msg, file=source, field=name)

        if self.command not in COMMANDS:
            bad("command", f"command must be one of {COMMANDS}")
        for name in ("p", "q"):
            v = float(getattr(self, name))
            if math.isnan(v) or v < 1:
                bad(name, f"{name} must be >= 1 or inf")
            setattr(self, name, v)
        if not 0 < self.delta < 1:
            bad("delta", "delta must lie in (0, 1)")
        if not self.sigma > 0:
            bad("sigma", "sigma must be positive")
        if self.family not in ("translation", "mass_swap"):
            bad("family", "family must be 'translation' or 'mass_swap'")
        if self.trials < 1:
            bad("trials", "trials must be >= 1")
        if not 0 <= self.tau < 1:
            bad("tau", "tau must lie in [0, 1)")
        if self.seed < 0 or self.seed >= 2**64:
            bad("seed", "seed must be a 64-bit unsigned integer")
        if self.instances < 0:
            bad("instances", "instances must be >= 0")
        for name in ("n_grid", "m_grid"):
            vals = getattr(self, name)
            if not vals or any(int(v) < 1 for v in vals):
                bad(name, f"{name} must be a nonempty list of positive integers")
        if self.support_cap < 1 or self.variable_cap < 1:
            bad("support_cap", "caps must be positive")


def _load(path, what):
    if path is None:
        raise InputError(f"missing input {what!r}", field=what)
    return load_measure(path)


def _load_marginals(paths, what):
    if not paths:
        raise InputError(f"missing input {what!r}", field=what)
    return MarginalVector(load_measure(p) for p in paths)


def _product(path, what):
    m = _load(path, what)
    if not isinstance(m, ProductMeasure):
        m = as_product(m)
    return m


def _summary_value(x):
    return x if math.isfinite(x) else str(x)


def _shadow_outputs(res, out, rho_file):
    save_measure(res.shadow, out / "shadow.json")
    io.write_triplets(
        out / "glued.csv",
        res.glued,
        {"rows": "shadow.json", "cols": rho_file, "shape": [res.shadow.n_atoms, res.rho.n_atoms]},
    )


def cmd_shadow(cfg, out):
    rho = _product(cfg.rho, "rho")
    mu = _load_marginals(cfg.mu, "mu")
    res = compose_shadow(rho, mu, cfg.p, support_cap=cfg.support_cap)
    _shadow_outputs(res, out, cfg.rho)
    io.write_json(out / "summary.json", {
        "value": res.value,
        "per_marginal_values": list(res.per_marginal_values),
        "map_induced": bool(is_map_induced(res)),
        "p": _summary_value(cfg.p),
    })
    return 0


def cmd_project(cfg, out):
    rho = _product(cfg.rho, "rho")
    mu = _load_marginals(cfg.mu, "mu")
    cert = project_oracle(rho, mu, cfg.p, variable_cap=cfg.variable_cap)
    res = compose_shadow(rho, mu, cfg.p, support_cap=cfg.support_cap)
    diff = abs(cert.distance - res.value)
    save_measure(cert.pi_star, out / "pi_star.json")
    io.write_triplets(out / "gamma.csv", cert.gamma,
                      {"rows": "combos", "cols": cfg.rho, "combos": cert.combos.tolist()})
    agree = diff <= AGREEMENT_TOL
    io.write_json(out / "certificate.json", {
        "value": cert.value,
        "distance": cert.distance,
        "shadow_value": res.value,
        "abs_diff": diff,
        "agree": agree,
        "duality_gap": cert.gap,
        "duals": cert.duals,
        "p": _summary_value(cfg.p),
    })
    if not agree:
        raise BoundViolation(f"oracle {cert.distance!r} and shadow {res.value!r} disagree")
    return 0


STABILITY_HEADER = ["instance", "p", "q", "t", "W_q_marginals", "lower", "observed",
                    "rho_xi_term", "ratio"]


def _implied_constant(rep):
    pw = rep.marginal_terms_pow
    denom = math.fsum(pw) if pw else 0.0
    if denom <= 0:
        return math.nan
    return (rep.observed - rep.rho_xi_term) / denom


def cmd_stability(cfg, out):
    if cfg.instances:
        pairs = []
        for k in range(cfg.instances):
            s = mix_seed(cfg.seed, k)
            rho, mu = random_projection_instance(mix_seed(s, 1))
            xi, nu = random_projection_instance(mix_seed(s, 2))
            pairs.append((rho, xi, mu, nu))
    else:
        pairs = [(_product(cfg.rho, "rho"), _product(cfg.xi, "xi"),
                  _load_marginals(cfg.mu, "mu"), _load_marginals(cfg.nu, "nu"))]
    rows, violations = [], 0
    for k, (rho, xi, mu, nu) in enumerate(pairs):
        rep = stability_report(rho, xi, mu, nu, cfg.p, cfg.q, cfg.delta, check=False)
        if rep.slack_lower < -1e-9:
            violations += 1
        wq = math.fsum(rep.marginal_terms)
        rows.append([k, rep.p, rep.q, "", wq, rep.lower, rep.observed, rep.rho_xi_term,
                     _implied_constant(rep)])
    io.write_csv(out / "stability.csv", STABILITY_HEADER, rows)
    io.write_json(out / "summary.json", {
        "instances": len(rows),
        "lower_bound_violations": violations,
        "min_slack": min(r[6] - r[5] for r in rows),
        "ratio": "implied constant (observed - W_p(rho, xi)) / sum_i W_q(mu_i, nu_i)^theta",
    })
    if violations:
        raise BoundViolation(f"{violations} lower-bound violations")
    return 0


def _default_scales(family):
    return list(np.geomspace(0.002, 0.08, 6))


def _fit_json(fit, theta, extra=None):
    out = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
           "theta": theta, "pass": bool(theta is not None and fit.slope >= theta - 0.05)}
    out.update(extra or {})
    return out


def cmd_holder(cfg, out):
    rho = _product(cfg.rho, "rho")
    mu = _load_marginals(cfg.mu, "mu")
    fam = translation_family(mu) if cfg.family == "translation" else mass_swap_family(mu)
    scales = cfg.scales or _default_scales(cfg.family)
    fit = holder_experiment(rho, mu, fam, cfg.p, cfg.q, scales, cfg.delta)
    rows = []
    for t, x, y in zip(fit.scales, fit.x, fit.y):
        ratio = y / x**fit.theta if fit.theta else math.nan
        rows.append(["", cfg.p, cfg.q, t, x, "", y, 0.0, ratio])
    io.write_csv(out / "holder.csv", STABILITY_HEADER, rows)
    io.write_json(out / "fit.json", _fit_json(fit, fit.theta, {"family": cfg.family}))
    if cfg.plot:
        spec = PlotSpec([("shadow distance", list(fit.x), list(fit.y))],
                        title=f"Hoelder experiment ({cfg.family})", xlabel="W_q(mu, nu_t)",
                        ylabel="W_p(shadows)", loglog=True,
                        guides=[(fit.theta, f"theta = {fit.theta:.4g}")] if fit.theta else [])
        emit_plot(spec, out / "holder.svg")
    return 0


def cmd_mapstab(cfg, out):
    lam = _load(cfg.lam, "lam")
    mu = _load(cfg.measure, "measure")
    scales = cfg.scales or [0.2, 0.1, 0.05, 0.025]
    fam = (lambda t: mu.translate(t)) if cfg.family == "translation" else \
        (lambda t: mass_swap_family(MarginalVector([mu]))(t)[0])
    fit = map_stability_fit(lam, mu, fam, scales, p=cfg.p, delta=cfg.delta)
    rows = [[t, x, y] for t, x, y in zip(fit.scales, fit.x, fit.y)]
    io.write_csv(out / "mapstab.csv", ["t", "W_1", "L2_map_distance"], rows)
    io.write_json(out / "fit.json", _fit_json(fit, 1.0 / 6.0, {"family": cfg.family}))
    if cfg.plot:
        emit_plot(PlotSpec([("||T_mu - T_nu||", list(fit.x), list(fit.y))],
                           title="Map stability", xlabel="W_1(mu, nu)",
                           ylabel="L2(lambda) map distance", loglog=True,
                           guides=[(1.0 / 6.0, "slope 1/6")]), out / "mapstab.svg")
    return 0


def cmd_rates(cfg, out):
    rho = _product(cfg.rho, "rho")
    mu = _load_marginals(cfg.mu, "mu")
    tab = sample_complexity_experiment(rho, mu, cfg.n_grid, cfg.m_grid, cfg.trials,
                                       cfg.seed, cfg.p, cfg.q, delta=cfg.delta)
    io.write_csv(out / "rates.csv", ["n", "m", "trial", "seed", "distance"],
                 [[r.n, r.m, r.trial, r.seed, r.distance] for r in tab.rows])
    ok = tab.lower_bound_holds()
    io.write_json(out / "summary.json", {
        "slope_n": tab.slope_n.slope if tab.slope_n else None,
        "stderr_n": tab.slope_n.stderr if tab.slope_n else None,
        "slope_m": tab.slope_m.slope if tab.slope_m else None,
        "stderr_m": tab.slope_m.stderr if tab.slope_m else None,
        "reference_slopes": tab.reference,
        "monotone_within_se": tab.monotone_within_se(),
        "lower_bound_holds": ok,
    })
    if cfg.plot:
        ms = sorted({r.m for r in tab.rows})
        n_max = max(r.n for r in tab.rows)
        emit_plot(PlotSpec([("mean distance, n = max", ms, [tab.mean(n_max, m) for m in ms])],
                           title="Empirical shadow convergence", xlabel="m",
                           ylabel="mean W_p", loglog=True,
                           guides=[(-0.5, "slope -1/2")]), out / "rates.svg")
    if not ok:
        raise BoundViolation("per-trial lower bound violated")
    return 0


def cmd_dim(cfg, out):
    m = _load(cfg.measure, "measure")
    prof = covering_profile(m.atoms if cfg.tau == 0 else m, cfg.epsilons, tau=cfg.tau)
    io.write_csv(out / "dim.csv", ["epsilon", "N", "d_eps"],
                 [[e, n, d] for e, n, d in prof.profile])
    io.write_json(out / "summary.json", {
        "plateau": prof.plateau, "plateau_epsilon": prof.plateau_epsilon,
        "slope": prof.fit.slope, "r2": prof.fit.r2, "tau": cfg.tau,
    })
    return 0


def cmd_smooth(cfg, out):
    m = _load(cfg.measure, "measure")
    dim = m.atoms.shape[1]
    spec = SmoothingSpec(cfg.sigma, cfg.stencil) if cfg.stencil else SmoothingSpec.axis(cfg.sigma, dim)
    save_measure(smooth(m, spec), out / "smoothed.json")
    return 0


HANDLERS = {
    "shadow": cmd_shadow,
    "project": cmd_project,
    "stability": cmd_stability,
    "holder": cmd_holder,
    "mapstab": cmd_mapstab,
    "rates": cmd_rates,
    "dim": cmd_dim,
    "smooth": cmd_smooth,
}


def run(cfg):
    """Execute a validated :class:`RunConfig`; returns the exit status."""
    out = Path(cfg.output_dir or os.environ.get(OUTPUT_ENV) or "shadowproj_out")
    out.mkdir(parents=True, exist_ok=True)
    # the output location is not part of the experiment, so runs into
    # different directories stay byte-identical
    recorded = {k: v for k, v in cfg.to_dict().items() if k != "output_dir"}
    io.write_json(out / "run_config.json", recorded)
    return HANDLERS[cfg.command](cfg, out)


def _parser():
    ap = argparse.ArgumentParser(prog="shadowproj", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration; flags override it")
        sp.add_argument("--rho")
        sp.add_argument("--xi")
        sp.add_argument("--mu", nargs="+")
        sp.add_argument("--nu", nargs="+")
        sp.add_argument("--lam")
        sp.add_argument("--measure")
        sp.add_argument("-p", "--p", type=float)
        sp.add_argument("-q", "--q", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--family", choices=["translation", "mass_swap"])
        sp.add_argument("--scales", type=float, nargs="+")
        sp.add_argument("--n-grid", dest="n_grid", type=int, nargs="+")
        sp.add_argument("--m-grid", dest="m_grid", type=int, nargs="+")
        sp.add_argument("--trials", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--instances", type=int)
        sp.add_argument("--epsilons", type=float, nargs="+")
        sp.add_argument("--tau", type=float)
        sp.add_argument("--support-cap", dest="support_cap", type=int)
        sp.add_argument("--variable-cap", dest="variable_cap", type=int)
        sp.add_argument("-o", "--output-dir", dest="output_dir")
        sp.add_argument("--plot", action="store_true", default=None)
    return ap


def build_config(argv):
    args = vars(_parser().parse_args(argv))
    base = {}
    source = "<flags>"
    if args.get("config"):
        source = args["config"]
        try:
            with open(source) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(str(exc), file=source) from exc
        if not isinstance(base, dict):
            raise InputError("config must be a JSON object", file=source)
    args.pop("config")
    for k, v in args.items():
        if v is not None:
            base[k] = v
    return RunConfig.from_dict(base, source)


def main(argv=None):
    try:
        cfg = build_config(argv)
        return run(cfg)
    except BoundViolation as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 2
    except (InputError, ExperimentError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except ShadowProjError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
