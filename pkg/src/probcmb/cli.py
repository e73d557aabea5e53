"""Command-line interface: ``probcmb {fit,curve,diagnose,simulate,bootstrap}``.

Exit codes: 0 success, 2 schema/config error, 3 non-convergence,
4 numerical domain error.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__, calibration, diagnostics, io, ppp
from .calibration import FitConfig
from .exceptions import BootstrapError, DomainError, SchemaError
from .simulate import CampaignDesign, sample_campaign

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NOT_CONVERGED = 3
EXIT_DOMAIN = 4


@dataclass
class RunConfig:
    """Resolved run settings; every field is echoed into the outputs."""

    E: float | None = None
    a_ref: float = 1.0
    strain_unit: str = "fraction"
    material: dict | None = None
    fit: dict = field(default_factory=lambda: {"max_iter": 20000, "tol": 1e-9, "grad_tol": 1e-3, "simplex": True})
    curve: dict = field(default_factory=lambda: {"strains": [], "areas": [], "quantiles": [0.5]})
    bootstrap: dict = field(default_factory=lambda: {"B": 500, "level": 0.925, "seed": 0})
    simulate: dict = field(default_factory=lambda: {"seed": 0, "design": []})
    diagnostics: dict = field(default_factory=lambda: {"refit_shape": False, "permutations": 9999, "seed": 0})

    def as_dict(self):
        return asdict(self)


def _merge(defaults, given, section, errors):
    if given is None:
        return dict(defaults)
    if not isinstance(given, dict):
        errors.append(f"{section}: expected a mapping")
        return dict(defaults)
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        errors.append(f"{section}: unknown keys {', '.join(unknown)}")
    return {**defaults, **{k: v for k, v in given.items() if k in defaults}}


def _strain_grid(spec, unit, errors):
    if isinstance(spec, dict):
        try:
            lo, hi, num = float(spec["min"]), float(spec["max"]), int(spec["num"])
        except (KeyError, TypeError, ValueError):
            errors.append("curve.strains: grid needs numeric min, max, num")
            return []
        if not (0 < lo < hi and num >= 2):
            errors.append("curve.strains: need 0 < min < max and num >= 2")
            return []
        lo, hi = io.to_fraction(lo, unit), io.to_fraction(hi, unit)
        return [float(v) for v in np.geomspace(lo, hi, num)]
    try:
        return [io.to_fraction(v, unit) for v in spec]
    except (TypeError, ValueError):
        errors.append("curve.strains: expected a list of numbers or {min, max, num}")
        return []


def load_config(path=None, strain_unit=None, seed=None):
    """Read and validate a YAML run config; all problems are reported together."""
    raw = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        except OSError as exc:
            raise SchemaError(f"cannot read config: {exc.strerror}", path=path) from exc
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise SchemaError(f"invalid YAML: {exc}", line=mark.line + 1 if mark else None, path=path) from exc
        if not isinstance(raw, dict):
            raise SchemaError("config must be a mapping", path=path)
    base = RunConfig()
    errors = []
    known = set(base.as_dict())
    unknown = sorted(set(raw) - known)
    if unknown:
        errors.append(f"unknown top-level keys {', '.join(unknown)}")

    cfg = RunConfig(
        E=raw.get("E"),
        a_ref=raw.get("a_ref", 1.0),
        strain_unit=strain_unit or raw.get("strain_unit", "fraction"),
        material=raw.get("material"),
        fit=_merge(base.fit, raw.get("fit"), "fit", errors),
        curve=_merge(base.curve, raw.get("curve"), "curve", errors),
        bootstrap=_merge(base.bootstrap, raw.get("bootstrap"), "bootstrap", errors),
        simulate=_merge(base.simulate, raw.get("simulate"), "simulate", errors),
        diagnostics=_merge(base.diagnostics, raw.get("diagnostics"), "diagnostics", errors),
    )
    unit = cfg.strain_unit
    if unit not in io.STRAIN_UNITS:
        errors.append(f"strain_unit must be fraction or percent, got {unit!r}")
        unit = "fraction"
    if cfg.E is not None and not (isinstance(cfg.E, (int, float)) and cfg.E > 0):
        errors.append(f"E must be a positive number, got {cfg.E!r}")
    if not (isinstance(cfg.a_ref, (int, float)) and cfg.a_ref > 0):
        errors.append(f"a_ref must be a positive number, got {cfg.a_ref!r}")

    cfg.curve["strains"] = _strain_grid(cfg.curve["strains"], unit, errors)
    if any(not (s > 0) for s in cfg.curve["strains"]):
        errors.append("curve.strains must be positive")
    for key in ("areas", "quantiles"):
        try:
            cfg.curve[key] = [float(v) for v in cfg.curve[key]]
        except (TypeError, ValueError):
            errors.append(f"curve.{key}: expected a list of numbers")
    if any(a <= 0 for a in cfg.curve["areas"]):
        errors.append("curve.areas must be positive")
    if any(not 0 < q < 1 for q in cfg.curve["quantiles"]):
        errors.append("curve.quantiles must lie in (0, 1)")

    bs = cfg.bootstrap
    if not (isinstance(bs["B"], int) and bs["B"] >= 2):
        errors.append(f"bootstrap.B must be an integer >= 2, got {bs['B']!r}")
    if not (isinstance(bs["level"], (int, float)) and 0 < bs["level"] < 1):
        errors.append(f"bootstrap.level must lie in (0, 1), got {bs['level']!r}")
    if seed is not None:
        bs["seed"] = cfg.simulate["seed"] = cfg.diagnostics["seed"] = int(seed)
    for section in (cfg.bootstrap, cfg.simulate, cfg.diagnostics):
        if not (isinstance(section["seed"], int) and section["seed"] >= 0):
            errors.append(f"seeds must be non-negative integers, got {section['seed']!r}")

    rows = []
    for i, row in enumerate(cfg.simulate["design"] or []):
        try:
            rows.append({"strain_amplitude": io.to_fraction(row["strain_amplitude"], unit),
                         "gauge_area_mm2": float(row["gauge_area_mm2"]), "count": int(row["count"])})
        except (KeyError, TypeError, ValueError):
            errors.append(f"simulate.design[{i}]: needs strain_amplitude, gauge_area_mm2, count")
    cfg.simulate["design"] = rows

    if cfg.material is not None:
        if not isinstance(cfg.material, dict):
            errors.append("material: expected a mapping")
        else:
            mat = {"E": cfg.E, "a_ref": cfg.a_ref, **cfg.material}
            try:
                io.material_from_dict(mat)
            except (SchemaError, DomainError) as exc:
                errors.append(f"material: {exc}")
            cfg.material = mat
    if errors:
        raise SchemaError("invalid config:\n  " + "\n  ".join(errors), path=path)
    return cfg


def example_path(name):
    """Path of a file shipped in ``probcmb/data`` (e.g. ``example_config.yaml``)."""
    return Path(str(resources.files("probcmb") / "data" / name))


# ---------------------------------------------------------------------------


def _fit_config(cfg):
    if cfg.E is None:
        raise SchemaError("config must supply the elastic modulus E")
    f = cfg.fit
    return FitConfig(E=float(cfg.E), a_ref=float(cfg.a_ref), max_iter=int(f["max_iter"]), tol=float(f["tol"]),
                     grad_tol=float(f["grad_tol"]), simplex=bool(f["simplex"]))


def _model(args, cfg, campaign=None):
    """Material model from ``--fit``/``--params`` JSON or the config's material block."""
    source = getattr(args, "fit", None) or getattr(args, "params", None)
    if source:
        data = io.read_json(source)
        if "theta" in data:
            return io.fit_from_dict(data, campaign)
        return calibration.FitResult(io.material_from_dict(data, where=str(source)), float("nan"), True, 0,
                                     np.empty(0))
    if cfg.material is None:
        raise SchemaError("no model parameters: pass --fit/--params or set 'material' in the config")
    mm = io.material_from_dict(cfg.material)
    eta = calibration.fitted_scales(mm, campaign) if campaign is not None else np.empty(0)
    return calibration.FitResult(mm, float("nan"), True, 0, eta)


def _query_grid(cfg):
    c = cfg.curve
    if not (c["strains"] and c["areas"] and c["quantiles"]):
        raise SchemaError("curve section needs strains, areas and quantiles")
    strains = sorted(c["strains"])
    return [(s, a, q) for a in c["areas"] for q in c["quantiles"] for s in strains]


def _out_dir(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fit(args, cfg):
    campaign = io.read_campaign_csv(args.campaign, cfg.strain_unit)
    fc = _fit_config(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = calibration.fit_mle(campaign, fc)
    for w in caught:
        msg = str(w.message)
        if msg not in res.warnings:
            res.warnings.append(msg)
    out = _out_dir(args)
    io.write_json(out / "fit.json", io.fit_to_dict(res, config=cfg.as_dict()))
    th = res.theta_hat
    p = th.cmb
    print(f"records            {len(campaign)} ({campaign.n_strain_levels} strain levels)")
    for name, value in [("E", p.E), ("sigma_f", p.sigma_f), ("b", p.b), ("eps_f", p.eps_f),
                        ("c", p.c), ("m", th.m), ("a_ref", th.a_ref)]:
        print(f"{name:<18} {value:.6g}")
    print(f"log-likelihood     {res.log_likelihood:.6f}")
    print(f"converged          {res.converged} (|grad| = {res.gradient_norm:.2e}, {res.iterations} iterations)")
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_curve(args, cfg):
    fit = _model(args, cfg)
    mm = fit.theta_hat
    out = _out_dir(args)
    meta = {"command": "curve", "model": mm.as_dict(), "config": cfg.as_dict()}
    if args.mesh:
        mesh = io.read_mesh_csv(args.mesh, cfg.strain_unit)
        d = ppp.composite_eta(mesh, mm)
        qs = cfg.curve["quantiles"]
        io.write_table(out / "mesh_life.csv", ["quantile", "cycles"], [(q, float(d.quantile(q))) for q in qs])
        meta["mesh"] = {"n_elements": len(mesh), "total_area_mm2": mesh.total_area, "eta": d.eta, "m": d.m}
    query = np.array(_query_grid(cfg))
    cycles = calibration.predict_lives(mm, query)
    header = ["strain", "area_mm2", "quantile", "cycles"]
    rows = [(*q, c) for q, c in zip(query, cycles)]
    if args.bounds:
        campaign = io.read_campaign_csv(args.bounds, cfg.strain_unit)
        fit = _model(args, cfg, campaign)
        bs = _bootstrap(fit, campaign, cfg, query)
        header += ["lower", "upper"]
        rows = [(*q, c, lo, hi) for q, c, lo, hi in zip(query, cycles, bs.lower, bs.upper)]
        meta["bootstrap"] = _bootstrap_meta(bs)
    io.write_table(out / "woehler.csv", header, rows)
    io.write_json(out / "curve.json", meta)
    return EXIT_OK


def cmd_diagnose(args, cfg):
    campaign = io.read_campaign_csv(args.campaign, cfg.strain_unit)
    fit = _model(args, cfg, campaign)
    d = cfg.diagnostics
    refit = bool(args.refit_shape or d["refit_shape"])
    q, qq, summary = diagnostics.summarize(campaign, fit, refit_shape=refit,
                                           n_permutations=int(d["permutations"]), seed=int(d["seed"]))
    out = _out_dir(args)
    ids = [r.specimen_id for r in campaign.records]
    io.write_table(out / "quotients.csv", ["specimen_id", "strain", "quotient"],
                   [(i, float(e), float(v)) for i, e, v in zip(ids, q.strains, q.quotients)])
    io.write_table(out / "qq_points.csv", ["theoretical", "empirical"], [tuple(map(float, r)) for r in qq])
    io.write_json(out / "diagnostics.json", {**summary, "seed": int(d["seed"]), "refit_shape": refit})
    print(f"KS D = {summary['ks_statistic']:.4f}, p = {summary['p_value']:.4f} (n = {summary['n']}); "
          f"Spearman rho = {summary['spearman_rho']:.3f}, p = {summary['spearman_p']:.4f}")
    return EXIT_OK


def cmd_simulate(args, cfg):
    if args.design:
        data = io.read_json(args.design)
        rows = data.get("rows")
        if not isinstance(rows, list) or not rows:
            raise SchemaError("design JSON needs a non-empty 'rows' list", path=args.design)
        try:
            rows = [(io.to_fraction(r["strain_amplitude"], cfg.strain_unit), float(r["gauge_area_mm2"]), int(r["count"]))
                    for r in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad design row: {exc}", path=args.design) from exc
        seed = int(data.get("seed", cfg.simulate["seed"]))
        if args.seed is not None:
            seed = int(args.seed)
    else:
        rows = [(r["strain_amplitude"], r["gauge_area_mm2"], r["count"]) for r in cfg.simulate["design"]]
        seed = int(cfg.simulate["seed"])
        if not rows:
            raise SchemaError("no design: pass --design or set simulate.design in the config")
    mm = _model(args, cfg).theta_hat
    campaign = sample_campaign(CampaignDesign(tuple(rows), seed=seed), mm)
    out = _out_dir(args)
    io.write_campaign_csv(campaign, out / "campaign.csv")
    io.write_json(out / "simulate.json", {"command": "simulate", "seed": seed, "model": mm.as_dict(),
                                          "design": [list(r) for r in rows], "n_records": len(campaign)})
    print(f"wrote {len(campaign)} records to {out / 'campaign.csv'} (seed {seed})")
    return EXIT_OK


def _bootstrap(fit, campaign, cfg, query):
    b = cfg.bootstrap
    fc = _fit_config(cfg)
    fc = FitConfig(**{**fc.__dict__, "initial": fit.theta_hat, "simplex": False})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return calibration.parametric_bootstrap(campaign, fit, B=int(b["B"]), level=float(b["level"]),
                                                query=query, seed=int(b["seed"]), config=fc)


def _bootstrap_meta(bs):
    return {"level": bs.level, "B": bs.n_replicates, "n_failed": bs.n_failed, "seed": bs.seed}


def cmd_bootstrap(args, cfg):
    campaign = io.read_campaign_csv(args.campaign, cfg.strain_unit)
    fit = _model(args, cfg, campaign)
    if not fit.converged:
        raise BootstrapError("the supplied fit did not converge")
    query = np.array(_query_grid(cfg))
    bs = _bootstrap(fit, campaign, cfg, query)
    out = _out_dir(args)
    io.write_table(out / "intervals.csv", ["strain", "area_mm2", "quantile", "lower", "point", "upper"],
                   [(*q, lo, pt, hi) for q, lo, pt, hi in zip(query, bs.lower, bs.point, bs.upper)])
    io.write_json(out / "bootstrap.json", {"command": "bootstrap", **_bootstrap_meta(bs),
                                           "model": fit.theta_hat.as_dict(), "config": cfg.as_dict()})
    print(f"{bs.n_replicates} replicates ({bs.n_failed} failed), level {bs.level}, seed {bs.seed}")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int, help="override every seed in the config")
    common.add_argument("--out-dir", default=".", help="directory for output files (default: .)")
    common.add_argument("--strain-unit", choices=io.STRAIN_UNITS,
                        help="unit of strain columns in input files and the config")

    parser = argparse.ArgumentParser(prog="probcmb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="maximum-likelihood calibration")
    p.add_argument("campaign", help="campaign CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("curve", parents=[common], help="Wöhler quantile curves")
    p.add_argument("--fit", help="fit JSON (default: config material block)")
    p.add_argument("--mesh", help="surface mesh CSV; adds mesh_life.csv")
    p.add_argument("--bounds", metavar="CAMPAIGN", help="add bootstrap bounds using this campaign")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("diagnose", parents=[common], help="quotients, Q-Q points and KS test")
    p.add_argument("campaign")
    p.add_argument("--fit", required=True)
    p.add_argument("--refit-shape", action="store_true", help="Q-Q/KS against a shape refitted to the quotients")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", parents=[common], help="draw a synthetic campaign")
    p.add_argument("--design", help="design JSON {seed, rows: [{strain_amplitude, gauge_area_mm2, count}]}")
    p.add_argument("--params", help="parameter or fit JSON (default: config material block)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bootstrap", parents=[common], help="percentile-bootstrap life intervals")
    p.add_argument("campaign")
    p.add_argument("--fit", required=True)
    p.set_defaults(func=cmd_bootstrap)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, strain_unit=args.strain_unit, seed=args.seed)
        return args.func(args, cfg)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except BootstrapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
