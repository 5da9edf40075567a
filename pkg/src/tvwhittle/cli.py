"""Command-line front end: ``grid-ar1``, ``experiment``, ``fit`` and ``selftest``.

Settings are resolved in three layers: built-in defaults, an optional flat
YAML/JSON config file (``--config``), then command-line flags. The resolved
settings are written to ``config.json`` in the output directory.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import yaml

from .exceptions import InvalidInputError
from .experiments import (
    CURVE_COLUMNS,
    DEFAULT_METHODS,
    EXPERIMENT_ORDER,
    GRID_COLUMNS,
    ExperimentSetup,
    grid_study,
    make_modification,
    run_experiment,
    run_fit,
    validate_setup,
)
from .inference import GibbsConfig, Priors
from .io import load_series, write_json, write_rows
from .likelihood import LikelihoodSpec
from .localper import segment_geometry
from .spectral import default_phi_grid

log = logging.getLogger("tvwhittle")

COMMON = {"seed": 0, "out": None, "threads": 1}
GIBBS = {"n_iter": 12000, "burn_in": 2000, "thin": 2, "n_particles": 100}
DEFAULTS = {
    "grid-ar1": {**COMMON, "out": "out/grid-ar1", "phi": [0.2, 0.5, 0.8], "T": [50, 100, 200],
                 "n_rep": 100, "grid_size": 1999, "n_curves": 3},
    "experiment": {**COMMON, "out": "out/experiment", "experiment": 1, "T": 1500, "n_rep": 100,
                   "methods": list(DEFAULT_METHODS), **GIBBS, "rescale": False, "scale_q_by_step": True,
                   "clip_negative": True, "n_path_reps": 1},
    "fit": {**COMMON, "out": "out/fit", "input": None, "family": "dynamic", "mod": "raw", "order": 2,
            "N": None, "S": None, "m": 50, "sv": True, "sv_q": "joint", "difference": "first",
            "clip_negative": True, **GIBBS},
    "selftest": {"seed": 12345},
}
PRESETS = {
    "desk": {"T": 500, "n_rep": 10, "n_iter": 3000, "burn_in": 1000, "thin": 2,
             "methods": ["DW-m15", "DW-m15-TA", "DW-m15-PW", "DW-m15-BC"]},
    "full": {},
}


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("on", "true", "yes", "1"):
        return True
    if s in ("off", "false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {v!r}")


def load_config(path) -> dict:
    """Read a flat key/value config from YAML or JSON."""
    text = Path(path).read_text()
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path}: config must be a flat mapping of keys to values")
    for k, v in data.items():
        if isinstance(v, dict):
            raise InvalidInputError(f"{path}: key {k!r} holds a nested mapping; the config format is flat")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then the preset (experiment only), then the config file, then CLI flags."""
    cfg = dict(DEFAULTS[command])
    file_cfg = load_config(args.config) if getattr(args, "config", None) else {}
    if command == "experiment":
        preset = getattr(args, "preset", None) or file_cfg.pop("preset", None) or "full"
        if preset not in PRESETS:
            raise InvalidInputError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg.update(PRESETS[preset])
        cfg["preset"] = preset
    unknown = sorted(set(file_cfg) - set(cfg))
    if unknown:
        raise InvalidInputError(f"unknown config keys for {command}: {', '.join(unknown)}")
    cfg.update(file_cfg)
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _gibbs(cfg) -> GibbsConfig:
    return GibbsConfig(int(cfg["n_iter"]), int(cfg["burn_in"]), int(cfg["thin"]),
                       int(cfg["n_particles"]), int(cfg["seed"]))


def _prepare_out(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def cmd_grid_ar1(cfg) -> int:
    phis = cfg["phi"] if isinstance(cfg["phi"], list) else [cfg["phi"]]
    Ts = cfg["T"] if isinstance(cfg["T"], list) else [cfg["T"]]
    for phi in phis:
        if not -1.0 < float(phi) < 1.0:
            raise InvalidInputError(f"phi={phi} must lie in (-1, 1)")
    if int(cfg["n_rep"]) < 1 or min(int(T) for T in Ts) < 3:
        raise InvalidInputError("need n_rep >= 1 and T >= 3")
    out = _prepare_out(cfg)
    write_json(out / "config.json", {"command": "grid-ar1", **cfg})
    rows, curves = grid_study(
        [float(p) for p in phis], [int(T) for T in Ts], int(cfg["n_rep"]), int(cfg["seed"]),
        grid=default_phi_grid(int(cfg["grid_size"])), n_curves=int(cfg["n_curves"]),
    )
    write_rows(out / "grid_summary.csv", GRID_COLUMNS, rows)
    if curves:
        write_rows(out / "grid_curves.csv", CURVE_COLUMNS, curves)
    for r in rows:
        print(f"phi={r['phi_true']:<5} T={r['T']:<5} efficiency={r['efficiency']:.4f} "
              f"perturbation={r['perturbation']:.4f}")
    return 0


def experiment_setup(cfg) -> ExperimentSetup:
    methods = cfg["methods"]
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    exp = int(cfg["experiment"])
    if exp not in EXPERIMENT_ORDER:
        raise InvalidInputError(f"experiment must be 1, 2 or 3, got {exp}")
    return ExperimentSetup(
        experiment=exp, T=int(cfg["T"]), n_rep=int(cfg["n_rep"]), methods=tuple(methods),
        gibbs=_gibbs(cfg), seed=int(cfg["seed"]), rescale=_bool(cfg["rescale"]),
        scale_q_by_step=_bool(cfg["scale_q_by_step"]), clip_negative=_bool(cfg["clip_negative"]),
    )


def describe_methods(setup: ExperimentSetup) -> dict:
    """Geometry and priors of every method, as echoed in ``config.json``."""
    out = {}
    for label, spec in setup.specs().items():
        entry = {"family": spec.family, "order": spec.order, "modification": spec.modification.kind}
        if spec.family == "block":
            geom = segment_geometry(setup.T, spec.N, spec.S)
            entry.update(N=spec.N, S=spec.S, M=geom.M, K=spec.N // 2 - 1)
        elif spec.family == "dynamic":
            entry.update(m=spec.m, N=2 * spec.m + 1, n_obs=setup.T - 2 * spec.m)
        entry["priors"] = Priors.default(spec, scale_by_step=setup.scale_q_by_step).to_dict()
        out[label] = entry
    return out


def cmd_experiment(cfg, dry_run: bool = False) -> int:
    setup = experiment_setup(cfg)
    validate_setup(setup)
    out = _prepare_out(cfg)
    echo = {
        "command": "experiment", **cfg, "methods": list(setup.methods),
        "order": setup.order, "n_kept_draws": setup.gibbs.n_kept,
        "method_details": describe_methods(setup),
    }
    write_json(out / "config.json", echo)
    if dry_run:
        print(f"configuration written to {out / 'config.json'} (dry run, no sampling)")
        return 0
    t0 = time.time()
    summary = run_experiment(setup, out, threads=int(cfg["threads"]), n_path_reps=int(cfg["n_path_reps"]))
    for r in summary:
        print(f"{r['method']:<16} efficiency={r['efficiency']:.4f} perturbation={r['perturbation']:.4f}")
    log.info("experiment finished in %.1f s", time.time() - t0)
    return 0


def fit_spec(cfg) -> LikelihoodSpec:
    family = cfg["family"]
    mod = make_modification(cfg["mod"], _bool(cfg["clip_negative"]))
    common = {"order": int(cfg["order"]), "sv": _bool(cfg["sv"])}
    if family == "time_domain":
        if cfg["mod"] != "raw":
            raise InvalidInputError("the time-domain likelihood takes no modification")
        return LikelihoodSpec("time_domain", **common)
    if family == "block":
        if cfg["N"] is None or cfg["S"] is None:
            raise InvalidInputError("family=block needs N and S")
        return LikelihoodSpec("block", N=int(cfg["N"]), S=int(cfg["S"]), modification=mod, **common)
    if family == "dynamic":
        return LikelihoodSpec("dynamic", m=int(cfg["m"]), modification=mod, **common)
    if family == "whittle":
        return LikelihoodSpec("whittle", modification=mod, **common)
    raise InvalidInputError(f"unknown family {family!r}")


def cmd_fit(cfg) -> int:
    if not cfg["input"]:
        raise InvalidInputError("fit needs --input <csv>")
    spec = fit_spec(cfg)
    x, dates = load_series(cfg["input"])
    priors = Priors.default(spec, sv_q=cfg["sv_q"])
    out = _prepare_out(cfg)
    write_json(out / "config.json", {"command": "fit", **cfg, "label": spec.label, "priors": priors.to_dict()})
    info = run_fit(x, spec, _gibbs(cfg), out, priors, dates, cfg["difference"])
    write_json(out / "diagnostics.json", info)
    print(f"{spec.label}: path update rate {info['path_update_rate']:.3f}, "
          f"subtracted mean {info['subtracted_mean']:.6g}; results in {out}")
    return 0


def cmd_selftest(cfg) -> int:
    from .selftest import format_report, run_selftest

    results = run_selftest(int(cfg["seed"]))
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvwhittle", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat YAML or JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="worker processes for replications")

    g = sub.add_parser("grid-ar1", help="AR(1) grid-posterior efficiency and perturbation study")
    common(g)
    g.add_argument("--phi", type=float, nargs="+")
    g.add_argument("--T", type=int, nargs="+")
    g.add_argument("--n-rep", dest="n_rep", type=int)
    g.add_argument("--grid-size", dest="grid_size", type=int)
    g.add_argument("--n-curves", dest="n_curves", type=int, help="replications whose posterior curves are saved")

    e = sub.add_parser("experiment", help="replicated tvAR experiment (1, 2 or 3)")
    common(e)
    e.add_argument("--experiment", type=int, choices=(1, 2, 3))
    e.add_argument("--preset", choices=sorted(PRESETS))
    e.add_argument("--T", type=int)
    e.add_argument("--n-rep", dest="n_rep", type=int)
    e.add_argument("--methods", help="comma-separated method labels, e.g. DW-m15,DW-m15-TA,BW-N30-S15-BC")
    _gibbs_flags(e)
    e.add_argument("--rescale", type=_bool, help="stretch experiment 3 to T != 1500 (on/off)")
    e.add_argument("--clip-negative", dest="clip_negative", type=_bool,
                   help="truncate negative boundary-corrected ordinates at zero (on/off)")
    e.add_argument("--n-path-reps", dest="n_path_reps", type=int)
    e.add_argument("--dry-run", action="store_true", help="validate and echo the configuration only")

    f = sub.add_parser("fit", help="fit a tvAR model to a CSV series")
    common(f)
    f.add_argument("--input", help="CSV with one (value) or two (date,value) columns")
    f.add_argument("--family", choices=("time_domain", "whittle", "block", "dynamic"))
    f.add_argument("--mod", choices=("raw", "TA", "TR", "PW", "BC", "BCN"))
    f.add_argument("--order", type=int)
    f.add_argument("--N", type=int)
    f.add_argument("--S", type=int)
    f.add_argument("--m", type=int)
    f.add_argument("--sv", type=_bool, help="stochastic volatility on/off")
    f.add_argument("--sv-q", dest="sv_q", choices=("joint", "separate"))
    f.add_argument("--difference", choices=("none", "first"))
    f.add_argument("--clip-negative", dest="clip_negative", type=_bool)
    _gibbs_flags(f)

    s = sub.add_parser("selftest", help="run the fast invariant suite")
    s.add_argument("--seed", type=int)
    return parser


def _gibbs_flags(p):
    p.add_argument("--n-iter", dest="n_iter", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--n-particles", dest="n_particles", type=int)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args.command, args)
        if args.command == "grid-ar1":
            return cmd_grid_ar1(cfg)
        if args.command == "experiment":
            return cmd_experiment(cfg, dry_run=args.dry_run)
        if args.command == "fit":
            return cmd_fit(cfg)
        return cmd_selftest(cfg)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
