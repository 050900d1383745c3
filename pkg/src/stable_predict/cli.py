"""Command-line entry point.

Exit codes: 0 when the checked guarantee holds (or the command completed),
1 when a certified bound is violated, 2 on any operational error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .classes import HypothesisClass, LabeledSample, erm
from .errors import StablePredictError
from .experiments import (
    LowerBoundFamily,
    amplification_demo,
    lower_bound_experiment,
    sample_complexity_sweep,
    sweep_csv,
)
from .private import (
    MainConfig,
    main_preconditions,
    main_private_predict_exact,
    main_private_predict_sampled,
    privacy_certificate,
)
from .sample_size import Condition, PreconditionReport, n_net
from .stable import StableConfig, StableLearner, stability_certificate, stable_predict_exact, stable_predict_sampled, stable_preconditions
from .verify import NeighborGrid, evaluate_grid, net_probability_check, privacy_frontier

CLASS_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["thresholds", "point", "explicit"]},
        "domain_size": {"type": "integer", "minimum": 1},
        "vectors": {"type": "array", "items": {"type": "array", "items": {"enum": [0, 1]}}},
        "vc_dim": {"type": "integer", "minimum": 0},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_unit = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_pos = {"type": "number", "exclusiveMinimum": 0}
_count = {"type": "integer", "minimum": 1}
_seed = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}


def _schema(props, required):
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


SCHEMAS = {
    "certify-stability": _schema(
        {
            "hypothesis_class": CLASS_SCHEMA,
            "n": _count,
            "n_prime": _count,
            "gamma": _pos,
            "alpha": _unit,
            "beta": _unit,
            "grid_mode": {"enum": ["sequences", "multisets"]},
            "learner": {"enum": ["stable", "erm"]},
            "seed": _seed,
        },
        ["hypothesis_class", "n", "n_prime", "gamma"],
    ),
    "certify-privacy": _schema(
        {
            "hypothesis_class": CLASS_SCHEMA,
            "n": _count,
            "n_prime": _count,
            "eta": _pos,
            "alpha": _unit,
            "beta": _unit,
            "eps": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "r": _count,
            "partition_size": _count,
            "kappa": {"type": "number", "minimum": 0},
            "resolution": _pos,
            "eps_bound": _pos,
            "learner": {"enum": ["main", "erm"]},
            "seed": _seed,
        },
        ["hypothesis_class", "n", "n_prime", "eta", "alpha", "beta", "eps"],
    ),
    "predict": _schema(
        {
            "hypothesis_class": CLASS_SCHEMA,
            "learner": {"enum": ["stable", "main"]},
            "n_prime": _count,
            "gamma": _pos,
            "eta": _pos,
            "alpha": _unit,
            "beta": _unit,
            "eps": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "r": _count,
            "partition_size": _count,
            "kappa": {"type": "number", "minimum": 0},
            "mode": {"enum": ["exact", "sampled"]},
            "seed": _seed,
        },
        ["hypothesis_class", "learner", "n_prime"],
    ),
    "experiment": _schema(
        {
            "kind": {"enum": ["sweep", "lower_bound", "net_check", "amplification"]},
            "hypothesis_class": CLASS_SCHEMA,
            "ns": {"type": "array", "items": _count, "minItems": 1},
            "gammas": {"type": "array", "items": _pos, "minItems": 1},
            "alpha": _unit,
            "n_prime_frac": _unit,
            "target": {"type": "integer", "minimum": 0},
            "noise_rate": {"type": "number", "minimum": 0, "maximum": 0.5},
            "point_weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
            "d": {"type": "integer", "minimum": 2},
            "gamma": _pos,
            "n_prime": _count,
            "mechanism_gamma": _pos,
            "n_primes": {"type": "array", "items": _count, "minItems": 1},
            "sampling": {"enum": ["with_replacement", "distinct"]},
            "base_eps": _pos,
            "eta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "n": _count,
            "trials": _count,
            "seed": _seed,
        },
        ["kind"],
    ),
}

DATA_SCHEMA = _schema(
    {
        "domain_size": _count,
        "pairs": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        },
    },
    ["domain_size", "pairs"],
)


class UsageError(Exception):
    pass


def _load_json(path, schema):
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})")
    try:
        jsonschema.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"{path}: {exc.message}")
    return obj


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _write(out_dir, name, text):
    if out_dir is None:
        return
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_text(text)


def _main_config(cfg) -> MainConfig:
    return MainConfig(
        cfg["n_prime"],
        cfg["eta"],
        cfg["alpha"],
        cfg["beta"],
        cfg["eps"],
        cfg.get("r"),
        cfg.get("partition_size"),
        cfg.get("kappa"),
    )


@dataclass(frozen=True)
class _ErmLearner:
    H: HypothesisClass

    def __call__(self, sample):
        return np.asarray(erm(self.H, sample).row, dtype=float)


def cmd_certify_stability(cfg, args):
    H = HypothesisClass.from_json(cfg["hypothesis_class"])
    scfg = StableConfig(cfg["n_prime"], cfg["gamma"], cfg.get("alpha", 0.25), cfg.get("beta", 0.25))
    n = cfg["n"]
    mode = cfg.get("grid_mode", "multisets")
    if cfg.get("learner", "stable") == "stable":
        report = stability_certificate(scfg, H, n, mode)
        ok = report["stability_holds"]
    else:
        grid = NeighborGrid.build(H.domain_size, n, "sequences")
        values = evaluate_grid(_ErmLearner(H), grid)
        gap = float(np.max(np.abs(values[grid.pairs[:, 0]] - values[grid.pairs[:, 1]])))
        report = {
            "learner": "erm",
            "n": n,
            "grid_size": len(grid),
            "stability_gap": gap,
            "stability_bound": 3 * scfg.gamma,
            "stability_holds": gap <= 3 * scfg.gamma + 1e-9,
            "preconditions": stable_preconditions(scfg, H, n).to_json(),
        }
        ok = report["stability_holds"]
    return report, 0 if ok else 1, {}


def cmd_certify_privacy(cfg, args):
    H = HypothesisClass.from_json(cfg["hypothesis_class"])
    mcfg = _main_config(cfg)
    n = cfg["n"]
    bound = cfg.get("eps_bound")
    resolution = cfg.get("resolution", 1e-4)
    if cfg.get("learner", "main") == "main":
        report = privacy_certificate(mcfg, H, n, resolution)
        ok = report["fixed_T"]["holds"] and report["swap"]["holds"]
    else:
        if H.domain_size > 4 or n > 5:
            raise StablePredictError("exhaustive certificate needs |X| <= 4 and n <= 5")
        grid = NeighborGrid.build(H.domain_size, n, "sequences")
        values = evaluate_grid(_ErmLearner(H), grid)
        deltas, eps = privacy_frontier(values, grid.pairs, resolution)
        report = {
            "learner": "erm",
            "n": n,
            "grid_size": len(grid),
            "eps_at_delta_0": float(eps[0]),
            "eps_at_delta_ref": float(eps[min(len(eps) - 1, int(round(mcfg.eps * mcfg.alpha / resolution)))]),
            "delta_ref": mcfg.eps * mcfg.alpha,
            "frontier": {"resolution": resolution, "delta": deltas.tolist(), "eps": eps.tolist()},
            "preconditions": main_preconditions(mcfg, H, n).to_json(),
        }
        ok = True
        if bound is None:
            bound = mcfg.eps
    if bound is not None:
        report["eps_bound"] = bound
        ok = ok and report["eps_at_delta_ref"] <= bound + 1e-9
    report["holds"] = bool(ok)
    return report, 0 if ok else 1, {}


def _load_dataset(path) -> tuple:
    obj = _load_json(path, DATA_SCHEMA)
    try:
        S = LabeledSample.from_pairs(obj["pairs"])
        S.check_domain(obj["domain_size"])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}")
    return S, obj["domain_size"]


def cmd_predict(cfg, args):
    if args.data is None or args.x is None:
        raise UsageError("predict needs --data and --x")
    S, domain = _load_dataset(args.data)
    H = HypothesisClass.from_json(cfg["hypothesis_class"])
    if H.domain_size != domain:
        raise UsageError("dataset domain_size does not match the hypothesis class")
    x = args.x
    if not 0 <= x < domain:
        raise UsageError(f"query point {x} outside domain")
    rng = np.random.default_rng(cfg.get("seed", 0))
    mode = cfg.get("mode", "exact")
    out = {"x": x, "mode": mode, "learner": cfg["learner"], "n": S.n}
    if cfg["learner"] == "stable":
        scfg = StableConfig(cfg["n_prime"], cfg.get("gamma", 0.5), cfg.get("alpha", 0.25), cfg.get("beta", 0.25))
        out["preconditions"] = stable_preconditions(scfg, H, S.n).to_json()
        if mode == "exact":
            p = stable_predict_exact(H, S, scfg)(x)
        else:
            out["label"] = stable_predict_sampled(H, S, scfg, x, rng)
    else:
        for key in ("eta", "alpha", "beta", "eps"):
            if key not in cfg:
                raise UsageError(f"main learner needs {key!r}")
        mcfg = _main_config(cfg)
        out["preconditions"] = main_preconditions(mcfg, H, S.n).to_json()
        if mode == "exact":
            p = main_private_predict_exact(H, S, mcfg)(x)
        else:
            out["label"] = main_private_predict_sampled(H, S, mcfg, x, rng)
    if mode == "exact":
        out["probability"] = p
        out["label"] = int(rng.random() < p)
    return out, 0, {}


def _exp_lower_bound(cfg):
    fam = LowerBoundFamily(cfg.get("d", 3), cfg.get("alpha", 0.125))
    gamma = cfg.get("gamma", 0.25)
    ns = cfg.get("ns", [4])
    seeds = np.random.SeedSequence(cfg.get("seed", 0)).spawn(len(ns))
    reports = []
    for n, ss in zip(ns, seeds):
        mech = cfg.get("mechanism_gamma", gamma / 3)
        n_prime = cfg.get("n_prime", max(1, math.floor(n * mech)))
        scfg = StableConfig(min(n_prime, n), mech, fam.alpha)
        r = lower_bound_experiment(StableLearner(fam.H, scfg), fam, n, cfg.get("trials", 100), np.random.default_rng(ss), gamma)
        r["learner_config"] = scfg.to_json()
        r["preconditions"] = stable_preconditions(scfg, fam.H, n).to_json()
        reports.append(r)
    return {"kind": "lower_bound", "runs": reports}, {}


def _exp_net_check(cfg):
    H = HypothesisClass.from_json(cfg.get("hypothesis_class", {"kind": "thresholds", "domain_size": 8}))
    weights = cfg.get("point_weights") or [1.0 / H.domain_size] * H.domain_size
    alpha = cfg.get("alpha", 0.25)
    trials = cfg.get("trials", 1000)
    rng = np.random.default_rng(cfg.get("seed", 0))
    rows = []
    for m in cfg.get("n_primes", [2, 4, 8, 16]):
        rate = net_probability_check(H, np.asarray(weights, dtype=float), m, alpha, trials, rng, cfg.get("sampling", "with_replacement"))
        rows.append({"n_prime": m, "failure_rate": rate, "se": math.sqrt(rate * (1 - rate) / trials)})
    conds = tuple(
        Condition(f"n_prime={r['n_prime']} >= N_net(alpha, alpha, d)", r["n_prime"], n_net(alpha, alpha, max(H.vc_dim, 1)))
        for r in rows
    )
    return {"kind": "net_check", "alpha": alpha, "trials": trials, "rows": rows, "preconditions": PreconditionReport(conds).to_json()}, {}


def _exp_amplification(cfg):
    H = HypothesisClass.from_json(cfg.get("hypothesis_class", {"kind": "thresholds", "domain_size": 4}))
    r = amplification_demo(cfg.get("base_eps", 0.5), cfg.get("eta", 0.5), H, cfg.get("n", 4))
    r["preconditions"] = PreconditionReport((Condition("eta <= 1", r["eta"], 1.0, "<="),)).to_json()
    return {"kind": "amplification", **r}, {}


def _exp_sweep(cfg):
    for key in ("hypothesis_class", "ns", "gammas"):
        if key not in cfg:
            raise UsageError(f"sweep needs {key!r}")
    rows, summary = sample_complexity_sweep(cfg)
    H = HypothesisClass.from_json(cfg["hypothesis_class"])
    alpha = cfg.get("alpha", 0.25)
    frac = cfg.get("n_prime_frac", 0.1)
    conds = []
    for r in rows:
        scfg = StableConfig(min(max(1, round(frac * r["n"])), r["n"]), r["gamma"], alpha)
        for c in stable_preconditions(scfg, H, r["n"]).conditions:
            conds.append(Condition(f"[n={r['n']}, gamma={r['gamma']}] {c.name}", c.lhs, c.rhs, c.relation))
    summary["kind"] = "sweep"
    summary["preconditions"] = PreconditionReport(tuple(conds)).to_json()
    return summary, {"sweep.csv": sweep_csv(rows)}


def cmd_experiment(cfg, args):
    handler = {
        "sweep": _exp_sweep,
        "lower_bound": _exp_lower_bound,
        "net_check": _exp_net_check,
        "amplification": _exp_amplification,
    }[cfg["kind"]]
    report, extra = handler(cfg)
    return report, 0, extra


COMMANDS = {
    "certify-stability": cmd_certify_stability,
    "certify-privacy": cmd_certify_privacy,
    "predict": cmd_predict,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stable-predict", description="Stable and private prediction toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, help="64-bit seed; overrides the config")
        p.add_argument("--out", help="directory for report files")
        p.add_argument("--mode", choices=["exact", "sampled"], help="prediction mode (predict only)")
        p.add_argument("--trials", type=int, help="trial count override")
        if name == "predict":
            p.add_argument("--data", help='dataset JSON {"domain_size": n, "pairs": [[x, y], ...]}')
            p.add_argument("--x", type=int, help="query point")
    return parser


def _apply_overrides(cfg: dict, args, command: str) -> dict:
    cfg = dict(cfg)
    props = SCHEMAS[command]["properties"]
    for key in ("seed", "trials", "mode"):
        value = getattr(args, key, None)
        if value is None:
            continue
        if key not in props:
            raise UsageError(f"--{key} is not accepted by {command}")
        cfg[key] = value
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = _load_json(args.config, SCHEMAS[args.command])
        cfg = _apply_overrides(cfg, args, args.command)
        jsonschema.validate(cfg, SCHEMAS[args.command])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report, code, extra = COMMANDS[args.command](cfg, args)
    except (UsageError, StablePredictError, ValueError, jsonschema.ValidationError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    report = {"command": args.command, "config": cfg, "exit_code": code, "report": report}
    text = _dump(report)
    _write(args.out, args.command.replace("-", "_") + ".json", text)
    for name, body in extra.items():
        _write(args.out, name, body)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
