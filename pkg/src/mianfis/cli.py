"""Command-line interface.

One binary, six subcommands:

  synth             generate the synthetic two-concept benchmark
  train             train a model on a bag CSV
  predict           score bags with a saved model
  cv                stratified k-fold cross-validation (--naive for baseline)
  gradcheck         analytic vs finite-difference gradient check
  dropout-compare   paired dropout vs no-dropout training traces

Settings resolve as flag > config file (JSON) > built-in default; the seed
additionally falls back to the MIANFIS_SEED environment variable. The
effective configuration is echoed to stdout and into every artifact
(CSV `# key=value` comment lines, model JSON "meta" member). Commands that
write a CSV report also render a matplotlib figure next to it unless
--no-plot is given. Exit codes: 0 success, 2 validation error, 3 data error,
4 internal error.
"""

import argparse
import json
import os
import sys

from . import dataio, plots
from .bags import validate_dataset
from .datagen import SynthSpec, generate
from .errors import DataError, FormatError, InternalError, MiAnfisError, ValidationError
from .evaluation import (classify, cross_validate, dropout_comparison,
                         naive_baseline_cv, roc)
from .initialization import InitConfig, init_model, pca_apply
from .model import predict
from .training import TrainConfig, gradient_check, predict_with_dropout_scaling, train

_DEFAULTS = {
    "rules": 6,
    "init": "fcm",
    "sigma_init": 0.5,
    "b_init": 1.0,
    "alpha_premise": 1.0,
    "alpha_consequent": 1.0,
    "order": "zero",
    "eta": 0.1,
    "epochs": 150,
    "epsilon": 1e-6,
    "dropout_p": 1.0,
    "gradient_mode": "exact",
    "update_mode": "batch",
    "pca_dims": None,
    "folds": 10,
    "threshold": 0.5,
    "threads": 1,
    "seed": 0,
}


def _load_config_file(path) -> dict:
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})")
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    unknown = sorted(set(doc) - set(_DEFAULTS))
    if unknown:
        raise ValidationError(f"{path}: unknown config keys: {', '.join(unknown)}")
    return doc


def _effective_config(args) -> dict:
    """Merge defaults, config file, environment seed, and flags."""
    cfg = dict(_DEFAULTS)
    env_seed = os.environ.get("MIANFIS_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise ValidationError(f"MIANFIS_SEED is not an integer: {env_seed!r}")
    if getattr(args, "config", None):
        cfg.update(_load_config_file(args.config))
    for key in _DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    try:
        for key in ("sigma_init", "b_init", "alpha_premise", "alpha_consequent",
                    "eta", "epsilon", "dropout_p", "threshold"):
            cfg[key] = float(cfg[key])
        for key in ("rules", "epochs", "folds", "threads", "seed"):
            cfg[key] = int(cfg[key])
        if cfg["pca_dims"] is not None:
            cfg["pca_dims"] = int(cfg["pca_dims"])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad config value: {exc}")
    return cfg


def _train_config(cfg) -> TrainConfig:
    return TrainConfig(eta=cfg["eta"], epochs_max=cfg["epochs"],
                       epsilon=cfg["epsilon"], dropout_p=cfg["dropout_p"],
                       gradient_mode=cfg["gradient_mode"],
                       update_mode=cfg["update_mode"], seed=cfg["seed"])


def _init_config(cfg) -> InitConfig:
    return InitConfig(strategy=cfg["init"], sigma_init=cfg["sigma_init"],
                      b_init=cfg["b_init"], alpha_premise=cfg["alpha_premise"],
                      alpha_consequent=cfg["alpha_consequent"],
                      order=cfg["order"], seed=cfg["seed"])


def _meta(command, cfg) -> dict:
    meta = {"command": command}
    for key, value in cfg.items():
        meta[key] = "none" if value is None else value
    return meta


def _echo(cfg):
    print("config: " + json.dumps(cfg, sort_keys=True))


def _fig_path(csv_path) -> str:
    return os.path.splitext(str(csv_path))[0] + ".svg"


def cmd_synth(args) -> int:
    kwargs = {}
    for field in ("concept_sigma", "bags_per_concept", "negative_bags",
                  "instances_min", "instances_max", "domain_min", "domain_max",
                  "exclusion_radius"):
        value = getattr(args, field)
        if value is not None:
            kwargs[field] = value
    if args.centers:
        try:
            kwargs["concept_centers"] = tuple(
                tuple(float(v) for v in part.split(","))
                for part in args.centers.split(";"))
        except ValueError:
            raise ValidationError(f"bad --centers value: {args.centers!r}")
    seed = args.seed
    if seed is None:
        env_seed = os.environ.get("MIANFIS_SEED")
        seed = int(env_seed) if env_seed is not None else 0
    spec = SynthSpec(seed=seed, **kwargs)
    ds = generate(spec)
    meta = {"command": "synth", "seed": spec.seed,
            "concept_sigma": spec.concept_sigma,
            "bags_per_concept": spec.bags_per_concept,
            "negative_bags": spec.negative_bags,
            "instances_min": spec.instances_min,
            "instances_max": spec.instances_max,
            "exclusion_radius": spec.exclusion_radius}
    dataio.write_bags(ds, args.out, meta=meta)
    print("config: " + json.dumps(meta, sort_keys=True))
    n_pos = sum(1 for b in ds.bags if b.label >= 0.5)
    print(f"wrote {len(ds)} bags ({n_pos} positive, {len(ds) - n_pos} negative, "
          f"{sum(b.size for b in ds.bags)} instances) to {args.out}")
    if not args.no_plot and ds.dim == 2:
        fig = _fig_path(args.out)
        plots.plot_dataset(ds, fig, spec.concept_centers, spec.concept_sigma)
        print(f"wrote figure {fig}")
    return 0


def cmd_train(args) -> int:
    cfg = _effective_config(args)
    _echo(cfg)
    ds = dataio.read_bags(args.data)
    train_cfg = _train_config(cfg)
    init_cfg = _init_config(cfg)

    pca = None
    if cfg["pca_dims"] is not None:
        from .initialization import pca_fit
        pca = pca_fit(ds.stacked_instances(), cfg["pca_dims"])
        ds = pca_apply(pca, ds)

    model = init_model(ds, cfg["rules"], init_cfg)
    model, report = train(model, ds, train_cfg)
    print(f"trained {cfg['rules']} rules for {report.epochs} epochs "
          f"(stop: {report.stop_reason}), final RMSE {report.rmse[-1]:.6f}")

    meta = _meta("train", cfg)
    dataio.save_model(model, args.out_model, pca=pca, meta=meta)
    print(f"wrote model {args.out_model}")
    if args.report:
        dataio.write_train_report(report, args.report, meta=meta)
        print(f"wrote report {args.report}")
        if not args.no_plot:
            fig = _fig_path(args.report)
            plots.plot_training_curve(report, fig)
            print(f"wrote figure {fig}")
    return 0


def cmd_predict(args) -> int:
    model, pca = dataio.load_model(args.model)
    ds = dataio.read_bags(args.data)
    if pca is not None:
        ds = pca_apply(pca, ds)
    threshold = args.threshold if args.threshold is not None else 0.5
    scale = args.scale if args.scale is not None else 1.0
    rows = []
    for bag in ds.bags:
        score = (predict(model, bag) if scale == 1.0
                 else predict_with_dropout_scaling(model, bag, scale))
        rows.append((bag.bag_id, score, classify(score, threshold)))
    meta = {"command": "predict", "model": str(args.model),
            "threshold": threshold, "scale": scale}
    dataio.write_scores(rows, args.out, meta=meta)
    print("config: " + json.dumps(meta, sort_keys=True))
    n_pos = sum(1 for _, _, c in rows if c == "positive")
    print(f"wrote {len(rows)} scores ({n_pos} positive) to {args.out}")
    return 0


def cmd_cv(args) -> int:
    cfg = _effective_config(args)
    _echo(cfg)
    ds = dataio.read_bags(args.data)
    runner = naive_baseline_cv if args.naive else cross_validate
    result = runner(ds, cfg["rules"], _train_config(cfg), folds=cfg["folds"],
                    seed=cfg["seed"], init=_init_config(cfg),
                    pca_dims=cfg["pca_dims"], threshold=cfg["threshold"],
                    threads=cfg["threads"])
    label = "naive baseline" if args.naive else "multiple-instance"
    print(f"{label} {cfg['folds']}-fold accuracy: "
          f"{result.mean_accuracy:.4f} +/- {result.std_accuracy:.4f}")

    meta = _meta("cv", cfg)
    meta["naive"] = bool(args.naive)
    dataio.write_cv_result(result, args.out, meta=meta)
    print(f"wrote cv table {args.out}")

    curve = roc([(s, t) for _, s, t in result.scores])
    print(f"pooled out-of-fold AUC: {curve.auc:.4f}")
    roc_out = args.roc_out or os.path.splitext(str(args.out))[0] + "_roc.csv"
    dataio.write_roc(curve, roc_out, meta=meta)
    print(f"wrote roc {roc_out}")
    if not args.no_plot:
        fig = _fig_path(roc_out)
        plots.plot_roc(curve, fig)
        print(f"wrote figure {fig}")
    return 0


def cmd_gradcheck(args) -> int:
    trials = args.trials if args.trials is not None else 100
    seed = args.seed if args.seed is not None else 0
    mode = args.gradient_mode if args.gradient_mode is not None else "exact"
    if trials < 1:
        raise ValidationError(f"--trials must be >= 1, got {trials}")
    results = gradient_check(trials=trials, seed=seed, mode=mode)
    print(f"{'trial':>5} {'R':>2} {'D':>2} {'M':>2} {'a_pre':>5} {'a_con':>5} "
          f"{'max_rel_err':>12} status")
    failures = 0
    for row in results:
        failures += 0 if row["ok"] else 1
        print(f"{row['trial']:>5} {row['rules']:>2} {row['dim']:>2} "
              f"{row['instances']:>2} {row['alpha_premise']:>5.1f} "
              f"{row['alpha_consequent']:>5.1f} {row['max_rel_err']:>12.3e} "
              f"{'ok' if row['ok'] else 'FAIL'}")
    print(f"{trials - failures}/{trials} trials passed (mode={mode}, seed={seed})")
    if failures:
        raise InternalError(f"{failures} gradient check trials failed")
    return 0


def cmd_dropout_compare(args) -> int:
    cfg = _effective_config(args)
    _echo(cfg)
    ds = dataio.read_bags(args.data)
    keep_p = args.p if args.p is not None else 0.7
    split = args.split_ratio if args.split_ratio is not None else 0.9
    result = dropout_comparison(ds, cfg["rules"], _train_config(cfg), keep_p,
                                split_ratio=split, seed=cfg["seed"],
                                init=_init_config(cfg))
    print(f"final test SSE: dropout(p={keep_p}) {result.test_sse_dropout[-1]:.4f} "
          f"vs plain {result.test_sse_plain[-1]:.4f}")

    meta = _meta("dropout-compare", cfg)
    meta["p"] = keep_p
    meta["split_ratio"] = split
    dataio.write_dropout_traces(result, args.out, meta=meta)
    print(f"wrote traces {args.out}")
    if not args.no_plot:
        fig = _fig_path(args.out)
        plots.plot_dropout_traces(result, fig)
        print(f"wrote figure {fig}")
    return 0


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--rules", type=int, help="number of rules")
    p.add_argument("--init", choices=["fcm", "random"], help="init strategy")
    p.add_argument("--sigma-init", dest="sigma_init", type=float,
                   help="initial membership width")
    p.add_argument("--b-init", dest="b_init", type=float,
                   help="initial consequent bias")
    p.add_argument("--alpha-premise", dest="alpha_premise", type=float,
                   help="softmax sharpness, premise side")
    p.add_argument("--alpha-consequent", dest="alpha_consequent", type=float,
                   help="softmax sharpness, consequent side")
    p.add_argument("--order", choices=["zero", "first"], help="consequent order")
    p.add_argument("--eta", type=float, help="learning rate")
    p.add_argument("--epochs", type=int, help="maximum training epochs")
    p.add_argument("--epsilon", type=float, help="parameter-change stop threshold")
    p.add_argument("--dropout-p", dest="dropout_p", type=float,
                   help="rule keep probability during training (1 disables)")
    p.add_argument("--gradient-mode", dest="gradient_mode",
                   choices=["exact", "paper"], help="premise gradient mode")
    p.add_argument("--update-mode", dest="update_mode",
                   choices=["batch", "online"], help="update schedule")
    p.add_argument("--pca-dims", dest="pca_dims", type=int,
                   help="project instances to this many principal axes")
    p.add_argument("--folds", type=int, help="cross-validation folds")
    p.add_argument("--threshold", type=float, help="classification threshold")
    p.add_argument("--threads", type=int, help="worker threads for cv folds")
    p.add_argument("--seed", type=int, help="RNG seed (env MIANFIS_SEED is the fallback)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mianfis",
        description="Multiple-instance ANFIS: train, score, and evaluate "
                    "fuzzy rule bases on bags of instances.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic two-concept benchmark")
    p.add_argument("--out", required=True, help="output bag CSV path")
    p.add_argument("--seed", type=int)
    p.add_argument("--centers", help="concept centers, e.g. '0.5,0.5;1.5,1.5'")
    p.add_argument("--concept-sigma", dest="concept_sigma", type=float)
    p.add_argument("--bags-per-concept", dest="bags_per_concept", type=int)
    p.add_argument("--negative-bags", dest="negative_bags", type=int)
    p.add_argument("--instances-min", dest="instances_min", type=int)
    p.add_argument("--instances-max", dest="instances_max", type=int)
    p.add_argument("--domain-min", dest="domain_min", type=float)
    p.add_argument("--domain-max", dest="domain_max", type=float)
    p.add_argument("--exclusion-radius", dest="exclusion_radius", type=float)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a bag CSV")
    p.add_argument("--data", required=True, help="bag CSV path")
    p.add_argument("--out-model", dest="out_model", required=True,
                   help="output model JSON path")
    p.add_argument("--report", help="output per-epoch RMSE CSV path")
    p.add_argument("--no-plot", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score bags with a saved model")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--data", required=True, help="bag CSV path")
    p.add_argument("--out", required=True, help="output scores CSV path")
    p.add_argument("--threshold", type=float)
    p.add_argument("--scale", type=float,
                   help="test-time keep-probability scaling for dropout-trained models")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    p.add_argument("--data", required=True, help="bag CSV path")
    p.add_argument("--out", required=True, help="output cv CSV path")
    p.add_argument("--roc-out", dest="roc_out", help="output roc CSV path")
    p.add_argument("--naive", action="store_true",
                   help="train on instances as single-instance bags (baseline)")
    p.add_argument("--no-plot", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("gradcheck",
                       help="analytic vs finite-difference gradient check")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--gradient-mode", dest="gradient_mode",
                   choices=["exact", "paper"])
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("dropout-compare",
                       help="paired dropout vs no-dropout training traces")
    p.add_argument("--data", required=True, help="bag CSV path")
    p.add_argument("--out", required=True, help="output traces CSV path")
    p.add_argument("--p", type=float, help="rule keep probability (default 0.7)")
    p.add_argument("--split-ratio", dest="split_ratio", type=float,
                   help="training fraction of the stratified split (default 0.9)")
    p.add_argument("--no-plot", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_dropout_compare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InternalError, MiAnfisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
