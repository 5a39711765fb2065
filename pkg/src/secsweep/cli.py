"""Command-line front door: train, attack, report, audit.

Every run directory carries a config echo sufficient to reproduce it
bit-identically. Exit codes are a stable scripting contract:
0 success, 2 configuration error, 3 data error, 4 compute error.
"""

from __future__ import annotations

import argparse
import configparser
import glob
import json
import os
import sys

import numpy as np

from . import __version__
from .data import load_cifar_binary, load_idx, subsample
from .errors import (
    CheckpointError,
    ConfigError,
    DataFormatError,
    NonFiniteError,
    TrainingDivergedError,
)
from .harness import EPS_PRESETS, AttackPlan, SweepReport, error_rate, evaluate_sec
from .indicators import aggregate
from .svgplot import line_plot_svg
from .train import TrainConfig, load_checkpoint, save_checkpoint, train
from .zoo import FAMILIES, build_model

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_COMPUTE = 0, 2, 3, 4
SCHEMA_VERSION = 1
DATA_ROOT_ENV = "SECSWEEP_DATA_ROOT"

DATASET_DEFAULTS = {
    "mnist": {"n_train": 3000, "n_test": 1000, "batch_size": 20, "epochs": 30},
    "cifar10": {"n_train": 20000, "n_test": 1000, "batch_size": 50, "epochs": 50},
}

_CONFIG_KEYS = {
    "train": {"family", "widths", "dataset", "epochs", "lr", "batch_size", "seed", "n_train", "n_test", "data_root", "out"},
    "attack": {"attack", "preset", "eps_list", "n_iter", "step_size", "norm", "query_budget", "samples", "seed"},
}


def _read_config_file(path):
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if "secsweep" not in parser or "schema_version" not in parser["secsweep"]:
        raise ConfigError(f"{path}: missing [secsweep] schema_version")
    version = parser["secsweep"]["schema_version"]
    if version != str(SCHEMA_VERSION):
        raise ConfigError(f"{path}: unsupported schema_version {version}")
    out = {}
    for section in parser.sections():
        if section == "secsweep":
            continue
        if section not in _CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, value in parser[section].items():
            if key not in _CONFIG_KEYS[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            out[(section, key)] = value
    return out


def _setting(args, cfg, section, key, fallback=None, convert=str):
    cli_value = getattr(args, key, None)
    if cli_value is not None:
        return cli_value
    if (section, key) in cfg:
        return convert(cfg[(section, key)])
    return fallback


def _parse_widths(text):
    try:
        widths = [int(w) for w in str(text).split(",") if w.strip() != ""]
    except ValueError as err:
        raise ConfigError(f"bad widths {text!r}: {err}") from None
    if not widths or any(w < 1 for w in widths):
        raise ConfigError(f"widths must be positive integers, got {text!r}")
    return widths


def _parse_eps_list(text):
    try:
        eps = [float(e) for e in str(text).split(",") if e.strip() != ""]
    except ValueError as err:
        raise ConfigError(f"bad eps list {text!r}: {err}") from None
    if not eps or any(e <= 0 for e in eps) or any(b <= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps list must be strictly increasing positive values")
    return eps


def _resolve_data_root(value):
    root = value or os.environ.get(DATA_ROOT_ENV)
    if not root:
        raise ConfigError(f"no dataset root: pass --data-root or set {DATA_ROOT_ENV}")
    if not os.path.isdir(root):
        raise DataFormatError(f"dataset root {root} is not a directory")
    return root


def load_dataset_splits(dataset, root):
    if dataset == "mnist":
        names = [
            "train-images-idx3-ubyte",
            "train-labels-idx1-ubyte",
            "t10k-images-idx3-ubyte",
            "t10k-labels-idx1-ubyte",
        ]
        paths = [os.path.join(root, n) for n in names]
        for p in paths:
            if not os.path.exists(p):
                raise DataFormatError(f"missing dataset file {p}")
        return load_idx(paths[0], paths[1]), load_idx(paths[2], paths[3])
    if dataset == "cifar10":
        train_paths = sorted(glob.glob(os.path.join(root, "data_batch_*.bin")))
        test_path = os.path.join(root, "test_batch.bin")
        if not train_paths:
            raise DataFormatError(f"no data_batch_*.bin files under {root}")
        if not os.path.exists(test_path):
            raise DataFormatError(f"missing dataset file {test_path}")
        return load_cifar_binary(train_paths), load_cifar_binary([test_path])
    raise ConfigError(f"unknown dataset {dataset!r}; use mnist or cifar10")


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


# ---------------------------------------------------------------------------
# train


def cmd_train(args):
    cfg = _read_config_file(args.config) if args.config else {}
    dataset = _setting(args, cfg, "train", "dataset", "mnist")
    if dataset not in DATASET_DEFAULTS:
        raise ConfigError(f"unknown dataset {dataset!r}; use mnist or cifar10")
    defaults = DATASET_DEFAULTS[dataset]
    family = _setting(args, cfg, "train", "family", "cnn")
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}; expected one of {FAMILIES}")
    widths = _parse_widths(_setting(args, cfg, "train", "widths", "1"))
    epochs = int(_setting(args, cfg, "train", "epochs", defaults["epochs"], int))
    lr = float(_setting(args, cfg, "train", "lr", 0.001, float))
    batch_size = int(_setting(args, cfg, "train", "batch_size", defaults["batch_size"], int))
    seed = int(_setting(args, cfg, "train", "seed", 0, int))
    n_train = int(_setting(args, cfg, "train", "n_train", defaults["n_train"], int))
    n_test = int(_setting(args, cfg, "train", "n_test", defaults["n_test"], int))
    out_dir = _setting(args, cfg, "train", "out")
    if not out_dir:
        raise ConfigError("no output directory: pass --out")
    data_root = _resolve_data_root(_setting(args, cfg, "train", "data_root"))

    train_split, test_split = load_dataset_splits(dataset, data_root)
    train_set, _ = subsample(train_split, test_split, n_train, n_test, seed)

    ckpt_dir = os.path.join(out_dir, "checkpoints")
    os.makedirs(ckpt_dir, exist_ok=True)
    train_cfg = TrainConfig(lr=lr, batch_size=batch_size, epochs=epochs, seed=seed)
    manifest = []
    log_entries = []
    for z in widths:
        model = build_model(family, z, seed=seed)
        result = train(model, train_set, train_cfg)
        path = os.path.join(ckpt_dir, f"{family}_z{z}.ckpt")
        save_checkpoint(
            model,
            path,
            metadata={"seed": seed, "epochs": epochs, "final_loss": result.final_loss, "dataset": dataset},
        )
        manifest.append(path)
        log_entries.append(
            {
                "width": z,
                "param_count": model.param_count(),
                "final_loss": result.final_loss,
                "loss_history": result.loss_history,
            }
        )
        print(f"trained {family} z={z}: {model.param_count()} params, final loss {result.final_loss:.6f}")

    echo = {
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": __version__,
        "command": "train",
        "dataset": dataset,
        "data_root": os.path.abspath(data_root),
        "family": family,
        "widths": widths,
        "epochs": epochs,
        "lr": lr,
        "batch_size": batch_size,
        "seed": seed,
        "n_train": n_train,
        "n_test": n_test,
        "checkpoints": manifest,
    }
    _write_json(os.path.join(out_dir, "config.json"), echo)
    _write_json(os.path.join(out_dir, "train_log.json"), {"models": log_entries})
    return EXIT_OK


# ---------------------------------------------------------------------------
# attack


def _load_run_echo(run_dir):
    path = os.path.join(run_dir, "config.json")
    if not os.path.exists(path):
        raise DataFormatError(f"missing run config {path}; run `secsweep train` first")
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def cmd_attack(args):
    cfg = _read_config_file(args.config) if args.config else {}
    echo = _load_run_echo(args.run)
    attack = _setting(args, cfg, "attack", "attack", "pgd")
    preset = _setting(args, cfg, "attack", "preset")
    eps_text = _setting(args, cfg, "attack", "eps_list")
    if preset and eps_text:
        raise ConfigError("pass either --preset or --eps-list, not both")
    if preset:
        if preset not in EPS_PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {tuple(EPS_PRESETS)}")
        eps_list = list(EPS_PRESETS[preset])
    elif eps_text:
        eps_list = _parse_eps_list(eps_text)
    else:
        raise ConfigError("no budgets: pass --preset or --eps-list")

    n_iter = int(_setting(args, cfg, "attack", "n_iter", 100, int))
    step_raw = _setting(args, cfg, "attack", "step_size", "0.001")
    step_size = "scaled" if str(step_raw) == "scaled" else float(step_raw)
    norm = _setting(args, cfg, "attack", "norm", "2")
    query_budget = int(_setting(args, cfg, "attack", "query_budget", 500, int))
    samples = _setting(args, cfg, "attack", "samples", None, int)
    seed = int(_setting(args, cfg, "attack", "seed", echo["seed"], int))

    train_split, test_split = load_dataset_splits(echo["dataset"], echo["data_root"])
    _, test_set = subsample(train_split, test_split, echo["n_train"], echo["n_test"], echo["seed"])
    if samples is not None:
        samples = int(samples)
        if samples < 1 or samples > len(test_set):
            raise ConfigError(f"--samples must be in [1, {len(test_set)}]")
        test_set = test_set.take(np.arange(samples))

    try:
        plan = AttackPlan(
            name=attack, norm=float(norm) if norm != "inf" else np.inf,
            n_iter=n_iter, step_size=step_size, query_budget=query_budget, seed=seed,
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None

    curves_dir = os.path.join(args.run, "curves")
    os.makedirs(curves_dir, exist_ok=True)
    report = SweepReport(family=echo["family"], widths=echo["widths"])
    audit_records = []
    for z, ckpt in zip(echo["widths"], echo["checkpoints"]):
        if not os.path.exists(ckpt):
            raise CheckpointError(f"missing checkpoint {ckpt}")
        model, _meta = load_checkpoint(ckpt)
        attribution = [] if attack == "autoattack" else None
        curve = evaluate_sec(model, test_set, plan, eps_list, audit_records=audit_records, attribution=attribution)
        csv_path = os.path.join(curves_dir, f"{echo['family']}_z{z}__{attack}.csv")
        with open(csv_path, "w", encoding="utf-8") as f:
            f.write(curve.to_csv())
        if attribution is not None:
            attr_path = os.path.join(curves_dir, f"{echo['family']}_z{z}__{attack}_attribution.csv")
            with open(attr_path, "w", encoding="utf-8") as f:
                f.write("epsilon,sample_index,broken_by\n")
                for eps, sid, member in attribution:
                    f.write(f"{repr(float(eps))},{sid},{member}\n")
        report.curves.setdefault(plan.label, {})[z] = curve
        report.models.append(
            {"width": z, "param_count": model.param_count(), "clean_error": curve.error_rates[0]}
        )
        print(f"attacked {echo['family']} z={z} with {plan.label}: " + ", ".join(f"{e:.3g}" for e in curve.error_rates))

    report.failure_report = aggregate(
        audit_records,
        config_echo={"attack": plan.label, "eps_list": eps_list, "n_iter": n_iter, "seed": seed},
    )
    report.config_echo = {
        "schema_version": SCHEMA_VERSION,
        "command": "attack",
        "attack": attack,
        "eps_list": eps_list,
        "n_iter": n_iter,
        "step_size": step_raw,
        "norm": str(norm),
        "query_budget": query_budget,
        "samples": samples,
        "seed": seed,
    }
    with open(os.path.join(args.run, "indicators.json"), "w", encoding="utf-8") as f:
        f.write(report.failure_report.to_json())
        f.write("\n")
    sweep_path = os.path.join(args.run, "sweep.json")
    merged = report
    if os.path.exists(sweep_path):  # accumulate curves from earlier attack runs
        with open(sweep_path, encoding="utf-8") as f:
            previous = json.load(f)
        fresh = json.loads(report.to_json())
        previous["curves"].update(fresh["curves"])
        previous["models"] = fresh["models"]
        previous["failure_report"] = fresh["failure_report"]
        previous["config"] = fresh["config"]
        with open(sweep_path, "w", encoding="utf-8") as f:
            json.dump(previous, f, indent=2, sort_keys=True)
            f.write("\n")
        return EXIT_OK
    with open(sweep_path, "w", encoding="utf-8") as f:
        f.write(merged.to_json())
        f.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def cmd_report(args):
    sweep_path = os.path.join(args.run, "sweep.json")
    if not os.path.exists(sweep_path):
        raise DataFormatError(f"missing {sweep_path}; run `secsweep attack` first")
    with open(sweep_path, encoding="utf-8") as f:
        bundle = json.load(f)
    models = bundle.get("models") or []
    curves = bundle.get("curves") or {}
    if not models or not curves:
        raise DataFormatError(f"{sweep_path} has no models/curves; nothing to report")

    report_dir = os.path.join(args.run, "report")
    os.makedirs(report_dir, exist_ok=True)

    base = sorted(((m["param_count"], m["clean_error"]) for m in models))
    base_svg = line_plot_svg(
        [(bundle["family"], [p for p, _ in base], [e for _, e in base])],
        title="Clean error vs parameter count",
        xlabel="parameters (log)",
        ylabel="error rate",
        logx=True,
    )

    sec_svgs = {}
    summary = ["attack,family,width,param_count,auc"]
    for attack_label, by_width in sorted(curves.items()):
        series = []
        for width_key in sorted(by_width, key=int):
            entry = by_width[width_key]
            series.append(
                (
                    f"z={width_key} ({entry['param_count']} params)",
                    entry["epsilons"],
                    entry["error_rates"],
                )
            )
            summary.append(
                f"{attack_label},{bundle['family']},{width_key},{entry['param_count']},{repr(entry['auc'])}"
            )
        sec_svgs[attack_label] = line_plot_svg(
            series,
            title=f"Security evaluation curves ({attack_label})",
            xlabel="epsilon",
            ylabel="error rate",
        )

    # all content rendered; only now touch the filesystem
    with open(os.path.join(report_dir, "base_performance.svg"), "w", encoding="utf-8") as f:
        f.write(base_svg)
    for attack_label, svg in sorted(sec_svgs.items()):
        slug = attack_label.split(" ")[0]
        with open(os.path.join(report_dir, f"sec_{slug}.svg"), "w", encoding="utf-8") as f:
            f.write(svg)
    with open(os.path.join(report_dir, "summary.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(summary) + "\n")
    print(f"report written to {report_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit


def cmd_audit(args):
    path = os.path.join(args.run, "indicators.json")
    if not os.path.exists(path):
        raise DataFormatError(f"missing {path}; run `secsweep attack` first")
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    print(f"indicator report ({payload['style']}, {payload['n_records']} records)")
    for name in sorted(payload["indicators"]):
        entry = payload["indicators"][name]
        print(
            f"  {name}: rate {entry['rate']:.4f} ({entry['count']}/{entry['applicable']} applicable)"
        )
    if payload["malformed"]:
        print(f"  MALFORMED traces: {payload['malformed']}")
    offenders = payload.get("worst_offenders") or []
    if offenders:
        print("  worst offenders (sample: triggers): " + ", ".join(f"{s}:{c}" for s, c in offenders))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="secsweep", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a width sweep and write checkpoints")
    p_train.add_argument("--config", help="INI config file; CLI flags override it")
    p_train.add_argument("--family", choices=FAMILIES)
    p_train.add_argument("--widths", help="comma-separated width factors, e.g. 1,2,4")
    p_train.add_argument("--dataset", choices=tuple(DATASET_DEFAULTS))
    p_train.add_argument("--data-root", dest="data_root")
    p_train.add_argument("--out", help="run directory for checkpoints and logs")
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--lr", type=float)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--n-train", dest="n_train", type=int)
    p_train.add_argument("--n-test", dest="n_test", type=int)
    p_train.set_defaults(func=cmd_train)

    p_attack = sub.add_parser("attack", help="evaluate checkpoints over a budget grid")
    p_attack.add_argument("--run", required=True, help="run directory produced by `train`")
    p_attack.add_argument("--config", help="INI config file; CLI flags override it")
    p_attack.add_argument(
        "--attack", choices=("pgd", "apgd-cw", "apgd-dlr-targeted", "square", "autoattack")
    )
    p_attack.add_argument("--preset", help=f"named eps grid: {', '.join(EPS_PRESETS)}")
    p_attack.add_argument("--eps-list", dest="eps_list", help="comma-separated budgets")
    p_attack.add_argument("--n-iter", dest="n_iter", type=int)
    p_attack.add_argument("--step-size", dest="step_size", help="float, or 'scaled' for 2.5*eps/n")
    p_attack.add_argument("--norm", choices=("2", "inf"))
    p_attack.add_argument("--query-budget", dest="query_budget", type=int)
    p_attack.add_argument("--samples", type=int, help="attack only the first N test samples")
    p_attack.add_argument("--seed", type=int)
    p_attack.set_defaults(func=cmd_attack)

    p_report = sub.add_parser("report", help="render SVG plots and the AUC summary")
    p_report.add_argument("--run", required=True)
    p_report.set_defaults(func=cmd_report)

    p_audit = sub.add_parser("audit", help="print the attack-failure indicator report")
    p_audit.add_argument("--run", required=True)
    p_audit.set_defaults(func=cmd_audit)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataFormatError, CheckpointError, FileNotFoundError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDivergedError, NonFiniteError, ArithmeticError) as err:
        print(f"compute error: {err}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
