"""Command-line entry point for training, evaluation, beta sweeps, and
ablation batches."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, scoring
from .data_io import (DATASET_DEFAULTS, DatasetBundle, DatasetError, SynthConfig,
                      dataset_checksum, load_dataset, make_splits, synth_planted,
                      write_dataset)
from .experiments import aggregate, evaluate, run_once
from .model import ModelConfig, Variant
from .scoring import ScoringConfig
from .tape import ActivationKind
from .training import TrainConfig, TrainedModel

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3

VARIANTS = [v.value for v in Variant]


class CliError(Exception):
    def __init__(self, msg, code=EXIT_USAGE):
        super().__init__(msg)
        self.code = code


def _dataset_name(data_dir: Path) -> str:
    meta = json.loads((data_dir / "meta.json").read_text())
    prov = meta.get("provenance", {})
    name = str(prov.get("source", data_dir.name)).lower()
    return name if name in DATASET_DEFAULTS else data_dir.name.lower()


def _resolve_config(args) -> dict:
    """CLI flags > JSON config file > per-dataset defaults."""
    data_dir = Path(args.data)
    if not (data_dir / "meta.json").exists():
        raise CliError(f"dataset directory {data_dir} not found or missing meta.json")
    name = _dataset_name(data_dir)
    cfg = {
        "epochs": 200, "lr": 0.002, "beta": 0.5, "mu_s": 0.9, "mu_a": 0.2,
        "embed_dim": 32, "hidden_dim": 64, "struct_policy": "full",
        "dec_activation": "sigmoid", "variant": "full", "self_loops": True,
        "standardize": False, "graph_mode": "train-induced",
        "weighting": scoring.PAPER_LITERAL,
    }
    cfg.update(DATASET_DEFAULTS.get(name, {}))
    if getattr(args, "config", None):
        try:
            cfg.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise CliError(f"bad config file {args.config}: {e}")
    for key in ("epochs", "lr", "beta", "mu_s", "mu_a", "variant", "self_loops",
                "standardize", "graph_mode", "weighting", "embed_dim", "hidden_dim"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["dataset"] = name
    return cfg


def _seeds(args) -> list[int]:
    if getattr(args, "seeds", None):
        try:
            return [int(s) for s in args.seeds.split(",")]
        except ValueError:
            raise CliError(f"bad --seeds list {args.seeds!r}")
    return [args.seed]


def _build_configs(cfg: dict, n_attrs: int) -> tuple[ModelConfig, TrainConfig]:
    try:
        variant = Variant(cfg["variant"])
    except ValueError:
        raise CliError(f"unknown variant {cfg['variant']!r}; choose from {VARIANTS}")
    h = cfg["hidden_dim"]
    mc = ModelConfig(n_attrs=n_attrs, embed_dim=cfg["embed_dim"],
                     struct_layers=[h], attr_enc_layers=[h], attr_dec_layers=[h],
                     dec_activation=ActivationKind(cfg["dec_activation"]),
                     self_loops=cfg["self_loops"], variant=variant)
    try:
        tc = TrainConfig(epochs=cfg["epochs"], lr=cfg["lr"], beta=cfg["beta"],
                         mu_s=cfg["mu_s"], mu_a=cfg["mu_a"],
                         standardize=cfg["standardize"],
                         graph_mode=cfg["graph_mode"],
                         struct_policy=cfg["struct_policy"])
    except ValueError as e:
        raise CliError(str(e))
    return mc, tc


def _write_manifest(out: Path, cfg: dict, seeds, data_dir: Path, normal_class) -> None:
    manifest = {
        "version": __version__,
        "dataset_dir": str(data_dir),
        "dataset_checksum": dataset_checksum(data_dir),
        "normal_class": normal_class,
        "seeds": list(seeds),
        "config": {k: cfg[k] for k in sorted(cfg)},
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    data_dir = Path(args.data)
    bundle = load_dataset(data_dir)
    seeds = _seeds(args)
    out = Path(args.out)
    _write_manifest(out, cfg, seeds, data_dir, args.normal_class)
    mc, tc = _build_configs(cfg, bundle.graph.n_attrs)
    for seed in seeds:
        trained, split, result = run_once(bundle, args.normal_class, seed, mc, tc,
                                          scoring_mode=cfg["weighting"])
        trained.save(out / f"checkpoint_seed{seed}.json")
        (out / f"loss_seed{seed}.csv").write_text(trained.history_csv())
        print(f"seed {seed}: final loss {trained.history[-1]['total']:.6f} "
              f"test auc {result.auc:.4f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    data_dir = Path(args.data)
    bundle = load_dataset(data_dir)
    out = Path(args.out)
    manifest_path = out / "manifest.json"
    if not manifest_path.exists():
        raise CliError(f"{out}: no manifest.json (run train first)", EXIT_USAGE)
    manifest = json.loads(manifest_path.read_text())
    if manifest["dataset_checksum"] != dataset_checksum(data_dir):
        raise CliError("checkpoint/dataset checksum mismatch", EXIT_RUNTIME)
    seeds = manifest["seeds"]
    rows = []
    for seed in seeds:
        ckpt = out / f"checkpoint_seed{seed}.json"
        if not ckpt.exists():
            raise CliError(f"missing checkpoint {ckpt}", EXIT_USAGE)
        trained = TrainedModel.load(ckpt)
        split = make_splits(bundle, manifest["normal_class"], seed)
        scfg = ScoringConfig(beta=trained.train_cfg.beta, mode=cfg["weighting"])
        r = evaluate(bundle, trained, split.test_idx, split.test_truth, scfg)
        rows.append({"seed": seed, "auc": r.auc, "ap": r.ap})
    auc_mean, auc_std = aggregate(r["auc"] for r in rows)
    ap_mean, ap_std = aggregate(r["ap"] for r in rows)
    report = {
        "dataset": cfg["dataset"],
        "normal_class": manifest["normal_class"],
        "beta": cfg["beta"],
        "lambda": 0.0,
        "variant": cfg["variant"],
        "weighting_mode": cfg["weighting"],
        "per_seed": rows,
        "auc_mean": auc_mean, "auc_std": auc_std,
        "ap_mean": ap_mean, "ap_std": ap_std,
    }
    (out / "metrics.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    lines = ["normal_class,seed,auc,ap"]
    for r in rows:
        lines.append(f"{manifest['normal_class']},{r['seed']},{r['auc']!r},{r['ap']!r}")
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")
    print(f"AUC {100 * auc_mean:.2f}+-{100 * auc_std:.2f}  "
          f"AP {100 * ap_mean:.2f}+-{100 * ap_std:.2f}")
    return EXIT_OK


def cmd_sweep_beta(args) -> int:
    cfg = _resolve_config(args)
    bundle = load_dataset(Path(args.data))
    seeds = _seeds(args)
    betas = [float(b) for b in args.betas.split(",")] if args.betas \
        else [round(0.1 * i, 1) for i in range(11)]
    for b in betas:
        if not (0.0 <= b <= 1.0):
            raise CliError(f"beta {b} outside [0, 1]")
    out = Path(args.out)
    _write_manifest(out, {**cfg, "betas": betas}, seeds, Path(args.data),
                    args.normal_class)
    lines = ["beta,seed,auc,ap"]
    summary = ["beta,auc_mean,auc_std,ap_mean,ap_std"]
    for b in betas:
        mc, tc = _build_configs({**cfg, "beta": b}, bundle.graph.n_attrs)
        aucs, aps = [], []
        for seed in seeds:
            _, _, r = run_once(bundle, args.normal_class, seed, mc, tc,
                               scoring_mode=cfg["weighting"])
            lines.append(f"{b!r},{seed},{r.auc!r},{r.ap!r}")
            aucs.append(r.auc)
            aps.append(r.ap)
        am, asd = aggregate(aucs)
        pm, psd = aggregate(aps)
        summary.append(f"{b!r},{am!r},{asd!r},{pm!r},{psd!r}")
        print(f"beta {b}: auc {am:.4f}+-{asd:.4f}")
    (out / "beta_sweep.csv").write_text("\n".join(lines) + "\n")
    (out / "beta_sweep_summary.csv").write_text("\n".join(summary) + "\n")
    return EXIT_OK


def cmd_ablate(args) -> int:
    cfg = _resolve_config(args)
    bundle = load_dataset(Path(args.data))
    seeds = _seeds(args)
    variants = [args.variant] if args.variant else VARIANTS
    out = Path(args.out)
    _write_manifest(out, {**cfg, "variants": variants}, seeds, Path(args.data),
                    args.normal_class)
    lines = ["variant,seed,auc,ap"]
    summary = ["variant,auc_mean,auc_std,ap_mean,ap_std"]
    for v in variants:
        mc, tc = _build_configs({**cfg, "variant": v}, bundle.graph.n_attrs)
        aucs, aps = [], []
        for seed in seeds:
            _, _, r = run_once(bundle, args.normal_class, seed, mc, tc,
                               scoring_mode=cfg["weighting"])
            lines.append(f"{v},{seed},{r.auc!r},{r.ap!r}")
            aucs.append(r.auc)
            aps.append(r.ap)
        am, asd = aggregate(aucs)
        pm, psd = aggregate(aps)
        summary.append(f"{v},{am!r},{asd!r},{pm!r},{psd!r}")
        print(f"{v}: auc {am:.4f}+-{asd:.4f}")
    (out / "ablation.csv").write_text("\n".join(lines) + "\n")
    (out / "ablation_summary.csv").write_text("\n".join(summary) + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = SynthConfig(n_per_block=args.n_per_block, blocks=args.blocks,
                      p_in=args.p_in, p_out=args.p_out, attr_dim=args.attr_dim,
                      anomaly_rate=args.anomaly_rate)
    bundle = synth_planted(cfg, args.seed)
    write_dataset(bundle, args.out)
    print(f"wrote synthetic dataset to {args.out}: "
          f"{bundle.graph.n_nodes} nodes, {bundle.graph.n_edges} edges")
    return EXIT_OK


def _add_common(p, with_class=True):
    p.add_argument("--data", required=True, help="dataset directory")
    if with_class:
        p.add_argument("--normal-class", type=int, required=True, dest="normal_class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", help="comma-separated seed list (overrides --seed)")
    p.add_argument("--beta", type=float)
    p.add_argument("--mu-s", type=float, dest="mu_s")
    p.add_argument("--mu-a", type=float, dest="mu_a")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--embed-dim", type=int, dest="embed_dim")
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--weighting", choices=[scoring.PAPER_LITERAL,
                                           scoring.LOSS_CONSISTENT])
    p.add_argument("--self-loops", type=lambda s: s.lower() in ("1", "true", "yes"),
                   dest="self_loops")
    p.add_argument("--standardize", type=lambda s: s.lower() in ("1", "true", "yes"))
    p.add_argument("--graph-mode", choices=["train-induced", "full"],
                   dest="graph_mode")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duosphere")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("train", help="train and checkpoint"))
    _add_common(sub.add_parser("eval", help="evaluate checkpoints"))
    p = sub.add_parser("sweep-beta", help="train/eval across a beta grid")
    _add_common(p)
    p.add_argument("--betas", help="comma-separated beta grid")
    p = sub.add_parser("ablate", help="run all ablation variants")
    _add_common(p)

    p = sub.add_parser("synth", help="generate a synthetic planted-anomaly dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-block", type=int, default=200, dest="n_per_block")
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--p-in", type=float, default=0.05, dest="p_in")
    p.add_argument("--p-out", type=float, default=0.002, dest="p_out")
    p.add_argument("--attr-dim", type=int, default=16, dest="attr_dim")
    p.add_argument("--anomaly-rate", type=float, default=0.05, dest="anomaly_rate")
    return parser


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep-beta": cmd_sweep_beta,
    "ablate": cmd_ablate,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return COMMANDS[args.command](args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (DatasetError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # runtime failures
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
