"""
실험 CLI.

  python -m gatedvigat.cli synth       --config C --out DATA
  python -m gatedvigat.cli train-head  --config C --data DATA --model M
  python -m gatedvigat.cli train-gates --config C --data DATA --model M
  python -m gatedvigat.cli infer       --config C --data DATA --model M --out OUT   (OUT/exits.jsonl)
  python -m gatedvigat.cli eval        --config C --data DATA --model M --out OUT   (report.json, per_gate.csv)
  python -m gatedvigat.cli ablate      --config C --data DATA --model M --out OUT   (ablation.csv/json)
  python -m gatedvigat.cli explain     --config C --data DATA --model M --out OUT   (explanations.jsonl)
  python -m gatedvigat.cli report      --config C --out OUT                          (OUT/exits.jsonl → report)

실패 시 stderr에 {"error": kind, "message": ...} 한 줄, exit status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from loguru import logger

from gatedvigat.config import RunConfig, config_hash, load_config
from gatedvigat.errors import ContractError, GvgError, error_kind
from gatedvigat.gating.gates import GateSchedule
from gatedvigat.gating.infer import ExitRecord, infer_all
from gatedvigat.gating.train import train_gates
from gatedvigat.head.head import all_frames_scores
from gatedvigat.head.train import train_head
from gatedvigat.pipeline.ablation import ablation_run, write_ablation
from gatedvigat.pipeline.cost import CostModel
from gatedvigat.pipeline.explain import export_explanations
from gatedvigat.pipeline.features import load_dataset, save_dataset
from gatedvigat.pipeline.metrics import metric_for
from gatedvigat.pipeline.modelfile import ModelBundle, load_model, save_model
from gatedvigat.pipeline.records import VideoRecord
from gatedvigat.pipeline.report import build_report, read_exit_records, write_exit_records, write_report
from gatedvigat.pipeline.synth import synth_from_config

EXITS_FILE = "exits.jsonl"


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n}" for n in names if not getattr(args, n, None)]
    if missing:
        raise ContractError(f"{args.command} requires {', '.join(missing)}")


def _dataset(args: argparse.Namespace, cfg: RunConfig) -> List[VideoRecord]:
    return load_dataset(args.data, label_mode=cfg.label_mode, num_classes=cfg.num_classes)


def _model(args: argparse.Namespace, cfg: RunConfig, need_gates: bool = True) -> ModelBundle:
    bundle = load_model(args.model, expected_hash=config_hash(cfg))
    if need_gates and not bundle.has_gates:
        raise ContractError(f"model {args.model} has no trained gates; run train-gates first")
    return bundle


def _all_frames_metric(bundle: ModelBundle, dataset: List[VideoRecord]) -> float:
    scores = np.vstack([all_frames_scores(bundle.head, r.global_feats, r.object_feats) for r in dataset])
    return metric_for(bundle.head.label_mode, scores, [r.labels for r in dataset])


# ---- subcommands ----


def cmd_synth(args: argparse.Namespace, cfg: RunConfig) -> Dict[str, Any]:
    _require(args, "out")
    records = synth_from_config(cfg)
    save_dataset(records, args.out)
    return {"videos": len(records), "out": args.out}


def cmd_train_head(args: argparse.Namespace, cfg: RunConfig) -> Dict[str, Any]:
    _require(args, "data", "model")
    dataset = _dataset(args, cfg)
    history: List[float] = []
    head = train_head(dataset, cfg, history=history)
    bundle = ModelBundle(
        head=head, gates=[], schedule=GateSchedule.from_config(cfg.gates), config_hash=config_hash(cfg), seed=cfg.seed
    )
    save_model(bundle, args.model)
    return {"videos": len(dataset), "final_loss": history[-1], "model": args.model}


def cmd_train_gates(args: argparse.Namespace, cfg: RunConfig) -> Dict[str, Any]:
    _require(args, "data", "model")
    dataset = _dataset(args, cfg)
    bundle = _model(args, cfg, need_gates=False)
    schedule = GateSchedule.from_config(cfg.gates)
    history: List[float] = []
    gates = train_gates(bundle.head, dataset, schedule, cfg, history=history)
    save_model(
        ModelBundle(head=bundle.head, gates=gates, schedule=schedule, config_hash=config_hash(cfg), seed=cfg.seed),
        args.model,
    )
    return {"videos": len(dataset), "gates": len(gates), "final_loss": history[-1], "model": args.model}


def _run_inference(args: argparse.Namespace, cfg: RunConfig):
    dataset = _dataset(args, cfg)
    bundle = _model(args, cfg)
    records = infer_all(bundle.head, bundle.gates, bundle.schedule, dataset, CostModel.from_config(cfg.cost))
    return dataset, bundle, records


def cmd_infer(args: argparse.Namespace, cfg: RunConfig) -> Dict[str, Any]:
    _require(args, "data", "model", "out")
    _, _, records = _run_inference(args, cfg)
    path = write_exit_records(records, str(Path(args.out) / EXITS_FILE))
    return {"videos": len(records), "exits": str(path)}


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> Dict[str, Any]:
    _require(args, "data", "model", "out")
    dataset, bundle, records = _run_inference(args, cfg)
    write_exit_records(records, str(Path(args.out) / EXITS_FILE))
    report = build_report(
        records,
        bundle.schedule,
        bundle.head.label_mode,
        cost_model=CostModel.from_config(cfg.cost),
        all_frames_metric=_all_frames_metric(bundle, dataset),
        config_hash=bundle.config_hash,
    )
    write_report(report, args.out)
    return {
        "metric": report.metric_name,
        "gated": report.overall_metric,
        "all_frames": report.all_frames_metric,
        "avg_frames": report.avg_frames,
        "ratio_total": report.cost["ratio_total"],
    }


def cmd_ablate(args: argparse.Namespace, cfg: RunConfig) -> Dict[str, Any]:
    _require(args, "data", "model", "out")
    dataset = _dataset(args, cfg)
    bundle = _model(args, cfg)
    table = ablation_run(dataset, bundle.head, bundle.gates, bundle.schedule, cfg)
    write_ablation(table, args.out)
    return {"policies": table.policies(), "budgets": table.budgets, "out": args.out}


def cmd_explain(args: argparse.Namespace, cfg: RunConfig) -> Dict[str, Any]:
    _require(args, "data", "model", "out")
    dataset, bundle, records = _run_inference(args, cfg)
    path = Path(args.out) / "explanations.jsonl"
    exps = export_explanations(
        records, dataset, bundle.head, cfg.explain.top_frames, cfg.explain.top_objects, out_path=str(path)
    )
    return {"videos": len(exps), "explanations": str(path)}


def cmd_report(args: argparse.Namespace, cfg: RunConfig) -> Dict[str, Any]:
    _require(args, "out")
    exits = args.exits or str(Path(args.out) / EXITS_FILE)
    records: List[ExitRecord] = read_exit_records(exits)
    report = build_report(
        records,
        GateSchedule.from_config(cfg.gates),
        cfg.label_mode,
        cost_model=CostModel.from_config(cfg.cost),
        config_hash=config_hash(cfg),
    )
    write_report(report, args.out)
    return {"videos": report.num_videos, "metric": report.overall_metric, "out": args.out}


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], Dict[str, Any]]] = {
    "synth": cmd_synth,
    "train-head": cmd_train_head,
    "train-gates": cmd_train_gates,
    "infer": cmd_infer,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "explain": cmd_explain,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatedvigat", description="Gated early-exit video event recognition head.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="Run config JSON (defaults if omitted).")
        p.add_argument("--data", default=None, help="Feature-file dataset directory.")
        p.add_argument("--model", default=None, help="Model file path.")
        p.add_argument("--out", default=None, help="Output directory.")
        if name == "report":
            p.add_argument("--exits", default=None, help="Exit records JSONL (default: OUT/exits.jsonl).")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        result = COMMANDS[args.command](args, cfg)
    except Exception as exc:  # noqa: BLE001
        if not isinstance(exc, (GvgError, IndexError, FileNotFoundError)):
            logger.exception(f"[cli] {args.command} failed")
        payload = exc.to_dict() if isinstance(exc, GvgError) else {"error": error_kind(exc), "message": str(exc)}
        print(json.dumps(payload, ensure_ascii=False, sort_keys=True), file=sys.stderr)
        return 2
    print(json.dumps(result, ensure_ascii=False, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
