"""Command line entry point: ``confusion-attack {attack,eval,sweep,report}``.

Exit status: 0 on success, 2 for invalid configuration or mismatched
inputs, 3 when a surrogate adapter fails (partial artifacts are kept).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig, parse_config, parse_config_text
from .core import check_image
from .errors import AdapterError, AttackAborted, ConfigError, ConfusionAttackError, DimensionError
from .evaluation import evaluate_image
from .io import load_png, quantize_roundtrip, save_png, write_delta
from .pgd import TraceRecord, attack
from .report import (
    ecr_jsonl,
    format_ecr_details,
    format_ecr_table,
    format_outcome_table,
    read_ecr_jsonl,
    read_outcome_fixture,
    row_from_records,
)
from .surrogate import get_model
from .toy import clean_toy_image

logger = logging.getLogger("confusion_attack")

EXIT_OK, EXIT_CONFIG, EXIT_ADAPTER = 0, 2, 3


def load_input_image(spec: str) -> np.ndarray:
    if spec.startswith("builtin:toy-ramp"):
        size = spec[len("builtin:toy-ramp") :].lstrip(":")
        if size:
            h, w = (int(v) for v in size.lower().split("x"))
            return clean_toy_image(h, w)
        return clean_toy_image()
    try:
        return check_image(load_png(spec))
    except OSError as exc:
        raise ConfigError(f"cannot read image {spec}: {exc}") from exc


def _trace_line(rec: TraceRecord, model_ids, kind: str) -> str:
    obj = {
        "iteration": rec.iteration,
        "kind": kind,
        "entropy": rec.entropy,
        "per_model": dict(zip(model_ids, rec.per_model)),
    }
    return json.dumps(obj, sort_keys=True) + "\n"


def _roles(cfg: RunConfig) -> dict[str, str]:
    return {**{m: "train" for m in cfg.models}, **{m: "heldout" for m in cfg.heldout}}


def _write_reports(out: Path, cfg: RunConfig, records) -> None:
    roles = _roles(cfg)
    (out / "ecr.jsonl").write_text(ecr_jsonl(records, cfg.epsilon, cfg.lr, roles, cfg.to_text(include_out=False)), encoding="utf-8")
    table = format_ecr_table([row_from_records(records, cfg.epsilon, cfg.lr)], [r.model_id for r in records])
    (out / "ecr.txt").write_text(table + "\n" + format_ecr_details(records, roles), encoding="utf-8")


def run_attack(cfg: RunConfig) -> list:
    """Run one attack and write its artifacts into ``cfg.out``; returns ECR records."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.cfg").write_text(cfg.to_text(), encoding="utf-8")
    echo = cfg.to_text(include_out=False)
    x = load_input_image(cfg.image)
    train = [get_model(m) for m in cfg.models]
    acfg = cfg.attack_config()

    trace_path = out / "trace.jsonl"
    try:
        result = attack(x, train, acfg)
    except AttackAborted as exc:
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"config": echo}) + "\n")
            for rec in exc.trace:
                fh.write(_trace_line(rec, cfg.models, "pre-step"))
            fh.write(json.dumps({"aborted": str(exc.cause)}) + "\n")
        raise

    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"config": echo}) + "\n")
        for rec in result.trace:
            fh.write(_trace_line(rec, cfg.models, "pre-step"))
        fh.write(_trace_line(result.final_record, cfg.models, "final"))
        fh.write(json.dumps({"best_iteration": result.best_iteration, "best_entropy": result.best_entropy}) + "\n")

    write_delta(out / "delta.delta", result.best_delta)
    save_png(out / "adv.png", result.best_image, {"config": echo})

    x_adv = quantize_roundtrip(result.best_image) if cfg.quantize else result.best_image
    models = train + [get_model(m) for m in cfg.heldout]
    records = evaluate_image(models, x, x_adv, acfg.objective, cfg.seed, cfg.epsilon, cfg.prompt)
    _write_reports(out, cfg, records)
    return records


def run_eval(cfg: RunConfig, adv_path: str, clean_path: str) -> list:
    x_adv = load_input_image(adv_path)
    x_clean = load_input_image(clean_path)
    if x_adv.shape != x_clean.shape:
        raise DimensionError(f"adversarial {x_adv.shape} and clean {x_clean.shape} images differ in size")
    if cfg.quantize:
        x_adv, x_clean = quantize_roundtrip(x_adv), quantize_roundtrip(x_clean)
    models = [get_model(m) for m in (*cfg.models, *cfg.heldout)]
    records = evaluate_image(models, x_clean, x_adv, cfg.attack_config().objective, cfg.seed, cfg.epsilon, cfg.prompt)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_reports(out, cfg, records)
    return records


def cell_dirname(epsilon: float, lr: float) -> str:
    return f"eps{epsilon:g}_lr{lr:g}"


def _sweep_cell(cfg_text: str) -> str:
    cfg = parse_config_text(cfg_text)
    run_attack(cfg)
    return cfg.out


def run_sweep(cfg: RunConfig, jobs: int = 1) -> str:
    """Attack every (epsilon, LR) cell into its own subdirectory and tabulate."""
    root = Path(cfg.out)
    cells = [
        cfg.replace(epsilon=e, lr=lr, out=str(root / cell_dirname(e, lr)))
        for e in cfg.sweep_epsilon
        for lr in cfg.sweep_lr
    ]
    texts = [c.to_text() for c in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_sweep_cell, texts))
    else:
        for t in texts:
            _sweep_cell(t)
    return build_report(root)


def build_report(root, outcomes=None) -> str:
    root = Path(root)
    rows, model_ids = [], None
    paths = sorted(root.glob("*/ecr.jsonl")) or sorted(root.glob("ecr.jsonl"))
    if not paths and outcomes is None:
        raise ConfigError(f"no ecr.jsonl reports found under {root}")
    parsed = []
    for p in paths:
        records, mean_row = read_ecr_jsonl(p)
        parsed.append((-mean_row["epsilon"], -mean_row["lr"], records, mean_row))
    for _, _, records, mean_row in sorted(parsed, key=lambda t: (t[0], t[1])):
        rows.append(row_from_records(records, mean_row["epsilon"], mean_row["lr"]))
        model_ids = model_ids or [r.model_id for r in records]
    text = format_ecr_table(rows, model_ids) if rows else ""
    if outcomes is not None:
        text += ("\n" if text else "") + format_outcome_table(read_outcome_fixture(outcomes))
    if root.is_dir():
        (root / "table.txt").write_text(text, encoding="utf-8")
    return text


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="key = value run config")
    p.add_argument("--out")
    p.add_argument("--seed")
    p.add_argument("--models", help="comma-separated model_ids")
    p.add_argument("--mask", help="full | rect:top,left,h,w")
    p.add_argument("--epsilon")
    p.add_argument("--lr")
    p.add_argument("--iters")
    p.add_argument("--k")
    p.add_argument("--temperature")
    p.add_argument("--quantize", dest="quantize", action="store_const", const="true")
    p.add_argument("--no-quantize", dest="quantize", action="store_const", const="false")


def _overrides(args, sweep=False) -> dict[str, str]:
    keys = {
        "out": "out",
        "seed": "seed",
        "models": "models",
        "mask": "mask",
        "epsilon": "sweep_epsilon" if sweep else "epsilon",
        "lr": "sweep_lr" if sweep else "lr",
        "iters": "iterations",
        "k": "k",
        "temperature": "temperature",
        "quantize": "quantize",
    }
    return {cfg_key: getattr(args, attr) for attr, cfg_key in keys.items() if getattr(args, attr) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="confusion-attack", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="optimize one adversarial image")
    _add_run_flags(p)

    p = sub.add_parser("eval", help="ECR of an adversarial image against its clean source")
    _add_run_flags(p)
    p.add_argument("--adv", required=True)
    p.add_argument("--clean", required=True)

    p = sub.add_parser("sweep", help="attack over an epsilon x LR grid")
    _add_run_flags(p)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("report", help="tabulate ECR reports found under a directory")
    p.add_argument("directory")
    p.add_argument("--outcomes", help="hand-filled outcome fixture (eps LR model symbol)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    try:
        if args.command == "report":
            print(build_report(args.directory, args.outcomes), end="")
            return EXIT_OK
        cfg = parse_config(args.config, _overrides(args, sweep=args.command == "sweep"))
        if args.command == "attack":
            records = run_attack(cfg)
            print(format_ecr_details(records, _roles(cfg)), end="")
        elif args.command == "eval":
            records = run_eval(cfg, args.adv, args.clean)
            print(format_ecr_details(records, _roles(cfg)), end="")
        else:
            print(run_sweep(cfg, args.jobs), end="")
    except (AttackAborted, AdapterError) as exc:
        logger.error("adapter failure: %s", exc)
        return EXIT_ADAPTER
    except (ConfigError, DimensionError, ConfusionAttackError, ValueError) as exc:
        logger.error("error: %s", exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
