"""JSON-lines and aligned-text reports shaped like the ECR and outcome tables."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .evaluation import EcrRecord, OutcomeLabel, mean_ecr


@dataclass(frozen=True)
class TableRow:
    epsilon: float
    lr: float
    ecr: dict[str, float]

    @property
    def mean(self) -> float:
        return sum(self.ecr.values()) / len(self.ecr)


def _fmt_setting(v: float) -> str:
    return f"{v:g}" if v != 1.0 else "1.0"


def format_ecr_table(rows: Sequence[TableRow], model_ids: Sequence[str] | None = None) -> str:
    """Aligned text table: one row per (epsilon, LR) with per-model ECR and the mean."""
    if model_ids is None:
        model_ids = list(rows[0].ecr) if rows else []
    header = ["eps", "LR", *model_ids, "Mean"]
    body = [
        [_fmt_setting(r.epsilon), _fmt_setting(r.lr), *(f"{r.ecr[m]:.2f}" for m in model_ids), f"{r.mean:.2f}"]
        for r in rows
    ]
    widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in [header, *body]]
    return "\n".join(lines) + "\n"


def parse_ecr_table(text: str) -> list[TableRow]:
    """Inverse of :func:`format_ecr_table` (values at the printed precision)."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    header, body = lines[0], lines[1:]
    model_ids = header[2:-1]
    rows = []
    for cells in body:
        ecr = {m: float(v) for m, v in zip(model_ids, cells[2:-1])}
        rows.append(TableRow(float(cells[0]), float(cells[1]), ecr))
    return rows


def format_ecr_details(records: Iterable[EcrRecord], roles: dict[str, str] | None = None) -> str:
    roles = roles or {}
    header = ["model", "role", "H_adv", "H_clean", "H_noise", "ECR", "status"]
    body = [
        [
            r.model_id,
            roles.get(r.model_id, "train"),
            f"{r.h_adv:.4f}",
            f"{r.h_clean:.4f}",
            f"{r.h_noise:.4f}",
            f"{r.ecr:.4f}",
            "confused" if r.effective else "no effect",
        ]
        for r in records
    ]
    widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip() for line in [header, *body]]
    return "\n".join(lines) + "\n"


def ecr_jsonl(
    records: Sequence[EcrRecord], epsilon: float, lr: float, roles: dict[str, str] | None = None, config: str = ""
) -> str:
    """One JSON object per model plus a final ``"mean"`` row."""
    roles = roles or {}
    out = []
    for r in records:
        out.append(
            {
                "model_id": r.model_id,
                "role": roles.get(r.model_id, "train"),
                "epsilon": epsilon,
                "lr": lr,
                "h_adv": r.h_adv,
                "h_clean": r.h_clean,
                "h_noise": r.h_noise,
                "ecr": r.ecr,
                "effective": r.effective,
            }
        )
    out.append({"model_id": "mean", "epsilon": epsilon, "lr": lr, "ecr": mean_ecr(records), "config": config})
    return "".join(json.dumps(o, sort_keys=True) + "\n" for o in out)


def read_ecr_jsonl(path) -> tuple[list[EcrRecord], dict]:
    records, mean_row = [], {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj["model_id"] == "mean":
            mean_row = obj
        else:
            records.append(EcrRecord(obj["model_id"], obj["h_adv"], obj["h_clean"], obj["h_noise"], obj["ecr"]))
    return records, mean_row


def row_from_records(records: Sequence[EcrRecord], epsilon: float, lr: float) -> TableRow:
    return TableRow(epsilon, lr, {r.model_id: r.ecr for r in records})


def read_outcome_fixture(path) -> list[tuple[str, str, str, OutcomeLabel]]:
    """Hand-filled outcomes: whitespace-separated ``eps  LR  model  symbol`` lines."""
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        eps, lr, model, symbol = line.split()
        entries.append((eps, lr, model, OutcomeLabel.from_symbol(symbol)))
    return entries


def format_outcome_table(entries: Sequence[tuple[str, str, str, OutcomeLabel]]) -> str:
    """Settings rows by target-model columns of outcome symbols."""
    models: list[str] = []
    settings: list[tuple[str, str]] = []
    cells: dict[tuple[str, str, str], str] = {}
    for eps, lr, model, label in entries:
        if model not in models:
            models.append(model)
        if (eps, lr) not in settings:
            settings.append((eps, lr))
        cells[(eps, lr, model)] = label.value
    header = ["eps", "LR", *models]
    body = [[eps, lr, *(cells.get((eps, lr, m), "") for m in models)] for eps, lr in settings]
    widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in [header, *body]]
    return "\n".join(lines) + "\n"
