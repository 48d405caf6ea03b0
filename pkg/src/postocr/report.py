"""Report artifacts: CSV/JSONL/markdown writers and matplotlib figures.

Every artifact carries the hash of the configuration that produced it:
JSONL records get a ``config_hash`` field, CSV and markdown files a leading
``# config_hash: ...`` line.  Figures are written with fixed metadata so
re-runs reproduce them byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_PNG_META = {"Software": None}


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6f}"
    if value is None:
        return ""
    return str(value)


def write_jsonl(path: Path, records: Iterable[dict], config_hash: str | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            if config_hash is not None:
                rec = {**rec, "config_hash": config_hash}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    return path


def csv_text(header: Sequence[str], rows: Iterable[Sequence], config_hash: str | None = None) -> str:
    buf = io.StringIO()
    if config_hash is not None:
        buf.write(f"# config_hash: {config_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence], config_hash: str | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(header, rows, config_hash), encoding="utf-8")
    return path


def read_csv(path: Path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_json(path: Path, data: dict, config_hash: str | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    if config_hash is not None:
        data = {**data, "config_hash": config_hash}
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True) + "\n", encoding="utf-8")
    return path


def markdown_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for row in rows:
        lines.append("| " + " | ".join(_fmt(v) for v in row) + " |")
    return "\n".join(lines)


def write_markdown(path: Path, title: str, sections: Sequence[tuple[str, str]], config_hash: str | None = None) -> Path:
    parts = []
    if config_hash is not None:
        parts.append(f"<!-- config_hash: {config_hash} -->")
    parts.append(f"# {title}")
    for heading, body in sections:
        parts.append(f"## {heading}\n\n{body}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n\n".join(parts) + "\n", encoding="utf-8")
    return path


# -- figures -------------------------------------------------------------------------

def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_before_after(path: Path, cer_orig: Sequence[float], cer_post: Sequence[float], title: str = "") -> Path:
    """Per-example CER before vs after correction; points below the diagonal improved."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.scatter(cer_orig, cer_post, s=10, alpha=0.6)
    top = max([0.05, *cer_orig, *cer_post]) * 1.05
    ax.plot([0, top], [0, top], color="grey", linewidth=0.8, linestyle="--")
    ax.set_xlim(0, top)
    ax.set_ylim(0, top)
    ax.set_xlabel("CER before correction")
    ax.set_ylabel("CER after correction")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_length_sweep(path: Path, lengths: Sequence[int], cer_pct: Sequence[float], label: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(lengths, cer_pct, marker="o", label=label or None)
    ax.set_xlabel("segment length (OCR words)")
    ax.set_ylabel("CER%")
    ax.set_xticks(list(lengths))
    ax.axhline(0, color="grey", linewidth=0.6)
    if label:
        ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_boundary(path: Path, rows: Sequence[tuple[str, str, float]]) -> Path:
    """Grouped bars of seam-window CER% per strategy, left and right of the boundary."""
    strategies = list(dict.fromkeys(r[0] for r in rows))
    values = {(r[0], r[1]): r[2] for r in rows}
    fig, ax = plt.subplots(figsize=(5, 3.5))
    width = 0.38
    xs = range(len(strategies))
    for off, side in ((-width / 2, "L"), (width / 2, "R")):
        ax.bar([x + off for x in xs], [values.get((s, side), 0.0) for s in strategies], width, label=side)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(strategies)
    ax.set_ylabel("CER% (±window words)")
    ax.axhline(0, color="grey", linewidth=0.6)
    ax.legend(title="side")
    fig.tight_layout()
    return _save(fig, path)
