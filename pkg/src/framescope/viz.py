"""Dependency-free SVG emitters for report figures.

Deterministic output: same data, same bytes. Only horizontal bar charts and
stacked frame-share bars are needed by the reports.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

from .frames import FRAMES

FRAME_COLORS = {
    "social": "#4e79a7",
    "health": "#59a14f",
    "legal": "#9c755f",
    "financial": "#f28e2b",
    "security": "#e15759",
    "moral": "#b07aa1",
}


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_bar_svg(
    pairs: Sequence[tuple[str, float]],
    path: str | Path,
    title: str = "",
    width: int = 640,
    highlight: Mapping[str, str] | None = None,
) -> None:
    """Horizontal bar chart; `highlight` maps label -> fill color."""
    row_h, pad, label_w = 22, 10, 220
    height = pad * 2 + row_h * len(pairs) + (24 if title else 0)
    top = pad + (24 if title else 0)
    max_v = max((abs(v) for _, v in pairs), default=1.0) or 1.0
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">'
    ]
    if title:
        parts.append(f'<text x="{pad}" y="{pad + 12}" font-weight="bold">{_esc(title)}</text>')
    for i, (label, value) in enumerate(pairs):
        y = top + i * row_h
        bar_w = (width - label_w - 2 * pad) * abs(value) / max_v
        color = (highlight or {}).get(label, "#888888")
        parts.append(f'<text x="{pad}" y="{y + 14}">{_esc(label)}</text>')
        parts.append(f'<rect x="{label_w}" y="{y + 4}" width="{bar_w:.1f}" height="{row_h - 8}" fill="{color}"/>')
        parts.append(f'<text x="{label_w + bar_w + 4:.1f}" y="{y + 14}" fill="#444">{value:.3f}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def write_stacked_frames_svg(
    rows: Sequence[tuple[str, Mapping[str, float]]],
    path: str | Path,
    title: str = "",
    width: int = 720,
) -> None:
    """Stacked per-entity frame-share bars (one row per entity, shares sum to 1)."""
    row_h, pad, label_w = 26, 10, 160
    legend_h = 20
    height = pad * 2 + row_h * len(rows) + (24 if title else 0) + legend_h
    top = pad + (24 if title else 0)
    span = width - label_w - 2 * pad
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">'
    ]
    if title:
        parts.append(f'<text x="{pad}" y="{pad + 12}" font-weight="bold">{_esc(title)}</text>')
    for i, (label, shares) in enumerate(rows):
        y = top + i * row_h
        parts.append(f'<text x="{pad}" y="{y + 16}">{_esc(label)}</text>')
        x = float(label_w)
        for frame in FRAMES:
            share = float(shares.get(frame.value, 0.0))
            if share <= 0:
                continue
            w = span * share
            parts.append(
                f'<rect x="{x:.1f}" y="{y + 4}" width="{w:.1f}" height="{row_h - 8}" '
                f'fill="{FRAME_COLORS[frame.value]}"/>'
            )
            x += w
    ly = top + len(rows) * row_h + 14
    x = float(label_w)
    for frame in FRAMES:
        parts.append(f'<rect x="{x:.1f}" y="{ly - 10}" width="10" height="10" fill="{FRAME_COLORS[frame.value]}"/>')
        parts.append(f'<text x="{x + 14:.1f}" y="{ly}">{frame.value}</text>')
        x += 90
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
