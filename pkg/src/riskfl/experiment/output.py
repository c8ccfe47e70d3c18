"""CSV and SVG emission. Output is byte-for-byte deterministic."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from pathlib import Path
from xml.sax.saxutils import escape

from .metrics import SweepRow
from .runner import RoundLog

CSV_COLUMNS = (
    "round",
    "test_accuracy",
    "links",
    "selected",
    "transmitted",
    "regret_signal",
    "regret_bound",
    "avg_risk",
)


def _ids(devices: Sequence[int]) -> str:
    return ";".join(str(k) for k in devices)


def _write(path, text: str) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_csv(logs: Sequence[RoundLog], path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for e in logs:
        lines.append(
            f"{e.round},{e.test_accuracy:.6f},{e.links},{_ids(e.selected)},{_ids(e.transmitted)},"
            f"{e.regret_signal:.6f},{e.regret_bound:.6f},{e.avg_risk:.6f}"
        )
    _write(path, "\n".join(lines) + "\n")


def emit_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    lines = ["delta,rounds_to_target,avg_links"]
    for r in rows:
        reached = "" if r.rounds_to_target is None else str(r.rounds_to_target)
        lines.append(f"{r.delta:.6f},{reached},{r.avg_links:.6f}")
    _write(path, "\n".join(lines) + "\n")


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b")
WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 50


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _num(v: float) -> str:
    return f"{v:.4g}"


def emit_svg_lines(
    series: Mapping[str, Sequence[tuple[float, float]]],
    path,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> None:
    """Line chart of named ``(x, y)`` series with axis ticks and a legend."""
    if not series:
        raise ValueError("need at least one series")
    for name, pts in series.items():
        if len(pts) < 2:
            raise ValueError(f"series {name!r} needs at least two points")
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    xspan = (x1 - x0) or 1.0
    yspan = (y1 - y0) or 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(x: float) -> float:
        return LEFT + (x - x0) / xspan * pw

    def sy(y: float) -> float:
        return TOP + ph - (y - y0) / yspan * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="18" text-anchor="middle">{escape(title)}</text>')
    for x in _ticks(x0, x1):
        px = sx(x)
        out.append(f'<line x1="{px:.2f}" y1="{TOP + ph}" x2="{px:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{_num(x)}</text>')
    for y in _ticks(y0, y1):
        py = sy(y)
        out.append(f'<line x1="{LEFT - 5}" y1="{py:.2f}" x2="{LEFT}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{py + 4:.2f}" text-anchor="end">{_num(y)}</text>')
    if xlabel:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(
            f'<text x="16" y="{TOP + ph / 2:.2f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {TOP + ph / 2:.2f})">{escape(ylabel)}</text>'
        )
    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = TOP + 14 + 18 * i
        lx = WIDTH - RIGHT + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    _write(path, "\n".join(out) + "\n")
