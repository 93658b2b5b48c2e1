"""Plain-text table rendering and the reliability-diagram SVG."""

from __future__ import annotations

from .qa_metrics import ReliabilityTable


def format_rows(header: list[str], rows: list[list[str]], fmt: str) -> str:
    """Render string cells as an aligned table, CSV, or markdown."""
    if fmt == "csv":
        lines = [",".join(header)] + [",".join(row) for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |",
                 "| " + " | ".join("---" for _ in header) + " |"]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    if fmt == "table":
        widths = [max(len(header[i]), *(len(row[i]) for row in rows)) if rows
                  else len(header[i]) for i in range(len(header))]
        def line(cells):
            first = cells[0].ljust(widths[0])
            rest = [c.rjust(widths[i + 1]) for i, c in enumerate(cells[1:])]
            return "  ".join([first] + rest).rstrip()
        return "\n".join([line(header)] + [line(row) for row in rows]) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def reliability_svg(table: ReliabilityTable, *, size: int = 480, margin: int = 56) -> str:
    """Draw the reliability diagram: one accuracy bar per bin plus the diagonal.

    The calibration error (scaled by 100) is annotated in the document title.
    """
    plot = size - 2 * margin
    m = table.m

    def x(frac: float) -> float:
        return margin + frac * plot

    def y(frac: float) -> float:
        return size - margin - frac * plot

    ece_label = f"{table.ece() * 100:.2f}"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f"<title>Reliability diagram (ECE = {ece_label})</title>",
        f'<rect x="{margin}" y="{margin}" width="{plot}" height="{plot}" '
        f'fill="white" stroke="black"/>',
    ]
    for row in table.bins:
        left = (row.bin_index - 1) / m
        bar_x = x(left)
        bar_h = row.mean_accuracy * plot
        bar_y = y(row.mean_accuracy)
        parts.append(
            f'<rect class="bar" x="{bar_x:.2f}" y="{bar_y:.2f}" '
            f'width="{plot / m:.2f}" height="{bar_h:.2f}" '
            f'fill="steelblue" stroke="black"/>'
        )
    parts.append(
        f'<line class="diagonal" x1="{x(0):.2f}" y1="{y(0):.2f}" '
        f'x2="{x(1):.2f}" y2="{y(1):.2f}" stroke="gray" stroke-dasharray="4 4"/>'
    )
    for frac in (0.0, 0.5, 1.0):
        parts.append(f'<text x="{x(frac):.2f}" y="{size - margin + 20:.2f}" '
                     f'text-anchor="middle" font-size="12">{frac:g}</text>')
        parts.append(f'<text x="{margin - 8:.2f}" y="{y(frac) + 4:.2f}" '
                     f'text-anchor="end" font-size="12">{frac:g}</text>')
    parts.append(f'<text x="{size / 2:.2f}" y="{size - 12:.2f}" text-anchor="middle" '
                 f'font-size="13">confidence</text>')
    parts.append(f'<text x="16" y="{size / 2:.2f}" text-anchor="middle" font-size="13" '
                 f'transform="rotate(-90 16 {size / 2:.2f})">accuracy</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
