"""Evaluation report export: JSON, per-repeat scatter data, SVG figures.

All writers format numbers deterministically so reruns produce identical
bytes. The SVG scatter is self-contained markup: points, axes, tick labels,
and the fitted mapping curve, no plotting library involved.
"""

import csv
import json

import numpy as np

from .metrics import _logistic_eval

SVG_W, SVG_H = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 20, 36, 52


def report_to_dict(report):
    """Plain-data view of an EvalReport, ready for JSON."""
    return {
        "method": report.method,
        "mode": report.mode,
        "backbone": report.backbone,
        "split": {
            "train_fraction": report.split.train_fraction,
            "repeats": report.split.repeats,
            "seed": report.split.seed,
        },
        "averages": {k: report.averages[k] for k in sorted(report.averages)},
        "repeats": [
            {
                "index": r.index,
                "seed": r.seed,
                "n_train": r.n_train,
                "n_test": r.n_test,
                "srcc": r.srcc,
                "krcc": r.krcc,
                "plcc": r.plcc,
                "rmse": r.rmse,
                "plcc_raw": r.plcc_raw,
                "rmse_raw": r.rmse_raw,
                "logistic": {
                    "b1": r.logistic_params[0],
                    "b2": r.logistic_params[1],
                    "b3": r.logistic_params[2],
                    "b4": r.logistic_params[3],
                    "fallback": r.logistic_fallback,
                },
            }
            for r in report.repeats
        ],
    }


def write_report_json(report, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_scatter_csv(result, path):
    """Write one repeat's (prediction, label) pairs."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pred", "mos"])
        for p, m in zip(result.pred, result.mos):
            writer.writerow([repr(float(p)), repr(float(m))])


def table_row(method, averages):
    """One comparison-table line: method then SRCC KRCC PLCC RMSE."""
    return (
        f"{method} {averages['srcc']:.4f} {averages['krcc']:.4f} "
        f"{averages['plcc']:.4f} {averages['rmse']:.4f}"
    )


def write_table(rows, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("method SRCC KRCC PLCC RMSE\n")
        for row in rows:
            fh.write(row + "\n")


def _fmt(v):
    return f"{v:.6g}"


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def write_scatter_svg(result, path, title):
    """Render one repeat's scatter with the fitted mapping curve."""
    pred = np.asarray(result.pred, dtype=np.float64)
    mos = np.asarray(result.mos, dtype=np.float64)
    x_lo, x_hi = float(pred.min()), float(pred.max())
    y_lo, y_hi = float(mos.min()), float(mos.max())
    x_pad = (x_hi - x_lo) * 0.05 or 0.5
    y_pad = (y_hi - y_lo) * 0.05 or 0.5
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad
    plot_w = SVG_W - MARGIN_L - MARGIN_R
    plot_h = SVG_H - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v):
        return SVG_H - MARGIN_B - (v - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
        f'viewBox="0 0 {SVG_W} {SVG_H}">',
        f'<rect width="{SVG_W}" height="{SVG_H}" fill="white"/>',
        f'<text x="{SVG_W / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    # axes
    x0, y0 = MARGIN_L, SVG_H - MARGIN_B
    parts.append(
        f'<line x1="{x0}" y1="{y0}" x2="{SVG_W - MARGIN_R}" y2="{y0}" stroke="black"/>'
    )
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN_T}" stroke="black"/>')
    for tv in _ticks(x_lo, x_hi):
        parts.append(
            f'<line x1="{sx(tv):.1f}" y1="{y0}" x2="{sx(tv):.1f}" y2="{y0 + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{sx(tv):.1f}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tv)}</text>'
        )
    for tv in _ticks(y_lo, y_hi):
        parts.append(
            f'<line x1="{x0 - 5}" y1="{sy(tv):.1f}" x2="{x0}" y2="{sy(tv):.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{sy(tv):.1f}" text-anchor="end" dominant-baseline="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(tv)}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_L + plot_w / 2:.1f}" y="{SVG_H - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">Predicted score</text>'
    )
    parts.append(
        f'<text x="16" y="{MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {MARGIN_T + plot_h / 2:.1f})">MOS</text>'
    )
    # fitted mapping curve (identity when the fit fell back)
    samples = np.linspace(x_lo, x_hi, 100)
    curve_y = samples if result.logistic_fallback else _logistic_eval(
        samples, result.logistic_params
    )
    points = " ".join(
        f"{sx(px):.2f},{sy(min(max(py, y_lo), y_hi)):.2f}"
        for px, py in zip(samples, curve_y)
    )
    parts.append(f'<polyline points="{points}" fill="none" stroke="#d62728"/>')
    for p, m in zip(pred, mos):
        parts.append(
            f'<circle cx="{sx(p):.2f}" cy="{sy(m):.2f}" r="3" fill="#1f77b4" '
            f'fill-opacity="0.7"/>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
