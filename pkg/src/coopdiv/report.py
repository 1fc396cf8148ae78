"""Delimited output and figure rendering for experiment results.

Every file starts with comment lines carrying the seed and a hash of the
generating configuration, so a result can always be traced back to the
exact run that produced it.  Figures are rendered next to the delimited
output (same stem, .png) unless plotting is disabled.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

from .curves import DmgCurve, curve_rows
from .montecarlo import TrialBatch, wilson_interval

BATCH_COLUMNS = ("snr_db", "trials", "frame_errors", "fer", "outages",
                 "pout", "wilson_lo", "wilson_hi", "errors_no_outage",
                 "snr_total_db")


def config_hash(config_dict: dict) -> str:
    blob = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _num(x: float) -> str:
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return "nan"
    return f"{x:.10g}"


def batch_rows(batches: list[TrialBatch]) -> list[dict]:
    rows = []
    for b in batches:
        lo, hi = wilson_interval(b.frame_errors, b.trials)
        rows.append({
            "snr_db": b.snr_db, "trials": b.trials,
            "frame_errors": b.frame_errors, "fer": b.fer,
            "outages": b.outages, "pout": b.pout,
            "wilson_lo": lo, "wilson_hi": hi,
            "errors_no_outage": b.errors_no_outage,
            "snr_total_db": b.snr_total_db,
        })
    return rows


def _header_lines(tool: str, seed, config_dict: dict) -> list[str]:
    return [f"# coopdiv {tool}",
            f"# seed={seed}",
            f"# config_sha256={config_hash(config_dict)}"]


def write_batches_csv(path, config_dict: dict, seed, batches) -> None:
    lines = _header_lines("simulate", seed, config_dict)
    lines.append(",".join(BATCH_COLUMNS))
    for row in batch_rows(batches):
        lines.append(",".join(_num(row[c]) if isinstance(row[c], float)
                              else str(row[c]) for c in BATCH_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def write_batches_json(path, config_dict: dict, seed, batches) -> None:
    payload = {
        "tool": "coopdiv simulate",
        "seed": seed,
        "config_sha256": config_hash(config_dict),
        "config": config_dict,
        "batches": batch_rows(batches),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def write_curves_csv(path, curves: list[DmgCurve], seed=0,
                     notes: dict | None = None) -> None:
    lines = _header_lines("dmg", seed, {"curves": [c.label for c in curves]})
    for key, value in (notes or {}).items():
        lines.append(f"# {key}={value}")
    lines.append("label,r,d,r_float,d_float")
    for curve in curves:
        for r_str, d_str, r_f, d_f in curve_rows(curve):
            lines.append(f"{curve.label},{r_str},{d_str},{_num(r_f)},{_num(d_f)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def figure_path(out_path) -> Path:
    return Path(out_path).with_suffix(".png")


def render_fer_figure(png_path, labelled_batches: dict[str, list[TrialBatch]],
                      title: str = "frame error rate") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, batches in labelled_batches.items():
        xs = [b.snr_db for b in batches]
        ys = [max(b.fer, 1e-12) for b in batches]
        ax.semilogy(xs, ys, marker="o", label=label)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("FER")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_pout_figure(png_path, labelled_batches: dict[str, list[TrialBatch]],
                       title: str = "outage probability") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, batches in labelled_batches.items():
        xs = [b.snr_db for b in batches]
        ys = [max(b.pout, 1e-12) for b in batches]
        ax.semilogy(xs, ys, marker="s", label=label)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("P(outage)")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_curve_figure(png_path, curves: list[DmgCurve],
                        title: str = "diversity-multiplexing tradeoff") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for curve in curves:
        xs = [float(r) for r, _ in curve.breakpoints]
        ys = [float(d) for _, d in curve.breakpoints]
        ax.plot(xs, ys, marker=".", label=curve.label)
    ax.set_xlabel("multiplexing gain r")
    ax.set_ylabel("diversity gain d(r)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
