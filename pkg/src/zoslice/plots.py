"""Figure rendering for benchmark reports.

Pure functions of the report rows: the plot command reads reports.csv and
emits SVG files next to it.  Text is kept as SVG text elements (not paths)
so the figures stay greppable and diff-able.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

matplotlib.rcParams.update(
    {
        "svg.fonttype": "none",
        "figure.dpi": 110,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "legend.frameon": False,
    }
)

KERNEL_STYLE = {
    "rwm": dict(color="0.4", marker="s", label="RWM"),
    "rs-mala": dict(color="tab:blue", marker="o", label="RS-MALA"),
    "rs-hmc": dict(color="tab:green", marker="^", label="RS-HMC"),
    "naive-zo-mala": dict(color="tab:red", marker="v", label="NAIVE-MALA"),
    "mtm": dict(color="tab:orange", marker="d", label="MTM"),
    "zo-ula": dict(color="tab:purple", marker="x", label="ZO-ULA"),
}


def best_leapfrog_per_m(rows):
    """Collapse rs-hmc rows to the best per-round gain per m."""
    best = {}
    for r in rows:
        if r["kernel"] != "rs-hmc" or r["m0"] != r["m"]:
            continue
        key = r["m"]
        if key not in best or (r["gain"] or 0) > (best[key]["gain"] or 0):
            best[key] = r
    return sorted(best.values(), key=lambda r: r["m"])


def gain_series(rows):
    """Per-kernel (m, gain) series from the m0 == m rows."""
    series = {}
    for r in rows:
        if r["m0"] != r["m"] or r["gain"] is None:
            continue
        if r["kernel"] == "rs-hmc":
            continue
        series.setdefault(r["kernel"], []).append((r["m"], r["gain"]))
    hmc = best_leapfrog_per_m(rows)
    if hmc:
        series["rs-hmc"] = [(r["m"], r["gain"]) for r in hmc]
    return {k: sorted(v) for k, v in series.items()}


def plot_gain_curves(rows, out_path, title="Per-round ESJD gain over RWM"):
    """One labeled curve per kernel of gain versus m."""
    series = gain_series(rows)
    if not series:
        raise ValueError("no gain rows to plot")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for kernel, pts in sorted(series.items()):
        style = dict(KERNEL_STYLE.get(kernel, {"label": kernel}))
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if kernel == "rwm":
            ax.axhline(1.0, color=style.get("color", "0.4"), ls="--", label=style["label"])
            continue
        ax.plot(xs, ys, **style)
    ax.set_xlabel("number of directions m")
    ax.set_ylabel("ESJD gain over RWM (per parallel round)")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def plot_eff_panels(rows, out_path, title="Relative efficiency Eff(m)/Eff(m0)"):
    """One panel per reference m0 of the efficiency ratio versus m."""
    m0_values = sorted({r["m0"] for r in rows if r["m0"] != r["m"]})
    if not m0_values:
        raise ValueError("no efficiency-sweep rows to plot (empty m0 grid?)")
    fig, axes = plt.subplots(
        1, len(m0_values), figsize=(4.4 * len(m0_values), 3.8), squeeze=False
    )
    for ax, m0 in zip(axes[0], m0_values):
        panel = {}
        for r in rows:
            if r["m0"] == m0 or (r["m0"] == r["m"] == m0):
                panel.setdefault((r["kernel"], r["L"]), []).append((r["m"], r["eff_ratio"]))
        for (kernel, L), pts in sorted(panel.items()):
            style = dict(KERNEL_STYLE.get(kernel, {"label": kernel}))
            if kernel == "rs-hmc":
                style["label"] = f"{style['label']} (L={L})"
            pts = sorted(pts)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], **style)
        ax.axvline(m0, color="0.6", ls=":")
        ax.set_xlabel("m")
        ax.set_ylabel("Eff(m) / Eff(m0)")
        ax.set_title(f"m0 = {m0}")
        ax.legend()
    fig.suptitle(title)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path


def render_report_figures(report_dir, out_dir=None):
    """Render all figures a report directory supports; returns written paths."""
    from .bench import read_reports_csv

    report_dir = Path(report_dir)
    out_dir = Path(out_dir) if out_dir else report_dir
    csv_path = report_dir / "reports.csv"
    if not csv_path.exists():
        raise FileNotFoundError(f"missing report table: {csv_path}")
    rows = read_reports_csv(csv_path)
    if not rows:
        raise ValueError(f"report table {csv_path} has no rows")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [plot_gain_curves(rows, out_dir / "gain_vs_m.svg")]
    if any(r["m0"] != r["m"] for r in rows):
        written.append(plot_eff_panels(rows, out_dir / "eff_vs_m.svg"))
    return written
