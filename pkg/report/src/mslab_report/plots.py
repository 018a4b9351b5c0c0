"""Log-log scaling plots and cone-mass heatmaps.

Inputs are the sweep CSV (columns fixed by the producing harness) and the
frequency-diagnostics JSON with its power-spectrum sidecar.  Slopes shown
on the plots are refit here, independently of whatever produced the file.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = ("experiment_id", "epsilon", "h", "energy_total")


class SchemaError(ValueError):
    """The input file does not match the expected sweep schema."""


def read_sweep_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise SchemaError(f"missing column {col!r} in {path}")
        for raw in reader:
            rows.append(raw)
    if not rows:
        raise SchemaError(f"{path} has no data rows")
    return rows


def refit_slope(x, y):
    """Ordinary least squares in log-log; the independent check of any
    slope the producer may have reported."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def render_scaling_plot(csv_path, out_path, group_by=("experiment_id",), expected=None):
    """Log-log scatter plus fitted line per group; returns the per-group
    refitted slopes (also stored in the figure metadata)."""
    rows = read_sweep_csv(csv_path)
    groups: dict = {}
    for r in rows:
        key = tuple(r.get(c, "") for c in group_by)
        x = r["epsilon"] or r["h"]
        if x in (None, ""):
            continue
        groups.setdefault(key, []).append((float(x), float(r["energy_total"])))

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    slopes = {}
    for key, pts in sorted(groups.items()):
        if len(pts) < 2:
            raise SchemaError(f"group {key} has fewer than 2 rows")
        pts = sorted(pts)
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        slope, intercept = refit_slope(x, y)
        slopes["|".join(map(str, key))] = slope
        label = f"{'|'.join(map(str, key))}: slope {slope:.3f}"
        ax.loglog(x, y, "o", ms=4)
        ax.loglog(x, np.exp(intercept) * x**slope, "-", lw=1.2, label=label)
    if expected is not None:
        x0 = np.array(ax.get_xlim())
        y0 = np.exp(np.mean(np.log(ax.get_ylim())))
        ax.loglog(x0, y0 * (x0 / x0[0]) ** expected, "k--", lw=0.8,
                  label=f"expected slope {expected:g}")
    ax.set_xlabel("epsilon (or h)")
    ax.set_ylabel("energy")
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    meta = {f"slope:{k}": repr(v) for k, v in slopes.items()}
    fig.savefig(out_path, metadata=meta if str(out_path).endswith(".svg") else None)
    plt.close(fig)
    sidecar = Path(str(out_path) + ".slopes.json")
    sidecar.write_text(json.dumps(slopes, indent=2))
    return slopes


def cone_vertices(mu, lam, nu1, axis=1):
    """Corner vertices of the truncated cone
    {|k|^2 - k_axis^2 <= mu^2 |k|^2, |k_axis| <= 2 lam / |nu1|}."""
    kmax = 2.0 * lam / abs(nu1)
    half = mu / np.sqrt(1.0 - mu * mu) * kmax
    pts = [(kmax, half), (kmax, -half), (-kmax, -half), (-kmax, half)]
    if axis == 2:
        pts = [(y, x) for x, y in pts]
    return np.array(pts)


def render_cone_heatmap(json_path, out_path, mu=0.2, lam=None, axis=1):
    """|chi_hat|^2 heatmap (2d only) with the cone boundary overlay.

    Expects the diagnostics JSON and its <name>.power.npy sidecar.
    """
    rec = json.loads(Path(json_path).read_text())
    if rec.get("d") != 2:
        raise SchemaError("cone heatmap requires a 2d spectrum")
    power_path = Path(json_path).with_suffix(".power.npy")
    power = np.load(power_path)
    if power.ndim != 2:
        raise SchemaError("power sidecar must be a 2d array")
    n = power.shape[0]
    shifted = np.fft.fftshift(power)
    lam = rec.get("lam", 8.0) if lam is None else lam
    nu1 = rec["nu"][0] if abs(rec["nu"][0]) > 1e-14 else 1.0

    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    extent = (-n / 2, n / 2, -n / 2, n / 2)
    im = ax.imshow(
        np.log10(shifted.T + 1e-18), origin="lower", extent=extent, cmap="magma"
    )
    verts = cone_vertices(mu, lam, nu1, axis=axis)
    poly = np.vstack([verts, verts[:1]])
    ax.plot(poly[:, 0], poly[:, 1], "c-", lw=1.2, label="truncated cone")
    ax.plot([0], [0], "w+")
    ax.set_xlabel("k1")
    ax.set_ylabel("k2")
    ax.legend(fontsize=7, loc="upper right")
    fig.colorbar(im, ax=ax, label="log10 |chi_hat|^2")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    sidecar = Path(str(out_path) + ".vertices.json")
    sidecar.write_text(json.dumps({"mu": mu, "lam": lam, "nu1": nu1,
                                   "vertices": verts.tolist()}, indent=2))
    return verts
