"""Figure rendering for the report path: one or two matplotlib PNGs per
experiment kind, written next to records.csv."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finite(records, key):
    pts = [(r["beta"], r[key]) for r in records
           if key in r and np.isfinite(r[key]) and r[key] > 0]
    return pts


def render_figures(kind: str, records, manifest: dict, outdir: str) -> list[str]:
    written = []
    if kind == "init-approx":
        written += _rate_figure(records, manifest, outdir)
    elif kind in ("evolve", "closure"):
        written += _timeseries_figure(kind, records, outdir)
    elif kind == "hausdorff-sweep":
        written += _hausdorff_figure(records, outdir)
    elif kind == "pointwise-sweep":
        written += _pointwise_figure(records, outdir)
    elif kind == "nondegeneracy":
        written += _nondegeneracy_figure(records, outdir)
    return written


def _rate_figure(records, manifest, outdir):
    pts = _finite(records, "l1_error")
    if len(pts) < 2:
        return []
    betas, errs = zip(*pts)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(betas, errs, "o-", label="measured")
    fit = manifest.get("l1_rate_fit")
    if fit:
        bb = np.array([min(betas), max(betas)])
        ax.loglog(bb, np.exp(fit["intercept"]) * bb ** fit["slope"], "k--",
                  label=f"fit slope {fit['slope']:.3f}")
    ax.set_xlabel(r"$\beta$")
    ax.set_ylabel(r"$L^1$ error")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(outdir, "l1_rate.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _by_beta(records):
    groups: dict = {}
    for r in records:
        groups.setdefault(r["beta"], []).append(r)
    return groups


def _timeseries_figure(kind, records, outdir):
    key = "closure_residual" if kind == "closure" else "enstrophy"
    groups = _by_beta(records)
    fig, ax = plt.subplots(figsize=(5, 4))
    for beta, recs in sorted(groups.items()):
        ts = [r["t"] for r in recs if key in r]
        ys = [r[key] for r in recs if key in r]
        if ts:
            ax.plot(ts, ys, "o-", label=rf"$\beta={beta:g}$")
    ax.set_xlabel("t")
    ax.set_ylabel(key.replace("_", " "))
    if kind == "closure":
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(outdir, f"{key}.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _pair_keys(records, prefix):
    keys = set()
    for r in records:
        keys.update(k for k in r if k.startswith(prefix))
    return sorted(keys)


def _hausdorff_figure(records, outdir):
    keys = _pair_keys(records, "hausdorff_")
    if not keys:
        return []
    groups = _by_beta(records)
    fig, axes = plt.subplots(1, len(keys), figsize=(4 * len(keys), 3.5),
                             squeeze=False)
    for ax, key in zip(axes[0], keys):
        for beta, recs in sorted(groups.items()):
            ts = [r["t"] for r in recs if np.isfinite(r.get(key, np.inf))]
            ys = [r[key] for r in recs if np.isfinite(r.get(key, np.inf))]
            if ts:
                ax.plot(ts, ys, "o-", label=rf"$\beta={beta:g}$")
        ax.set_title(f"pair {key.removeprefix('hausdorff_')}")
        ax.set_xlabel("t")
        ax.set_ylabel(r"$d_H$")
    axes[0][0].legend()
    fig.tight_layout()
    path = os.path.join(outdir, "hausdorff.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _pointwise_figure(records, outdir):
    groups = _by_beta(records)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    for beta, recs in sorted(groups.items()):
        ts = [r["t"] for r in recs
              if np.isfinite(r.get("sup_error_delta", np.inf)) and r["sup_error_delta"] > 0]
        ys = [r["sup_error_delta"] for r in recs
              if np.isfinite(r.get("sup_error_delta", np.inf)) and r["sup_error_delta"] > 0]
        if ts:
            ax1.semilogy(ts, ys, "o-", label=rf"$\beta={beta:g}$")
        ts = [r["t"] for r in recs if "marker_sup_error" in r]
        ys = [r["marker_sup_error"] for r in recs if "marker_sup_error" in r]
        if ts:
            ax2.plot(ts, ys, "o-", label=rf"$\beta={beta:g}$")
    ax1.set_xlabel("t")
    ax1.set_ylabel("sup error away from ties")
    ax2.set_xlabel("t")
    ax2.set_ylabel(r"$E_\beta$")
    ax1.legend()
    fig.tight_layout()
    path = os.path.join(outdir, "pointwise.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _nondegeneracy_figure(records, outdir):
    keys = [k for k in _pair_keys(records, "min_grad_strip_") if not k.endswith("_bound")]
    if not keys:
        return []
    groups = _by_beta(records)
    fig, ax = plt.subplots(figsize=(5, 4))
    for beta, recs in sorted(groups.items()):
        for key in keys:
            ts = [r["t"] for r in recs if np.isfinite(r.get(key, np.inf))]
            ys = [r[key] for r in recs if np.isfinite(r.get(key, np.inf))]
            if ts:
                ax.plot(ts, ys, "o-",
                        label=rf"$\beta={beta:g}$ pair {key.removeprefix('min_grad_strip_')}")
            bkey = key + "_bound"
            ts = [r["t"] for r in recs if np.isfinite(r.get(bkey, np.inf))]
            ys = [r[bkey] for r in recs if np.isfinite(r.get(bkey, np.inf))]
            if ts:
                ax.plot(ts, ys, "--", color="gray")
    ax.set_xlabel("t")
    ax.set_ylabel("min gradient on strip")
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = os.path.join(outdir, "nondegeneracy.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
