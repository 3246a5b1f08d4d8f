"""Artifact serialization: records.csv, tie-set CSVs, PGM heatmaps, manifest.

Formats are zero-dependency and inspectable; float formatting uses shortest
round-trip repr so identical runs produce byte-identical files.
"""
from __future__ import annotations

import json
import os

import numpy as np

# fixed leading column order; per-pair columns are appended sorted
_BASE_COLUMNS = [
    "t", "beta", "step", "l1_error", "sup_error_delta", "marker_sup_error",
    "closure_residual", "c_delta", "energy", "enstrophy", "mean_omega",
    "accumulated_gradu", "bound_status", "bound_margin",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if np.isnan(v):
        return "nan"
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def record_columns(records) -> list[str]:
    keys = set()
    for rec in records:
        keys.update(rec)
    cols = [c for c in _BASE_COLUMNS if c in keys]
    cols += sorted(keys - set(_BASE_COLUMNS))
    return cols


def write_records_csv(path: str, records) -> None:
    cols = record_columns(records)
    lines = [",".join(cols)]
    for rec in records:
        lines.append(",".join(_fmt(rec.get(c)) for c in cols))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def tieset_filename(i: int, j: int, beta_label: str, t: float) -> str:
    return f"tieset_{i + 1}{j + 1}_{beta_label}_{t:.4f}.csv"


def write_tieset_csv(path: str, i: int, j: int, polylines) -> None:
    """One row per vertex: pair id, polyline id, x, y."""
    lines = ["pair,polyline,x,y"]
    pair = f"{i + 1}{j + 1}"
    for pid, poly in enumerate(polylines):
        for x, y in poly:
            lines.append(f"{pair},{pid},{_fmt(float(x))},{_fmt(float(y))}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_pgm(path: str, omega: np.ndarray, vmin: float, vmax: float) -> None:
    """8-bit P5 heatmap with the linear map [vmin, vmax] -> [0, 255].

    Rows run top to bottom in y, columns left to right in x."""
    if vmax <= vmin:
        raise ValueError("vmax must exceed vmin")
    scaled = np.clip((omega - vmin) / (vmax - vmin), 0.0, 1.0)
    pixels = np.round(scaled * 255.0).astype(np.uint8)
    raster = pixels.T[::-1]  # (row, col) = (y top-down, x)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{raster.shape[1]} {raster.shape[0]}\n255\n".encode())
        fh.write(raster.tobytes())


def read_pgm(path: str, vmin: float, vmax: float) -> np.ndarray:
    """Inverse of write_pgm up to one quantization level."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    width, height = (int(v) for v in parts[1].split())
    if int(parts[2]) != 255:
        raise ValueError("expected maxval 255")
    raster = np.frombuffer(parts[3][: width * height], dtype=np.uint8)
    raster = raster.reshape(height, width)
    pixels = raster[::-1].T
    return vmin + (vmax - vmin) * pixels.astype(float) / 255.0


def write_manifest(path: str, manifest: dict) -> None:
    def default(obj):
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        raise TypeError(f"not JSON serializable: {type(obj)}")

    with open(path, "w") as fh:
        json.dump(_sanitize(manifest), fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)  # json has no inf/nan
    if isinstance(obj, np.floating):
        return _sanitize(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_artifacts(outdir: str, cfg, result, versions: dict) -> None:
    os.makedirs(outdir, exist_ok=True)
    write_records_csv(os.path.join(outdir, "records.csv"), result.records)
    for (i, j, beta_label, t), polys in sorted(
            result.tiesets.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2], kv[0][3])):
        write_tieset_csv(os.path.join(outdir, tieset_filename(i, j, beta_label, t)),
                         i, j, polys)
    if result.omegas:
        levels = cfg.levels if cfg.levels else _preset_levels(cfg)
        vmin, vmax = min(levels), max(levels)
        for (beta_label, t), omega in sorted(result.omegas.items()):
            write_pgm(os.path.join(outdir, f"omega_{beta_label}_{t:.4f}.pgm"),
                      omega, vmin, vmax)
    manifest = {"config": _config_echo(cfg), "versions": versions}
    manifest.update(result.manifest)
    write_manifest(os.path.join(outdir, "manifest.json"), manifest)


def _preset_levels(cfg):
    from .presets import build_preset
    from .spectral import Grid
    return build_preset(cfg.preset, Grid(16), cfg.betas[0]).config.levels


def _config_echo(cfg) -> dict:
    from dataclasses import asdict
    return asdict(cfg)
