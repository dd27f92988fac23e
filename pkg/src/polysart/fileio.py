"""File formats: CSV matrices, windowed 16-bit PGM, diverging PPM, manifests.

All floating-point text output uses 17 significant digits so values
round-trip exactly; writers are deterministic byte-for-byte given the same
inputs.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

__all__ = [
    "write_matrix_csv",
    "read_matrix_csv",
    "write_pgm16",
    "write_ppm_diverging",
    "sha256_file",
    "write_run_manifest",
]

_FMT = "%.17g"


def write_matrix_csv(path, array) -> Path:
    """Write a 1-D (one value per line) or 2-D (row-major) array as CSV."""
    path = Path(path)
    a = np.asarray(array, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("only 1-D or 2-D arrays are supported")
    with open(path, "w", newline="\n") as fh:
        for row in a:
            fh.write(",".join(_FMT % v for v in row))
            fh.write("\n")
    return path


def read_matrix_csv(path) -> np.ndarray:
    """Read a CSV written by write_matrix_csv; single-column files come back 1-D."""
    path = Path(path)
    rows: list[list[float]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(c) for c in line.split(",")])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError(f"{path}: ragged rows")
    out = np.array(rows)
    return out[:, 0] if width == 1 else out


def write_pgm16(path, image, window: tuple[float, float] | None = None) -> Path:
    """Write a 2-D array as binary 16-bit PGM, windowed to [lo, hi]."""
    path = Path(path)
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("PGM output needs a 2-D array")
    if window is None:
        lo, hi = float(img.min()), float(img.max())
    else:
        lo, hi = float(window[0]), float(window[1])
    if hi <= lo:
        hi = lo + 1.0
    scaled = np.clip((img - lo) / (hi - lo), 0.0, 1.0)
    pixels = np.round(scaled * 65535.0).astype(">u2")
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())
    return path


def write_ppm_diverging(path, grid, center: float = 1.0) -> Path:
    """Write a 2-D array as binary PPM with a blue-white-red map at ``center``.

    Values below the center shade toward blue, above toward red; the center
    itself is white, so (for spectral-radius maps pinned at 1) the
    convergent/divergent split is visible at a glance.
    """
    path = Path(path)
    g = np.asarray(grid, dtype=float)
    if g.ndim != 2:
        raise ValueError("PPM output needs a 2-D array")
    below = max(center - float(g.min()), 1e-30)
    above = max(float(g.max()) - center, 1e-30)
    rgb = np.empty((*g.shape, 3))
    t_lo = np.clip((center - g) / below, 0.0, 1.0)   # 0 at center -> 1 at min
    t_hi = np.clip((g - center) / above, 0.0, 1.0)   # 0 at center -> 1 at max
    rgb[..., 0] = 1.0 - t_lo          # red channel drops toward blue side
    rgb[..., 1] = 1.0 - np.maximum(t_lo, t_hi)
    rgb[..., 2] = 1.0 - t_hi          # blue channel drops toward red side
    pixels = np.round(rgb * 255.0).astype(np.uint8)
    header = f"P6\n{g.shape[1]} {g.shape[0]}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes())
    return path


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_run_manifest(out_dir, command: str, config: dict, artifacts) -> Path:
    """Write run.json: the effective configuration plus artifact checksums.

    Deliberately contains no timestamps so repeated runs with the same
    configuration produce byte-identical manifests.
    """
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "config": config,
        "artifacts": {Path(p).name: f"sha256:{sha256_file(p)}" for p in artifacts},
    }
    path = out_dir / "run.json"
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
