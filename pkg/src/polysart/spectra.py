"""Discrete X-ray spectra: loading, normalization, and the monoenergetic case.

A spectrum is a list of (energy, weight) bins. Weights are bin-integrated
photon fractions; any bin-width weighting happens when the file is generated,
so downstream code treats a spectrum as a plain weighted sum over bins.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Spectrum", "load_spectrum", "monoenergetic"]


@dataclass(frozen=True)
class Spectrum:
    """Discrete spectrum: strictly increasing energies (keV), weights >= 0.

    Immutable after construction; safe to share between threads.
    """

    energies_kev: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.energies_kev, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if e.ndim != 1 or w.ndim != 1 or e.shape != w.shape:
            raise ValueError("energies and weights must be 1-D arrays of equal length")
        if e.size < 1:
            raise ValueError("spectrum needs at least one bin")
        if not np.all(np.isfinite(e)) or not np.all(np.isfinite(w)):
            raise ValueError("spectrum entries must be finite")
        if np.any(e <= 0.0):
            raise ValueError("all bin energies must be strictly positive")
        if np.any(np.diff(e) <= 0.0):
            raise ValueError("bin energies must be strictly increasing")
        if np.any(w < 0.0):
            raise ValueError("bin weights must be nonnegative")
        if not np.any(w > 0.0):
            raise ValueError("at least one bin weight must be positive")
        e.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "energies_kev", e)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.energies_kev.size

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(self.total_weight - 1.0) <= tol

    def normalized(self) -> "Spectrum":
        """Return a copy with weights scaled to sum to 1; energies unchanged."""
        total = self.total_weight
        if total <= 0.0:
            raise ValueError("cannot normalize a spectrum with zero total weight")
        return Spectrum(self.energies_kev.copy(), self.weights / total)


def monoenergetic(e0_kev: float) -> Spectrum:
    """Single-bin spectrum at ``e0_kev`` with unit weight (already normalized)."""
    e0 = float(e0_kev)
    if not np.isfinite(e0) or e0 <= 0.0:
        raise ValueError(f"monoenergetic energy must be positive, got {e0_kev!r}")
    return Spectrum(np.array([e0]), np.array([1.0]))


def load_spectrum(path) -> Spectrum:
    """Load a spectrum CSV: header ``energy_kev,weight``, one bin per row.

    Comment lines start with ``#``. Rows are sorted by energy; the result is
    NOT normalized automatically. Raises ValueError with a distinct message
    for an empty file, a malformed row, a negative weight, or a duplicate
    energy.
    """
    path = Path(path)
    rows: list[tuple[float, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header_seen = False
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if not header_seen:
                names = [c.strip().lower() for c in row]
                if names != ["energy_kev", "weight"]:
                    raise ValueError(
                        f"{path}:{lineno}: expected header 'energy_kev,weight', got {','.join(row)!r}"
                    )
                header_seen = True
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                energy = float(row[0])
                weight = float(row[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: could not parse row {row!r}") from exc
            if weight < 0.0:
                raise ValueError(f"{path}:{lineno}: negative weight {weight!r}")
            rows.append((energy, weight))
    if not rows:
        raise ValueError(f"{path}: no spectrum bins found")
    rows.sort(key=lambda pair: pair[0])
    energies = np.array([r[0] for r in rows])
    if np.any(np.diff(energies) == 0.0):
        dup = energies[np.nonzero(np.diff(energies) == 0.0)[0][0]]
        raise ValueError(f"{path}: duplicate bin energy {dup!r}")
    weights = np.array([r[1] for r in rows])
    return Spectrum(energies, weights)
