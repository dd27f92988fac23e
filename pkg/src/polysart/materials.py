"""Reference-material attenuation curves and the piecewise-linear LAC model.

An attenuation map stores, per pixel, the linear attenuation coefficient (LAC)
at a fixed reference energy (70 keV by default). The LAC at any other energy
is obtained by linear interpolation between the two reference materials whose
reference-energy LACs bracket the pixel value; the interpolation weights are
set by the reference-energy values. Below the lowest material and above the
highest the nearest segment extrapolates linearly (no clamping), so iterates
that transiently leave the physical range still see a well-defined map.

Bracketing is half-open: t in [lac_k, lac_{k+1}) selects segment k, so at an
exact material value the upper segment applies. This makes the (piecewise
constant, discontinuous) derivative d mu / d t deterministic everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "MaterialCurve",
    "LacModel",
    "load_material_csv",
    "load_lac_model",
]


@dataclass(frozen=True)
class MaterialCurve:
    """Tabulated energy-dependent LAC for one material.

    Energies (keV) strictly increasing; LAC values (1/cm) nonnegative and
    finite. Evaluation between samples is log-log linear for positive
    curves; curves containing zeros (air) fall back to linear interpolation.
    """

    name: str
    energies_kev: np.ndarray
    lac_per_cm: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies_kev, dtype=float)
        lac = np.asarray(self.lac_per_cm, dtype=float)
        if e.ndim != 1 or lac.ndim != 1 or e.shape != lac.shape:
            raise ValueError(f"{self.name}: energies and lac must be 1-D arrays of equal length")
        if e.size < 2:
            raise ValueError(f"{self.name}: need at least two samples")
        if not np.all(np.isfinite(e)) or not np.all(np.isfinite(lac)):
            raise ValueError(f"{self.name}: samples must be finite")
        if np.any(e <= 0.0):
            raise ValueError(f"{self.name}: energies must be positive")
        if np.any(np.diff(e) <= 0.0):
            raise ValueError(f"{self.name}: energies must be strictly increasing")
        if np.any(lac < 0.0):
            raise ValueError(f"{self.name}: lac values must be nonnegative")
        e.flags.writeable = False
        lac.flags.writeable = False
        object.__setattr__(self, "energies_kev", e)
        object.__setattr__(self, "lac_per_cm", lac)
        all_positive = bool(np.all(lac > 0.0))
        object.__setattr__(self, "_all_positive", all_positive)
        if all_positive:
            object.__setattr__(self, "_log_e", np.log(e))
            object.__setattr__(self, "_log_lac", np.log(lac))

    @property
    def energy_range(self) -> tuple[float, float]:
        return float(self.energies_kev[0]), float(self.energies_kev[-1])

    def evaluate(self, energies_kev) -> np.ndarray | float:
        """LAC at the given energies (keV), which must lie inside the table.

        Energies equal to a tabulated sample return the tabulated value
        exactly (no interpolation round-off).
        """
        e = np.asarray(energies_kev, dtype=float)
        scalar = e.ndim == 0
        e = np.atleast_1d(e)
        lo, hi = self.energy_range
        if np.any(e < lo) or np.any(e > hi):
            bad = e[(e < lo) | (e > hi)][0]
            raise ValueError(
                f"{self.name}: energy {bad:g} keV outside tabulated range [{lo:g}, {hi:g}]"
            )
        if self._all_positive:
            out = np.exp(np.interp(np.log(e), self._log_e, self._log_lac))
        else:
            # Zero values make log-log undefined; plain linear is continuous
            # and exact at the samples, which is all the air curve needs.
            out = np.interp(e, self.energies_kev, self.lac_per_cm)
        # Exact sample hits bypass interpolation round-off entirely.
        idx = np.searchsorted(self.energies_kev, e)
        idx = np.minimum(idx, self.energies_kev.size - 1)
        exact = self.energies_kev[idx] == e
        if np.any(exact):
            out[exact] = self.lac_per_cm[idx[exact]]
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class LacModel:
    """Ordered set of reference materials plus the reference energy.

    Materials must be in strictly increasing order of reference-energy LAC
    (so every interpolation denominator is nonzero).
    """

    materials: tuple[MaterialCurve, ...]
    reference_energy_kev: float = 70.0

    def __post_init__(self):
        mats = tuple(self.materials)
        if len(mats) < 2:
            raise ValueError("LacModel needs at least two materials")
        e0 = float(self.reference_energy_kev)
        lo = max(m.energy_range[0] for m in mats)
        hi = min(m.energy_range[1] for m in mats)
        if not (lo <= e0 <= hi):
            raise ValueError(f"reference energy {e0:g} keV outside shared range [{lo:g}, {hi:g}]")
        ref = np.array([m.evaluate(e0) for m in mats])
        if np.any(np.diff(ref) <= 0.0):
            names = ", ".join(m.name for m in mats)
            raise ValueError(f"reference-energy LACs must be strictly increasing ({names})")
        ref.flags.writeable = False
        object.__setattr__(self, "materials", mats)
        object.__setattr__(self, "reference_energy_kev", e0)
        object.__setattr__(self, "reference_lacs", ref)
        object.__setattr__(self, "_shared_range", (lo, hi))

    @property
    def energy_range(self) -> tuple[float, float]:
        """Energy interval covered by every material table."""
        return self._shared_range

    @property
    def interior_reference_lacs(self) -> np.ndarray:
        """Reference LACs where the derivative in t is discontinuous."""
        return self.reference_lacs[1:-1]

    def bracket(self, t) -> tuple[np.ndarray, np.ndarray] | tuple[int, int]:
        """Indices (k, k+1) of the materials bracketing each value of ``t``.

        Half-open convention: lac_k <= t < lac_{k+1}. Values below the first
        material map to (0, 1) and values at or above the last map to
        (K-2, K-1), which are the extrapolation segments.
        """
        tv = np.asarray(t, dtype=float)
        scalar = tv.ndim == 0
        tv = np.atleast_1d(tv)
        k = np.searchsorted(self.reference_lacs, tv, side="right") - 1
        k = np.clip(k, 0, self.reference_lacs.size - 2)
        if scalar:
            return int(k[0]), int(k[0]) + 1
        return k, k + 1

    def curve_table(self, energies_kev) -> np.ndarray:
        """Material LACs at the given energies, shape (n_energies, n_materials)."""
        e = np.atleast_1d(np.asarray(energies_kev, dtype=float))
        return np.column_stack([m.evaluate(e) for m in self.materials])

    def mu(self, t, energy_kev: float):
        """Interpolated LAC mu(t, e) for map values ``t`` at one energy.

        At the reference energy this reproduces ``t`` identically.
        """
        table = self.curve_table(energy_kev)[0]  # (K,)
        return self._interp(np.asarray(t, dtype=float), table)

    def dmu_dt(self, t, energy_kev: float):
        """Piecewise-constant derivative of mu(t, e) with respect to t.

        Equal to 1 at the reference energy for every t; jumps where t crosses
        an interior material's reference LAC.
        """
        table = self.curve_table(energy_kev)[0]
        tv = np.asarray(t, dtype=float)
        scalar = tv.ndim == 0
        k, k1 = self.bracket(np.atleast_1d(tv))
        out = (table[k1] - table[k]) / (self.reference_lacs[k1] - self.reference_lacs[k])
        return float(out[0]) if scalar else out

    def _interp(self, t: np.ndarray, table: np.ndarray):
        scalar = t.ndim == 0
        tv = np.atleast_1d(t)
        k, k1 = self.bracket(tv)
        ref = self.reference_lacs
        lam = (tv - ref[k]) / (ref[k1] - ref[k])
        out = (1.0 - lam) * table[k] + lam * table[k1]
        return float(out[0]) if scalar else out


def load_material_csv(path, name: str | None = None) -> MaterialCurve:
    """Load one material CSV: header ``energy_kev,lac_per_cm``, ``#`` comments."""
    path = Path(path)
    energies: list[float] = []
    lacs: list[float] = []
    with open(path, newline="") as fh:
        header_seen = False
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = [c.strip() for c in line.split(",")]
            if not header_seen:
                if [c.lower() for c in cells] != ["energy_kev", "lac_per_cm"]:
                    raise ValueError(
                        f"{path}:{lineno}: expected header 'energy_kev,lac_per_cm', got {line!r}"
                    )
                header_seen = True
                continue
            if len(cells) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(cells)}")
            try:
                energies.append(float(cells[0]))
                lacs.append(float(cells[1]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: could not parse row {line!r}") from exc
    if not energies:
        raise ValueError(f"{path}: no samples found")
    return MaterialCurve(name or path.stem, np.array(energies), np.array(lacs))


def load_lac_model(manifest_path) -> LacModel:
    """Load a LAC model from a JSON manifest.

    The manifest lists material CSV paths (relative to the manifest) in
    ascending order of reference-energy LAC::

        {"reference_energy_kev": 70.0, "materials": ["air.csv", "fat.csv", ...]}
    """
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        spec = json.load(fh)
    try:
        files = spec["materials"]
    except KeyError as exc:
        raise ValueError(f"{manifest_path}: manifest missing 'materials' list") from exc
    e0 = float(spec.get("reference_energy_kev", 70.0))
    curves = tuple(load_material_csv(manifest_path.parent / f) for f in files)
    return LacModel(curves, e0)
