"""Access to the bundled spectrum and material fixtures.

The package ships a frozen 11-bin 130 kVp spectrum and four reference
material curves (air, fat, soft tissue, bone) whose 70 keV values are
exactly 0, 0.1782, 0.2033 and 0.4948 1/cm. All polyenergetic tests and
reproduction recipes are deterministic against these files.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .materials import LacModel, load_lac_model
from .spectra import Spectrum, load_spectrum

__all__ = [
    "bundled_spectrum_path",
    "bundled_materials_manifest_path",
    "bundled_spectrum",
    "bundled_lac_model",
]


def _data_dir() -> Path:
    return Path(resources.files("polysart") / "data")


def bundled_spectrum_path() -> Path:
    return _data_dir() / "spectrum_130kvp.csv"


def bundled_materials_manifest_path() -> Path:
    return _data_dir() / "materials" / "materials.json"


def bundled_spectrum(normalized: bool = True) -> Spectrum:
    """The frozen 11-bin 130 kVp spectrum (normalized by default)."""
    s = load_spectrum(bundled_spectrum_path())
    return s.normalized() if normalized else s


def bundled_lac_model() -> LacModel:
    """The frozen air/fat/soft-tissue/bone model at 70 keV reference."""
    return load_lac_model(bundled_materials_manifest_path())
