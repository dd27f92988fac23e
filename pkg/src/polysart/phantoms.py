"""Test objects: the two-pixel fixture and an ellipse-composite head phantom.

Rasterization is by pixel center (no anti-aliasing): a pixel takes the value
of the last ellipse whose interior contains its center (replace mode) or the
running sum (add mode). This keeps value histograms exactly on the
configured LAC levels and makes goldens deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projection import DenseSystemMatrix

__all__ = ["Ellipse", "rasterize_ellipses", "head_phantom", "two_pixel_object",
           "HEAD_ELLIPSES", "HEAD_FOV_CM", "BONE_LAC", "TISSUE_LAC"]

BONE_LAC = 0.4948
TISSUE_LAC = 0.2033

# Two-pixel fixture: 1 cm pixels; ray 1 crosses both pixels horizontally,
# ray 2 crosses them obliquely with lengths 0.28 cm and 1.13 cm.
TWO_PIXEL_MATRIX = np.array([[1.0, 1.0], [0.28, 1.13]])


@dataclass(frozen=True)
class Ellipse:
    """One phantom component: center/semi-axes in cm, rotation in degrees."""

    center_x: float
    center_y: float
    semi_x: float
    semi_y: float
    angle_deg: float
    value: float
    mode: str = "replace"

    def __post_init__(self):
        if self.semi_x <= 0.0 or self.semi_y <= 0.0:
            raise ValueError("ellipse semi-axes must be positive")
        if self.mode not in ("replace", "add"):
            raise ValueError(f"unknown combine mode {self.mode!r}")

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dx = x - self.center_x
        dy = y - self.center_y
        c = np.cos(np.deg2rad(self.angle_deg))
        s = np.sin(np.deg2rad(self.angle_deg))
        u = c * dx + s * dy
        v = -s * dx + c * dy
        return (u / self.semi_x) ** 2 + (v / self.semi_y) ** 2 <= 1.0

    @property
    def area(self) -> float:
        return float(np.pi * self.semi_x * self.semi_y)


def rasterize_ellipses(ellipses, n: int, fov_cm: float) -> np.ndarray:
    """Rasterize an ellipse list onto an n x n grid spanning fov_cm.

    Pixel centers are sampled; row 0 is the top of the image (+y).
    """
    if n < 1:
        raise ValueError("grid size must be positive")
    pitch = fov_cm / n
    coords = (np.arange(n) + 0.5) * pitch - 0.5 * fov_cm
    x = coords[None, :]
    y = -coords[:, None]
    img = np.zeros((n, n))
    for e in ellipses:
        inside = e.contains(x, y)
        if e.mode == "replace":
            img[inside] = e.value
        else:
            img[inside] += e.value
    return img


# Head-like slice: bony shell, soft-tissue interior, low-contrast features.
# All LACs are reference-energy (70 keV) values within the material span.
HEAD_FOV_CM = 20.0
HEAD_ELLIPSES = (
    Ellipse(0.0, 0.0, 9.0, 7.2, 0.0, BONE_LAC),
    Ellipse(0.0, 0.0, 8.2, 6.4, 0.0, TISSUE_LAC),
    Ellipse(-3.0, 1.5, 1.5, 1.5, 0.0, 0.198),
    Ellipse(3.0, 1.8, 1.2, 1.2, 0.0, 0.208),
    Ellipse(0.0, -2.5, 1.0, 2.0, 30.0, 0.213),
    Ellipse(0.5, 3.5, 0.8, 0.8, 0.0, 0.196),
)


def head_phantom(n: int, fov_cm: float = HEAD_FOV_CM) -> np.ndarray:
    """N x N head-like attenuation map (1/cm at the reference energy).

    Background air is 0, the bony shell is 0.4948, the interior is soft
    tissue at 0.2033 with several low-contrast features in [0.195, 0.215].
    """
    if n < 16:
        raise ValueError("head phantom needs n >= 16 to resolve its features")
    return rasterize_ellipses(HEAD_ELLIPSES, n, fov_cm)


def two_pixel_object(t1: float, t2: float) -> tuple[DenseSystemMatrix, np.ndarray]:
    """The 2-pixel / 2-ray fixture: returns (system matrix, attenuation map)."""
    return DenseSystemMatrix(TWO_PIXEL_MATRIX.copy()), np.array([float(t1), float(t2)])
