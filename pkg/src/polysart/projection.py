"""System matrices, forward/backprojection, and the polyenergetic beam model.

Two system-matrix backends share one interface: a dense matrix of
intersection lengths, and a parallel-beam operator whose rows are computed by
exact ray-grid (Siddon-style) traversal and stored sparsely. Backprojection
is the exact transpose of forward projection for both, so the pair satisfies
the adjoint identity to round-off.

The image is an N x N grid of square pixels centered on the origin, indexed
row-major with row 0 at the top (+y). A view at angle ``theta`` (degrees)
sends rays along direction (-sin, cos) with lateral detector offsets along
(cos, sin); views span [0, 180) degrees.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .materials import LacModel
from .spectra import Spectrum

__all__ = [
    "Sinogram",
    "SystemMatrix",
    "DenseSystemMatrix",
    "ParallelBeamGeometry",
    "ParallelBeamProjector",
    "PolyProjector",
    "forward",
    "backproject",
    "poly_project",
    "post_log",
]

INTENSITY = "intensity"
LINE_INTEGRAL = "line_integral"


@dataclass(frozen=True)
class Sinogram:
    """Measurement-domain vector, tagged as intensities or line integrals.

    Intensities are strictly positive (post-detector, pre-log); line
    integrals are the post-log data fed to the linear solvers.
    """

    values: np.ndarray
    kind: str

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.ndim != 1:
            raise ValueError("sinogram values must be one-dimensional")
        if self.kind not in (INTENSITY, LINE_INTEGRAL):
            raise ValueError(f"unknown sinogram kind {self.kind!r}")
        if not np.all(np.isfinite(v)):
            raise ValueError("sinogram values must be finite")
        if self.kind == INTENSITY and np.any(v <= 0.0):
            raise ValueError("intensity sinogram values must be strictly positive")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def intensity(cls, values) -> "Sinogram":
        return cls(values, INTENSITY)

    @classmethod
    def line_integral(cls, values) -> "Sinogram":
        return cls(values, LINE_INTEGRAL)

    def __len__(self) -> int:
        return self.values.size


def _values(y, expected_kind: str | None = None) -> np.ndarray:
    if isinstance(y, Sinogram):
        if expected_kind is not None and y.kind != expected_kind:
            raise ValueError(f"expected a {expected_kind} sinogram, got {y.kind}")
        return y.values
    return np.atleast_1d(np.asarray(y, dtype=float))


class SystemMatrix:
    """Common interface: apply A and its exact transpose, report 1-norm sums."""

    shape: tuple[int, int]

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def row_sums(self) -> np.ndarray:
        """gamma_i = sum_j |a_ij| (plain sums; all entries are nonnegative)."""
        raise NotImplementedError

    def col_sums(self) -> np.ndarray:
        """beta_j = sum_i |a_ij|."""
        raise NotImplementedError

    def as_csr(self) -> sp.csr_matrix:
        raise NotImplementedError

    def to_dense(self) -> np.ndarray:
        return self.as_csr().toarray()


class DenseSystemMatrix(SystemMatrix):
    """System matrix held as a dense array of intersection lengths (>= 0)."""

    def __init__(self, array):
        a = np.asarray(array, dtype=float)
        if a.ndim != 2:
            raise ValueError("dense system matrix must be two-dimensional")
        if not np.all(np.isfinite(a)):
            raise ValueError("system matrix entries must be finite")
        if np.any(a < 0.0):
            raise ValueError("system matrix entries must be nonnegative")
        self.array = a
        self.shape = a.shape

    def apply(self, x):
        return self.array @ np.asarray(x, dtype=float)

    def apply_transpose(self, y):
        return self.array.T @ np.asarray(y, dtype=float)

    def row_sums(self):
        return self.array.sum(axis=1)

    def col_sums(self):
        return self.array.sum(axis=0)

    def as_csr(self):
        return sp.csr_matrix(self.array)

    def to_dense(self):
        return self.array.copy()


@dataclass(frozen=True)
class ParallelBeamGeometry:
    """Parallel-beam acquisition over [0, 180) degrees.

    Defaults follow the usual phantom-study setup: as many detector bins as
    image columns, detector pitch equal to pixel pitch.
    """

    image_size: int
    n_views: int
    pixel_pitch_cm: float = 1.0
    n_detectors: int | None = None
    detector_pitch_cm: float | None = None

    def __post_init__(self):
        if self.image_size < 1 or self.n_views < 1:
            raise ValueError("image_size and n_views must be positive")
        if self.pixel_pitch_cm <= 0.0:
            raise ValueError("pixel pitch must be positive")
        if self.n_detectors is None:
            object.__setattr__(self, "n_detectors", self.image_size)
        if self.detector_pitch_cm is None:
            object.__setattr__(self, "detector_pitch_cm", self.pixel_pitch_cm)
        if self.n_detectors < 1 or self.detector_pitch_cm <= 0.0:
            raise ValueError("detector count and pitch must be positive")

    @property
    def angles_deg(self) -> np.ndarray:
        return np.arange(self.n_views) * (180.0 / self.n_views)

    @property
    def n_rays(self) -> int:
        return self.n_views * self.n_detectors

    @property
    def n_pixels(self) -> int:
        return self.image_size ** 2


def _siddon_ray(x0, y0, dx, dy, half, n, pitch):
    """Pixel indices and intersection lengths for one ray through the grid.

    The ray is p(s) = (x0, y0) + s*(dx, dy) with |(dx, dy)| = 1; the grid is
    [-half, half]^2 with n*n pixels of width ``pitch``. Returns (cols, rows,
    lengths) for the crossed pixels; empty arrays if the ray misses the grid.
    """
    tiny = 1e-12
    smin, smax = -np.inf, np.inf
    if abs(dx) > tiny:
        s1 = (-half - x0) / dx
        s2 = (half - x0) / dx
        smin = max(smin, min(s1, s2))
        smax = min(smax, max(s1, s2))
    elif abs(x0) >= half:
        return None
    if abs(dy) > tiny:
        s1 = (-half - y0) / dy
        s2 = (half - y0) / dy
        smin = max(smin, min(s1, s2))
        smax = min(smax, max(s1, s2))
    elif abs(y0) >= half:
        return None
    if smax - smin <= tiny * pitch:
        return None
    edges = np.linspace(-half, half, n + 1)
    crossings = [np.array([smin, smax])]
    if abs(dx) > tiny:
        sx = (edges - x0) / dx
        crossings.append(sx[(sx > smin) & (sx < smax)])
    if abs(dy) > tiny:
        sy = (edges - y0) / dy
        crossings.append(sy[(sy > smin) & (sy < smax)])
    s = np.sort(np.concatenate(crossings))
    lengths = np.diff(s)
    keep = lengths > tiny * pitch
    if not np.any(keep):
        return None
    mid = s[:-1][keep] + 0.5 * lengths[keep]
    xm = x0 + mid * dx
    ym = y0 + mid * dy
    cols = np.clip(((xm + half) / pitch).astype(int), 0, n - 1)
    rows = np.clip(((half - ym) / pitch).astype(int), 0, n - 1)
    return cols, rows, lengths[keep]


class ParallelBeamProjector(SystemMatrix):
    """Matched parallel-beam projector/backprojector pair.

    Row i holds the exact intersection lengths of ray i with the pixel grid,
    assembled once into a sparse matrix; the backprojector applies the exact
    transpose, so ``<A x, y> == <x, A^T y>`` to round-off by construction.
    """

    def __init__(self, geometry: ParallelBeamGeometry):
        self.geometry = geometry
        n = geometry.image_size
        pitch = geometry.pixel_pitch_cm
        half = 0.5 * n * pitch
        offsets = (np.arange(geometry.n_detectors) - 0.5 * (geometry.n_detectors - 1))
        offsets = offsets * geometry.detector_pitch_cm
        rows_acc: list[np.ndarray] = []
        cols_acc: list[np.ndarray] = []
        vals_acc: list[np.ndarray] = []
        for v, theta in enumerate(np.deg2rad(geometry.angles_deg)):
            ex, ey = np.cos(theta), np.sin(theta)      # detector axis
            dx, dy = -np.sin(theta), np.cos(theta)     # ray direction
            for d, s_off in enumerate(offsets):
                hit = _siddon_ray(s_off * ex, s_off * ey, dx, dy, half, n, pitch)
                if hit is None:
                    continue
                cols, rows, lengths = hit
                ray_index = v * geometry.n_detectors + d
                rows_acc.append(np.full(lengths.size, ray_index, dtype=np.int64))
                cols_acc.append(rows * n + cols)
                vals_acc.append(lengths)
        if vals_acc:
            coo = sp.coo_matrix(
                (
                    np.concatenate(vals_acc),
                    (np.concatenate(rows_acc), np.concatenate(cols_acc)),
                ),
                shape=(geometry.n_rays, geometry.n_pixels),
            )
        else:
            coo = sp.coo_matrix((geometry.n_rays, geometry.n_pixels))
        self._csr = coo.tocsr()
        self._csr.sum_duplicates()
        self._csr_t = self._csr.T.tocsr()
        self.shape = self._csr.shape

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 2 and x.shape == (self.geometry.image_size,) * 2:
            x = x.ravel()
        return self._csr @ x

    def apply_transpose(self, y):
        return self._csr_t @ np.asarray(y, dtype=float)

    @cached_property
    def _row_sums(self):
        return np.asarray(self._csr.sum(axis=1)).ravel()

    @cached_property
    def _col_sums(self):
        return np.asarray(self._csr.sum(axis=0)).ravel()

    def row_sums(self):
        return self._row_sums.copy()

    def col_sums(self):
        return self._col_sums.copy()

    def as_csr(self):
        return self._csr


def forward(a: SystemMatrix, x) -> Sinogram:
    """Line integrals <a_i, x> of an attenuation map."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if flat.size != a.shape[1]:
        raise ValueError(f"image has {flat.size} entries, operator expects {a.shape[1]}")
    return Sinogram.line_integral(a.apply(x if x.ndim == 2 else flat))


def backproject(a: SystemMatrix, y) -> np.ndarray:
    """Exact transpose action A^T y."""
    yv = _values(y)
    if yv.size != a.shape[0]:
        raise ValueError(f"sinogram has {yv.size} entries, operator expects {a.shape[0]}")
    return a.apply_transpose(yv)


class PolyProjector:
    """Polyenergetic forward projection for a fixed operator/model/spectrum.

    Precomputes the material-curve table at the spectrum energies so repeated
    projections (inside iterations and Jacobian assembly) cost a handful of
    vectorized operations.
    """

    def __init__(self, a: SystemMatrix, model: LacModel, spectrum: Spectrum):
        if not spectrum.is_normalized(tol=1e-9):
            raise ValueError("spectrum must be normalized (weights summing to 1)")
        lo, hi = model.energy_range
        e = spectrum.energies_kev
        if e[0] < lo or e[-1] > hi:
            raise ValueError(
                f"spectrum energies [{e[0]:g}, {e[-1]:g}] keV exceed the "
                f"material tables' shared range [{lo:g}, {hi:g}]"
            )
        self.a = a
        self.model = model
        self.spectrum = spectrum
        self._mu_table = model.curve_table(e)          # (h, K)
        self._ref = model.reference_lacs

    def _segments(self, t: np.ndarray):
        k, k1 = self.model.bracket(t)
        lam = (t - self._ref[k]) / (self._ref[k1] - self._ref[k])
        return k, k1, lam

    def attenuation_profiles(self, t) -> np.ndarray:
        """mu(t_j, e_h) for every pixel and spectrum energy, shape (h, n)."""
        t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        k, k1, lam = self._segments(t)
        return (1.0 - lam) * self._mu_table[:, k] + lam * self._mu_table[:, k1]

    def derivative_profiles(self, t) -> np.ndarray:
        """d mu / d t at (t_j, e_h), shape (h, n); piecewise constant in t."""
        t = np.atleast_1d(np.asarray(t, dtype=float)).ravel()
        k, k1 = self.model.bracket(t)
        return (self._mu_table[:, k1] - self._mu_table[:, k]) / (self._ref[k1] - self._ref[k])

    def line_integrals(self, t) -> np.ndarray:
        """<a_i, mu(t, e_h)> for every ray and energy, shape (m, h)."""
        prof = self.attenuation_profiles(t)            # (h, n)
        return self.a.apply(prof.T)                    # (m, h)

    def project_values(self, t) -> np.ndarray:
        lines = self.line_integrals(t)
        return np.exp(-lines) @ self.spectrum.weights

    def project(self, t) -> Sinogram:
        return Sinogram.intensity(self.project_values(t))


def poly_project(a: SystemMatrix, model: LacModel, spectrum: Spectrum, t) -> Sinogram:
    """Spectrum-weighted intensities sum_h I_h exp(-<a_i, mu(t, e_h)>).

    With a single-bin spectrum at the reference energy this reduces exactly
    to exp(-forward(a, t)).
    """
    t = np.asarray(t, dtype=float)
    if t.ravel().size != a.shape[1]:
        raise ValueError(f"map has {t.ravel().size} entries, operator expects {a.shape[1]}")
    return PolyProjector(a, model, spectrum).project(t.ravel())


def post_log(p, spectrum: Spectrum | None = None) -> Sinogram:
    """Convert intensities to line integrals: b_i = -ln(p_i / total weight).

    With a normalized spectrum this is plainly -ln(p_i). Raises on
    nonpositive intensities.
    """
    pv = _values(p, expected_kind=INTENSITY if isinstance(p, Sinogram) else None)
    if np.any(pv <= 0.0):
        raise ValueError("post-log requires strictly positive intensities")
    total = 1.0 if spectrum is None else spectrum.total_weight
    return Sinogram.line_integral(-np.log(pv / total))
