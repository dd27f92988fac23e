"""ART, SART, and their polyenergetic variants, plus the iteration driver.

All steppers are pure: they take the current estimate and return a new one.
The driver ``run`` iterates a stepper until the update stalls below a
convergence tolerance, a repeat of an earlier iterate reveals a limit cycle,
or the iteration budget runs out. No relaxation and no positivity clamping
are applied anywhere; the analysis tools study exactly these update maps.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .materials import LacModel
from .projection import PolyProjector, Sinogram, SystemMatrix, _values, INTENSITY, LINE_INTEGRAL
from .spectra import Spectrum

__all__ = [
    "SolverConfig",
    "IterationReport",
    "art_sweep",
    "sart_step",
    "part_sweep",
    "psart_step",
    "make_sart_step",
    "make_psart_step",
    "run",
    "run_art",
    "run_sart",
    "run_part",
    "run_psart",
]

CONVERGED = "converged"
CYCLED = "cycled"
MAX_ITERATIONS = "max_iterations"

# A genuine period-L cycle keeps a fixed per-iteration update while the
# lag-L difference decays to zero, so the update must dominate the lag-L
# match by a wide margin. A converging oscillation (Jacobian eigenvalue near
# -1) has update/lag-2 ratio |lambda-1|/|lambda+1|, which only exceeds the
# ratio below when the spectral radius is within ~2/ratio of 1.
_CYCLE_RESIDUAL_FACTOR = 10.0
_CYCLE_DOMINANCE_RATIO = 1000.0
_DIVERGENCE_LIMIT = 1e9


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules for the iteration driver."""

    max_iterations: int = 500
    convergence_tol: float = 1e-10
    cycle_window: int = 8
    cycle_tol: float = 1e-9
    initial_estimate: np.ndarray | None = None

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.convergence_tol <= 0.0 or self.cycle_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.cycle_window < 2:
            raise ValueError("cycle_window must be at least 2")


@dataclass
class IterationReport:
    """Trace of one solver run."""

    status: str
    iterations_run: int
    final: np.ndarray
    residual_history: np.ndarray
    cycle_period: int | None = None
    iterates: list[np.ndarray] | None = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def _sart_weights(a: SystemMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of D (1/column sums) and M (1/row sums) with zeros masked.

    Rays that miss the image get M_ii = 0 (excluded from updates); pixels no
    ray touches get D_jj = 0 (frozen).
    """
    gamma = a.row_sums()
    beta = a.col_sums()
    m_diag = np.where(gamma > 0.0, 1.0 / np.where(gamma > 0.0, gamma, 1.0), 0.0)
    d_diag = np.where(beta > 0.0, 1.0 / np.where(beta > 0.0, beta, 1.0), 0.0)
    return d_diag, m_diag


def _csr_parts(a: SystemMatrix):
    csr = a.as_csr()
    return csr.indptr, csr.indices, csr.data


def art_sweep(a: SystemMatrix, b, x) -> np.ndarray:
    """One full ART sweep: project onto each equation's hyperplane in turn.

    Rows with <a_i, a_i> = 0 are skipped.
    """
    bv = _values(b, LINE_INTEGRAL if isinstance(b, Sinogram) else None)
    if bv.size != a.shape[0]:
        raise ValueError(f"data has {bv.size} entries, operator expects {a.shape[0]}")
    x = np.array(x, dtype=float).ravel().copy()
    if x.size != a.shape[1]:
        raise ValueError(f"estimate has {x.size} entries, operator expects {a.shape[1]}")
    indptr, indices, data = _csr_parts(a)
    for i in range(a.shape[0]):
        cols = indices[indptr[i]:indptr[i + 1]]
        vals = data[indptr[i]:indptr[i + 1]]
        denom = float(vals @ vals)
        if denom == 0.0:
            continue
        resid = float(vals @ x[cols]) - bv[i]
        x[cols] -= (resid / denom) * vals
    return x


def make_sart_step(a: SystemMatrix, b):
    """SART update as a closure with the weighting diagonals precomputed."""
    bv = _values(b, LINE_INTEGRAL if isinstance(b, Sinogram) else None)
    if bv.size != a.shape[0]:
        raise ValueError(f"data has {bv.size} entries, operator expects {a.shape[0]}")
    d_diag, m_diag = _sart_weights(a)

    def step(x: np.ndarray) -> np.ndarray:
        residual = a.apply(x) - bv
        return x - d_diag * a.apply_transpose(m_diag * residual)

    return step


def sart_step(a: SystemMatrix, b, x) -> np.ndarray:
    """One SART update x - D A^T M (A x - b)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != a.shape[1]:
        raise ValueError(f"estimate has {x.size} entries, operator expects {a.shape[1]}")
    return make_sart_step(a, b)(x)


def make_psart_step(a: SystemMatrix, model: LacModel, spectrum: Spectrum, p):
    """Polyenergetic SART update as a closure (projection tables cached)."""
    pv = _values(p, INTENSITY if isinstance(p, Sinogram) else None)
    if np.any(pv <= 0.0):
        raise ValueError("measured intensities must be strictly positive")
    if pv.size != a.shape[0]:
        raise ValueError(f"data has {pv.size} entries, operator expects {a.shape[0]}")
    proj = PolyProjector(a, model, spectrum)
    log_p = np.log(pv)
    d_diag, m_diag = _sart_weights(a)

    def step(t: np.ndarray) -> np.ndarray:
        residual = -np.log(proj.project_values(t)) + log_p
        return t - d_diag * a.apply_transpose(m_diag * residual)

    return step


def psart_step(a: SystemMatrix, model: LacModel, spectrum: Spectrum, p, t) -> np.ndarray:
    """One polyenergetic SART update t - D A^T M (-ln P(t) + ln p)."""
    t = np.asarray(t, dtype=float).ravel()
    if t.size != a.shape[1]:
        raise ValueError(f"estimate has {t.size} entries, operator expects {a.shape[1]}")
    return make_psart_step(a, model, spectrum, p)(t)


def part_sweep(a: SystemMatrix, model: LacModel, spectrum: Spectrum, p, t) -> np.ndarray:
    """One full polyenergetic ART sweep.

    Row i's residual uses the polyenergetic projection of the current
    estimate, which changes after every sub-iteration. Only the pixels in
    row i's support change, so the per-energy attenuation profiles are
    updated incrementally instead of reprojecting every ray each time.
    """
    pv = _values(p, INTENSITY if isinstance(p, Sinogram) else None)
    if np.any(pv <= 0.0):
        raise ValueError("measured intensities must be strictly positive")
    if pv.size != a.shape[0]:
        raise ValueError(f"data has {pv.size} entries, operator expects {a.shape[0]}")
    t = np.array(t, dtype=float).ravel().copy()
    proj = PolyProjector(a, model, spectrum)
    weights = spectrum.weights
    profiles = proj.attenuation_profiles(t)            # (h, n)
    log_p = np.log(pv)
    indptr, indices, data = _csr_parts(a)
    for i in range(a.shape[0]):
        cols = indices[indptr[i]:indptr[i + 1]]
        vals = data[indptr[i]:indptr[i + 1]]
        denom = float(vals @ vals)
        if denom == 0.0:
            continue
        lines = profiles[:, cols] @ vals               # (h,)
        p_i = float(weights @ np.exp(-lines))
        if p_i <= 0.0:
            raise ValueError(f"polyenergetic projection vanished on ray {i}")
        t[cols] -= ((-np.log(p_i) + log_p[i]) / denom) * vals
        profiles[:, cols] = proj.attenuation_profiles(t[cols])
    return t


def run(step, config: SolverConfig, size: int | None = None,
        keep_iterates: bool | None = None) -> IterationReport:
    """Iterate a stepper until convergence, a detected cycle, or the budget.

    The estimate starts from ``config.initial_estimate`` or from zeros of
    length ``size``. Convergence means the max-norm update fell below
    ``convergence_tol``. A cycle of period L in [2, cycle_window] is reported
    when the new iterate matches the iterate L steps back within
    ``cycle_tol`` while the per-iteration update is still clearly nonzero.
    Nonfinite or exploding iterates stop the run early with
    ``max_iterations`` status (they would never converge).
    """
    if config.initial_estimate is not None:
        x = np.array(config.initial_estimate, dtype=float).ravel()
    elif size is not None:
        x = np.zeros(int(size))
    else:
        raise ValueError("provide either config.initial_estimate or size")
    if keep_iterates is None:
        keep_iterates = x.size <= 8
    iterates = [x.copy()] if keep_iterates else None
    recent: deque[np.ndarray] = deque(maxlen=config.cycle_window)
    recent.append(x.copy())
    residuals: list[float] = []
    status = MAX_ITERATIONS
    period = None
    for _ in range(config.max_iterations):
        x_new = step(x)
        resid = float(np.max(np.abs(x_new - x)))
        residuals.append(resid)
        if keep_iterates:
            iterates.append(np.array(x_new))
        if not np.all(np.isfinite(x_new)) or np.max(np.abs(x_new)) > _DIVERGENCE_LIMIT:
            x = x_new
            break
        if resid < config.convergence_tol:
            x = x_new
            status = CONVERGED
            break
        if resid >= _CYCLE_RESIDUAL_FACTOR * config.cycle_tol:
            for lag in range(2, min(config.cycle_window, len(recent)) + 1):
                closure = float(np.max(np.abs(x_new - recent[-lag])))
                if closure < config.cycle_tol and resid >= _CYCLE_DOMINANCE_RATIO * closure:
                    status = CYCLED
                    period = lag
                    break
        x = x_new
        if status == CYCLED:
            break
        recent.append(x.copy())
    return IterationReport(
        status=status,
        iterations_run=len(residuals),
        final=x,
        residual_history=np.array(residuals),
        cycle_period=period,
        iterates=iterates,
    )


def run_art(a: SystemMatrix, b, config: SolverConfig) -> IterationReport:
    """Run full-sweep ART; one driver iteration is one sweep over all rows."""
    return run(lambda x: art_sweep(a, b, x), config, size=a.shape[1])


def run_sart(a: SystemMatrix, b, config: SolverConfig) -> IterationReport:
    return run(make_sart_step(a, b), config, size=a.shape[1])


def run_part(a: SystemMatrix, model: LacModel, spectrum: Spectrum, p,
             config: SolverConfig) -> IterationReport:
    return run(lambda t: part_sweep(a, model, spectrum, p, t), config, size=a.shape[1])


def run_psart(a: SystemMatrix, model: LacModel, spectrum: Spectrum, p,
              config: SolverConfig) -> IterationReport:
    return run(make_psart_step(a, model, spectrum, p), config, size=a.shape[1])
