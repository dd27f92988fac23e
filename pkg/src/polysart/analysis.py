"""Convergence analysis of the SART and polyenergetic SART update maps.

The SART update is affine, x -> T x + c with T = I - D A^T M A; the
polyenergetic update is nonlinear with Jacobian J_F = I - D A^T M J_f at a
solution of the nonlinear system. This module assembles those Jacobians
(dense for small problems, matrix-free otherwise), estimates spectral radii
three ways (closed form for 2x2, characteristic-polynomial roots for small
matrices, power iteration for large operators), sweeps convergence maps over
two-pixel objects, and numerically checks the row-sum / eigenvalue facts
behind the SART convergence proof.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .materials import LacModel
from .phantoms import two_pixel_object
from .projection import DenseSystemMatrix, PolyProjector, SystemMatrix
from .reconstruction import CONVERGED, SolverConfig, _sart_weights, run, make_psart_step
from .spectra import Spectrum

__all__ = [
    "PowerIterationResult",
    "LemmaReport",
    "ConvergenceMap",
    "sart_iteration_matrix",
    "sart_iteration_operator",
    "jacobian_f",
    "jacobian_F_dense",
    "jacobian_F_operator",
    "spectral_radius_2x2",
    "characteristic_polynomial",
    "polynomial_roots",
    "spectral_radius_roots",
    "power_iteration",
    "convergence_map",
    "agreement_fraction",
    "discontinuity_ratio",
    "verify_lemma_a1",
    "verify_lemma_a2",
    "verify_theorem_a3",
]


# ---------------------------------------------------------------------------
# Iteration matrices and Jacobians
# ---------------------------------------------------------------------------

def sart_iteration_matrix(a: SystemMatrix) -> np.ndarray:
    """Dense T = I - D A^T M A (use only for small problems)."""
    d_diag, m_diag = _sart_weights(a)
    dense = a.to_dense()
    return np.eye(a.shape[1]) - (d_diag[:, None] * (dense.T @ (m_diag[:, None] * dense)))


def sart_iteration_operator(a: SystemMatrix) -> LinearOperator:
    """Matrix-free T = I - D A^T M A."""
    d_diag, m_diag = _sart_weights(a)
    n = a.shape[1]

    def matvec(v):
        v = np.asarray(v, dtype=float).ravel()
        return v - d_diag * a.apply_transpose(m_diag * a.apply(v))

    return LinearOperator((n, n), matvec=matvec, dtype=float)


def _poly_state(a: SystemMatrix, model: LacModel, spectrum: Spectrum, t: np.ndarray):
    """Shared precomputation for the Jacobian of the post-log residual."""
    proj = PolyProjector(a, model, spectrum)
    lines = proj.line_integrals(t)                     # (m, h)
    exps = np.exp(-lines)                              # (m, h)
    p = exps @ spectrum.weights                        # (m,)
    if np.any(p <= 0.0):
        raise ValueError("polyenergetic projection vanished; Jacobian undefined")
    deriv = proj.derivative_profiles(t)                # (h, n)
    return exps, p, deriv


def jacobian_f(a: SystemMatrix, model: LacModel, spectrum: Spectrum, t):
    """Jacobian of f(t) = -ln P(t) + ln p, entrywise
    (a_ij / P_i) * sum_h I_h exp(-<a_i, mu(t, e_h)>) * dmu/dt(t_j, e_h).

    Returns a dense array for a dense-backed operator and a CSR matrix (with
    the system matrix's sparsity) for the parallel-beam operator.
    """
    t = np.asarray(t, dtype=float).ravel()
    exps, p, deriv = _poly_state(a, model, spectrum, t)
    w = spectrum.weights
    if isinstance(a, DenseSystemMatrix):
        # (m, n) spectrum-averaged derivative weights, then Hadamard with A.
        weights = (exps * w) @ deriv                   # (m, n)
        return a.array * weights / p[:, None]
    csr = a.as_csr()
    coo = csr.tocoo()
    rows, cols = coo.row, coo.col
    scale = np.zeros(csr.nnz)
    for h in range(len(w)):
        scale += w[h] * exps[rows, h] * deriv[h, cols]
    data = csr.data * scale / p[rows]
    return sp.csr_matrix((data, csr.indices.copy(), csr.indptr.copy()), shape=csr.shape)


def jacobian_F_dense(a: SystemMatrix, model: LacModel, spectrum: Spectrum, t) -> np.ndarray:
    """Dense J_F = I - D A^T M J_f(t) for small problems."""
    jf = jacobian_f(a, model, spectrum, t)
    if sp.issparse(jf):
        jf = jf.toarray()
    d_diag, m_diag = _sart_weights(a)
    dense = a.to_dense()
    return np.eye(a.shape[1]) - d_diag[:, None] * (dense.T @ (m_diag[:, None] * jf))


def jacobian_F_operator(a: SystemMatrix, model: LacModel, spectrum: Spectrum, t) -> LinearOperator:
    """Matrix-free J_F = I - D A^T M J_f(t)."""
    jf = jacobian_f(a, model, spectrum, t)
    d_diag, m_diag = _sart_weights(a)
    n = a.shape[1]

    def matvec(v):
        v = np.asarray(v, dtype=float).ravel()
        return v - d_diag * a.apply_transpose(m_diag * (jf @ v))

    return LinearOperator((n, n), matvec=matvec, dtype=float)


# ---------------------------------------------------------------------------
# Spectral radii: closed form and characteristic-polynomial roots
# ---------------------------------------------------------------------------

def spectral_radius_2x2(m) -> float:
    """Largest eigenvalue magnitude of a 2x2 matrix, in closed form.

    Real roots come from the quadratic formula; a complex pair has modulus
    sqrt(det).
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    tr = m[0, 0] + m[1, 1]
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    disc = tr * tr - 4.0 * det
    if disc >= 0.0:
        root = math.sqrt(disc)
        return max(abs((tr + root) / 2.0), abs((tr - root) / 2.0))
    return math.sqrt(det)


def characteristic_polynomial(m) -> np.ndarray:
    """Monic characteristic polynomial coefficients via Faddeev-LeVerrier.

    Returns [1, c_1, ..., c_n] with p(x) = x^n + c_1 x^(n-1) + ... + c_n.
    Trace-based, so it does not rely on any eigenvalue solver.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError("matrix must be square")
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    work = np.zeros_like(m)
    for k in range(1, n + 1):
        work = m @ (work + coeffs[k - 1] * np.eye(n)) if k > 1 else m.copy()
        coeffs[k] = -np.trace(work) / k
    return coeffs


def _poly_eval(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    out = np.zeros_like(z)
    for c in coeffs:
        out = out * z + c
    return out


def _poly_deriv(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.size - 1
    return coeffs[:-1] * np.arange(n, 0, -1)


def polynomial_roots(coeffs, max_iterations: int = 400, tol: float = 1e-14) -> np.ndarray:
    """All roots of a monic polynomial by Durand-Kerner, Newton-polished.

    Suited to the small characteristic polynomials used here (degree <= 8).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if abs(coeffs[0] - 1.0) > 1e-12:
        coeffs = coeffs / coeffs[0]
    n = coeffs.size - 1
    if n == 0:
        return np.array([], dtype=complex)
    radius = 1.0 + np.max(np.abs(coeffs[1:]))
    seed = 0.4 + 0.9j
    roots = radius * seed ** np.arange(1, n + 1)
    for _ in range(max_iterations):
        values = _poly_eval(coeffs.astype(complex), roots)
        diffs = roots[:, None] - roots[None, :]
        np.fill_diagonal(diffs, 1.0)
        denom = np.prod(diffs, axis=1)
        delta = values / denom
        roots = roots - delta
        if np.max(np.abs(delta)) < tol * max(1.0, radius):
            break
    deriv = _poly_deriv(coeffs).astype(complex)
    for _ in range(30):
        values = _poly_eval(coeffs.astype(complex), roots)
        slopes = _poly_eval(deriv, roots)
        mask = np.abs(slopes) > 1e-300
        step = np.where(mask, values / np.where(mask, slopes, 1.0), 0.0)
        roots = roots - step
        if np.max(np.abs(step)) < 1e-16 * max(1.0, radius):
            break
    return roots


def spectral_radius_roots(m) -> float:
    """Spectral radius from characteristic-polynomial roots (small matrices)."""
    m = np.asarray(m, dtype=float)
    if m.shape[0] > 8:
        raise ValueError("root-based spectral radius is limited to n <= 8")
    if m.shape == (2, 2):
        return spectral_radius_2x2(m)
    roots = polynomial_roots(characteristic_polynomial(m))
    return float(np.max(np.abs(roots))) if roots.size else 0.0


# ---------------------------------------------------------------------------
# Power iteration
# ---------------------------------------------------------------------------

@dataclass
class PowerIterationResult:
    """Dominant-eigenvalue estimate from power iteration."""

    eigenvalue: float
    eigenvector: np.ndarray
    iterations: int
    final_residual: float
    converged: bool

    @property
    def spectral_radius(self) -> float:
        return abs(self.eigenvalue)


def power_iteration(op, tol: float = 1e-4, max_iterations: int = 20000,
                    seed: int = 0) -> PowerIterationResult:
    """Estimate the dominant eigenvalue of a linear operator.

    Starts from a seeded random unit vector; each step applies the operator,
    takes the Rayleigh quotient as the eigenvalue estimate, and stops once
    the max-norm residual ||M x - lambda x|| drops below ``tol``. A complex
    dominant pair never satisfies the residual test, so the result comes back
    with ``converged`` False and the last estimate.
    """
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    if isinstance(op, SystemMatrix):
        raise TypeError("pass an iteration operator (sart_iteration_operator / "
                        "jacobian_F_operator), not the system matrix itself")
    if not isinstance(op, LinearOperator):
        op = aslinearoperator(np.asarray(op, dtype=float))
    if op.shape[0] != op.shape[1]:
        raise ValueError("power iteration needs a square operator")
    n = op.shape[1]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    eigenvalue = 0.0
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        y = op.matvec(x)
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            raise ValueError("operator annihilated the probe vector")
        eigenvalue = float(x @ y)
        residual = float(np.max(np.abs(y - eigenvalue * x)))
        x = y / norm_y
        if residual < tol:
            return PowerIterationResult(eigenvalue, x, iterations, residual, True)
    return PowerIterationResult(eigenvalue, x, iterations, residual, False)


# ---------------------------------------------------------------------------
# Convergence maps over two-pixel objects
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceMap:
    """Spectral-radius and empirical-convergence grids over (t1, t2)."""

    t1_values: np.ndarray
    t2_values: np.ndarray
    rho: np.ndarray          # rho(J_F) at the exact solution, (n1, n2)
    converged: np.ndarray    # bool: did the iteration from zero converge
    boundaries: np.ndarray   # interior reference LACs (derivative jumps)


def _offset_from_boundaries(values: np.ndarray, boundaries: np.ndarray) -> np.ndarray:
    """Nudge grid nodes off the derivative discontinuities."""
    values = values.copy()
    span = values[-1] - values[0] if values.size > 1 else 1.0
    eps = 1e-9 * max(1.0, abs(span))
    for b in boundaries:
        hit = np.abs(values - b) < eps
        values[hit] += 1e-6 * max(span, 1.0)
    return values


def _convmap_cell(a, model, spectrum, t1, t2, config):
    t_star = np.array([t1, t2])
    proj = PolyProjector(a, model, spectrum)
    p = proj.project_values(t_star)
    rho = spectral_radius_2x2(jacobian_F_dense(a, model, spectrum, t_star))
    step = make_psart_step(a, model, spectrum, p)
    report = run(step, config, size=2, keep_iterates=False)
    return rho, report.status == CONVERGED


def _convmap_row(args):
    (matrix, model, spectrum, t1, t2_values, config) = args
    a = DenseSystemMatrix(matrix)
    row_rho = np.empty(t2_values.size)
    row_conv = np.empty(t2_values.size, dtype=bool)
    for j, t2 in enumerate(t2_values):
        row_rho[j], row_conv[j] = _convmap_cell(a, model, spectrum, t1, float(t2), config)
    return row_rho, row_conv


def convergence_map(model: LacModel, spectrum: Spectrum,
                    t1_range: tuple[float, float] = (0.02, 0.30),
                    t2_range: tuple[float, float] = (0.02, 0.30),
                    grid_size: int = 60,
                    a: SystemMatrix | None = None,
                    config: SolverConfig | None = None,
                    workers: int = 1) -> ConvergenceMap:
    """Map rho(J_F) and empirical convergence over a (t1, t2) grid.

    For each grid point the exact polyenergetic data p = P((t1, t2)) is
    generated, rho(J_F) is evaluated at that solution in closed form, and the
    polyenergetic SART iteration is run from zero; cells that cycle or
    exhaust the budget count as not converged. Grid nodes are offset from the
    derivative discontinuities where the Jacobian is undefined.
    """
    if a is None:
        a, _ = two_pixel_object(0.0, 0.0)
    if config is None:
        config = SolverConfig(max_iterations=5000, convergence_tol=1e-8,
                              cycle_window=8, cycle_tol=1e-9)
    boundaries = model.interior_reference_lacs
    t1_values = _offset_from_boundaries(np.linspace(*t1_range, grid_size), boundaries)
    t2_values = _offset_from_boundaries(np.linspace(*t2_range, grid_size), boundaries)
    rho = np.empty((grid_size, grid_size))
    conv = np.empty((grid_size, grid_size), dtype=bool)
    matrix = a.to_dense()
    tasks = [(matrix, model, spectrum, float(t1), t2_values, config) for t1 in t1_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, (row_rho, row_conv) in enumerate(pool.map(_convmap_row, tasks, chunksize=4)):
                rho[i], conv[i] = row_rho, row_conv
    else:
        for i, task in enumerate(tasks):
            rho[i], conv[i] = _convmap_row(task)
    return ConvergenceMap(t1_values, t2_values, rho, conv, np.asarray(boundaries))


def agreement_fraction(cmap: ConvergenceMap, exclusion: float = 0.02) -> float:
    """Fraction of cells where sign(1 - rho) matches the empirical outcome.

    Cells with |rho - 1| <= ``exclusion`` are left out: there the local rate
    is too close to neutral for the finite iteration budget to decide.
    """
    informative = np.abs(cmap.rho - 1.0) > exclusion
    if not np.any(informative):
        return float("nan")
    predicted = cmap.rho < 1.0
    agree = predicted[informative] == cmap.converged[informative]
    return float(np.mean(agree))


def discontinuity_ratio(cmap: ConvergenceMap) -> float:
    """Mean |delta rho| across the material boundaries vs. within segments.

    Adjacent-cell differences are taken along both grid axes; a pair
    "crosses" when a boundary value lies strictly between its coordinates.
    """
    across: list[float] = []
    within: list[float] = []

    def classify(values, diffs_abs):
        lo = np.minimum(values[:-1], values[1:])
        hi = np.maximum(values[:-1], values[1:])
        crossing = np.zeros(values.size - 1, dtype=bool)
        for b in cmap.boundaries:
            crossing |= (lo < b) & (b < hi)
        across.extend(diffs_abs[:, crossing].ravel() if diffs_abs.ndim == 2 else diffs_abs[crossing])
        within.extend(diffs_abs[:, ~crossing].ravel() if diffs_abs.ndim == 2 else diffs_abs[~crossing])

    classify(cmap.t2_values, np.abs(np.diff(cmap.rho, axis=1)))
    classify(cmap.t1_values, np.abs(np.diff(cmap.rho, axis=0)).T)
    if not across or not within:
        return float("nan")
    return float(np.mean(across) / np.mean(within))


# ---------------------------------------------------------------------------
# Numerical checks of the SART convergence facts
# ---------------------------------------------------------------------------

@dataclass
class LemmaReport:
    """Outcome of one numerical verification on a dense system matrix."""

    name: str
    hypothesis_ok: bool
    passed: bool | None
    details: dict = field(default_factory=dict)


def _elimination_rank(m: np.ndarray, pivot_tol: float = 1e-12) -> int:
    """Rank by Gaussian elimination with partial pivoting.

    The pivot threshold is relative to the largest initial magnitude.
    """
    work = np.array(m, dtype=float)
    rows, cols = work.shape
    scale = max(1.0, float(np.max(np.abs(work))) if work.size else 0.0)
    rank = 0
    for col in range(cols):
        if rank >= rows:
            break
        pivot_row = rank + int(np.argmax(np.abs(work[rank:, col])))
        pivot = work[pivot_row, col]
        if abs(pivot) <= pivot_tol * scale:
            continue
        work[[rank, pivot_row]] = work[[pivot_row, rank]]
        work[rank + 1:, col:] -= np.outer(work[rank + 1:, col] / pivot, work[rank, col:])
        rank += 1
    return rank


def _sart_w(a_array: np.ndarray) -> np.ndarray:
    a = DenseSystemMatrix(a_array)
    d_diag, m_diag = _sart_weights(a)
    return d_diag[:, None] * (a_array.T @ (m_diag[:, None] * a_array))


def _hypothesis_check(a_array: np.ndarray) -> tuple[bool, dict]:
    a_array = np.asarray(a_array, dtype=float)
    m, n = a_array.shape
    if n > 8:
        raise ValueError("lemma checks are limited to n <= 8")
    rank = _elimination_rank(a_array)
    ok = rank == n and m >= n
    return ok, {"rank": rank, "shape": (m, n)}


def verify_lemma_a1(a_array) -> LemmaReport:
    """Row sums of W = D A^T M A are at most 1, exactly 1 for positive A."""
    a_array = np.asarray(a_array, dtype=float)
    ok, details = _hypothesis_check(a_array)
    if not ok:
        return LemmaReport("row-sums of W", False, None, details)
    w = _sart_w(a_array)
    row_sums = np.abs(w).sum(axis=1)
    details["max_row_sum"] = float(row_sums.max())
    passed = bool(np.all(row_sums <= 1.0 + 1e-12))
    if np.all(a_array > 0.0):
        details["all_positive"] = True
        passed = passed and bool(np.all(np.abs(row_sums - 1.0) <= 1e-12))
    return LemmaReport("row-sums of W", True, passed, details)


def verify_lemma_a2(a_array) -> LemmaReport:
    """All eigenvalues of W are positive real numbers.

    Checked through polished characteristic-polynomial roots: imaginary
    parts below 1e-9 and positive real parts.
    """
    a_array = np.asarray(a_array, dtype=float)
    ok, details = _hypothesis_check(a_array)
    if not ok:
        return LemmaReport("eigenvalues of W real positive", False, None, details)
    roots = polynomial_roots(characteristic_polynomial(_sart_w(a_array)))
    details["max_imag"] = float(np.max(np.abs(roots.imag)))
    details["min_real"] = float(np.min(roots.real))
    passed = bool(np.all(np.abs(roots.imag) < 1e-9) and np.all(roots.real > 0.0))
    return LemmaReport("eigenvalues of W real positive", True, passed, details)


def verify_theorem_a3(a_array) -> LemmaReport:
    """rho(T) < 1 for T = I - W, via the roots of W's characteristic polynomial."""
    a_array = np.asarray(a_array, dtype=float)
    ok, details = _hypothesis_check(a_array)
    if not ok:
        return LemmaReport("rho(T) < 1", False, None, details)
    roots = polynomial_roots(characteristic_polynomial(_sart_w(a_array)))
    rho_t = float(np.max(np.abs(1.0 - roots)))
    details["rho_T"] = rho_t
    return LemmaReport("rho(T) < 1", True, bool(rho_t < 1.0), details)
