"""Desk-scale head-phantom study: spectral radii and beam hardening.

Realistic CT system matrices are sparse and structured, unlike the dense
two-pixel fixture. This script builds a parallel-beam system for an
ellipse-composite head phantom and

  1. estimates, by power iteration, the spectral radius of the SART
     iteration matrix T and of the polyenergetic update Jacobian J_F at the
     phantom, showing they are virtually identical (and < 1); and
  2. reconstructs polyenergetic data with plain SART (beam-hardening bias)
     and with the polyenergetic update (bias-free), comparing errors.

Writes images into demo_out/head_phantom/.
"""

import time
from pathlib import Path

import numpy as np

from polysart import (
    ParallelBeamGeometry,
    ParallelBeamProjector,
    SolverConfig,
    bundled_lac_model,
    bundled_spectrum,
    head_phantom,
    jacobian_F_operator,
    poly_project,
    post_log,
    power_iteration,
    run_psart,
    run_sart,
    sart_iteration_operator,
)
from polysart.fileio import write_pgm16

out = Path("demo_out/head_phantom")
out.mkdir(parents=True, exist_ok=True)

n = 32
model = bundled_lac_model()
spectrum = bundled_spectrum()
geometry = ParallelBeamGeometry(image_size=n, n_views=60, pixel_pitch_cm=20.0 / n)
a = ParallelBeamProjector(geometry)
phantom = head_phantom(n)
t_star = phantom.ravel()
print(f"geometry: {n}x{n} image, {geometry.n_views} views, "
      f"{geometry.n_rays} rays, {a.as_csr().nnz} matrix entries")

print("\npower iteration (residual tolerance 1e-4):")
for name, op in (("rho(T)  ", sart_iteration_operator(a)),
                 ("rho(J_F)", jacobian_F_operator(a, model, spectrum, t_star))):
    start = time.perf_counter()
    result = power_iteration(op, tol=1e-4, max_iterations=30000, seed=123)
    print(f"  {name} = {abs(result.eigenvalue):.8f}   "
          f"({result.iterations} iterations, {time.perf_counter() - start:.1f}s, "
          f"converged={result.converged})")
print("  both sit just below one: the polyenergetic update inherits SART's")
print("  (slow) local convergence on this kind of system matrix.")

print("\nreconstructing polyenergetic data ...")
p = poly_project(a, model, spectrum, t_star)
config = SolverConfig(max_iterations=1500, convergence_tol=1e-9)

mono_recon = run_sart(a, post_log(p, spectrum), config).final.reshape(n, n)
poly_recon = run_psart(a, model, spectrum, p, config).final.reshape(n, n)

interior = phantom == 0.2033
for name, img in (("SART on post-log data", mono_recon),
                  ("polyenergetic update ", poly_recon)):
    rmse = np.sqrt(np.mean((img - phantom) ** 2))
    bias = np.mean(img[interior] - phantom[interior])
    print(f"  {name}: rmse = {rmse:.2e}, soft-tissue bias = {bias:+.2e}")
print("  the beam is softer than 70 keV, so post-log data overshoot the")
print("  reference-energy line integrals and the mono model biases tissue")
print("  upward; modeling the spectrum removes the bias on exact data.")

write_pgm16(out / "phantom.pgm", phantom, window=(0.0, 0.4948))
write_pgm16(out / "sart.pgm", mono_recon, window=(0.0, 0.4948))
write_pgm16(out / "psart.pgm", poly_recon, window=(0.0, 0.4948))
print(f"\nimages written to {out}/")
