"""Generate the bundled material and spectrum fixture files.

Run once from the repository root:

    python3 tools/make_fixtures.py [--filtration-mm-al 3.4]

Materials: public mass-attenuation tables (NIST-style anchors for dry air,
adipose tissue, water-equivalent soft tissue, cortical bone) are resampled
log-log onto a 24-point grid over 10-150 keV and scaled so the 70 keV linear
attenuation coefficients are exactly 0, 0.1782, 0.2033 and 0.4948 1/cm.

Spectrum: a 130 kVp Kramers bremsstrahlung continuum filtered by a few mm of
aluminum, integrated into 11 bins over 20-130 keV (bin energy = intensity
centroid). The filtration thickness is the one free knob; see
tools/calibrate_spectrum.py for how the default was chosen.
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "polysart" / "data"

# Mass attenuation (cm^2/g) on the standard sparse grid.
BASE_GRID = np.array([10.0, 15.0, 20.0, 30.0, 40.0, 50.0, 60.0, 80.0, 100.0, 150.0])
MU_RHO = {
    "air": [5.120, 1.614, 0.7779, 0.3538, 0.2485, 0.2080, 0.1875, 0.1662, 0.1541, 0.1356],
    "fat": [3.268, 1.083, 0.5480, 0.2655, 0.2090, 0.1868, 0.1726, 0.1595, 0.1510, 0.1347],
    "soft_tissue": [5.329, 1.673, 0.8096, 0.3756, 0.2683, 0.2269, 0.2059, 0.1837, 0.1707, 0.1505],
    "bone": [28.51, 9.032, 4.001, 1.331, 0.6655, 0.4242, 0.3148, 0.2229, 0.1855, 0.1480],
}
ALUMINUM = [26.23, 7.955, 3.441, 1.128, 0.5685, 0.3681, 0.2778, 0.2018, 0.1704, 0.1378]
ALUMINUM_DENSITY = 2.699  # g/cm^3

ANCHORS_70KEV = {"air": 0.0, "fat": 0.1782, "soft_tissue": 0.2033, "bone": 0.4948}

OUTPUT_GRID = np.array([
    10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0, 65.0,
    70.0, 75.0, 80.0, 85.0, 90.0, 95.0, 100.0, 110.0, 120.0, 130.0, 140.0, 150.0,
])

KVP = 130.0
N_BINS = 11
BIN_RANGE = (20.0, 130.0)
DEFAULT_FILTRATION_MM_AL = 3.2


def loglog_resample(x_new, x, y):
    return np.exp(np.interp(np.log(x_new), np.log(np.asarray(x)), np.log(np.asarray(y))))


def material_curve(name: str) -> np.ndarray:
    """Scaled LAC (1/cm) on OUTPUT_GRID with the 70 keV anchor exact."""
    anchor = ANCHORS_70KEV[name]
    if anchor == 0.0:
        return np.zeros_like(OUTPUT_GRID)
    mu_rho = loglog_resample(OUTPUT_GRID, BASE_GRID, MU_RHO[name])
    at_70 = loglog_resample(np.array([70.0]), BASE_GRID, MU_RHO[name])[0]
    lac = mu_rho * (anchor / at_70)
    lac[OUTPUT_GRID == 70.0] = anchor
    return lac


def filtered_kramers(filtration_mm_al: float, grid_step: float = 0.05):
    energies = np.arange(15.0, KVP + grid_step / 2, grid_step)
    fluence = np.clip(KVP / energies - 1.0, 0.0, None)
    mu_al = loglog_resample(energies, BASE_GRID, ALUMINUM) * ALUMINUM_DENSITY
    fluence = fluence * np.exp(-mu_al * filtration_mm_al / 10.0)
    return energies, fluence


def spectrum_bins(filtration_mm_al: float):
    energies, fluence = filtered_kramers(filtration_mm_al)
    edges = np.linspace(*BIN_RANGE, N_BINS + 1)
    centers = np.empty(N_BINS)
    weights = np.empty(N_BINS)
    for i in range(N_BINS):
        sel = (energies >= edges[i]) & (energies < edges[i + 1])
        w = np.trapezoid(fluence[sel], energies[sel])
        centers[i] = np.trapezoid(fluence[sel] * energies[sel], energies[sel]) / w
        weights[i] = w
    weights /= weights.sum()
    return centers, weights


def write_materials():
    mat_dir = DATA_DIR / "materials"
    mat_dir.mkdir(parents=True, exist_ok=True)
    order = sorted(ANCHORS_70KEV, key=ANCHORS_70KEV.get)
    for name in order:
        lac = material_curve(name)
        with open(mat_dir / f"{name}.csv", "w", newline="\n") as fh:
            fh.write(f"# {name}: linear attenuation coefficient at standard density,\n")
            fh.write("# scaled so the 70 keV value matches the model anchor exactly.\n")
            fh.write("energy_kev,lac_per_cm\n")
            for e, v in zip(OUTPUT_GRID, lac):
                fh.write(f"{e:g},{v:.10g}\n")
    with open(mat_dir / "materials.json", "w", newline="\n") as fh:
        fh.write('{\n  "reference_energy_kev": 70.0,\n  "materials": [\n')
        fh.write(",\n".join(f'    "{name}.csv"' for name in order))
        fh.write("\n  ]\n}\n")
    print(f"wrote {len(order)} material curves to {mat_dir}")


def write_spectrum(filtration_mm_al: float):
    centers, weights = spectrum_bins(filtration_mm_al)
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    path = DATA_DIR / "spectrum_130kvp.csv"
    with open(path, "w", newline="\n") as fh:
        fh.write("# 130 kVp tungsten-anode spectrum (Kramers continuum, "
                 f"{filtration_mm_al:g} mm Al filtration),\n")
        fh.write(f"# integrated into {N_BINS} bins over {BIN_RANGE[0]:g}-{BIN_RANGE[1]:g} keV.\n")
        fh.write("energy_kev,weight\n")
        for e, w in zip(centers, weights):
            fh.write(f"{e:.10g},{w:.10g}\n")
    print(f"wrote spectrum ({filtration_mm_al:g} mm Al) to {path}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--filtration-mm-al", type=float, default=DEFAULT_FILTRATION_MM_AL)
    args = parser.parse_args()
    write_materials()
    write_spectrum(args.filtration_mm_al)


if __name__ == "__main__":
    main()
