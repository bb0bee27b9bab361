#!/usr/bin/env python3
"""Writes data/mineral_library.csv, a smooth synthetic stand-in for five USGS
mineral signatures (420 bands, 400-2495 nm in 5 nm steps).

The curves are a sloped continuum with Gaussian absorption bands placed near
the diagnostic wavelengths of each mineral. They are not measured spectra; use
tools/usgs_to_csv.py to build a library from real USGS splib07 files.
"""
import argparse
import pathlib

import numpy as np

WAVELENGTHS = np.arange(400, 2500, 5, dtype=float)

# name: (continuum at 400 nm, continuum at 2495 nm, [(centre nm, width nm, depth)])
MINERALS = {
    "Alunite": (0.55, 0.78, [(1430, 30, 0.25), (1760, 25, 0.18), (2165, 30, 0.30), (2320, 35, 0.20), (480, 80, 0.15)]),
    "Calcite": (0.70, 0.88, [(1875, 30, 0.12), (1995, 30, 0.10), (2160, 25, 0.08), (2340, 40, 0.42)]),
    "Epidote": (0.25, 0.55, [(1050, 150, 0.18), (1550, 40, 0.10), (2255, 25, 0.22), (2340, 30, 0.30)]),
    "Kaolinite": (0.60, 0.84, [(1395, 12, 0.20), (1415, 12, 0.18), (1910, 40, 0.08), (2165, 15, 0.25), (2205, 20, 0.38)]),
    "Buddingtonite": (0.40, 0.62, [(1560, 30, 0.15), (2020, 30, 0.28), (2110, 30, 0.18), (1290, 40, 0.08)]),
}


def signature(lo, hi, bands):
    t = (WAVELENGTHS - WAVELENGTHS[0]) / (WAVELENGTHS[-1] - WAVELENGTHS[0])
    continuum = lo + (hi - lo) * np.sqrt(t)
    absorption = np.ones_like(WAVELENGTHS)
    for centre, width, depth in bands:
        absorption *= 1.0 - depth * np.exp(-0.5 * ((WAVELENGTHS - centre) / width) ** 2)
    return np.clip(continuum * absorption, 0.0, 1.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "mineral_library.csv"))
    args = parser.parse_args()
    names = list(MINERALS)
    table = np.column_stack([WAVELENGTHS] + [signature(*MINERALS[n]) for n in names])
    with open(args.out, "w") as f:
        f.write("# synthetic stand-in for USGS splib07 minerals; generated by tools/make_reference_library.py\n")
        f.write("wavelength," + ",".join(names) + "\n")
        for row in table:
            f.write(f"{row[0]:.0f}," + ",".join(f"{v:.6f}" for v in row[1:]) + "\n")


if __name__ == "__main__":
    main()
