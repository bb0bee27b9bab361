#!/usr/bin/env python3
"""Converts USGS splib07 ASCII spectra into the library CSV read by unmixlab.

Each input file holds one reflectance value per line after a one-line title;
a separate wavelength file (microns, same length) gives the band centres.
Samples are linearly interpolated onto a 5 nm grid from 400 to 2495 nm and
deleted-channel markers (values below -1e30) are filled by interpolation.

    usgs_to_csv.py --wavelengths splib07a_Wavelengths_ASD.txt \
        Alunite=s07_ASD_Alunite_GDS84.txt Calcite=... --out library.csv
"""
import argparse

import numpy as np


def read_column(path):
    with open(path) as f:
        lines = f.read().splitlines()[1:]
    return np.array([float(x.split()[0]) for x in lines if x.strip()])


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--wavelengths", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--start", type=float, default=400.0)
    parser.add_argument("--stop", type=float, default=2495.0)
    parser.add_argument("--step", type=float, default=5.0)
    parser.add_argument("spectra", nargs="+", help="NAME=path pairs")
    args = parser.parse_args()

    wl_nm = read_column(args.wavelengths) * 1000.0
    grid = np.arange(args.start, args.stop + args.step / 2, args.step)
    names, columns = [], []
    for spec in args.spectra:
        name, path = spec.split("=", 1)
        values = read_column(path)
        if values.shape != wl_nm.shape:
            raise SystemExit(f"{path}: {values.size} samples, wavelength file has {wl_nm.size}")
        good = values > -1e30
        columns.append(np.clip(np.interp(grid, wl_nm[good], values[good]), 0.0, 1.0))
        names.append(name)

    with open(args.out, "w") as f:
        f.write("wavelength," + ",".join(names) + "\n")
        for i, w in enumerate(grid):
            f.write(f"{w:g}," + ",".join(f"{c[i]:.6f}" for c in columns) + "\n")


if __name__ == "__main__":
    main()
