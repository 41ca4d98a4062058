"""Norm-versus-symbol-supremum gap as the grid radius and truncation grow."""
import argparse

import numpy as np

from qkahler.families import QHW, Toeplitz
from qkahler.fock import Truncation
from qkahler.polarization import build_generators, covariant_symbol
from qkahler.quadrature import isometry_gap, radial_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[64, 256, 1024])
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.9, 0.99, 0.999])
    args = ap.parse_args()
    for name, spec in [("toeplitz", Toeplitz()), ("qhw q=0.75", QHW(0.75, 1))]:
        print(name, f"(||a|| -> {spec.radius():.4g})")
        for D in args.dims:
            trunc = Truncation.with_dim(D) if spec.kind == "toeplitz" else Truncation.multi(D - 1, 1)
            gen = build_generators(spec, trunc)
            gaps = []
            for f in args.fractions:
                grid = radial_grid(spec, f * spec.radius(), 200)
                gaps.append(isometry_gap(gen, None, grid)[0])
            print(f"  D={D:<5}", " ".join(f"r={f}: {g:.3e}" for f, g in zip(args.fractions, gaps)))
        print()
    # the truncated symbol tends to (D-1)/D at the boundary, so the gap is >= 1/D
    print("Toeplitz symbol supremum versus (D-1)/D:")
    for D in args.dims:
        spec, trunc = Toeplitz(), Truncation.with_dim(D)
        gen = build_generators(spec, trunc)
        grid = radial_grid(spec, 0.9999, 2000)
        vals = np.array([abs(covariant_symbol(gen.anns[0], spec, trunc, p)) for p in grid])
        i = int(vals.argmax())
        print(f"  D={D:<5} r*={abs(grid[i].z):.4f} sup={vals[i]:.6f} (D-1)/D={(D - 1) / D:.6f}")


if __name__ == "__main__":
    main()
