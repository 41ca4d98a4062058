"""Compare the two Minkowski normalizations against the annihilator actions.

For each normalization, prints the eigen-relation residuals ||(a_ij - z_ij) K|| / ||K||
and the deviation of <K|K> from det(E - Z^dag Z)^(-lam).
"""
import argparse

import numpy as np

from qkahler.families import Minkowski, _minkowski_jet, make_point
from qkahler.fock import Truncation
from qkahler.polarization import build_generators


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=int, default=5)
    ap.add_argument("--j-max", type=float, default=3)
    ap.add_argument("--m-max", type=int, default=6)
    ap.add_argument("--scale", type=float, default=0.1)
    args = ap.parse_args()

    spec = Minkowski(args.lam)
    trunc = Truncation.mink(args.j_max, args.m_max)
    Z = args.scale * np.array([[1.0, 0.3j], [-0.2, 0.8]])
    p = make_point(spec, Z.ravel())
    gen = build_generators(spec, trunc)
    oracle = np.linalg.det(np.eye(2) - Z.conj().T @ Z).real ** (-args.lam)
    print(f"D = {trunc.dim}, point margin = {p.margin:.3g}")
    for norm in ("consistent", "literal"):
        K, _ = _minkowski_jet(spec.lam, trunc, p.coords, False, normalization=norm)
        res = [np.linalg.norm(a @ K - z * K) / np.linalg.norm(K) for a, z in zip(gen.anns, p.coords)]
        kk = np.vdot(K, K).real
        print(f"{norm:>10}: eigen residuals {' '.join(f'{r:.3e}' for r in res)}; "
              f"<K|K> = {kk:.12g} vs det^-lam = {oracle:.12g}")


if __name__ == "__main__":
    main()
