"""Identity residual of the moment-matched rule versus radial node count."""
import argparse

from qkahler.families import QHW, Toeplitz
from qkahler.fock import Truncation
from qkahler.quadrature import QuadratureError, moment_match_measure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[4, 8, 12, 16])
    ap.add_argument("--counts", type=int, nargs="+", default=[16, 32, 64, 128])
    args = ap.parse_args()
    for name, spec in [("toeplitz", Toeplitz()), ("qhw q=0.5", QHW(0.5, 1))]:
        print(name)
        for D in args.dims:
            row = []
            for n in args.counts:
                trunc = Truncation.with_dim(D) if spec.kind == "toeplitz" else Truncation.multi(D - 1, 1)
                try:
                    rule = moment_match_measure(spec, trunc, n)
                    row.append(f"{rule.residual:9.2e}{'*' if rule.negative_weight_flag else ' '}")
                except (QuadratureError, ValueError):
                    row.append("      -   ")
            print(f"  D={D:<3}", " ".join(row))
    print("(* = signed weights)")


if __name__ == "__main__":
    main()
