"""Run the verification sweep for a standard set of configurations and tabulate."""
import argparse
import time

from qkahler.report import RunConfig, run_verify

CONFIGS = [
    dict(family="toeplitz", dim=64),
    dict(family="rdeformed", q=0.5, R=(2.0, -2.0), dim=64),
    dict(family="qhw", q=0.5, modes=1, k_max=63),
    dict(family="qhw", q=0.5, modes=2, k_max=16),
    dict(family="minkowski", lam=4, j_max=3, m_max=6),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args()
    for d in CONFIGS:
        cfg = RunConfig.from_dict(dict(d, seed=args.seed))
        t0 = time.perf_counter()
        rep = run_verify(cfg)
        failed = [c.name for c in rep.checks if not c.passed]
        print(f"{cfg.spec()!s:<55} {'PASS' if rep.overall_pass else 'FAIL'}  {time.perf_counter() - t0:5.1f}s"
              + (f"  failing: {failed}" if failed else ""))
        if args.verbose:
            print(rep.summary())


if __name__ == "__main__":
    main()
