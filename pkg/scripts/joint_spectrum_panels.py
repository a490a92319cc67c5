"""Joint spectra S(dp, dq) for a list of couplings, with summary statistics.

One CSV block per coupling; statistics go to stderr.

    python3 scripts/joint_spectrum_panels.py --g0 0.3 0.6 > spectra.csv
"""
import argparse
import sys
from dataclasses import dataclass

from optoscatter.core import Fock, Truncation, n_ph_for_tail
from optoscatter.longtime import AmplitudeContext
from optoscatter.spectrum import GridSpec, joint_spectrum, spectrum_stats
from optoscatter.transient import resonant_packet


@dataclass
class Config:
    gamma_c: float = 0.1
    epsilon: float = 0.01
    lo: float = -2.5
    hi: float = 1.5
    n: int = 241
    tail_tol: float = 1e-8
    order: str = "exact"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--g0", type=float, nargs="+", default=[0.6])
    ap.add_argument("--order", default="exact", choices=["exact", "first", "zeroth"])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = Config(order=args.order)
    print(f"# {cfg}")
    print("g0,dp,dq,S")
    for g0 in args.g0:
        par, pk = resonant_packet(g0, cfg.gamma_c, cfg.epsilon)
        trunc = Truncation(n_ph=n_ph_for_tail(par, 0, cfg.tail_tol))
        ctx = AmplitudeContext(par, pk, trunc, 0, cfg.order)
        grid = joint_spectrum(ctx, Fock(0), GridSpec(cfg.lo, cfg.hi, cfg.n), workers=args.workers)
        for p, q, s in grid.rows():
            print(f"{g0:g},{p:.12g},{q:.12g},{s:.16e}")
        print(f"g0={g0:g}\n{spectrum_stats(grid).as_text()}", file=sys.stderr)


if __name__ == "__main__":
    main()
