"""Discretized-continuum oracle against the residue solution, with a refinement sweep.

Prints the sweep report to stderr and the desk trajectory next to the
analytic one as CSV.  About six minutes on one core at the default profile.

    python3 scripts/oracle_check.py > oracle.csv
"""
import argparse
import sys
from dataclasses import dataclass

import numpy as np

from optoscatter.core import Fock, Truncation
from optoscatter.oracle import DESK_ATOL, DESK_FACTORS, DESK_RTOL, OracleGrid, convergence_sweep
from optoscatter.transient import probabilities, resonant_packet


@dataclass
class Config:
    g0: float = 0.3
    gamma_c: float = 0.1
    epsilon: float = 0.01
    n_ph: int = 3
    n_k: int = 801
    w: float = 6.0
    t_end: float = 100.0
    n_times: int = 51


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-k", type=int, default=801)
    ap.add_argument("--w", type=float, default=6.0)
    args = ap.parse_args()
    cfg = Config(n_k=args.n_k, w=args.w)
    par, pk = resonant_packet(cfg.g0, cfg.gamma_c, cfg.epsilon)
    times = np.linspace(0.0, cfg.t_end, cfg.n_times)
    grid = OracleGrid(par, cfg.n_ph, cfg.n_k, cfg.w)
    sweep = convergence_sweep(grid, pk, 0, cfg.t_end, DESK_FACTORS, "n_k", times, DESK_RTOL, DESK_ATOL)
    desk = sweep.trajectories[-1]
    ana = probabilities(Fock(0), par, pk, Truncation(n_ph=cfg.n_ph), times)
    print(sweep.as_text(), file=sys.stderr)
    print(f"norm_drift={desk.norm_drift:.3e}", file=sys.stderr)
    print(f"# {cfg}")
    print("t,p1_oracle,p2_oracle,p1_analytic,p2_analytic")
    for row in zip(times, desk.p1, desk.p2, ana.p1, ana.p2):
        print(",".join(f"{v:.16e}" for v in row))


if __name__ == "__main__":
    main()
