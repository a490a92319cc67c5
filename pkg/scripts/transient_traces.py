"""P1(t), P2(t) and g2(t) for several couplings, mirror in its ground state.

    python3 scripts/transient_traces.py --g0 0.3 0.6 1.0 > traces.csv
"""
import argparse
from dataclasses import dataclass

import numpy as np

from optoscatter.core import Fock, Truncation, n_ph_for_tail
from optoscatter.transient import probabilities, resonant_packet


@dataclass
class Config:
    gamma_c: float = 0.1
    epsilon: float = 0.01
    t_stop: float = 200.0
    n_times: int = 201
    tail_tol: float = 1e-8


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--g0", type=float, nargs="+", default=[0.3, 0.6, 1.0])
    args = ap.parse_args()
    cfg = Config()
    t = np.linspace(0.0, cfg.t_stop, cfg.n_times)
    print(f"# {cfg}")
    print("g0,n_ph,t,p1,p2,g2")
    for g0 in args.g0:
        par, pk = resonant_packet(g0, cfg.gamma_c, cfg.epsilon)
        n_ph = n_ph_for_tail(par, 0, cfg.tail_tol)
        tr = probabilities(Fock(0), par, pk, Truncation(n_ph=n_ph), t)
        for row in zip(tr.times, tr.p1, tr.p2, tr.g2):
            print(f"{g0:g},{n_ph}," + ",".join(f"{v:.16e}" for v in row))


if __name__ == "__main__":
    main()
