"""g2(t) for the mirror in |0>, |1> and a thermal state, one coupling.

    python3 scripts/mirror_states.py > mirrors.csv
"""
import argparse
from dataclasses import dataclass

import numpy as np

from optoscatter.core import Fock, Thermal, Truncation
from optoscatter.transient import probabilities, resonant_packet


@dataclass
class Config:
    g0: float = 0.3
    gamma_c: float = 0.1
    epsilon: float = 0.01
    nbar: float = 1.0
    n_ph: int = 12
    thermal_tol: float = 1e-3
    t_stop: float = 150.0
    n_times: int = 31


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nbar", type=float, default=1.0)
    args = ap.parse_args()
    cfg = Config(nbar=args.nbar)
    par, pk = resonant_packet(cfg.g0, cfg.gamma_c, cfg.epsilon)
    trunc = Truncation(n_ph=cfg.n_ph, tol=cfg.thermal_tol)
    t = np.linspace(0.0, cfg.t_stop, cfg.n_times)
    print(f"# {cfg}")
    print("mirror,t,p1,p2,g2")
    for name, mirror in (("fock0", Fock(0)), ("fock1", Fock(1)), ("thermal", Thermal(cfg.nbar))):
        tr = probabilities(mirror, par, pk, trunc, t)
        for row in zip(tr.times, tr.p1, tr.p2, tr.g2):
            print(name + "," + ",".join(f"{v:.16e}" for v in row))


if __name__ == "__main__":
    main()
