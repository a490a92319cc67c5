"""g2 at a fixed probe time as a function of g0, photons on the one-photon resonance.

    python3 scripts/g2_vs_coupling.py > g2_scan.csv
"""
import argparse
from dataclasses import dataclass

import numpy as np

from optoscatter.core import Fock, Truncation
from optoscatter.transient import g2_scan, sideband_resonances


@dataclass
class Config:
    gamma_c: float = 0.1
    epsilon: float = 0.01
    t_probe: float = 50.0
    g0_start: float = 0.05
    g0_step: float = 0.01
    n_g0: int = 136
    n_ph: int = 6
    workers: int = 1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--n-ph", type=int, default=6)
    args = ap.parse_args()
    cfg = Config(n_ph=args.n_ph, workers=args.workers)
    g0 = np.round(cfg.g0_start + cfg.g0_step * np.arange(cfg.n_g0), 12)
    pts = g2_scan(g0, cfg.t_probe, Fock(0), cfg.gamma_c, cfg.epsilon,
                  Truncation(n_ph=cfg.n_ph), workers=cfg.workers)
    g2 = np.array([v for _, v in pts])
    peak = np.zeros(g2.size, dtype=bool)
    peak[1:-1] = (g2[1:-1] > g2[:-2]) & (g2[1:-1] > g2[2:])
    print(f"# {cfg}")
    print(f"# sideband couplings sqrt(n/2): {sideband_resonances(3)[1:]}")
    print("g0,g2,local_max")
    for g, v, pk in zip(g0, g2, peak):
        print(f"{g:.12g},{v:.16e},{int(pk)}")


if __name__ == "__main__":
    main()
