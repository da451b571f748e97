"""End-state error of the fixed-step integrator against a fine reference.

Halving dt should cut the error by about 16 for a fourth-order method.
"""
import argparse

import numpy as np

from wecsim.oracles import _STATE_SCALE, convergence_scenario
from wecsim.sim import _pack, run_scenario


def end_state(dt, duration):
    return np.array(_pack(run_scenario(convergence_scenario(dt, duration)).final_state))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration", type=float, default=0.2)
    ap.add_argument("--dts", type=float, nargs="+", default=[2e-3, 1e-3, 5e-4, 2.5e-4])
    ap.add_argument("--ref-dt", type=float, default=6.25e-5)
    args = ap.parse_args()

    ref = end_state(args.ref_dt, args.duration)
    prev = None
    print(f"{'dt':>10} {'error':>12} {'ratio':>8}")
    for dt in args.dts:
        err = np.linalg.norm((end_state(dt, args.duration) - ref) / _STATE_SCALE)
        ratio = f"{prev / err:8.2f}" if prev else " " * 8
        print(f"{dt:10.3g} {err:12.4e} {ratio}", flush=True)
        prev = err


if __name__ == "__main__":
    main()
