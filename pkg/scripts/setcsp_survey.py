"""Random SetCSP instances: minimum frustration and compiled-verifier acceptance."""
import argparse

import numpy as np

from stoqlab.setcsp import compile_to_stoqma, min_frustration, random_instance, total_frustration
from stoqlab.states import subset_state
from stoqlab.verifier import accept_prob


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--m", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'#':>3} {'min_unsat':>9} {'|S|':>4} {'width':>5} {'c0':>8} {'c1':>8} {'corrected':>9} {'1-unsat/2':>9}")
    for i in range(args.count):
        inst = random_instance(rng, args.n, args.m, args.k)
        best = min_frustration(inst)
        S = best.subset
        comp = compile_to_stoqma(inst)
        raw = accept_prob(comp.verifier, subset_state(S, inst.n))
        want = 1 - 0.5 * total_frustration(inst, S)
        print(f"{i:>3} {best.value:>9.4f} {len(S):>4} {comp.verifier.width:>5} "
              f"{float(comp.c0):>8.4f} {float(comp.c1):>8.4f} {comp.corrected(raw):>9.6f} {want:>9.6f}")


if __name__ == "__main__":
    main()
