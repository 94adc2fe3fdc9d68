"""Top eigenvalue of r-fold repeated verifiers against lambda^r for random small verifiers."""
import argparse

import numpy as np

from stoqlab.gadgets import min_repetitions, smallest_repetitions, soundness_amplify_check
from stoqlab.verifier import random_verifier


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--max-r", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'#':>3} {'n_w':>3} {'r':>2} {'lam':>10} {'lam_rep':>10} {'lam^r':>10} {'rel_err':>9} {'accept_rep':>10}")
    for i in range(args.count):
        n_w = int(rng.integers(1, 4))
        v = random_verifier(rng, n_w, int(rng.integers(0, 2)), int(rng.integers(0, 2)))
        for r in range(2, args.max_r + 1):
            if r * n_w > 12:
                continue
            rep = soundness_amplify_check(v, r)
            print(f"{i:>3} {n_w:>3} {r:>2} {rep.lam:>10.6f} {rep.lam_rep:>10.6f} "
                  f"{rep.lam_pow:>10.6f} {rep.rel_error:>9.1e} {rep.accept_rep:>10.6f}")

    print("\nrepetitions needed to push soundness s below 2^-n:")
    for s in (0.6, 0.75, 0.9):
        for n in (4, 8, 16):
            print(f"  s={s:<5} n={n:<3} sufficient={min_repetitions(s, n):<4} "
                  f"smallest={smallest_repetitions(s, n)}")


if __name__ == "__main__":
    main()
