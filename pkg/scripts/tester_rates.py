"""Empirical ACCEPT rates of the sample/query tester over a grid of witnesses."""
import argparse

import numpy as np

from stoqlab.circuits import identity
from stoqlab.states import NonNegState, split_by_wire
from stoqlab.tester import TesterConfig, binomial_band, exact_value, run_trials
from stoqlab.verifier import Layout, StoqVerifier


def witness(t: float) -> NonNegState:
    # mass t on the "10" partner of "00"; t = 1/2 is the uniform pair
    return NonNegState.from_dict(2, {"00": np.sqrt(1 - t), "10": np.sqrt(t)})


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a", type=float, default=0.9)
    ap.add_argument("--b", type=float, default=0.6)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    v = StoqVerifier(identity(2), Layout(2), 1)
    cfg = TesterConfig(args.a, args.b, seed=args.seed)
    print(f"a={cfg.a} b={cfg.b} eps={cfg.eps:.4f} m={cfg.m} m'={cfg.m_prime} threshold={cfg.threshold}")
    lo, _ = binomial_band(args.trials, 9 / 16)
    _, hi = binomial_band(args.trials, 7 / 16)
    print(f"99% band: yes side needs >= {lo}, no side needs <= {hi} accepts of {args.trials}")
    for t in (0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5):
        w = witness(t)
        val = exact_value(*split_by_wire(w, 1))
        summary = run_trials(v, w, cfg, args.trials, jobs=args.jobs)
        print(f"mass={t:.2f} value={val:.4f} accepts={summary.accepts:>4} rate={summary.rate:.3f}")


if __name__ == "__main__":
    main()
