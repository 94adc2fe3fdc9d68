"""Dual-access distribution tester for a Hadamard-basis output measurement.

Given sample access and point-mass query access to a distribution ``D`` on
``n`` bits, decide whether ``1/2 || |D0> + |D1> ||^2`` (the acceptance
probability of an X-basis measurement on the output wire) is at least ``a``
or at most ``b``, using ``O(1/(a-b)^2)`` oracle calls.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import binom

from .circuits import bits_to_int, int_to_bits
from .errors import StoqlabError
from .states import NonNegState, inner
from .verifier import (EasyWitness, StoqVerifier, easy_query, query_output_masses,
                       sample_outputs)


class QueryUnavailable(StoqlabError):
    pass


class DualOracle:
    """Sample and query access to a distribution on ``width`` bits.

    ``sampler(size, rng)`` returns int keys; ``querier(keys)`` returns masses.
    Every drawn sample counts as one SAMPLE call. A query for the pair of
    coordinates that differ only on the output wire counts as one QUERY call.
    """

    def __init__(self, width: int, sampler: Callable[[int, np.random.Generator], np.ndarray],
                 querier: Optional[Callable[[np.ndarray], np.ndarray]], seed=None):
        self.width = width
        self._sampler = sampler
        self._querier = querier
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.sample_calls = 0
        self.query_calls = 0

    def sample_keys(self, size: int) -> np.ndarray:
        self.sample_calls += size
        return np.asarray(self._sampler(size, self.rng), dtype=np.int64)

    def sample(self) -> str:
        return int_to_bits(int(self.sample_keys(1)[0]), self.width)

    def query_keys(self, keys) -> np.ndarray:
        if self._querier is None:
            raise QueryUnavailable("no easy-witness query function was supplied")
        keys = np.asarray(keys, dtype=np.int64)
        self.query_calls += int(keys.size)
        return np.asarray(self._querier(keys), dtype=np.float64)

    def query(self, j: str) -> float:
        return float(self.query_keys([bits_to_int(j)])[0])

    def query_split(self, keys, out: int) -> tuple[np.ndarray, np.ndarray]:
        """Masses with the output bit forced to 0 and to 1, one call per key."""
        if self._querier is None:
            raise QueryUnavailable("no easy-witness query function was supplied")
        keys = np.asarray(keys, dtype=np.int64)
        bit = 1 << (self.width - out)
        self.query_calls += int(keys.size)
        return (np.asarray(self._querier(keys & ~bit), dtype=np.float64),
                np.asarray(self._querier(keys | bit), dtype=np.float64))


def dual_oracle_from_verifier(v: StoqVerifier, w: NonNegState,
                              easy_w: Optional[EasyWitness] = None, seed=None,
                              allow_query: bool = True) -> DualOracle:
    """Samples run the circuit on ``w``; queries pull back through the inverse circuit.

    ``easy_w`` defaults to exact lookup in ``w`` itself.
    """
    def sampler(size, rng):
        return sample_outputs(v, w, size, rng)

    src = w if easy_w is None else easy_w

    def querier(keys):
        return query_output_masses(v, src, keys)
    return DualOracle(v.width, sampler, querier if allow_query else None, seed)


def dual_oracle_from_distribution(d: NonNegState, seed=None) -> DualOracle:
    """Oracle over an explicit distribution (masses are the squared amplitudes)."""
    p = d.masses / d.masses.sum()
    keys = d.keys
    look = easy_query(d, d.width)

    def sampler(size, rng):
        return keys[rng.choice(keys.size, size=size, p=p)]
    return DualOracle(d.width, sampler, look, seed)


@dataclass(frozen=True)
class TesterConfig:
    a: float
    b: float
    c_m: float = 8.0
    c_m_prime: float = 8.0
    seed: int = 0

    def __post_init__(self):
        if not 0.5 <= self.b < self.a <= 1.0:
            raise ValueError(f"need 1/2 <= b < a <= 1, got a={self.a}, b={self.b}")
        if self.c_m <= 0 or self.c_m_prime <= 0:
            raise ValueError("sample-size constants must be positive")

    @property
    def eps(self) -> float:
        return (self.a - self.b) / 8.0

    @property
    def m(self) -> int:
        return math.ceil(self.c_m / self.eps ** 2)

    @property
    def m_prime(self) -> int:
        return math.ceil(self.c_m_prime / self.eps ** 2)

    @property
    def threshold(self) -> float:
        return 0.5 * (self.a + self.b)


@dataclass(frozen=True)
class TesterReport:
    verdict: str
    z_hat: float
    x_hat: float
    product: float
    heavy_bit: int
    kept: int
    sample_calls: int
    query_calls: int
    m: int
    m_prime: int

    @property
    def accepted(self) -> bool:
        return self.verdict == "ACCEPT"


def run_tester(o: DualOracle, out_wire: int, cfg: TesterConfig) -> TesterReport:
    """One run of the tester.

    1. ``m'`` samples give ``Z`` = mean output bit.
    2. ``h`` = 1 if ``Z >= 1/2`` else 0; the product uses ``Z`` or ``1 - Z``.
    3. ``2m`` samples are drawn and those with output bit ``h`` kept; ``m``
       slots are filled from them in order, cycling if fewer than ``m`` were
       kept (rare when ``Z`` is accurate).
    4. Each slot costs one pair query and contributes
       ``1/2 (1 + sqrt(D_{1-h}(s) / D_h(s)))^2``.
    """
    if not 1 <= out_wire <= o.width:
        raise ValueError(f"output wire {out_wire} out of range 1..{o.width}")
    m, mp = cfg.m, cfg.m_prime
    s0, q0 = o.sample_calls, o.query_calls
    shift = o.width - out_wire
    z_hat = float(((o.sample_keys(mp) >> shift) & 1).mean())
    h = 1 if z_hat >= 0.5 else 0
    side = z_hat if h == 1 else 1.0 - z_hat
    draws = o.sample_keys(2 * m)
    kept = draws[((draws >> shift) & 1) == h]
    if kept.size == 0:
        x_hat = 0.0
    else:
        slots = kept[np.arange(m) % kept.size]
        d0, d1 = o.query_split(slots, out_wire)
        heavy, light = (d1, d0) if h == 1 else (d0, d1)
        x_hat = float(np.mean(0.5 * (1.0 + np.sqrt(light / heavy)) ** 2))
    product = x_hat * side
    verdict = "ACCEPT" if product >= cfg.threshold else "REJECT"
    return TesterReport(verdict, z_hat, x_hat, product, h, int(kept.size),
                        o.sample_calls - s0, o.query_calls - q0, m, mp)


def ema_decide(v: StoqVerifier, w: NonNegState, a: float, b: float, seed: int = 0,
               easy_w: Optional[EasyWitness] = None, **cfg_kw) -> TesterReport:
    """One run of the tester against a verifier, a witness and its query function."""
    cfg = TesterConfig(a, b, seed=seed, **cfg_kw)
    oracle = dual_oracle_from_verifier(v, w, easy_w, seed=seed)
    return run_tester(oracle, v.out, cfg)


@dataclass
class TrialSummary:
    reports: list = field(default_factory=list)

    @property
    def accepts(self) -> int:
        return sum(r.accepted for r in self.reports)

    @property
    def rate(self) -> float:
        return self.accepts / len(self.reports) if self.reports else float("nan")


def trial_seed(seed: int, t: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, t]))


def _one_trial(args) -> TesterReport:
    v, w, easy_w, cfg, t = args
    oracle = dual_oracle_from_verifier(v, w, easy_w, seed=trial_seed(cfg.seed, t))
    return run_tester(oracle, v.out, cfg)


def run_trials(v: StoqVerifier, w: NonNegState, cfg: TesterConfig, trials: int,
               easy_w: Optional[EasyWitness] = None, jobs: int = 1) -> TrialSummary:
    """Independent trials seeded by ``(cfg.seed, t)``; results do not depend on ``jobs``."""
    work = [(v, w, easy_w, cfg, t) for t in range(trials)]
    if jobs <= 1:
        return TrialSummary([_one_trial(a) for a in work])
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return TrialSummary(list(ex.map(_one_trial, work, chunksize=max(1, trials // (4 * jobs)))))


def exact_value(d0: NonNegState, d1: NonNegState) -> float:
    """``1/2 || |D0> + |D1> ||^2`` for two sub-distributions on the same wires."""
    return 0.5 * (d0.norm_sq + d1.norm_sq) + inner(d0, d1)


def binomial_band(n: int, p: float, level: float = 0.99) -> tuple[int, int]:
    """Central interval of a Binomial(n, p) count holding at least ``level`` mass."""
    lo = int(binom.ppf((1 - level) / 2, n, p))
    hi = int(binom.isf((1 - level) / 2, n, p))
    return lo, hi
