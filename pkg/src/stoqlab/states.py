"""Sparse non-negative amplitude vectors and sub-distributions.

A state is stored as a sorted int64 key array (big-endian bitstring encoding,
wire 1 leftmost) and a matching array of strictly positive amplitudes.
Sub-distributions reuse the same container with ``normalized=False``; their
amplitudes are the square roots of the masses, so ``|D>`` is the container.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union

import numpy as np

from .circuits import ReversibleCircuit, bits_to_int, int_to_bits
from .errors import ParseError, WidthMismatch

DROP_BELOW = 1e-15
NORM_TOL = 1e-12
ENUM_CAP = 1 << 22


def _merge(keys: np.ndarray, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort keys, summing amplitudes of repeated keys."""
    if keys.size == 0:
        return keys, amps
    order = np.argsort(keys, kind="stable")
    keys, amps = keys[order], amps[order]
    if keys.size > 1 and np.any(keys[1:] == keys[:-1]):
        uniq, inv = np.unique(keys, return_inverse=True)
        amps = np.bincount(inv, weights=amps, minlength=uniq.size)
        keys = uniq
    return keys, amps


@dataclass(frozen=True, eq=False)
class NonNegState:
    width: int
    keys: np.ndarray
    amps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        keys = np.asarray(self.keys, dtype=np.int64).ravel()
        amps = np.asarray(self.amps, dtype=np.float64).ravel()
        if keys.shape != amps.shape:
            raise ValueError("keys and amplitudes differ in length")
        if self.width < 0:
            raise ValueError("negative width")
        if keys.size and (keys.min() < 0 or keys.max() >= (1 << self.width)):
            raise WidthMismatch(f"basis index outside a width-{self.width} register")
        keys, amps = _merge(keys, amps)
        if np.any(amps < -DROP_BELOW):
            raise ValueError("amplitudes must be non-negative")
        keep = amps >= DROP_BELOW
        keys, amps = keys[keep], amps[keep]
        keys.setflags(write=False)
        amps.setflags(write=False)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "amps", amps)
        if self.normalized and abs(self.norm_sq - 1.0) > NORM_TOL:
            raise ValueError(f"state flagged normalized has squared norm {self.norm_sq!r}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_arrays(cls, width, keys, amps, normalized=True, normalize=False) -> "NonNegState":
        keys = np.asarray(keys, dtype=np.int64)
        amps = np.asarray(amps, dtype=np.float64)
        if normalize:
            nrm = float(np.sqrt(np.sum(amps ** 2)))
            if nrm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            amps = amps / nrm
            normalized = True
        return cls(width, keys, amps, normalized)

    @classmethod
    def from_dict(cls, width: int, entries: Mapping[Union[str, int], float],
                  normalized=True, normalize=False) -> "NonNegState":
        keys, amps = [], []
        for k, a in entries.items():
            if isinstance(k, str):
                if len(k) != width:
                    raise WidthMismatch(f"bitstring {k!r} has length {len(k)}, expected {width}")
                k = bits_to_int(k)
            keys.append(k)
            amps.append(a)
        return cls.from_arrays(width, keys, amps, normalized, normalize)

    @classmethod
    def basis(cls, bits: str) -> "NonNegState":
        return cls(len(bits), np.array([bits_to_int(bits)]), np.array([1.0]))

    @classmethod
    def from_dense(cls, vec, normalized=True) -> "NonNegState":
        vec = np.asarray(vec, dtype=np.float64)
        width = int(np.log2(vec.size))
        if 1 << width != vec.size:
            raise ValueError("dense vector length must be a power of two")
        idx = np.nonzero(vec)[0]
        return cls(width, idx, vec[idx], normalized)

    # -- views --------------------------------------------------------------

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.amps, self.amps))

    @property
    def masses(self) -> np.ndarray:
        return self.amps ** 2

    @property
    def total_mass(self) -> float:
        return self.norm_sq

    def __len__(self):
        return int(self.keys.size)

    def to_dense(self) -> np.ndarray:
        if self.width > 24:
            raise ValueError("dense export limited to width <= 24")
        out = np.zeros(1 << self.width)
        out[self.keys] = self.amps
        return out

    def to_dict(self) -> dict[str, float]:
        return {int_to_bits(k, self.width): float(a) for k, a in zip(self.keys.tolist(), self.amps)}

    def amplitude(self, bits: Union[str, int]) -> float:
        k = bits_to_int(bits) if isinstance(bits, str) else int(bits)
        i = np.searchsorted(self.keys, k)
        if i < self.keys.size and self.keys[i] == k:
            return float(self.amps[i])
        return 0.0

    def mass(self, bits: Union[str, int]) -> float:
        return self.amplitude(bits) ** 2

    def permuted(self, c: ReversibleCircuit) -> "NonNegState":
        if c.width != self.width:
            raise WidthMismatch(f"state width {self.width} vs circuit width {c.width}")
        return NonNegState(self.width, c.apply_array(self.keys), self.amps, self.normalized)

    def __repr__(self):
        items = list(self.to_dict().items())
        shown = ", ".join(f"{k}: {a:.6g}" for k, a in items[:6])
        more = ", ..." if len(items) > 6 else ""
        return f"NonNegState(width={self.width}, {{{shown}{more}}}, normalized={self.normalized})"


def sub_distribution(width: int, masses: Mapping[Union[str, int], float]) -> NonNegState:
    """Build ``|D> = sum_i sqrt(D(i)) |i>`` from a mass map (total mass <= 1)."""
    vals = list(masses.values())
    if any(m < 0 for m in vals):
        raise ValueError("masses must be non-negative")
    if sum(vals) > 1 + NORM_TOL:
        raise ValueError(f"total mass {sum(vals)} exceeds 1")
    return NonNegState.from_dict(width, {k: float(np.sqrt(m)) for k, m in masses.items()},
                                 normalized=False)


# -- subsets ----------------------------------------------------------------

@dataclass(frozen=True)
class SubsetSpec:
    """A string set given either explicitly or as a vectorised membership test.

    ``predicate`` maps an int64 key array to a boolean array.
    """

    width: int
    strings: Optional[tuple[str, ...]] = None
    predicate: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if (self.strings is None) == (self.predicate is None):
            raise ValueError("give exactly one of strings or predicate")
        if self.strings is not None:
            object.__setattr__(self, "strings", tuple(self.strings))
            if len(set(self.strings)) != len(self.strings):
                raise ValueError("subset strings must be distinct")
            for s in self.strings:
                if len(s) != self.width or set(s) - {"0", "1"}:
                    raise WidthMismatch(f"{s!r} is not a width-{self.width} bitstring")

    @classmethod
    def of(cls, strings: Iterable[str], width: Optional[int] = None) -> "SubsetSpec":
        strings = tuple(strings)
        if width is None:
            if not strings:
                raise ValueError("width needed for an empty subset")
            width = len(strings[0])
        return cls(width, strings=strings)

    def keys(self) -> np.ndarray:
        if self.strings is not None:
            return np.array(sorted(bits_to_int(s) for s in self.strings), dtype=np.int64)
        if self.width > 22:
            raise ValueError("predicate enumeration limited to width <= 22")
        allk = np.arange(1 << self.width, dtype=np.int64)
        return allk[np.asarray(self.predicate(allk), dtype=bool)]

    def contains(self, keys) -> np.ndarray:
        keys = np.atleast_1d(np.asarray(keys, dtype=np.int64))
        if self.predicate is not None:
            return np.asarray(self.predicate(keys), dtype=bool)
        return np.isin(keys, self.keys())

    def members(self) -> list[str]:
        return [int_to_bits(k, self.width) for k in self.keys().tolist()]


def subset_state(S: Union[SubsetSpec, Iterable[str]], width: Optional[int] = None) -> NonNegState:
    if not isinstance(S, SubsetSpec):
        S = SubsetSpec.of(S, width)
    keys = S.keys()
    if keys.size == 0:
        raise ValueError("subset state of an empty set")
    return NonNegState(S.width, keys, np.full(keys.size, 1.0 / np.sqrt(keys.size)))


# -- arithmetic -------------------------------------------------------------

def _check_widths(a: NonNegState, b: NonNegState):
    if a.width != b.width:
        raise WidthMismatch(f"widths differ: {a.width} vs {b.width}")


def inner(a: NonNegState, b: NonNegState) -> float:
    _check_widths(a, b)
    _, ia, ib = np.intersect1d(a.keys, b.keys, assume_unique=True, return_indices=True)
    return float(np.dot(a.amps[ia], b.amps[ib]))


def hellinger_sq(d0: NonNegState, d1: NonNegState) -> float:
    """Squared Hellinger distance ``1/2 || |D0> - |D1> ||^2`` of two sub-distributions."""
    val = 0.5 * (d0.norm_sq + d1.norm_sq - 2.0 * inner(d0, d1))
    return max(val, 0.0)


def split_by_wire(s: NonNegState, q: int) -> tuple[NonNegState, NonNegState]:
    """Split on the value of wire ``q``; the two halves live on the remaining wires."""
    n = s.width
    if not 1 <= q <= n:
        raise ValueError(f"wire {q} out of range 1..{n}")
    shift = n - q
    low = (1 << shift) - 1
    bit = (s.keys >> shift) & 1
    rest = ((s.keys >> (shift + 1)) << shift) | (s.keys & low)
    on = bit == 1
    d0 = NonNegState(n - 1, rest[~on], s.amps[~on], normalized=False)
    d1 = NonNegState(n - 1, rest[on], s.amps[on], normalized=False)
    return d0, d1


def random_state(width: int, rng: np.random.Generator, support: Optional[int] = None) -> NonNegState:
    """Random normalized non-negative state, optionally with a fixed support size."""
    dim = 1 << width
    if support is None:
        support = int(rng.integers(1, dim + 1))
    support = min(support, dim)
    keys = rng.choice(dim, size=support, replace=False)
    amps = rng.random(support) + 1e-3
    return NonNegState.from_arrays(width, keys, amps, normalize=True)


# -- witness file -----------------------------------------------------------

def parse_witness(text: str) -> NonNegState:
    """``width N`` then ``bitstring weight`` lines; weights are masses, normalized on load."""
    lines = [(i + 1, raw.split("#", 1)[0].strip()) for i, raw in enumerate(text.splitlines())]
    lines = [(i, s) for i, s in lines if s]
    if not lines:
        raise ParseError("empty witness file: expected 'width N'", None)
    lineno, head = lines[0]
    tok = head.split()
    if len(tok) != 2 or tok[0] != "width":
        raise ParseError("first line must be 'width N'", lineno)
    try:
        width = int(tok[1])
    except ValueError:
        raise ParseError(f"bad width {tok[1]!r}", lineno) from None
    if not 0 < width <= 62:
        raise ParseError("width must be in 1..62", lineno)
    masses: dict[int, float] = {}
    for lineno, s in lines[1:]:
        tok = s.split()
        if len(tok) != 2:
            raise ParseError("expected 'bitstring weight'", lineno)
        bits, w = tok
        if len(bits) != width or set(bits) - {"0", "1"}:
            raise ParseError(f"{bits!r} is not a width-{width} bitstring", lineno)
        try:
            weight = float(w)
        except ValueError:
            raise ParseError(f"bad weight {w!r}", lineno) from None
        if not weight > 0 or not np.isfinite(weight):
            raise ParseError("weights must be positive and finite", lineno)
        k = bits_to_int(bits)
        if k in masses:
            raise ParseError(f"duplicate bitstring {bits}", lineno)
        masses[k] = weight
    if not masses:
        raise ParseError("witness has no entries", lines[0][0])
    keys = np.fromiter(masses.keys(), dtype=np.int64)
    m = np.fromiter(masses.values(), dtype=np.float64)
    return NonNegState.from_arrays(width, keys, np.sqrt(m / m.sum()), normalize=True)


def serialize_witness(w: NonNegState) -> str:
    lines = [f"width {w.width}"]
    for k, m in zip(w.keys.tolist(), w.masses):
        lines.append(f"{int_to_bits(k, w.width)} {float(m)!r}")
    return "\n".join(lines) + "\n"
