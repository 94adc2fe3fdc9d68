"""Circuit constructions on top of verifiers.

* circuit distinguishability instances built from a verifier, and the
  controlled-pair verifier that decides them;
* AND-type repetition with one shared ``|+>`` control;
* the classical-witness transform into a computational-basis verifier;
* exact witness search for the zero-distance-gap case, and the decision
  procedure for verifiers with no random ancillas.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .circuits import (ReversibleCircuit, WireMap, bits_to_int, compose, controlled, embed,
                       identity, int_to_bits, literal_and_gates, x, _numbered,
                       parse_circuit_lines, serialize)
from .errors import CapExceeded, ParseError, PromiseViolation, WidthMismatch
from .states import NonNegState, inner, subset_state
from .verifier import (DEFAULT_SUPPORT_CAP, DENSE_MAX_NW, Basis, Layout, StoqVerifier,
                       accept_prob, input_state, layout_from_header, max_accept,
                       split_headers, verifier_matrix)


# -- distinguishability instances ----------------------------------------------

@dataclass(frozen=True)
class RCDInstance:
    """Two circuits on a shared register layout with distance thresholds.

    YES: some non-negative witness has distance <= alpha.
    NO: every non-negative witness has distance >= beta.
    """

    c0: ReversibleCircuit
    c1: ReversibleCircuit
    layout: Layout
    alpha: float = 0.0
    beta: float = 1.0

    def __post_init__(self):
        if self.c0.width != self.c1.width:
            raise WidthMismatch(f"circuit widths differ: {self.c0.width} vs {self.c1.width}")
        if self.layout.width != self.c0.width:
            raise WidthMismatch(f"layout covers {self.layout.width} wires, circuits have {self.c0.width}")
        if not 0.0 <= self.alpha < self.beta <= 2.0:
            raise ValueError(f"need 0 <= alpha < beta <= 2, got {self.alpha}, {self.beta}")


@dataclass(frozen=True)
class NPWitnessPair:
    s0: str
    r0: str
    s1: str
    r1: str

    def __str__(self):
        return f"{self.s0} {self.r0 or '-'} | {self.s1} {self.r1 or '-'}"


def rcd_from_verifier(v: StoqVerifier, a: Optional[float] = None,
                      b: Optional[float] = None) -> RCDInstance:
    """``C0 = V^-1 X_out V`` and ``C1 = I``; thresholds map acceptance ``p`` to distance ``2(1-p)``."""
    if v.basis is not Basis.HADAMARD:
        raise ValueError("needs a Hadamard-basis verifier")
    alpha = 0.0 if a is None else 2.0 * (1.0 - a)
    beta = 1.0 if b is None else 2.0 * (1.0 - b)
    return RCDInstance(v.reflection, identity(v.width), v.layout, alpha, beta)


def rcd_states(inst: RCDInstance, w: NonNegState,
               cap: int = DEFAULT_SUPPORT_CAP) -> tuple[NonNegState, NonNegState]:
    psi = input_state(inst.layout, w, cap)
    return psi.permuted(inst.c0), psi.permuted(inst.c1)


def rcd_distance(inst: RCDInstance, w: NonNegState, cap: int = DEFAULT_SUPPORT_CAP) -> float:
    """``1/2 || |R0> - |R1> ||^2``."""
    r0, r1 = rcd_states(inst, w, cap)
    return max(0.5 * (r0.norm_sq + r1.norm_sq) - inner(r0, r1), 0.0)


def rcd_verifier(inst: RCDInstance) -> StoqVerifier:
    """Controlled-C0, X, controlled-C1 off a fresh ``|+>`` wire appended last (the output)."""
    n = inst.c0.width
    ctrl = n + 1
    at = WireMap.identity(n)
    els = [controlled(inst.c0, at, ctrl), x(ctrl), controlled(inst.c1, at, ctrl)]
    lay = inst.layout
    return StoqVerifier(ReversibleCircuit(n + 1, els), Layout(lay.n_w, lay.n_0, lay.n_plus + 1),
                        out=ctrl)


def rcd_extremal_distance(inst: RCDInstance, **kw) -> tuple[float, NonNegState]:
    """Smallest distance over non-negative witnesses, via ``d* = 2(1 - p*)``."""
    p, w = max_accept(rcd_verifier(inst), **kw)
    return max(2.0 * (1.0 - p), 0.0), w


def rcd_decide(inst: RCDInstance, **kw) -> tuple[str, float, NonNegState]:
    d, w = rcd_extremal_distance(inst, **kw)
    if d <= inst.alpha + 1e-12:
        return "YES", d, w
    if d >= inst.beta - 1e-12:
        return "NO", d, w
    raise PromiseViolation(f"extremal distance {d:.12f} lies strictly between "
                           f"alpha={inst.alpha} and beta={inst.beta}")


def parse_rcd(text: str, alpha: float = 0.0, beta: float = 1.0) -> RCDInstance:
    """Two circuit blocks separated by a ``---`` line, plus a ``layout`` header."""
    lines = _numbered(text)
    seps = [i for i, (_, s) in enumerate(lines) if s == "---"]
    if len(seps) != 1:
        ln = lines[seps[1]][0] if len(seps) > 1 else None
        raise ParseError("expected exactly one '---' separator", ln)
    first, second = lines[:seps[0]], lines[seps[0] + 1:]
    first, h0 = split_headers(first)
    second, h1 = split_headers(second)
    heads = {**h0, **h1}
    if set(h0) & set(h1):
        raise ParseError("header given twice", None)
    c0 = parse_circuit_lines(first)
    c1 = parse_circuit_lines(second)
    if c0.width != c1.width:
        raise ParseError(f"circuit widths differ: {c0.width} vs {c1.width}",
                         second[0][0] if second else None)
    return RCDInstance(c0, c1, layout_from_header(heads, c0.width), alpha, beta)


def serialize_rcd(inst: RCDInstance) -> str:
    lay = inst.layout
    return (f"layout {lay.n_w} {lay.n_0} {lay.n_plus}\n" + serialize(inst.c0)
            + "---\n" + serialize(inst.c1))


# -- AND-type repetition ------------------------------------------------------------

def and_repetition(v: StoqVerifier, r: int, max_width: int = 62) -> StoqVerifier:
    """``r`` controlled copies of ``V^-1 X_out V`` sharing one ``|+>`` control.

    Wire order: the r witness blocks, the r zero blocks, the r plus blocks,
    then the control (which is the output).
    """
    if v.basis is not Basis.HADAMARD:
        raise ValueError("needs a Hadamard-basis verifier")
    if r < 1:
        raise ValueError("r must be >= 1")
    lay = v.layout
    width = r * lay.width + 1
    if width > max_width:
        raise CapExceeded(f"repetition width {width} exceeds {max_width}")
    ctrl = width
    blocks = []
    for c in range(r):
        w = [c * lay.n_w + i for i in range(1, lay.n_w + 1)]
        z = [r * lay.n_w + c * lay.n_0 + i for i in range(1, lay.n_0 + 1)]
        p = [r * (lay.n_w + lay.n_0) + c * lay.n_plus + i for i in range(1, lay.n_plus + 1)]
        blocks.append(controlled(v.reflection, WireMap(tuple(w + z + p)), ctrl))
    new_lay = Layout(r * lay.n_w, r * lay.n_0, r * lay.n_plus + 1)
    return StoqVerifier(ReversibleCircuit(width, blocks), new_lay, out=ctrl)


@dataclass
class AmplifyReport:
    r: int
    lam: float
    lam_rep: float
    lam_pow: float
    rel_error: float
    accept: float
    accept_rep: float


def _rel_err(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 1e-12 else abs(a - b)


def soundness_amplify_check(v: StoqVerifier, r: int) -> AmplifyReport:
    """Dense top eigenvalues of the original and repeated verifier matrices."""
    if r * v.layout.n_w > DENSE_MAX_NW:
        raise CapExceeded(f"repeated witness register {r * v.layout.n_w} > {DENSE_MAX_NW}")
    lam = float(np.linalg.eigvalsh(verifier_matrix(v).toarray())[-1])
    lam_rep = float(np.linalg.eigvalsh(verifier_matrix(and_repetition(v, r)).toarray())[-1])
    lam_pow = lam ** r
    return AmplifyReport(r, lam, lam_rep, lam_pow, _rel_err(lam_rep, lam_pow),
                         0.5 + 0.5 * max(lam, 0.0), 0.5 + 0.5 * max(lam_rep, 0.0))


def min_repetitions(s: float, n: int) -> int:
    """Repetition count ``ceil((n+1) / log2(1/(2s-1)))`` for soundness ``s`` in (1/2, 1)."""
    b = 2.0 * s - 1.0
    if not 0.0 < b < 1.0:
        raise ValueError("soundness must lie strictly between 1/2 and 1")
    return math.ceil((n + 1) / math.log2(1.0 / b))


def smallest_repetitions(s: float, n: int) -> int:
    """Smallest ``r`` with ``(2s-1)^r / 2 <= 2^-n``, found by direct search."""
    b = 2.0 * s - 1.0
    if not 0.0 < b < 1.0:
        raise ValueError("soundness must lie strictly between 1/2 and 1")
    r = 1
    while b ** r / 2.0 > 2.0 ** -n:
        r += 1
    return r


# -- classical witness to computational-basis verifier --------------------------------

@dataclass
class MATransform:
    verifier: StoqVerifier
    predicate: Callable[[np.ndarray], np.ndarray]
    witness: str
    scratch: int


def cstoqma_to_ma(v: StoqVerifier, s: str) -> MATransform:
    """Run ``V``, ``X_out``, ``V^-1``, then test "witness block is s and zero block is 0".

    The test is computed by a literal AND into a fresh ``|0>`` output wire
    (followed by an X so that a passing test reads 0). Fresh wires sit right
    after the original zero block.
    """
    lay = v.layout
    if len(s) != lay.n_w or set(s) - {"0", "1"}:
        raise WidthMismatch(f"classical witness must be a {lay.n_w}-bit string")
    n_lit = lay.n_w + lay.n_0
    n_scratch = max(n_lit - 2, 0)
    extra = 1 + n_scratch
    width = lay.width + extra
    old = list(range(1, lay.n_w + lay.n_0 + 1)) + \
        list(range(lay.n_w + lay.n_0 + extra + 1, width + 1))
    body = embed(v.reflection, WireMap(tuple(old)), width)
    out = lay.n_w + lay.n_0 + 1
    scratch = list(range(out + 1, out + 1 + n_scratch))
    literals = [(i + 1, int(ch)) for i, ch in enumerate(s)] + \
        [(lay.n_w + j, 0) for j in range(1, lay.n_0 + 1)]
    tail = ReversibleCircuit(width, literal_and_gates(literals, out, scratch) + [x(out)])
    ma = StoqVerifier(compose(body, tail), Layout(lay.n_w, lay.n_0 + extra, lay.n_plus),
                      out=out, basis=Basis.COMPUTATIONAL,
                      meta={"source_width": lay.width, "scratch": n_scratch})
    target = bits_to_int(s)
    n_0, anc = lay.n_0, lay.anc

    def predicate(outputs: np.ndarray) -> np.ndarray:
        """On outputs of ``V^-1 X V`` (original register)."""
        outputs = np.asarray(outputs, dtype=np.int64)
        return ((outputs >> anc) == target) & (((outputs >> lay.n_plus) & ((1 << n_0) - 1)) == 0)

    return MATransform(ma, predicate, s, n_scratch)


def ma_accept_by_predicate(v: StoqVerifier, s: str) -> float:
    """Fraction of random strings ``r`` for which ``V^-1 X V (s, 0, r)`` passes the test."""
    t = cstoqma_to_ma(v, s)
    lay = v.layout
    r = np.arange(1 << lay.n_plus, dtype=np.int64)
    img = v.reflection.apply_array((bits_to_int(s) << lay.anc) | r)
    return float(t.predicate(img).mean())


# -- exact distinguishability -----------------------------------------------------

def _images(c: ReversibleCircuit, lay: Layout, support: Sequence[str]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s = np.array([bits_to_int(t) for t in support], dtype=np.int64)
    n_r = 1 << lay.n_plus
    si = np.repeat(s, n_r)
    ri = np.tile(np.arange(n_r, dtype=np.int64), s.size)
    return si, ri, c.apply_array((si << lay.anc) | ri)


def exact_rcd_witness_search(inst: RCDInstance, support: Optional[Sequence[str]] = None,
                             cap: int = DEFAULT_SUPPORT_CAP) -> Optional[NPWitnessPair]:
    """Find ``(s0, r0), (s1, r1)`` with ``C0(s0, 0, r0) == C1(s1, 0, r1)``.

    C1 images are indexed by sorting, then C0 images are probed in
    lexicographic ``(s0, r0)`` order; the first hit is the smallest pair.
    Returns None when no pair exists.
    """
    lay = inst.layout
    if support is None:
        support = [int_to_bits(i, lay.n_w) for i in range(1 << lay.n_w)]
    support = sorted(set(support))
    for t in support:
        if len(t) != lay.n_w:
            raise WidthMismatch(f"support string {t!r} is not {lay.n_w} bits")
    if not support:
        return None
    if len(support) * (1 << lay.n_plus) > cap:
        raise CapExceeded(f"enumeration of {len(support)} * 2^{lay.n_plus} exceeds cap {cap}")
    s1, r1, img1 = _images(inst.c1, lay, support)
    order = np.argsort(img1, kind="stable")
    sorted_img = img1[order]
    s0, r0, img0 = _images(inst.c0, lay, support)
    pos = np.clip(np.searchsorted(sorted_img, img0), 0, sorted_img.size - 1)
    hit = np.nonzero(sorted_img[pos] == img0)[0]
    if hit.size == 0:
        return None
    i = int(hit[0])
    j = int(order[pos[i]])
    return NPWitnessPair(int_to_bits(int(s0[i]), lay.n_w), int_to_bits(int(r0[i]), lay.n_plus),
                         int_to_bits(int(s1[j]), lay.n_w), int_to_bits(int(r1[j]), lay.n_plus))


def verify_np_witness(inst: RCDInstance, pair: NPWitnessPair) -> bool:
    lay = inst.layout
    for s, r in ((pair.s0, pair.r0), (pair.s1, pair.r1)):
        if len(s) != lay.n_w or len(r) != lay.n_plus:
            raise WidthMismatch("witness pair lengths do not match the layout")

    def enc(s, r):
        return (bits_to_int(s) << lay.anc) | bits_to_int(r)
    return inst.c0.apply_int(enc(pair.s0, pair.r0)) == inst.c1.apply_int(enc(pair.s1, pair.r1))


class Decision(enum.Enum):
    EQUIVALENT = "EQUIVALENT"
    DISTINGUISHABLE = "DISTINGUISHABLE"


@dataclass
class NoRandomReport:
    verdict: Decision
    pair: Optional[tuple[str, str]] = None
    witness: Optional[NonNegState] = None
    accept: float = 0.5
    meta: dict = field(default_factory=dict)


def no_random_bits_decision(c0: ReversibleCircuit, c1: ReversibleCircuit, layout: Layout,
                            cap: int = DEFAULT_SUPPORT_CAP) -> NoRandomReport:
    """Look for ``s_i, s_j`` with ``C0(s_i, 0) == C1(s_j, 0)`` when there are no ``|+>`` ancillas.

    Preference: a diagonal hit (classical witness), then a pair matched in
    both directions, then any pair. The reported acceptance is that of the
    controlled-pair verifier on the returned witness, computed exactly.
    """
    if layout.n_plus != 0:
        raise ValueError("no_random_bits_decision needs n_plus = 0")
    inst = RCDInstance(c0, c1, layout)
    if (1 << layout.n_w) > cap:
        raise CapExceeded(f"enumeration of 2^{layout.n_w} witnesses exceeds cap {cap}")
    s = np.arange(1 << layout.n_w, dtype=np.int64)
    img0 = c0.apply_array(s << layout.n_0)
    img1 = c1.apply_array(s << layout.n_0)
    pos_of = {int(k): i for i, k in enumerate(img1.tolist())}
    match = {i: pos_of[k] for i, k in enumerate(img0.tolist()) if k in pos_of}
    if not match:
        return NoRandomReport(Decision.EQUIVALENT)
    diag = [i for i, j in match.items() if i == j]
    sym = [(i, j) for i, j in match.items() if match.get(j) == i and i < j]
    if diag:
        i = j = diag[0]
    elif sym:
        i, j = sym[0]
    else:
        i, j = min(match.items())
    si, sj = int_to_bits(i, layout.n_w), int_to_bits(j, layout.n_w)
    w = subset_state(sorted({si, sj}), layout.n_w)
    acc = accept_prob(rcd_verifier(inst), w, cap)
    return NoRandomReport(Decision.DISTINGUISHABLE, (si, sj), w, acc,
                          {"kind": "diagonal" if diag else "symmetric" if sym else "one-sided"})
