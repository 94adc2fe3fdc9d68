"""Set-constraint satisfaction: frustration, local matrices and compilation to a verifier.

Variables are numbered ``1..n`` and a global assignment is an n-bit string
with variable 1 leftmost. A constraint on support ``(i_1, ..., i_k)`` reads
the local k-bit string ``s[i_1] s[i_2] ... s[i_k]``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Optional, Sequence

import numpy as np

from .circuits import (ControlledBlock, Gate, ReversibleCircuit, WireMap, cswap_gates, cx,
                       int_to_bits, bits_to_int, literal_and_gates, x)
from .errors import CapExceeded, ParseError
from .states import SubsetSpec
from .verifier import Layout, StoqVerifier

EXHAUSTIVE_MAX_N = 4


# -- instances ------------------------------------------------------------------

@dataclass(frozen=True)
class SetConstraint:
    support: tuple[int, ...]
    groups: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(i) for i in self.support))
        object.__setattr__(self, "groups", tuple(frozenset(g) for g in self.groups))
        k = len(self.support)
        if k < 1 or len(set(self.support)) != k or min(self.support) < 1:
            raise ValueError(f"support must be distinct 1-based variable indices: {self.support}")
        seen: set = set()
        for g in self.groups:
            if not g:
                raise ValueError("groups must be non-empty")
            for s in g:
                if len(s) != k or set(s) - {"0", "1"}:
                    raise ValueError(f"group string {s!r} is not a {k}-bit string")
            if seen & g:
                raise ValueError(f"groups overlap on {sorted(seen & g)}")
            seen |= g

    @property
    def k(self) -> int:
        return len(self.support)

    @cached_property
    def good_table(self) -> np.ndarray:
        """Boolean table over local strings: True when the string lies in some group."""
        t = np.zeros(1 << self.k, dtype=bool)
        for g in self.groups:
            for s in g:
                t[bits_to_int(s)] = True
        return t

    @cached_property
    def group_table(self) -> np.ndarray:
        """Group index of each local string, or -1."""
        t = np.full(1 << self.k, -1, dtype=np.int64)
        for j, g in enumerate(self.groups):
            for s in g:
                t[bits_to_int(s)] = j
        return t

    def local_and_rest(self, keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Split global keys into the local string on the support and the remaining bits."""
        keys = np.asarray(keys, dtype=np.int64)
        loc = np.zeros_like(keys)
        for i in self.support:
            loc = (loc << 1) | ((keys >> (n - i)) & 1)
        rest_mask = (1 << n) - 1
        for i in self.support:
            rest_mask &= ~(1 << (n - i))
        return loc, keys & rest_mask


@dataclass(frozen=True)
class SetCSPInstance:
    n: int
    constraints: tuple[SetConstraint, ...]
    eps1: float = 0.0
    eps2: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.n < 1:
            raise ValueError("need at least one variable")
        if not self.constraints:
            raise ValueError("need at least one constraint")
        for c in self.constraints:
            if max(c.support) > self.n:
                raise ValueError(f"constraint support {c.support} exceeds n={self.n}")
        if self.eps1 > self.eps2:
            raise ValueError("need eps1 <= eps2")

    @property
    def m(self) -> int:
        return len(self.constraints)


def _keys(S, n: int) -> np.ndarray:
    if isinstance(S, SubsetSpec):
        keys = S.keys()
    elif isinstance(S, np.ndarray):
        keys = np.unique(S.astype(np.int64))
    else:
        S = list(S)
        if len(set(S)) != len(S):
            raise ValueError("subset strings must be distinct")
        for s in S:
            if len(s) != n:
                raise ValueError(f"{s!r} is not an {n}-bit string")
        keys = np.array(sorted(bits_to_int(s) for s in S), dtype=np.int64)
    if keys.size == 0:
        raise ValueError("frustration of an empty subset is undefined")
    return keys


# -- frustration ------------------------------------------------------------------

def good_bad_strings(c: SetConstraint, S, n: int) -> tuple[list[str], list[str]]:
    keys = _keys(S, n)
    loc, _ = c.local_and_rest(keys, n)
    good = c.good_table[loc]
    return ([int_to_bits(k, n) for k in keys[good].tolist()],
            [int_to_bits(k, n) for k in keys[~good].tolist()])


def _group_counts(c: SetConstraint, keys: np.ndarray, n: int):
    """Per group ``j``: the counts ``c_j(z)`` of members of ``Y_j`` sharing rest ``z``."""
    loc, rest = c.local_and_rest(keys, n)
    grp = c.group_table[loc]
    out = []
    for j, g in enumerate(c.groups):
        sel = grp == j
        _, counts = np.unique(rest[sel], return_counts=True)
        out.append((len(g), counts))
    return grp, out


def longing_mass(c: SetConstraint, S, n: int) -> float:
    """``sum_j sum_z c_j(z) (1 - c_j(z)/|Y_j|) / |S|``."""
    keys = _keys(S, n)
    _, per = _group_counts(c, keys, n)
    tot = sum(float(np.sum(cnt * (1.0 - cnt / size))) for size, cnt in per)
    return tot / keys.size


def frustration(c: SetConstraint, S, n: int) -> float:
    """Bad-string fraction plus longing mass, from direct counting."""
    keys = _keys(S, n)
    grp, per = _group_counts(c, keys, n)
    bad = int(np.sum(grp < 0))
    longing = sum(float(np.sum(cnt * (1.0 - cnt / size))) for size, cnt in per)
    return (bad + longing) / keys.size


def longing_strings(c: SetConstraint, S, n: int) -> list[str]:
    """Good strings whose group is not fully present with the same remaining bits.

    Experimental combinatorial reading; its count is not the longing mass.
    """
    keys = _keys(S, n)
    loc, rest = c.local_and_rest(keys, n)
    grp = c.group_table[loc]
    out = []
    for j, g in enumerate(c.groups):
        sel = grp == j
        rs, counts = np.unique(rest[sel], return_counts=True)
        short = set(rs[counts < len(g)].tolist())
        out.extend(k for k, r in zip(keys[sel].tolist(), rest[sel].tolist()) if r in short)
    return [int_to_bits(k, n) for k in sorted(out)]


def total_frustration(inst: SetCSPInstance, S) -> float:
    keys = _keys(S, inst.n)
    return float(np.mean([frustration(c, keys, inst.n) for c in inst.constraints]))


def local_matrix(c: SetConstraint) -> np.ndarray:
    """``sum_j sum_{x,y in Y_j} |x><y| / |Y_j|`` on the k support bits."""
    dim = 1 << c.k
    mat = np.zeros((dim, dim))
    for g in c.groups:
        idx = np.array([bits_to_int(s) for s in g])
        mat[np.ix_(idx, idx)] = 1.0 / len(g)
    return mat


def embedded_local_matrix(c: SetConstraint, n: int) -> np.ndarray:
    """Dense ``M_i`` acting on the support, tensored with identity elsewhere."""
    if n > 12:
        raise CapExceeded("dense embedding limited to n <= 12")
    allk = np.arange(1 << n, dtype=np.int64)
    loc, rest = c.local_and_rest(allk, n)
    return local_matrix(c)[np.ix_(loc, loc)] * (rest[:, None] == rest[None, :])


def frustration_matrix(c: SetConstraint, S, n: int) -> float:
    """``1 - <S| M (x) I |S>`` computed with the dense embedded matrix."""
    keys = _keys(S, n)
    vec = np.zeros(1 << n)
    vec[keys] = 1.0 / np.sqrt(keys.size)
    return float(1.0 - vec @ embedded_local_matrix(c, n) @ vec)


# -- minimisation ---------------------------------------------------------------------

@dataclass
class MinResult:
    value: float
    subset: list[str]
    heuristic: bool


def _all_masks_frustration(inst: SetCSPInstance) -> np.ndarray:
    """Total frustration of every non-empty subset, indexed by bitmask minus one."""
    n = inst.n
    N = 1 << n
    masks = np.arange(1, 1 << N, dtype=np.uint64)
    size = np.bitwise_count(masks).astype(np.float64)
    allk = np.arange(N, dtype=np.int64)
    total = np.zeros(masks.size)
    for c in inst.constraints:
        loc, rest = c.local_and_rest(allk, n)
        grp = c.group_table[loc]
        bad_mask = np.uint64(sum(1 << int(s) for s in allk[grp < 0]))
        val = np.bitwise_count(masks & bad_mask).astype(np.float64)
        for j, g in enumerate(c.groups):
            for z in np.unique(rest[grp == j]).tolist():
                gm = np.uint64(sum(1 << int(s) for s in allk[(grp == j) & (rest == z)]))
                cnt = np.bitwise_count(masks & gm).astype(np.float64)
                val += cnt * (1.0 - cnt / len(g))
        total += val / size
    return total / inst.m


def _local_search(inst: SetCSPInstance, seed: int, restarts: int) -> tuple[float, np.ndarray]:
    N = 1 << inst.n
    rng = np.random.default_rng(seed)
    allk = np.arange(N, dtype=np.int64)

    def score(member: np.ndarray) -> float:
        return total_frustration(inst, allk[member]) if member.any() else np.inf

    starts = []
    good = easy_witness(inst).contains(allk)
    if good.any():
        starts.append(good)
    starts.append(np.ones(N, dtype=bool))
    for s in rng.permutation(N)[:min(N, 16)]:
        e = np.zeros(N, dtype=bool)
        e[s] = True
        starts.append(e)
    for _ in range(restarts):
        starts.append(rng.random(N) < 0.5)
    best_val, best = np.inf, None
    for cur in starts:
        cur = cur.copy()
        if not cur.any():
            continue
        val = score(cur)
        while True:
            trial_best, trial_idx = val, -1
            for i in range(N):
                cur[i] = ~cur[i]
                t = score(cur)
                cur[i] = ~cur[i]
                if t < trial_best - 1e-12:
                    trial_best, trial_idx = t, i
            if trial_idx < 0:
                break
            cur[trial_idx] = ~cur[trial_idx]
            val = trial_best
        if val < best_val - 1e-12 or (abs(val - best_val) <= 1e-12 and best is not None
                                       and tuple(allk[cur]) < tuple(allk[best])):
            best_val, best = val, cur.copy()
    return float(best_val), allk[best]


def min_frustration(inst: SetCSPInstance, heuristic: bool = False, cap: int = EXHAUSTIVE_MAX_N,
                    seed: int = 0, restarts: int = 8) -> MinResult:
    """Exhaustive minimum over all non-empty subsets when ``n <= cap``.

    With ``heuristic=True`` a seeded greedy local search is used instead
    (at any ``n``); otherwise exceeding the cap raises ``CapExceeded``.
    """
    if heuristic:
        val, keys = _local_search(inst, seed, restarts)
        return MinResult(val, [int_to_bits(k, inst.n) for k in keys.tolist()], True)
    if inst.n > cap:
        raise CapExceeded(f"exhaustive search limited to n <= {cap}; pass heuristic=True")
    vals = _all_masks_frustration(inst)
    i = int(np.argmin(vals))
    mask = i + 1
    keys = [s for s in range(1 << inst.n) if (mask >> s) & 1]
    return MinResult(float(vals[i]), [int_to_bits(k, inst.n) for k in keys], False)


def easy_witness(inst: SetCSPInstance) -> SubsetSpec:
    """Membership test for the strings that are good for every constraint."""
    n = inst.n
    cons = inst.constraints

    def member(keys: np.ndarray) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64)
        ok = np.ones(keys.shape, dtype=bool)
        for c in cons:
            loc, _ = c.local_and_rest(keys, n)
            ok &= c.good_table[loc]
        return ok
    return SubsetSpec(n, predicate=member)


# -- measurement gadgets ------------------------------------------------------------

@dataclass(frozen=True)
class Gadget:
    """Circuit on ``k`` input wires followed by its own zero and plus ancillas."""

    circuit: ReversibleCircuit
    k: int
    n_zero: int
    n_plus: int
    out: int

    @property
    def layout(self) -> Layout:
        return Layout(self.k, self.n_zero, self.n_plus)

    def as_verifier(self) -> StoqVerifier:
        return StoqVerifier(self.circuit, self.layout, self.out)


def _zero_test_control(wires: Sequence[int], flag: Optional[int],
                       scratch: Sequence[int]) -> tuple[list[Gate], int, list[Gate]]:
    """Gates that expose ``[all wires are 0]`` on a control wire, and their undo."""
    if len(wires) == 1:
        return [x(wires[0])], wires[0], [x(wires[0])]
    gates = literal_and_gates([(w, 0) for w in wires], flag, scratch)
    return gates, flag, []


def z_to_x_gadget(k: int) -> Gadget:
    """Turns the projector onto ``0^k`` into an X expectation on the output wire.

    A zero flag is computed (a Toffoli ladder with X conjugation), then the
    ``|+>`` ancilla is swapped onto the output wire when the flag is set.
    Zero ancillas: 1 for k=1, 2 for k=2, k for k>=3. One ``|+>`` ancilla.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n_zero = 1 if k == 1 else 2 + max(k - 2, 0)
    width = k + n_zero + 1
    out = k + 1
    plus = width
    flag = k + 2 if k >= 2 else None
    scratch = list(range(k + 3, k + 3 + max(k - 2, 0)))
    pre, ctrl, post = _zero_test_control(list(range(1, k + 1)), flag, scratch)
    gates = pre + cswap_gates(ctrl, plus, out) + post
    return Gadget(ReversibleCircuit(width, gates), k, n_zero, 1, out)


def x_project_gadget(k: int) -> Gadget:
    """Turns ``X (x) |0><0|^(k-1)`` into an X expectation on the output wire.

    When wires 2..k are all zero, wire 1 is swapped onto a fresh output wire.
    Zero ancillas: 0 for k=1 (output is wire 1), 1 for k=2, 2 for k=3,
    k-1 for k>=4.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return Gadget(ReversibleCircuit(1, []), 1, 0, 0, 1)
    rest = list(range(2, k + 1))
    n_zero = 1 if k == 2 else 2 + max(k - 3, 0)
    width = k + n_zero
    out = k + 1
    flag = k + 2 if k >= 3 else None
    scratch = list(range(k + 3, k + 3 + max(k - 3, 0)))
    pre, ctrl, post = _zero_test_control(rest, flag, scratch)
    gates = pre + cswap_gates(ctrl, 1, out) + post
    return Gadget(ReversibleCircuit(width, gates), k, n_zero, 0, out)


# -- compilation ------------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    constraint: int
    group: int
    x: str
    y: str
    weight: Fraction


@dataclass
class CompiledSetCSP:
    """Verifier whose acceptance on ``|S>`` is ``c0 + c1 * (1 - unsat(S)/2)``."""

    verifier: StoqVerifier
    c0: Fraction
    c1: Fraction
    branches: list
    counts: list
    selection_bits: int
    budget: dict = field(default_factory=dict)

    def corrected(self, raw: float) -> float:
        return (raw - float(self.c0)) / float(self.c1)


def _branches(inst: SetCSPInstance) -> list[Branch]:
    out = []
    for i, c in enumerate(inst.constraints):
        for j, g in enumerate(c.groups):
            w = Fraction(1, inst.m * len(g))
            ys = sorted(g)
            for a in ys:
                out.append(Branch(i, j, a, a, w))
            for p in range(len(ys)):
                for q in range(p + 1, len(ys)):
                    out.append(Branch(i, j, ys[p], ys[q], w))
    return out


def _branch_body(c: SetConstraint, br: Branch, out: int, pool: list[int],
                 plus: Optional[int]) -> list:
    """Elements on the global register measuring one branch observable onto ``out``."""
    sup = list(c.support)
    k = c.k
    if br.x == br.y:
        rot = [x(sup[t]) for t in range(k) if br.x[t] == "1"]
        g = z_to_x_gadget(k)
        inputs = sup
    else:
        rot = [x(sup[t]) for t in range(k) if br.y[t] == "1"]
        diff = [t for t in range(k) if br.x[t] != br.y[t]]
        p = diff[0]
        rot += [cx(sup[p], sup[t]) for t in diff[1:]]
        g = x_project_gadget(k)
        inputs = [sup[p]] + [sup[t] for t in range(k) if t != p]
    zero = pool[:g.n_zero]
    targets = inputs + zero + ([plus] if g.n_plus else [])
    at = WireMap(tuple(targets))
    mapped = [Gate(el.kind, tuple(at(w) for w in el.wires)) for el in g.circuit.elements]
    g_out = at(g.out)
    if g_out != out:
        mapped += [cx(g_out, out), cx(out, g_out), cx(g_out, out)]
    return rot + mapped


def _power_blocks(counts: list[int]) -> list[tuple[int, int, int]]:
    """Aligned ``(branch, offset, log2 size)`` blocks, largest first."""
    blocks = [(b, e) for b, n in enumerate(counts) for e in range(n.bit_length()) if (n >> e) & 1]
    blocks.sort(key=lambda t: (-t[1], t[0]))
    off, out = 0, []
    for b, e in blocks:
        out.append((b, off, e))
        off += 1 << e
    return out


def compile_to_stoqma(inst: SetCSPInstance) -> CompiledSetCSP:
    """One Hadamard-basis verifier mixing all branch observables with dyadic weights.

    Each branch (constraint, group, x, y) carries weight ``1/(m |Y_j|)``.
    Weights are scaled to integers by their common denominator ``L``, laid
    out as aligned power-of-two blocks over ``q`` uniform selection bits, and
    the leftover selection values leave the output in ``|0>`` (acceptance 1/2).
    With ``kappa = L / 2^q`` the acceptance on ``|S>`` is
    ``(1 - kappa)/2 + kappa (1 - unsat(S)/2)``.
    """
    n = inst.n
    brs = _branches(inst)
    L = reduce(lambda a, b: a * b // math.gcd(a, b), (br.weight.denominator for br in brs), 1)
    counts = [int(br.weight * L) for br in brs]
    U = sum(counts)
    q = max(0, (U - 1).bit_length())
    kappa = Fraction(L, 1 << q)

    max_k = max(c.k for c in inst.constraints)
    pool_size = max([z_to_x_gadget(c.k).n_zero for c in inst.constraints]
                    + [x_project_gadget(c.k).n_zero for c in inst.constraints])
    need_plus = True
    blocks = _power_blocks(counts)
    max_lits = max([q - e for _, _, e in blocks] + [0])
    dec_scratch = max(max_lits - 2, 0)
    use_decode = max_lits >= 2

    out = n + 1
    pool = list(range(n + 2, n + 2 + pool_size))
    nxt = n + 2 + pool_size
    dec = nxt if use_decode else None
    nxt += 1 if use_decode else 0
    scratch = list(range(nxt, nxt + dec_scratch))
    nxt += dec_scratch
    n_zero = nxt - (n + 1)
    plus = nxt
    sel = list(range(plus + 1, plus + 1 + q))
    width = plus + q

    body_cache: dict = {}
    els: list = []
    for b, off, e in blocks:
        br = brs[b]
        if b not in body_cache:
            gates = _branch_body(inst.constraints[br.constraint], br, out, pool, plus)
            body_cache[b] = gates
        gates = body_cache[b]
        prefix = off >> e
        lits = [(sel[t], (prefix >> (q - e - 1 - t)) & 1) for t in range(q - e)]
        if not lits:
            els.extend(gates)
            continue
        # block acts on every wire except the selection register and decode wires
        inner_wires = sorted({w for g in gates for w in g.wires})
        local = {w: i + 1 for i, w in enumerate(inner_wires)}
        inner = ReversibleCircuit(len(inner_wires),
                                  [Gate(g.kind, tuple(local[w] for w in g.wires)) for g in gates])
        at = WireMap(tuple(inner_wires))
        if len(lits) == 1:
            w, bit = lits[0]
            flip = [x(w)] if bit == 0 else []
            els.extend(flip)
            els.append(ControlledBlock(w, inner, at))
            els.extend(flip)
        else:
            compute = literal_and_gates(lits, dec, scratch)
            els.extend(compute)
            els.append(ControlledBlock(dec, inner, at))
            els.extend(compute[::-1])
    circuit = ReversibleCircuit(width, els)
    lay = Layout(n, n_zero, 1 + q)
    v = StoqVerifier(circuit, lay, out=out)
    budget = {"gadget_zero": pool_size, "decode_zero": int(use_decode) + dec_scratch,
              "output_zero": 1, "gadget_plus": int(need_plus), "selection_plus": q,
              "max_k": max_k, "L": L, "U": U}
    c1 = kappa
    c0 = (1 - kappa) / 2
    return CompiledSetCSP(v, c0, c1, brs, counts, q, budget)


# -- file format ---------------------------------------------------------------------------

_CONSTRAINT_RE = re.compile(r"^constraint\s+J=([\d,\s]+?)\s+groups=\[(.*)\]$")


def parse_instance(text: str) -> SetCSPInstance:
    """``vars N``, then ``constraint J=i1,i2 groups=[{s,s},{s}]`` lines; optional ``eps e1 e2``."""
    n = None
    eps = (0.0, 1.0)
    cons = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        if n is None:
            tok = s.split()
            if len(tok) != 2 or tok[0] != "vars":
                raise ParseError("first line must be 'vars N'", lineno)
            try:
                n = int(tok[1])
            except ValueError:
                raise ParseError(f"bad variable count {tok[1]!r}", lineno) from None
            if n < 1:
                raise ParseError("need at least one variable", lineno)
            continue
        if s.startswith("eps"):
            tok = s.split()
            try:
                eps = (float(tok[1]), float(tok[2]))
                if len(tok) != 3:
                    raise ValueError
            except (ValueError, IndexError):
                raise ParseError("expected 'eps e1 e2'", lineno) from None
            continue
        mt = _CONSTRAINT_RE.match(s)
        if not mt:
            raise ParseError("expected 'constraint J=i1,i2,... groups=[{...},...]'", lineno)
        try:
            support = tuple(int(t) for t in mt.group(1).replace(" ", "").split(",") if t)
        except ValueError:
            raise ParseError("bad support list", lineno) from None
        body = mt.group(2).strip()
        groups = []
        if body:
            parts = re.findall(r"\{([^{}]*)\}", body)
            if re.sub(r"\{[^{}]*\}", "", body).replace(",", "").strip():
                raise ParseError("groups must look like {s,s},{s}", lineno)
            for p in parts:
                groups.append(frozenset(t.strip() for t in p.split(",") if t.strip()))
        try:
            c = SetConstraint(support, tuple(groups))
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
        if max(support) > n:
            raise ParseError(f"support {support} exceeds vars {n}", lineno)
        cons.append(c)
    if n is None:
        raise ParseError("empty instance: expected 'vars N'", None)
    if not cons:
        raise ParseError("instance has no constraints", None)
    return SetCSPInstance(n, tuple(cons), *eps)


def serialize_instance(inst: SetCSPInstance) -> str:
    lines = [f"vars {inst.n}"]
    if (inst.eps1, inst.eps2) != (0.0, 1.0):
        lines.append(f"eps {inst.eps1!r} {inst.eps2!r}")
    for c in inst.constraints:
        gs = ",".join("{" + ",".join(sorted(g)) + "}" for g in c.groups)
        lines.append(f"constraint J={','.join(map(str, c.support))} groups=[{gs}]")
    return "\n".join(lines) + "\n"


def random_instance(rng: np.random.Generator, n: int, m: int, k: int) -> SetCSPInstance:
    """Random constraints: each local string joins one of a few groups or is left bad."""
    cons = []
    for _ in range(m):
        kk = min(k, n)
        support = tuple(int(i) for i in rng.choice(np.arange(1, n + 1), size=kk, replace=False))
        n_groups = int(rng.integers(1, 3))
        label = rng.integers(-1, n_groups, size=1 << kk)
        groups = []
        for j in range(n_groups):
            g = frozenset(int_to_bits(s, kk) for s in np.nonzero(label == j)[0].tolist())
            if g:
                groups.append(g)
        cons.append(SetConstraint(support, tuple(groups)))
    return SetCSPInstance(n, tuple(cons))

