"""StoqMA / MA verifier semantics on top of reversible circuits.

The register is ``witness | zero ancillas | plus ancillas`` in wire order.
For a Hadamard-basis output measurement the acceptance probability of a
non-negative witness ``w`` is ``1/2 + 1/2 <w|M|w>`` where ``M`` is the
compression of ``V^-1 X_out V`` onto ``|0...0>|+...+>`` in the ancillas.
"""
from __future__ import annotations

import enum
from fractions import Fraction
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from .circuits import (ReversibleCircuit, bits_to_int, compose, int_to_bits, inverse,
                       parse_circuit_lines, random_circuit, serialize, x, _numbered)
from .errors import CapExceeded, ConvergenceError, ParseError, WidthMismatch
from .states import NonNegState, SubsetSpec, inner, split_by_wire

DEFAULT_SUPPORT_CAP = 1 << 22
DENSE_MAX_NW = 12


class Basis(enum.Enum):
    HADAMARD = "hadamard"
    COMPUTATIONAL = "computational"


@dataclass(frozen=True)
class Layout:
    n_w: int
    n_0: int = 0
    n_plus: int = 0

    def __post_init__(self):
        if self.n_w < 1 or self.n_0 < 0 or self.n_plus < 0:
            raise ValueError(f"invalid layout {self}")

    @property
    def width(self) -> int:
        return self.n_w + self.n_0 + self.n_plus

    @property
    def anc(self) -> int:
        return self.n_0 + self.n_plus

    def witness_wires(self) -> list[int]:
        return list(range(1, self.n_w + 1))

    def zero_wires(self) -> list[int]:
        return list(range(self.n_w + 1, self.n_w + self.n_0 + 1))

    def plus_wires(self) -> list[int]:
        return list(range(self.n_w + self.n_0 + 1, self.width + 1))


@dataclass(frozen=True)
class StoqVerifier:
    circuit: ReversibleCircuit
    layout: Layout
    out: int = 1
    basis: Basis = Basis.HADAMARD
    meta: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.layout.width != self.circuit.width:
            raise WidthMismatch(
                f"layout covers {self.layout.width} wires, circuit has {self.circuit.width}")
        if not 1 <= self.out <= self.circuit.width:
            raise ValueError(f"output wire {self.out} out of range")

    @property
    def width(self) -> int:
        return self.circuit.width

    @cached_property
    def inverse_circuit(self) -> ReversibleCircuit:
        return inverse(self.circuit)

    @cached_property
    def reflection(self) -> ReversibleCircuit:
        """``V^-1 X_out V`` as one circuit (V applied first)."""
        return compose(self.circuit, ReversibleCircuit(self.width, [x(self.out)]),
                       self.inverse_circuit)


def _check_witness(layout: Layout, w: NonNegState):
    if w.width != layout.n_w:
        raise WidthMismatch(f"witness width {w.width}, layout expects {layout.n_w}")


def input_state(layout: Layout, w: NonNegState, cap: int = DEFAULT_SUPPORT_CAP) -> NonNegState:
    _check_witness(layout, w)
    n_r = 1 << layout.n_plus
    if len(w) * n_r > cap:
        raise CapExceeded(f"input support {len(w)} * 2^{layout.n_plus} exceeds cap {cap}")
    r = np.arange(n_r, dtype=np.int64)
    keys = ((w.keys[:, None] << layout.anc) | r[None, :]).ravel()
    amps = np.repeat(w.amps, n_r) / np.sqrt(n_r)
    return NonNegState(layout.width, keys, amps, normalized=w.normalized)


def output_state(v: StoqVerifier, w: NonNegState, cap: int = DEFAULT_SUPPORT_CAP) -> NonNegState:
    return input_state(v.layout, w, cap).permuted(v.circuit)


def accept_prob(v: StoqVerifier, w: NonNegState, cap: int = DEFAULT_SUPPORT_CAP) -> float:
    """Exact acceptance probability of witness ``w``."""
    d0, d1 = split_by_wire(output_state(v, w, cap), v.out)
    if v.basis is Basis.COMPUTATIONAL:
        return d0.norm_sq
    return 0.5 * (d0.norm_sq + d1.norm_sq) + inner(d0, d1)


def subset_accept_exact(v: StoqVerifier, S: SubsetSpec, cap: int = DEFAULT_SUPPORT_CAP) -> Fraction:
    """Exact rational acceptance of the subset-state witness ``|S>``.

    With a uniform input the Hadamard-basis value is 1/2 + 1/2 times the
    fraction of input strings that ``V^-1 X V`` maps back into the input set.
    """
    lay = v.layout
    if S.width != lay.n_w:
        raise WidthMismatch(f"subset width {S.width}, layout expects {lay.n_w}")
    keys = S.keys()
    if keys.size == 0:
        raise ValueError("empty subset")
    n_r = 1 << lay.n_plus
    if keys.size * n_r > cap:
        raise CapExceeded("subset input support exceeds cap")
    r = np.arange(n_r, dtype=np.int64)
    inputs = ((keys[:, None] << lay.anc) | r[None, :]).ravel()
    total = inputs.size
    if v.basis is Basis.COMPUTATIONAL:
        img = v.circuit.apply_array(inputs)
        hits = int((((img >> (v.width - v.out)) & 1) == 0).sum())
        return Fraction(hits, total)
    img = v.reflection.apply_array(inputs)
    hits = int(np.isin(img, inputs).sum())
    return Fraction(1, 2) + Fraction(hits, 2 * total)


# -- verifier matrix ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VerifierMatrix:
    """Symmetric ``2^n_w`` matrix in sparse form; ``toarray`` for small ``n_w``."""

    n_w: int
    sparse: sp.csr_matrix

    @property
    def dim(self) -> int:
        return 1 << self.n_w

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        return self.sparse @ vec

    def toarray(self) -> np.ndarray:
        if self.n_w > DENSE_MAX_NW:
            raise CapExceeded(f"dense verifier matrix limited to n_w <= {DENSE_MAX_NW}")
        return self.sparse.toarray()

    def quadratic(self, w: NonNegState) -> float:
        vec = np.zeros(self.dim)
        vec[w.keys] = w.amps
        return float(vec @ self.matvec(vec))


def verifier_matrix(v: StoqVerifier, cap: int = DEFAULT_SUPPORT_CAP) -> VerifierMatrix:
    """Enumerate ``V^-1 X V`` on every ``(b, 0, r')`` and collect the ``(a, 0, r)`` hits."""
    if v.basis is not Basis.HADAMARD:
        raise ValueError("verifier matrix is defined for Hadamard-basis verifiers")
    lay = v.layout
    n_in = lay.n_w + lay.n_plus
    if (1 << n_in) > cap:
        raise CapExceeded(f"matrix enumeration needs 2^{n_in} inputs, cap is {cap}")
    b = np.repeat(np.arange(1 << lay.n_w, dtype=np.int64), 1 << lay.n_plus)
    r = np.tile(np.arange(1 << lay.n_plus, dtype=np.int64), 1 << lay.n_w)
    img = v.reflection.apply_array((b << lay.anc) | r)
    zero_ok = ((img >> lay.n_plus) & ((1 << lay.n_0) - 1)) == 0
    a = img >> lay.anc
    data = np.full(int(zero_ok.sum()), 2.0 ** -lay.n_plus)
    dim = 1 << lay.n_w
    m = sp.csr_matrix((data, (a[zero_ok], b[zero_ok])), shape=(dim, dim))
    m.sum_duplicates()
    return VerifierMatrix(lay.n_w, m)


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray
    iterations: int
    method: str
    dense_value: Optional[float] = None


def dominant_eigenpair(m: Union[VerifierMatrix, np.ndarray, sp.spmatrix], tol: float = 1e-12,
                       max_iter: int = 100_000, seed: int = 0,
                       cross_check: bool = True) -> EigenResult:
    """Largest eigenvalue of a symmetric matrix with spectrum in [-1, 1].

    Power iteration on ``M + I`` from the all-ones vector, with seeded random
    restarts if the iterate collapses. Small problems are cross-checked
    against a dense symmetric eigensolver, which wins on disagreement.
    """
    if isinstance(m, VerifierMatrix):
        op, dim = m.sparse, m.dim
    else:
        op, dim = m, m.shape[0]
    rng = np.random.default_rng(seed)
    vec = np.ones(dim) / np.sqrt(dim)
    prev = None
    it = 0
    restarts = 0
    converged = False
    while it < max_iter:
        it += 1
        nxt = op @ vec + vec
        nrm = np.linalg.norm(nxt)
        if nrm < 1e-300:
            restarts += 1
            if restarts > 50:
                break
            vec = rng.random(dim)
            vec /= np.linalg.norm(vec)
            prev = None
            continue
        vec = nxt / nrm
        rq = float(vec @ (op @ vec))
        if prev is not None and abs(rq - prev) < tol:
            converged = True
            break
        prev = rq
    lam = float(vec @ (op @ vec))
    res = EigenResult(lam, vec, it, "power")
    dense_ok = dim <= (1 << DENSE_MAX_NW)
    if cross_check and dense_ok:
        arr = op.toarray() if sp.issparse(op) else np.asarray(op, dtype=float)
        evals, evecs = np.linalg.eigh(arr)
        res.dense_value = float(evals[-1])
        if abs(lam - res.dense_value) > 1e-9:
            top = evecs[:, -1]
            if np.all(arr >= 0):
                top = np.abs(top)
            elif top.sum() < 0:
                top = -top
            return EigenResult(res.dense_value, top, it, "dense", res.dense_value)
        res.value = res.dense_value
        return res
    if not converged:
        raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")
    return res


def _vector_to_witness(n_w: int, vec: np.ndarray) -> NonNegState:
    vec = np.where(np.abs(vec) < 1e-15, 0.0, vec)
    if vec.sum() < 0:
        vec = -vec
    vec = np.clip(vec, 0.0, None)
    if not np.any(vec > 0):
        vec = np.ones_like(vec)
    idx = np.nonzero(vec)[0]
    return NonNegState.from_arrays(n_w, idx, vec[idx], normalize=True)


def accept_from_lambda(lam: float) -> float:
    """Optimal acceptance from the top eigenvalue, clamped so it never drops below 1/2."""
    return 0.5 + 0.5 * max(lam, 0.0)


def max_accept(v: StoqVerifier, cap: int = DEFAULT_SUPPORT_CAP, **eig_kw) -> tuple[float, NonNegState]:
    if v.basis is not Basis.HADAMARD:
        raise ValueError("max_accept needs a Hadamard-basis verifier; see max_accept_computational")
    m = verifier_matrix(v, cap)
    res = dominant_eigenpair(m, **eig_kw)
    return accept_from_lambda(res.value), _vector_to_witness(v.layout.n_w, res.vector)


def classical_accepts(v: StoqVerifier, cap: int = DEFAULT_SUPPORT_CAP) -> np.ndarray:
    """Computational-basis acceptance for every classical witness, indexed by witness integer."""
    lay = v.layout
    n_in = lay.n_w + lay.n_plus
    if (1 << n_in) > cap:
        raise CapExceeded(f"classical enumeration needs 2^{n_in} inputs, cap is {cap}")
    b = np.repeat(np.arange(1 << lay.n_w, dtype=np.int64), 1 << lay.n_plus)
    r = np.tile(np.arange(1 << lay.n_plus, dtype=np.int64), 1 << lay.n_w)
    img = v.circuit.apply_array((b << lay.anc) | r)
    ok = ((img >> (v.width - v.out)) & 1) == 0
    return ok.reshape(1 << lay.n_w, 1 << lay.n_plus).mean(axis=1)


def max_accept_computational(v: StoqVerifier, cap: int = DEFAULT_SUPPORT_CAP) -> tuple[float, str]:
    """Best classical witness; ties go to the smallest bitstring."""
    if v.basis is not Basis.COMPUTATIONAL:
        raise ValueError("max_accept_computational needs a computational-basis verifier")
    acc = classical_accepts(v, cap)
    i = int(np.argmax(acc))
    return float(acc[i]), int_to_bits(i, v.layout.n_w)


# -- sampling and queries -----------------------------------------------------

def sample_outputs(v: StoqVerifier, w: NonNegState, size: int,
                   rng: np.random.Generator) -> np.ndarray:
    """``size`` draws from the computational-basis output distribution, as int keys."""
    _check_witness(v.layout, w)
    p = w.masses / w.masses.sum()
    idx = rng.choice(len(w), size=size, p=p)
    r = rng.integers(0, 1 << v.layout.n_plus, size=size, dtype=np.int64)
    return v.circuit.apply_array((w.keys[idx] << v.layout.anc) | r)


def sample_output(v: StoqVerifier, w: NonNegState, rng_seed) -> str:
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return int_to_bits(int(sample_outputs(v, w, 1, rng)[0]), v.width)


EasyWitness = Union[NonNegState, Callable[[str], float]]


def easy_query(w: EasyWitness, n_w: int) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorised mass lookup ``D_w(i)`` from a state or a per-bitstring function."""
    if isinstance(w, NonNegState):
        _check_witness(Layout(n_w), w)
        keys, masses = w.keys, w.masses / w.norm_sq

        def lookup(idx: np.ndarray) -> np.ndarray:
            pos = np.searchsorted(keys, idx)
            pos = np.clip(pos, 0, max(keys.size - 1, 0))
            hit = keys[pos] == idx
            return np.where(hit, masses[pos], 0.0)
        return lookup

    def call(idx: np.ndarray) -> np.ndarray:
        uniq, inv = np.unique(idx, return_inverse=True)
        vals = np.array([float(w(int_to_bits(int(i), n_w))) for i in uniq.tolist()])
        return vals[inv]
    return call


def query_output_masses(v: StoqVerifier, easy_w: EasyWitness, js) -> np.ndarray:
    """``D(j)`` for each int key in ``js`` by pulling ``j`` back through the inverse circuit."""
    lay = v.layout
    js = np.asarray(js, dtype=np.int64)
    pre = v.inverse_circuit.apply_array(js)
    zero_ok = ((pre >> lay.n_plus) & ((1 << lay.n_0) - 1)) == 0
    look = easy_query(easy_w, lay.n_w)
    out = np.zeros(js.shape, dtype=np.float64)
    if np.any(zero_ok):
        out[zero_ok] = look(pre[zero_ok] >> lay.anc) * 2.0 ** -lay.n_plus
    return out


def query_output_mass(v: StoqVerifier, easy_w: EasyWitness, j: str) -> float:
    if len(j) != v.width:
        raise WidthMismatch(f"query string has {len(j)} bits, verifier width is {v.width}")
    return float(query_output_masses(v, easy_w, [bits_to_int(j)])[0])


# -- file format ----------------------------------------------------------------

_HEADERS = ("layout", "out", "basis")


def split_headers(lines: list[tuple[int, str]]) -> tuple[list[tuple[int, str]], dict]:
    """Pull top-level header lines out of a numbered circuit listing."""
    body, heads = [], {}
    depth = 0
    for lineno, s in lines:
        word = s.split()[0]
        if depth == 0 and word in _HEADERS:
            if word in heads:
                raise ParseError(f"duplicate '{word}' header", lineno)
            heads[word] = (lineno, s.split()[1:])
            continue
        if s.endswith("{"):
            depth += 1
        elif s == "}":
            depth -= 1
        body.append((lineno, s))
    return body, heads


def layout_from_header(heads: dict, width: Optional[int] = None) -> Layout:
    if "layout" not in heads:
        raise ParseError("missing 'layout n_w n_0 n_plus' header", None)
    lineno, toks = heads["layout"]
    try:
        vals = [int(t) for t in toks]
        if len(vals) != 3:
            raise ValueError
        lay = Layout(*vals)
    except ValueError:
        raise ParseError("expected 'layout n_w n_0 n_plus' with n_w >= 1", lineno) from None
    if width is not None and lay.width != width:
        raise ParseError(f"layout covers {lay.width} wires but circuit has {width}", lineno)
    return lay


def parse_verifier(text: str) -> StoqVerifier:
    body, heads = split_headers(_numbered(text))
    circuit = parse_circuit_lines(body)
    lay = layout_from_header(heads, circuit.width)
    out = 1
    if "out" in heads:
        lineno, toks = heads["out"]
        try:
            (out,) = [int(t) for t in toks]
        except ValueError:
            raise ParseError("expected 'out Q'", lineno) from None
        if not 1 <= out <= circuit.width:
            raise ParseError(f"output wire {out} out of range", lineno)
    basis = Basis.HADAMARD
    if "basis" in heads:
        lineno, toks = heads["basis"]
        try:
            (name,) = toks
            basis = Basis(name)
        except ValueError:
            raise ParseError("expected 'basis hadamard|computational'", lineno) from None
    return StoqVerifier(circuit, lay, out, basis)


def serialize_verifier(v: StoqVerifier) -> str:
    lay = v.layout
    head = (f"layout {lay.n_w} {lay.n_0} {lay.n_plus}\n"
            f"out {v.out}\nbasis {v.basis.value}\n")
    return head + serialize(v.circuit)


def random_verifier(rng: np.random.Generator, n_w: int, n_0: int = 0, n_plus: int = 0,
                    n_gates: Optional[int] = None, out: Optional[int] = None,
                    basis: Basis = Basis.HADAMARD) -> StoqVerifier:
    lay = Layout(n_w, n_0, n_plus)
    if n_gates is None:
        n_gates = int(rng.integers(1, 3 * lay.width + 2))
    c = random_circuit(lay.width, n_gates, rng)
    if out is None:
        out = int(rng.integers(1, lay.width + 1))
    return StoqVerifier(c, lay, out, basis)
