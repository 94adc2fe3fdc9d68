"""Dense reference implementations used as test oracles.

Everything here works on explicit bitstrings and full 2^n vectors, and only
reads circuit structure (gate wires, nested blocks). No library simulation
code is called.
"""
from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np

from stoqlab.circuits import ControlledBlock, Gate


def apply_bits(circuit, bits: str) -> str:
    """Run a circuit on a bitstring, one gate at a time."""
    b = list(bits)
    _run(circuit.elements, b, lambda q: q)
    return "".join(b)


def _run(elements, b, wire):
    for el in elements:
        if isinstance(el, Gate):
            ws = [wire(q) - 1 for q in el.wires]
            if all(b[c] == "1" for c in ws[:-1]):
                t = ws[-1]
                b[t] = "0" if b[t] == "1" else "1"
        elif isinstance(el, ControlledBlock):
            if b[wire(el.ctrl) - 1] == "1":
                targets = el.at.targets
                _run(el.inner.elements, b, lambda q, _t=targets, _w=wire: _w(_t[q - 1]))
        else:
            raise TypeError(el)


def all_strings(n: int) -> list[str]:
    return ["".join(t) for t in itertools.product("01", repeat=n)]


def perm_matrix(circuit) -> np.ndarray:
    """``P[out, in] = 1``."""
    n = circuit.width
    P = np.zeros((1 << n, 1 << n))
    for s in all_strings(n):
        P[int(apply_bits(circuit, s), 2), int(s, 2)] = 1.0
    return P


def kron_all(vs) -> np.ndarray:
    out = np.ones(1)
    for v in vs:
        out = np.kron(out, v)
    return out


ZERO = np.array([1.0, 0.0])
PLUS = np.array([1.0, 1.0]) / np.sqrt(2)


def input_vector(w: np.ndarray, n_0: int, n_plus: int) -> np.ndarray:
    return kron_all([w] + [ZERO] * n_0 + [PLUS] * n_plus)


def x_on(n: int, q: int) -> np.ndarray:
    ops = [np.eye(2)] * n
    ops[q - 1] = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = np.ones((1, 1))
    for o in ops:
        out = np.kron(out, o)
    return out


def zero_proj_on(n: int, q: int) -> np.ndarray:
    ops = [np.eye(2)] * n
    ops[q - 1] = np.diag([1.0, 0.0])
    out = np.ones((1, 1))
    for o in ops:
        out = np.kron(out, o)
    return out


def dense_accept(circuit, n_w, n_0, n_plus, out, w, hadamard=True) -> float:
    psi = input_vector(np.asarray(w, float), n_0, n_plus)
    phi = perm_matrix(circuit) @ psi
    n = circuit.width
    if hadamard:
        return float(0.5 + 0.5 * phi @ x_on(n, out) @ phi)
    return float(phi @ zero_proj_on(n, out) @ phi)


def dense_verifier_matrix(circuit, n_w, n_0, n_plus, out) -> np.ndarray:
    n = circuit.width
    P = perm_matrix(circuit)
    U = P.T @ x_on(n, out) @ P
    anc = kron_all([ZERO] * n_0 + [PLUS] * n_plus)
    E = np.kron(np.eye(1 << n_w), anc.reshape(-1, 1))
    return E.T @ U @ E


def dense_rcd_states(c0, c1, n_w, n_0, n_plus, w):
    psi = input_vector(np.asarray(w, float), n_0, n_plus)
    return perm_matrix(c0) @ psi, perm_matrix(c1) @ psi


def best_pair_overlap(c0, c1, n_w, n_0, n_plus, P0=None, P1=None) -> float:
    """Max of <R0|R1> over witnesses |s_i> and (|s_i> + |s_j>)/sqrt 2."""
    N = 1 << n_w
    P0 = perm_matrix(c0) if P0 is None else P0
    P1 = perm_matrix(c1) if P1 is None else P1
    anc = kron_all([ZERO] * n_0 + [PLUS] * n_plus)
    E = np.kron(np.eye(N), anc.reshape(-1, 1))
    G = (P0 @ E).T @ (P1 @ E)
    best = 0.0
    for i in range(N):
        for j in range(i, N):
            w = np.zeros(N)
            w[i] = w[j] = 1.0
            w /= np.linalg.norm(w)
            best = max(best, float(w @ G @ w))
    return best


# -- set constraints -----------------------------------------------------------------

def restrict(s: str, support) -> str:
    return "".join(s[j - 1] for j in support)


def rest_of(s: str, support) -> str:
    return "".join(ch for i, ch in enumerate(s, start=1) if i not in support)


def frustration_by_counting(support, groups, S, n) -> float:
    """Bad strings plus longing mass, from counts of group hits per rest pattern."""
    S = sorted(set(S))
    covered = {y: j for j, g in enumerate(groups) for y in g}
    bad = sum(restrict(s, support) not in covered for s in S)
    hits = defaultdict(int)
    for s in S:
        loc = restrict(s, support)
        if loc in covered:
            hits[(covered[loc], rest_of(s, support))] += 1
    longing = sum(c - c * c / len(groups[j]) for (j, _), c in hits.items())
    return (bad + longing) / len(S)


def frustration_by_matrix(support, groups, S, n) -> float:
    """``1 - <S| M (x) I |S>`` with the local matrix built entry by entry."""
    vec = np.zeros(1 << n)
    for s in S:
        vec[int(s, 2)] = 1.0
    vec /= np.linalg.norm(vec)
    total = 0.0
    for a in all_strings(n):
        if vec[int(a, 2)] == 0:
            continue
        for b in all_strings(n):
            if vec[int(b, 2)] == 0 or rest_of(a, support) != rest_of(b, support):
                continue
            xa, xb = restrict(a, support), restrict(b, support)
            for g in groups:
                if xa in g and xb in g:
                    total += vec[int(a, 2)] * vec[int(b, 2)] / len(g)
    return 1.0 - total


def projector_expectation(psi: np.ndarray, k: int, n: int, zero_wires) -> float:
    """<psi| prod_{q in zero_wires} |0><0|_q |psi> on n wires."""
    total = 0.0
    for idx, s in enumerate(all_strings(n)):
        if all(s[q - 1] == "0" for q in zero_wires):
            total += psi[idx] ** 2
    return total


def x_zero_expectation(psi: np.ndarray, n: int, x_wire: int, zero_wires) -> float:
    """<psi| X_{x_wire} prod |0><0| |psi>."""
    op = x_on(n, x_wire)
    for q in zero_wires:
        op = op @ zero_proj_on(n, q)
    return float(psi @ op @ psi)
