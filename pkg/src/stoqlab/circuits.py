"""Classical reversible circuits over {X, CNOT, TOFFOLI} plus controlled blocks.

Wires are 1-based. A width-n bitstring is written big-endian with wire 1
leftmost, so wire ``q`` is bit ``n - q`` of the integer encoding::

    >>> c = ReversibleCircuit(2, [cx(1, 2)])
    >>> apply_perm(c, "10")
    '11'

Controlled blocks are kept as first-class elements. For evaluation every
circuit is lowered to a tuple of multi-controlled X operations on the
outermost wires, which is exact at the permutation level.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ParseError, WidthMismatch

MAX_WIDTH = 62


def bits_to_int(bits: str) -> int:
    if bits == "":
        return 0
    if set(bits) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {bits!r}")
    return int(bits, 2)


def int_to_bits(x: int, width: int) -> str:
    if width == 0:
        return ""
    return format(int(x), f"0{width}b")


def wire_mask(width: int, q: int) -> int:
    """Integer mask of wire ``q`` in a width-``width`` register."""
    return 1 << (width - q)


class GateKind(enum.Enum):
    X = "x"
    CNOT = "cx"
    TOFFOLI = "ccx"

    @property
    def arity(self) -> int:
        return {"x": 1, "cx": 2, "ccx": 3}[self.value]


@dataclass(frozen=True)
class Gate:
    """One gate; ``wires`` lists the controls first and the target last."""

    kind: GateKind
    wires: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        if len(self.wires) != self.kind.arity:
            raise ValueError(f"{self.kind.value} takes {self.kind.arity} wires, got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise ValueError(f"duplicate wires in {self.kind.value} {self.wires}")
        if min(self.wires) < 1:
            raise ValueError(f"wire indices are 1-based, got {self.wires}")

    @property
    def controls(self) -> tuple[int, ...]:
        return self.wires[:-1]

    @property
    def target(self) -> int:
        return self.wires[-1]

    def __repr__(self):
        return f"{self.kind.value}({', '.join(map(str, self.wires))})"


def x(q: int) -> Gate:
    return Gate(GateKind.X, (q,))


def cx(c: int, t: int) -> Gate:
    return Gate(GateKind.CNOT, (c, t))


def ccx(c1: int, c2: int, t: int) -> Gate:
    return Gate(GateKind.TOFFOLI, (c1, c2, t))


@dataclass(frozen=True)
class WireMap:
    """Injective map from inner wires ``1..len(targets)`` to outer wires."""

    targets: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"wire map is not injective: {self.targets}")
        if self.targets and min(self.targets) < 1:
            raise ValueError(f"wire map targets must be >= 1: {self.targets}")

    def __call__(self, q: int) -> int:
        return self.targets[q - 1]

    def __len__(self):
        return len(self.targets)

    def then(self, outer: "WireMap") -> "WireMap":
        """Compose: inner -> self -> outer."""
        return WireMap(tuple(outer(t) for t in self.targets))

    @classmethod
    def identity(cls, n: int) -> "WireMap":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def shifted(cls, n: int, offset: int) -> "WireMap":
        return cls(tuple(range(1 + offset, n + 1 + offset)))


@dataclass(frozen=True)
class ControlledBlock:
    """Applies ``inner`` (through ``at``) iff wire ``ctrl`` is 1."""

    ctrl: int
    inner: "ReversibleCircuit"
    at: WireMap

    def __post_init__(self):
        if len(self.at) != self.inner.width:
            raise WidthMismatch(
                f"wire map has {len(self.at)} wires, inner circuit has width {self.inner.width}"
            )
        if self.ctrl in self.at.targets:
            raise ValueError(f"control wire {self.ctrl} overlaps the block's mapped wires")
        if self.ctrl < 1:
            raise ValueError("wire indices are 1-based")

    @property
    def wires(self) -> tuple[int, ...]:
        return (self.ctrl,) + self.at.targets


Element = Union[Gate, ControlledBlock]


@dataclass(frozen=True)
class ReversibleCircuit:
    width: int
    elements: tuple[Element, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not 0 <= self.width <= MAX_WIDTH:
            raise ValueError(f"width must be in [0, {MAX_WIDTH}], got {self.width}")
        for el in self.elements:
            if not isinstance(el, (Gate, ControlledBlock)):
                raise TypeError(f"not a circuit element: {el!r}")
            if max(el.wires) > self.width:
                raise ValueError(f"element {el!r} uses a wire beyond width {self.width}")

    def __len__(self):
        return len(self.elements)

    @cached_property
    def mcx_ops(self) -> tuple[tuple[tuple[int, ...], int], ...]:
        """Lowered form: ``(controls, target)`` pairs on this circuit's wires."""
        out: list[tuple[tuple[int, ...], int]] = []
        _lower(self, lambda q: q, (), out)
        return tuple(out)

    @cached_property
    def _masks(self) -> tuple[np.ndarray, np.ndarray]:
        cm = [sum(wire_mask(self.width, c) for c in ctrl) for ctrl, _ in self.mcx_ops]
        tm = [wire_mask(self.width, t) for _, t in self.mcx_ops]
        return np.array(cm, dtype=np.int64), np.array(tm, dtype=np.int64)

    def apply_int(self, x: int) -> int:
        cms, tms = self._masks
        for cm, tm in zip(cms.tolist(), tms.tolist()):
            if x & cm == cm:
                x ^= tm
        return x

    def apply_array(self, xs) -> np.ndarray:
        """Vectorised permutation of an integer array (returns a new array)."""
        xs = np.array(xs, dtype=np.int64, copy=True)
        cms, tms = self._masks
        for cm, tm in zip(cms.tolist(), tms.tolist()):
            if cm == 0:
                xs ^= tm
            else:
                xs ^= ((xs & cm) == cm).astype(np.int64) * tm
        return xs

    def __repr__(self):
        return f"ReversibleCircuit(width={self.width}, elements={list(self.elements)!r})"


def _lower(c: ReversibleCircuit, wire_of, extra: tuple[int, ...], out: list) -> None:
    for el in c.elements:
        if isinstance(el, Gate):
            out.append((extra + tuple(wire_of(w) for w in el.controls), wire_of(el.target)))
        else:
            ctrl = wire_of(el.ctrl)
            at = el.at
            _lower(el.inner, lambda q, at=at: wire_of(at(q)), extra + (ctrl,), out)


def identity(width: int) -> ReversibleCircuit:
    return ReversibleCircuit(width, ())


def apply_perm(c: ReversibleCircuit, bits: str) -> str:
    if len(bits) != c.width:
        raise WidthMismatch(f"input has {len(bits)} bits, circuit width is {c.width}")
    return int_to_bits(c.apply_int(bits_to_int(bits)), c.width)


def permutation_table(c: ReversibleCircuit) -> np.ndarray:
    """Images of all ``2**width`` inputs, indexed by input integer."""
    if c.width > 24:
        raise ValueError("permutation table limited to width <= 24")
    return c.apply_array(np.arange(1 << c.width, dtype=np.int64))


def inverse(c: ReversibleCircuit) -> ReversibleCircuit:
    els: list[Element] = []
    for el in reversed(c.elements):
        if isinstance(el, Gate):
            els.append(el)
        else:
            els.append(ControlledBlock(el.ctrl, inverse(el.inner), el.at))
    return ReversibleCircuit(c.width, els)


def controlled(c: ReversibleCircuit, at: WireMap | Sequence[int], ctrl: int) -> ControlledBlock:
    if not isinstance(at, WireMap):
        at = WireMap(tuple(at))
    return ControlledBlock(ctrl, c, at)


def compose(*circuits: ReversibleCircuit) -> ReversibleCircuit:
    """Sequential composition; the first argument is applied first."""
    if not circuits:
        raise ValueError("compose needs at least one circuit")
    width = circuits[0].width
    els: list[Element] = []
    for c in circuits:
        if c.width != width:
            raise WidthMismatch(f"cannot compose widths {width} and {c.width}")
        els.extend(c.elements)
    return ReversibleCircuit(width, els)


def _map_element(el: Element, at: WireMap) -> Element:
    if isinstance(el, Gate):
        return Gate(el.kind, tuple(at(w) for w in el.wires))
    return ControlledBlock(at(el.ctrl), el.inner, el.at.then(at))


def embed(c: ReversibleCircuit, at: WireMap | Sequence[int], width: int) -> ReversibleCircuit:
    """Place ``c`` on the wires ``at`` of a width-``width`` register."""
    if not isinstance(at, WireMap):
        at = WireMap(tuple(at))
    if len(at) != c.width:
        raise WidthMismatch(f"wire map has {len(at)} wires, circuit has width {c.width}")
    if at.targets and max(at.targets) > width:
        raise ValueError(f"wire map {at.targets} exceeds width {width}")
    return ReversibleCircuit(width, [_map_element(el, at) for el in c.elements])


def flatten(c: ReversibleCircuit) -> tuple[ReversibleCircuit, int]:
    """Rewrite into the bare {X, CNOT, TOFFOLI} basis.

    Operations with ``k > 2`` controls use a Toffoli ladder over ``k - 2``
    clean ancillas appended after the original wires. Returns the new circuit
    and the number of ancillas, which must start (and end) in 0.
    """
    ops = c.mcx_ops
    n_anc = max([len(ctrl) - 2 for ctrl, _ in ops] + [0])
    width = c.width + n_anc
    anc = list(range(c.width + 1, width + 1))
    gates: list[Gate] = []
    for ctrl, t in ops:
        k = len(ctrl)
        if k == 0:
            gates.append(x(t))
        elif k == 1:
            gates.append(cx(ctrl[0], t))
        elif k == 2:
            gates.append(ccx(ctrl[0], ctrl[1], t))
        else:
            ladder = [ccx(ctrl[0], ctrl[1], anc[0])]
            for i in range(2, k - 1):
                ladder.append(ccx(anc[i - 2], ctrl[i], anc[i - 1]))
            gates.extend(ladder)
            gates.append(ccx(anc[k - 3], ctrl[k - 1], t))
            gates.extend(reversed(ladder))
    return ReversibleCircuit(width, gates), n_anc


def random_circuit(width: int, n_gates: int, rng: np.random.Generator,
                   kinds: Iterable[GateKind] = tuple(GateKind)) -> ReversibleCircuit:
    kinds = [k for k in kinds if k.arity <= width]
    gates = []
    for _ in range(n_gates):
        kind = kinds[rng.integers(len(kinds))]
        wires = rng.choice(np.arange(1, width + 1), size=kind.arity, replace=False)
        gates.append(Gate(kind, tuple(int(w) for w in wires)))
    return ReversibleCircuit(width, gates)


# --- text format -----------------------------------------------------------

_GATE_WORDS = {k.value: k for k in GateKind}


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _wires(tokens: list[str], lineno: int) -> tuple[int, ...]:
    try:
        ws = tuple(int(t) for t in tokens)
    except ValueError:
        raise ParseError(f"expected decimal wire indices, got {' '.join(tokens)!r}", lineno) from None
    return ws


def _parse_body(lines: list[tuple[int, str]], pos: int, width: int,
                closing: bool) -> tuple[ReversibleCircuit, int]:
    els: list[Element] = []
    while pos < len(lines):
        lineno, text = lines[pos]
        tokens = text.split()
        word = tokens[0]
        if word == "}":
            if not closing or len(tokens) != 1:
                raise ParseError("unexpected '}'", lineno)
            return ReversibleCircuit(width, els), pos + 1
        if word in _GATE_WORDS:
            kind = _GATE_WORDS[word]
            ws = _wires(tokens[1:], lineno)
            if len(ws) != kind.arity:
                raise ParseError(f"{word} takes {kind.arity} wires, got {len(ws)}", lineno)
            if len(set(ws)) != len(ws):
                raise ParseError(f"duplicate wires in {word}: {' '.join(tokens[1:])}", lineno)
            for w in ws:
                if not 1 <= w <= width:
                    raise ParseError(f"wire {w} out of range 1..{width}", lineno)
            els.append(Gate(kind, ws))
            pos += 1
        elif word == "ctrl":
            if len(tokens) != 3 or tokens[2] != "{":
                raise ParseError("expected 'ctrl Q {'", lineno)
            (q,) = _wires(tokens[1:2], lineno)
            if not 1 <= q <= width:
                raise ParseError(f"wire {q} out of range 1..{width}", lineno)
            if pos + 1 >= len(lines):
                raise ParseError("unterminated ctrl block", lineno)
            wl, wtext = lines[pos + 1]
            wtok = wtext.split()
            if wtok[0] != "wires" or len(wtok) < 2:
                raise ParseError("ctrl block must start with 'wires w1 w2 ...'", wl)
            targets = _wires(wtok[1:], wl)
            if len(set(targets)) != len(targets):
                raise ParseError("duplicate wires in block wire list", wl)
            for w in targets:
                if not 1 <= w <= width:
                    raise ParseError(f"wire {w} out of range 1..{width}", wl)
            if q in targets:
                raise ParseError(f"control wire {q} overlaps the block's wires", lineno)
            inner, pos = _parse_body(lines, pos + 2, len(targets), closing=True)
            els.append(ControlledBlock(q, inner, WireMap(targets)))
        else:
            raise ParseError(f"unknown statement {word!r}", lineno)
    if closing:
        raise ParseError("unterminated ctrl block", lines[-1][0] if lines else None)
    return ReversibleCircuit(width, els), pos


def _numbered(text: str, first_lineno: int = 1) -> list[tuple[int, str]]:
    out = []
    for i, raw in enumerate(text.splitlines()):
        s = _strip(raw)
        if s:
            out.append((first_lineno + i, s))
    return out


def parse_circuit_lines(lines: list[tuple[int, str]]) -> ReversibleCircuit:
    """Parse pre-numbered, comment-stripped lines (used by the file formats built on top)."""
    if not lines:
        raise ParseError("empty circuit: expected 'qubits N'", None)
    lineno, head = lines[0]
    tok = head.split()
    if tok[0] != "qubits" or len(tok) != 2:
        raise ParseError("first line must be 'qubits N'", lineno)
    try:
        width = int(tok[1])
    except ValueError:
        raise ParseError(f"bad qubit count {tok[1]!r}", lineno) from None
    if not 1 <= width <= MAX_WIDTH:
        raise ParseError(f"qubit count must be in 1..{MAX_WIDTH}", lineno)
    circuit, _ = _parse_body(lines, 1, width, closing=False)
    return circuit


def parse_circuit(text: str) -> ReversibleCircuit:
    return parse_circuit_lines(_numbered(text))


def _serialize_body(c: ReversibleCircuit, indent: str) -> list[str]:
    out = []
    for el in c.elements:
        if isinstance(el, Gate):
            out.append(f"{indent}{el.kind.value} {' '.join(map(str, el.wires))}")
        else:
            out.append(f"{indent}ctrl {el.ctrl} {{")
            out.append(f"{indent}  wires {' '.join(map(str, el.at.targets))}")
            out.extend(_serialize_body(el.inner, indent + "  "))
            out.append(f"{indent}}}")
    return out


def serialize(c: ReversibleCircuit) -> str:
    return "\n".join([f"qubits {c.width}"] + _serialize_body(c, "")) + "\n"


# --- building blocks ---------------------------------------------------------

def mcx_gates(controls: Sequence[int], target: int, scratch: Sequence[int]) -> list[Gate]:
    """``target ^= AND(controls)`` with a Toffoli ladder over clean ``scratch`` wires.

    Needs ``len(controls) - 2`` scratch wires when there are three or more
    controls; scratch wires are returned to 0.
    """
    k = len(controls)
    if k == 0:
        return [x(target)]
    if k == 1:
        return [cx(controls[0], target)]
    if k == 2:
        return [ccx(controls[0], controls[1], target)]
    if len(scratch) < k - 2:
        raise ValueError(f"{k} controls need {k - 2} scratch wires, got {len(scratch)}")
    ladder = [ccx(controls[0], controls[1], scratch[0])]
    for i in range(2, k - 1):
        ladder.append(ccx(scratch[i - 2], controls[i], scratch[i - 1]))
    return ladder + [ccx(scratch[k - 3], controls[k - 1], target)] + ladder[::-1]


def literal_and_gates(literals: Sequence[tuple[int, int]], target: int,
                      scratch: Sequence[int]) -> list[Gate]:
    """``target ^= [wire w carries bit b for every (w, b)]``."""
    flips = [x(w) for w, b in literals if b == 0]
    return flips + mcx_gates([w for w, _ in literals], target, scratch) + flips


def cswap_gates(ctrl: int, a: int, b: int) -> list[Gate]:
    """Controlled swap of wires ``a`` and ``b``."""
    return [cx(b, a), ccx(ctrl, a, b), cx(b, a)]
