from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stoqlab.circuits import ReversibleCircuit, identity, x
from stoqlab.errors import CapExceeded, ParseError, WidthMismatch
from stoqlab.states import NonNegState, SubsetSpec, random_state, subset_state
from stoqlab.verifier import (Basis, Layout, StoqVerifier, accept_from_lambda, accept_prob,
                              classical_accepts, dominant_eigenpair, input_state, max_accept,
                              max_accept_computational, output_state, parse_verifier,
                              query_output_mass, query_output_masses, random_verifier,
                              sample_output, sample_outputs, serialize_verifier,
                              subset_accept_exact, verifier_matrix)

import oracles


@st.composite
def verifiers(draw, max_nw=3, max_anc=2, basis=Basis.HADAMARD):
    n_w = draw(st.integers(1, max_nw))
    n_0 = draw(st.integers(0, max_anc))
    n_p = draw(st.integers(0, max_anc))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    return random_verifier(rng, n_w, n_0, n_p, basis=basis)


def witness_for(v, seed):
    return random_state(v.layout.n_w, np.random.default_rng(seed))


def ident(n_w=1, n_0=0, n_p=0, basis=Basis.HADAMARD):
    lay = Layout(n_w, n_0, n_p)
    return StoqVerifier(identity(lay.width), lay, 1, basis)


def test_layout_validation():
    with pytest.raises(ValueError):
        Layout(0)
    with pytest.raises(WidthMismatch):
        StoqVerifier(identity(2), Layout(1), 1)
    with pytest.raises(ValueError):
        StoqVerifier(identity(2), Layout(2), 3)


def test_input_state_examples():
    s = input_state(Layout(1, 1, 0), NonNegState.basis("1"))
    assert s.to_dict() == {"10": 1.0}
    s = input_state(Layout(1, 0, 1), NonNegState.basis("0"))
    assert s.to_dict() == pytest.approx({"00": 2 ** -0.5, "01": 2 ** -0.5})
    with pytest.raises(WidthMismatch):
        input_state(Layout(2), NonNegState.basis("1"))
    with pytest.raises(CapExceeded):
        input_state(Layout(1, 0, 4), NonNegState.basis("1"), cap=8)


def test_accept_examples():
    v = ident()
    assert accept_prob(v, NonNegState.basis("0")) == pytest.approx(0.5, abs=1e-15)
    assert accept_prob(v, subset_state(["0", "1"], 1)) == pytest.approx(1.0, abs=1e-15)
    vc = StoqVerifier(ReversibleCircuit(1, [x(1)]), Layout(1), 1, Basis.COMPUTATIONAL)
    assert accept_prob(vc, NonNegState.basis("1")) == 1.0


@settings(max_examples=60, deadline=None)
@given(verifiers(), st.integers(0, 2**32 - 1), st.booleans())
def test_accept_matches_dense(v, seed, had):
    v = StoqVerifier(v.circuit, v.layout, v.out, Basis.HADAMARD if had else Basis.COMPUTATIONAL)
    w = witness_for(v, seed)
    lay = v.layout
    want = oracles.dense_accept(v.circuit, lay.n_w, lay.n_0, lay.n_plus, v.out,
                                w.to_dense(), hadamard=had)
    got = accept_prob(v, w)
    assert got == pytest.approx(want, abs=1e-12)
    if had:
        assert 0.5 - 1e-12 <= got <= 1 + 1e-12


def test_verifier_matrix_examples():
    m = verifier_matrix(ident()).toarray()
    assert np.array_equal(m, [[0, 1], [1, 0]])
    vx = StoqVerifier(ReversibleCircuit(1, [x(1)]), Layout(1), 1)
    assert np.array_equal(verifier_matrix(vx).toarray(), [[0, 1], [1, 0]])


@settings(max_examples=60, deadline=None)
@given(verifiers(), st.integers(0, 2**32 - 1))
def test_verifier_matrix_dense_and_quadratic(v, seed):
    lay = v.layout
    m = verifier_matrix(v).toarray()
    ref = oracles.dense_verifier_matrix(v.circuit, lay.n_w, lay.n_0, lay.n_plus, v.out)
    assert np.allclose(m, ref, atol=1e-12)
    assert np.allclose(m, m.T, atol=1e-12)
    assert m.min() >= -1e-12 and m.max() <= 1 + 1e-12
    w = witness_for(v, seed)
    vec = w.to_dense()
    assert accept_prob(v, w) == pytest.approx(0.5 + 0.5 * vec @ m @ vec, abs=1e-10)


def test_max_accept_identity():
    p, w = max_accept(ident())
    assert p == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(w.to_dense(), [2 ** -0.5] * 2, atol=1e-9)


def test_negative_identity_clamped():
    res = dominant_eigenpair(-np.eye(2))
    assert res.value == pytest.approx(-1.0)
    assert accept_from_lambda(res.value) == 0.5


@settings(max_examples=60, deadline=None)
@given(verifiers(max_nw=4), st.integers(0, 2**32 - 1))
def test_max_accept_dominates(v, seed):
    lay = v.layout
    p, w = max_accept(v)
    ref = oracles.dense_verifier_matrix(v.circuit, lay.n_w, lay.n_0, lay.n_plus, v.out)
    lam = np.linalg.eigvalsh(ref)[-1]
    assert p == pytest.approx(0.5 + 0.5 * max(lam, 0), abs=1e-9)
    assert np.all(w.to_dense() >= -1e-9)
    assert accept_prob(v, w) >= p - 1e-8
    rng = np.random.default_rng(seed)
    for _ in range(20):
        assert accept_prob(v, random_state(lay.n_w, rng)) <= p + 1e-9


@settings(max_examples=30, deadline=None)
@given(verifiers(max_nw=4))
def test_power_iteration_without_cross_check(v):
    m = verifier_matrix(v)
    res = dominant_eigenpair(m, cross_check=False)
    assert res.value == pytest.approx(np.linalg.eigvalsh(m.toarray())[-1], abs=1e-6)


def test_computational_examples():
    vc = StoqVerifier(ReversibleCircuit(1, [x(1)]), Layout(1), 1, Basis.COMPUTATIONAL)
    assert max_accept_computational(vc) == (1.0, "1")
    p, s = max_accept_computational(ident(1, 0, 1, Basis.COMPUTATIONAL))
    assert (p, s) == (1.0, "0")
    with pytest.raises(ValueError):
        max_accept(vc)


@settings(max_examples=40, deadline=None)
@given(verifiers(max_nw=4, basis=Basis.COMPUTATIONAL), st.integers(0, 2**32 - 1))
def test_classical_witness_is_optimal(v, seed):
    p, s = max_accept_computational(v)
    assert accept_prob(v, NonNegState.basis(s)) == pytest.approx(p, abs=1e-12)
    acc = classical_accepts(v)
    assert p == acc.max()
    rng = np.random.default_rng(seed)
    for _ in range(20):
        assert accept_prob(v, random_state(v.layout.n_w, rng)) <= p + 1e-12


def test_sampling_examples():
    v = ident(2)
    assert {sample_output(v, NonNegState.basis("10"), s) for s in range(10)} == {"10"}
    v = ident(1, 0, 1)
    keys = sample_outputs(v, NonNegState.basis("0"), 10_000, np.random.default_rng(0))
    ones = int(np.sum(keys & 1))
    # chi-square with one degree of freedom, 0.1% level
    chi2 = (ones - 5000) ** 2 / 5000 * 2
    assert chi2 < 10.83


@settings(max_examples=10, deadline=None)
@given(verifiers(max_nw=3, max_anc=2), st.integers(0, 2**32 - 1))
def test_sampling_total_variation(v, seed):
    w = witness_for(v, seed)
    exact = output_state(v, w).to_dense() ** 2
    keys = sample_outputs(v, w, 100_000, np.random.default_rng(seed))
    emp = np.bincount(keys, minlength=1 << v.width) / keys.size
    assert 0.5 * np.abs(emp - exact).sum() < 0.05


def test_query_examples():
    v = ident(1, 1, 0)
    w = NonNegState.basis("0")
    assert query_output_mass(v, w, "00") == 1.0
    assert query_output_mass(v, w, "01") == 0.0
    v = ident(1, 0, 1)
    assert query_output_mass(v, w, "00") == pytest.approx(0.5)
    assert query_output_mass(v, lambda s: 1.0 if s == "0" else 0.0, "01") == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(verifiers(max_nw=3, max_anc=3), st.integers(0, 2**32 - 1))
def test_queries_match_simulation(v, seed):
    w = witness_for(v, seed)
    exact = output_state(v, w).to_dense() ** 2
    got = query_output_masses(v, w, np.arange(1 << v.width))
    assert np.allclose(got, exact, atol=1e-12)
    assert got.sum() == pytest.approx(1.0, abs=1e-12)


def test_subset_accept_exact():
    v = ident(2)
    assert subset_accept_exact(v, SubsetSpec.of(["00"], 2)) == Fraction(1, 2)
    assert subset_accept_exact(v, SubsetSpec.of(["00", "10"], 2)) == Fraction(1)


@settings(max_examples=40, deadline=None)
@given(verifiers(max_nw=4), st.integers(0, 2**32 - 1))
def test_subset_accept_exact_matches_float(v, seed):
    rng = np.random.default_rng(seed)
    n = v.layout.n_w
    k = int(rng.integers(1, (1 << n) + 1))
    S = sorted(format(int(i), f"0{n}b") for i in rng.choice(1 << n, k, replace=False))
    exact = subset_accept_exact(v, SubsetSpec.of(S, n))
    assert float(exact) == pytest.approx(accept_prob(v, subset_state(S, n)), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(verifiers(max_nw=3, max_anc=2), st.booleans())
def test_verifier_file_roundtrip(v, had):
    v = StoqVerifier(v.circuit, v.layout, v.out, Basis.HADAMARD if had else Basis.COMPUTATIONAL)
    text = serialize_verifier(v)
    v2 = parse_verifier(text)
    assert (v2.layout, v2.out, v2.basis) == (v.layout, v.out, v.basis)
    assert serialize_verifier(v2) == text


@pytest.mark.parametrize("text", [
    "layout 2 0 0\nqubits 3\n",
    "layout 1 0 0\nout 2\nqubits 1\n",
    "layout 1 0 0\nbasis diagonal\nqubits 1\n",
    "qubits 1\nx 2\n",
])
def test_verifier_parse_errors(text):
    with pytest.raises((ParseError, ValueError)):
        parse_verifier(text)
