import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qclimit.field_model import mode_set_from_nodes
from qclimit.fock import (FockSpace, annihilation, coherent_state, creation, dgamma, number_state,
                          required_nmax)
from qclimit.measures import field_energy
from qclimit.wick import (PolySymbol, WignerMeasure, classical_expectation, evaluate, quantize,
                          semiclassical_gap)


DEGREES = [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1)]


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


# ---- symbols -----------------------------------------------------------------------------------

def test_evaluate_examples():
    assert np.isclose(evaluate(PolySymbol.quadratic_form(np.ones(3)), [1, 1j, 0]), 2)
    xi = PolySymbol.from_product(xis=[[1, 0, 0]])
    assert evaluate(xi, [3 + 4j, 0, 0]) == 3 + 4j
    sq = PolySymbol.from_product(xis=[[1, 0], [1, 0]])
    assert np.isclose(evaluate(sq, [1 + 1j, 0]), 2j)


def test_symmetry_enforced():
    k = np.zeros((2, 2), complex)
    k[0, 1] = 1
    with pytest.raises(ValueError):
        PolySymbol(2, 0, k)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(0, 2), st.integers(0, 2),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False))
def test_homogeneity(seed, p, q, t):
    if p + q == 0:
        return
    rng = np.random.default_rng(seed)
    sym = PolySymbol.from_product([cvec(rng, 3) for _ in range(q)], [cvec(rng, 3) for _ in range(p)])
    assert sym.symmetry_error() <= 1e-12
    z = cvec(rng, 3)
    lhs = evaluate(sym, t * z)
    rhs = t**p * np.conj(t) ** q * evaluate(sym, z)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))


# ---- quantization ------------------------------------------------------------------------------

def test_quantize_correspondences():
    rng = np.random.default_rng(0)
    fs = FockSpace(3, 6, 0.2)
    xi = cvec(rng, 3)
    A = quantize(fs, PolySymbol.from_product(xis=[xi])).toarray()
    assert rel_err(A, annihilation(fs, xi).toarray()) <= 1e-12
    Ad = quantize(fs, PolySymbol.from_product(etas=[xi])).toarray()
    assert rel_err(Ad, creation(fs, xi).toarray()) <= 1e-12
    N = quantize(fs, PolySymbol.quadratic_form(np.ones(3))).toarray()
    assert rel_err(N, dgamma(fs, np.ones(3)).toarray()) <= 1e-12


def test_number_symbol_eigenvalue():
    fs = FockSpace(1, 4, 0.1)
    op = quantize(fs, PolySymbol.quadratic_form([1.0]))
    assert np.isclose(op.expectation(number_state(fs, [3])).real, 0.3, rtol=1e-14)


def test_zero_kernel_and_degree_overflow():
    fs = FockSpace(2, 3, 0.5)
    z = quantize(fs, PolySymbol(1, 1, np.zeros((2, 2))))
    assert z.matrix.nnz == 0
    cubic = PolySymbol.from_product(etas=[[1, 0]], xis=[[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        quantize(fs, cubic)
    with pytest.warns(UserWarning):
        quantize(fs, cubic, max_degree=3)


def test_dense_quadratic_form_is_dgamma_generalization():
    rng = np.random.default_rng(7)
    fs = FockSpace(3, 4, 0.25)
    T = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    op = quantize(fs, PolySymbol.quadratic_form(T)).toarray()
    e = np.eye(3)
    ref = sum(T[j, i] * (creation(fs, e[j]) @ annihilation(fs, e[i])).toarray()
              for i in range(3) for j in range(3))
    assert rel_err(op, ref) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(DEGREES))
def test_products_match_fock_matrices(seed, pq):
    p, q = pq
    rng = np.random.default_rng(seed)
    fs = FockSpace(3, 6, 0.125)
    etas = [cvec(rng, 3) for _ in range(q)]
    xis = [cvec(rng, 3) for _ in range(p)]
    ref = np.eye(fs.dim, dtype=complex)
    for e in etas:
        ref = ref @ creation(fs, e).toarray()
    for x in xis:
        ref = ref @ annihilation(fs, x).toarray()
    op = quantize(fs, PolySymbol.from_product(etas, xis))
    assert rel_err(op.toarray(), ref) <= 1e-12
    assert op.tail == (q > p)  # only raising symbols can leave the space


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.complex_numbers(max_magnitude=3, allow_nan=False))
def test_quantize_linear(seed, c):
    rng = np.random.default_rng(seed)
    fs = FockSpace(2, 4, 0.2)
    s1 = PolySymbol.from_product([cvec(rng, 2)], [cvec(rng, 2)])
    s2 = PolySymbol.from_product([cvec(rng, 2)], [cvec(rng, 2)])
    lhs = quantize(fs, s1 * c + s2).toarray()
    rhs = c * quantize(fs, s1).toarray() + quantize(fs, s2).toarray()
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(DEGREES))
def test_adjoint_covariance(seed, pq):
    p, q = pq
    rng = np.random.default_rng(seed)
    fs = FockSpace(2, 5, 0.3)
    sym = PolySymbol.from_product([cvec(rng, 2) for _ in range(q)], [cvec(rng, 2) for _ in range(p)])
    lhs = quantize(fs, sym).toarray().conj().T
    rhs = quantize(fs, sym.adjoint()).toarray()
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


@pytest.mark.parametrize("eps", [0.5, 0.1, 0.02])
def test_two_zero_sector_scaling(eps):
    fs = FockSpace(1, 8, eps)
    op = quantize(fs, PolySymbol.from_product(xis=[[1.0], [1.0]]))
    for n in range(2, 9):
        val = np.vdot(number_state(fs, [n - 2]), op @ number_state(fs, [n]))
        assert np.isclose(val, eps * np.sqrt(n * (n - 1)), rtol=1e-13)


def test_tail_flag():
    fs = FockSpace(2, 3, 0.5)
    assert not quantize(fs, PolySymbol.from_product(xis=[[1, 0]])).tail
    assert quantize(fs, PolySymbol.from_product(etas=[[1, 0]])).tail
    assert not quantize(fs, PolySymbol.quadratic_form([1, 1])).tail


# ---- measures and the semiclassical gap --------------------------------------------------------

def test_classical_expectation_examples():
    rng = np.random.default_rng(2)
    z = cvec(rng, 2)
    sym = PolySymbol.from_product([cvec(rng, 2)], [cvec(rng, 2)])
    assert classical_expectation(WignerMeasure.point_mass(z), sym) == evaluate(sym, z)
    odd = PolySymbol.from_product(xis=[cvec(rng, 2)])
    assert abs(classical_expectation(WignerMeasure([z, -z], [0.5, 0.5]), odd)) < 1e-15
    circ = WignerMeasure.circle([0.6, 0.8j])
    assert np.isclose(classical_expectation(circ, PolySymbol.quadratic_form([1, 1])), 1.0)


def test_measure_validation_and_json(tmp_path):
    with pytest.raises(ValueError):
        WignerMeasure([[1.0], [2.0]], [0.5, 0.6])
    with pytest.raises(ValueError):
        WignerMeasure([[1.0], [2.0]], [1.5, -0.5])
    mu = WignerMeasure([[1 + 2j, 0.5], [-1j, 3]], [0.25, 0.75])
    d = mu.to_dict()
    assert set(d["points"][0]) == {"weight", "re", "im"}
    mu.save(tmp_path / "mu.json")
    back = WignerMeasure.load(tmp_path / "mu.json")
    assert np.array_equal(back.points, mu.points) and np.array_equal(back.weights, mu.weights)


def test_field_energy_is_classical_expectation():
    rng = np.random.default_rng(4)
    ms = mode_set_from_nodes([[0.5, 0.0], [0.0, 1.5]], [0.3, 0.7])
    mu = WignerMeasure([cvec(rng, 2), cvec(rng, 2)], [0.4, 0.6])
    sym = PolySymbol.quadratic_form(ms.fock_omega)
    assert field_energy(mu, ms) == pytest.approx(classical_expectation(mu, sym).real, rel=1e-15)


def coherent_family(z, eps_list, tail=1e-12):
    spaces = [FockSpace(len(z), required_nmax(np.vdot(z, z).real, e, tail), e) for e in eps_list]
    return spaces, [coherent_state(fs, z, tail) for fs in spaces]


def test_semiclassical_gap_coherent():
    z = np.array([0.3 + 0.1j, -0.2j])
    eps = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
    spaces, states = coherent_family(z, eps)
    mu = WignerMeasure.point_mass(z)
    for sym in (PolySymbol.from_product(xis=[[1.0, 0.5j]]), PolySymbol.quadratic_form([1, 1])):
        rows = semiclassical_gap(spaces[::-1], states[::-1], mu, sym)
        assert [r[0] for r in rows] == eps
        assert all(g <= 1e-10 for _, g in rows)


def test_semiclassical_gap_number_family():
    eps = [1 / 4, 1 / 8, 1 / 16]
    spaces = [FockSpace(1, int(1 / e) + 1, e) for e in eps]
    states = [number_state(fs, [int(1 / fs.eps)]) for fs in spaces]
    rows = semiclassical_gap(spaces, states, WignerMeasure.circle([1.0]), PolySymbol.quadratic_form([1]))
    assert all(g <= 1e-10 for _, g in rows)


def test_semiclassical_gap_rejects_unnormalized():
    fs = FockSpace(1, 2, 0.5)
    with pytest.raises(ValueError):
        semiclassical_gap([fs], [2 * number_state(fs, [0])], WignerMeasure.point_mass([0]),
                          PolySymbol.quadratic_form([1]))
