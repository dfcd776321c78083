import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qclimit.field_model import (FormFactor, build_mode_set, coupling_vector, gauge_residual,
                                 gauss_radial, mode_set_from_nodes, polarization_frame)


def test_single_node_2d_frame():
    ms = mode_set_from_nodes([[0.0, 1.0]], [1.0])
    assert ms.omega[0] == 1.0
    e = ms.pol[0, 0]
    assert np.allclose(np.abs(e), [1.0, 0.0])
    assert abs(e @ ms.nodes[0]) == 0.0


def test_single_node_3d_frame():
    ms = mode_set_from_nodes([[0.0, 0.0, 2.0]], [1.0])
    assert ms.omega[0] == 2.0
    e1, e2 = ms.pol[0]
    assert abs(e1 @ e2) < 1e-15
    assert abs(e1[2]) < 1e-15 and abs(e2[2]) < 1e-15
    assert np.isclose(np.linalg.norm(e1), 1) and np.isclose(np.linalg.norm(e2), 1)


def test_annulus_weights_match_direct_integration():
    ms = build_mode_set(2, [0.5, 1.0], 4)
    assert ms.n_modes == 8
    # cells: radii [0.25, 0.75] and [0.75, 1.25]; integrate 1 over that annulus
    area, _ = integrate.dblquad(lambda r, t: r, 0, 2 * np.pi, 0.25, 1.25, epsabs=1e-13)
    assert abs(ms.weights.sum() - area) < 1e-10


def test_ordering_is_radius_then_angle():
    ms = build_mode_set(2, [0.5, 1.0], 3)
    r = np.linalg.norm(ms.nodes, axis=1)
    assert np.all(np.diff(r) >= -1e-14)
    ang = np.arctan2(ms.nodes[:3, 1], ms.nodes[:3, 0]) % (2 * np.pi)
    assert np.all(np.diff(ang) > 0)


@pytest.mark.parametrize("d", [2, 3])
def test_frame_complete_and_transverse(d):
    ms = build_mode_set(d, [0.3, 0.9, 1.7], 5)
    assert ms.frame_error() < 1e-12


def test_rejections():
    with pytest.raises(ValueError):
        build_mode_set(2, [0.0, 1.0], 4)
    with pytest.raises(ValueError):
        build_mode_set(2, [1.0], 4, dispersion="massive", mass=-1.0)
    with pytest.raises(ValueError):
        build_mode_set(4, [1.0], 4)
    with pytest.raises(ValueError):
        build_mode_set(2, [1.0], 0)


def test_dispersion_rules(tmp_path):
    ms = build_mode_set(2, [1.0, 2.0], 2, dispersion="massive", mass=0.5)
    assert np.allclose(ms.omega, np.sqrt(np.repeat([1.0, 2.0], 2) ** 2 + 0.25))
    p = tmp_path / "disp.csv"
    p.write_text("k,omega\n0.5,1.0\n3.0,2.0\n")
    ms = build_mode_set(2, [0.5, 1.75], 2, dispersion="table", table=p)
    assert np.allclose(ms.omega, [1.0, 1.0, 1.5, 1.5])


def test_angular_refinement_reduces_error():
    # radial test function: the angular rule is exact at every resolution
    r, w = gauss_radial(40, 8.0, 0.0, 2)
    radial = [abs(np.sum(build_mode_set(2, r, n, radial_weights=w).weights
                         * np.exp(-r.repeat(n) ** 2)) - np.pi) for n in (1, 2, 4, 8)]
    assert max(radial) < 1e-12
    # off-centre Gaussian in 3d: error shrinks with the angular resolution
    r, w = gauss_radial(40, 9.0, 0.0, 3)
    a = np.array([0.3, 0.2, 0.5])
    errs = []
    for n in (2, 4, 6, 8):
        ms = build_mode_set(3, r, n, radial_weights=w)
        errs.append(abs(np.sum(ms.weights * np.exp(-np.sum((ms.nodes - a) ** 2, axis=1))) - np.pi**1.5))
    assert all(b < a_ or b < 1e-12 for a_, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-8


def test_gauge_residual_cases():
    ms = build_mode_set(2, [0.5, 1.2], 6)
    X = np.random.default_rng(0).uniform(0, 1, (7, 2))
    assert gauge_residual(ms, FormFactor.gaussian_charge(), X) <= 1e-8
    assert gauge_residual(ms, FormFactor.constant(np.ones(ms.n_modes)), X) == 0.0

    def bad(x, ms):
        return x @ ms.pol[:, 0, :].T + 0j

    assert np.isclose(gauge_residual(ms, FormFactor([bad]), X), 1.0, atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(st.floats(0, 2 * np.pi), st.integers(0, 2**31 - 1))
def test_gauge_residual_rotation_invariant_3d(theta, seed):
    ms = build_mode_set(3, [0.7, 1.4], 3)
    c, s = np.cos(theta), np.sin(theta)
    pol = ms.pol.copy()
    rot = np.stack([c * pol[:, 0] + s * pol[:, 1], -s * pol[:, 0] + c * pol[:, 1]], axis=1)
    ms2 = type(ms)(3, ms.nodes, ms.weights, ms.omega, rot)
    X = np.random.default_rng(seed).uniform(0, 1, (4, 3))

    def lam(x, ms_):
        return (x @ ms_.nodes.T) ** 2 + 0j  # x-dependent, gauge-violating

    ff = FormFactor([lam])
    # the per-mode residual vector is rotated, its maximum over gamma need not match,
    # but the Euclidean norm over gamma is frame independent
    def norms(m):
        h = 1e-5
        out = []
        for x in X:
            g = np.stack([(ff.lam_at(0, x + h * e, m) - ff.lam_at(0, x - h * e, m))[0] / (2 * h)
                          for e in np.eye(3)], axis=1)
            out.append(np.linalg.norm(np.einsum("mi,mgi->mg", g, m.pol), axis=1))
        return np.array(out)
    assert np.allclose(norms(ms), norms(ms2), atol=1e-7)
    assert gauge_residual(ms2, FormFactor.gaussian_charge(), X) <= 1e-8


def test_coupling_vector_examples():
    ms = mode_set_from_nodes([[0.0, 1.0]], [1.0])
    amps, dirs = coupling_vector(ms, FormFactor.constant([0.0]), 0, [0.1, 0.2])
    assert np.all(amps == 0)
    amps, dirs = coupling_vector(ms, FormFactor.constant([1.0]), 0, [0.1, 0.2])
    assert amps.shape == (1,) and amps[0] == 1.0
    assert np.allclose(dirs[0], ms.pol[0, 0])
    ms = mode_set_from_nodes([[1.0, 0.0]], [0.3])
    amps, _ = coupling_vector(ms, FormFactor.gaussian_charge(), 0, [0.0, 0.0])
    assert np.isclose(amps[0], np.sqrt(0.3) * 0.6065306597126334)


def test_coupling_vector_domain():
    ms = mode_set_from_nodes([[1.0, 0.0]], [1.0])
    ff = FormFactor.gaussian_charge(domain=([0, 0], [1, 1]))
    with pytest.raises(ValueError):
        coupling_vector(ms, ff, 0, [1.5, 0.5])


def test_finiteness_of_weighted_norm():
    ms = build_mode_set(2, [0.2, 0.8, 1.6], 8)
    lam = FormFactor.gaussian_charge().lam_at(0, np.zeros((1, 2)), ms)[0]
    val = np.sum(ms.weights * (ms.omega + 1 / ms.omega) * np.abs(lam) ** 2)
    assert np.isfinite(val)


def test_mode_set_immutable_and_hash():
    ms = build_mode_set(2, [1.0], 3)
    with pytest.raises(ValueError):
        ms.weights[0] = 2.0
    assert ms.digest == build_mode_set(2, [1.0], 3).digest
    assert ms.digest != build_mode_set(2, [1.0], 4).digest


def test_polarization_frame_pole():
    e = polarization_frame([[0.0, 0.0, -3.0]])[0]
    assert np.allclose(e[0], [1, 0, 0])
