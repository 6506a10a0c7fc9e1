import numpy as np
import pytest

from helpers import chart, geoms, weights
from tmgeom.catalog import catalog
from tmgeom.hermitian import (
    almost_complex,
    conformal_residual,
    d_conformal_residual,
    d_omega,
    d_omega_s_frame,
    d_omega_s_frame_residual,
    evaluate_on,
    liouville_residual,
    mu_form,
    mu_torsion_form,
    nijenhuis,
    nijenhuis_vector,
    omega,
    omega_jet,
    verdicts,
)
from tmgeom.forms import exterior_d, max_difference
from tmgeom.metrics_tm import weighted_jet
from tmgeom.tm_bundle import at

CASES = [("flat2", None), ("flat3", "x2"), ("sphere2", None), ("sphere2", "x1"), ("hyperbolic2", "x1*x2")]


def _w(dim):
    return weights(dim, "0.2*x1-0.1*x2", "0.3*sin(x2)+0.1*x1")


@pytest.mark.parametrize("name, pot", CASES)
def test_complex_structure_and_compatibility(name, pot):
    ch = chart(name, pot)
    for g in geoms(ch, _w(ch.dim), 20):
        I = almost_complex(g).val
        G = weighted_jet(g).val
        assert np.max(np.abs(I @ I + np.eye(g.n))) <= 1e-13
        assert np.max(np.abs(I.T @ G @ I - G)) <= 1e-12 * max(1.0, np.abs(G).max())
        W = omega_jet(g).val
        np.testing.assert_allclose(W, -W.T, atol=1e-12)


def test_omega_s_frame_pattern():
    g = at(catalog("flat3"), [0.1, 0.2, 0.3], [0.5, -0.4, 0.2])
    F = g.F.val
    W = F.T @ omega(g, "S").dense() @ F
    expected = np.zeros((6, 6))
    expected[:3, 3:] = -np.eye(3)
    expected[3:, :3] = np.eye(3)
    np.testing.assert_allclose(W, expected, atol=1e-15)


@pytest.mark.parametrize("name, pot", CASES)
def test_liouville_identity(name, pot):
    ch = chart(name, pot)
    for g in geoms(ch, _w(ch.dim), 20):
        assert liouville_residual(g) <= 1e-10
        if pot is None:
            assert max_difference(exterior_d(mu_form(g)), omega(g, "S")) <= 1e-10
            assert mu_torsion_form(g).max_abs() == 0.0


@pytest.mark.parametrize("name", ["flat2", "sphere2"])
def test_liouville_fails_without_torsion_term(name):
    ch = chart(name, "x1")
    worst = max(max_difference(exterior_d(mu_form(g)), omega(g, "S")) for g in geoms(ch, None, 20))
    assert worst >= 1e-3


@pytest.mark.parametrize("name, pot", CASES)
def test_second_exterior_derivative_of_mu(name, pot):
    ch = chart(name, pot)
    for g in geoms(ch, None, 10):
        assert exterior_d(exterior_d(mu_form(g))).max_abs() <= 1e-12


@pytest.mark.parametrize("name, pot", CASES)
def test_conformality_and_frame_formula(name, pot):
    ch = chart(name, pot)
    for g in geoms(ch, _w(ch.dim), 20):
        assert conformal_residual(g) <= 1e-13
        assert d_conformal_residual(g) <= 1e-10
        assert d_omega_s_frame_residual(g) <= 1e-10


def test_frame_formula_torsion_block():
    g = at(chart("flat2", "x1"), [0.2, 0.1], [0.3, 0.5])
    D = d_omega_s_frame(g)
    # hhv components equal -T_ijk; with T = dx1 ∧ 1: T[0,1,1] = 1
    assert D[0, 1, 3] == pytest.approx(-1.0, abs=1e-15)
    assert D[0, 1, 2] == pytest.approx(0.0, abs=1e-15)


def _fd_nijenhuis(ch, w, x, v, h=1e-6):
    """Nijenhuis tensor from a central-difference derivative of the structure field."""
    y = np.concatenate([x, v])
    n = len(y)
    m = n // 2
    J = almost_complex(at(ch, x, v, w)).val
    dJ = np.empty((n, n, n))
    for d in range(n):
        e = np.zeros(n)
        e[d] = h
        p, q = y + e, y - e
        dJ[:, :, d] = (almost_complex(at(ch, p[:m], p[m:], w)).val - almost_complex(at(ch, q[:m], q[m:], w)).val) / (
            2 * h
        )
    return (
        np.einsum("da,cbd->cab", J, dJ)
        - np.einsum("db,cad->cab", J, dJ)
        + np.einsum("cd,dab->cab", J, dJ)
        - np.einsum("cd,dba->cab", J, dJ)
    )


@pytest.mark.parametrize("name, pot", [("sphere2", None), ("hyperbolic2", "x1"), ("flat3", "x1*x2")])
def test_nijenhuis_against_finite_differences(name, pot):
    ch = chart(name, pot)
    w = _w(ch.dim)
    for g in geoms(ch, w, 3):
        exact = nijenhuis(g)
        fd = _fd_nijenhuis(ch, w, g.x, g.v)
        assert np.max(np.abs(exact - fd)) <= 1e-6 * max(1.0, np.abs(fd).max())
        np.testing.assert_allclose(exact, -exact.transpose(0, 2, 1), atol=1e-12)
        X, Y = np.eye(g.n)[0], np.eye(g.n)[-1]
        np.testing.assert_allclose(nijenhuis_vector(g, X, Y), exact[:, 0, -1], atol=1e-15)


@pytest.mark.parametrize("phi1, phi2", [("0", "x1"), ("0.3*x2", "0.2*x1-0.1*x2"), ("0", "0.5*(x1^2-x2^2)")])
def test_integrable_on_flat_plane_with_matching_torsion(phi1, phi2):
    ch = chart("flat2", f"({phi2})-({phi1})")
    assert max(np.abs(nijenhuis(g)).max() for g in geoms(ch, weights(2, phi1, phi2), 30)) <= 1e-8


def test_not_integrable_without_matching_torsion():
    flat = max(np.abs(nijenhuis(g)).max() for g in geoms(catalog("flat2"), weights(2, "0", "x1"), 30))
    sphere = max(np.abs(nijenhuis(g)).max() for g in geoms(catalog("sphere2"), weights(2), 30))
    assert flat >= 1e-3 and sphere >= 1e-3


@pytest.mark.parametrize("name", ["flat2", "flat3", "sphere2", "hyperbolic2"])
def test_closed_for_levi_civita_with_constant_product(name):
    ch = catalog(name)
    closed = max(d_omega(g).max_abs() for g in geoms(ch, weights(ch.dim, "0.3*x1", "-0.3*x1"), 20))
    assert closed <= 1e-9
    open_ = max(d_omega(g).max_abs() for g in geoms(ch, weights(ch.dim, "0.1*x1", "0.1*x1"), 20))
    assert open_ >= 1e-4


@pytest.mark.parametrize("name", ["flat2", "sphere2", "hyperbolic2"])
@pytest.mark.parametrize("phi1, phi2", [("0", "x1"), ("0.3*x2", "0.2*x1-0.1*x2"), ("0.1*x1*x2", "0.2*x2^2")])
def test_closedness_sign_of_vectorial_torsion(name, phi1, phi2):
    """With ``ω^S(H_i, V_j) = -g_ij`` the form closes for ``T = -dψ̄∧1``, not ``+dψ̄∧1``."""
    w = weights(2, phi1, phi2)
    minus = chart(name, f"-(({phi2})+({phi1}))")
    plus = chart(name, f"({phi2})+({phi1})")
    assert max(d_omega(g).max_abs() for g in geoms(minus, w, 20)) <= 1e-9
    assert max(d_omega(g).max_abs() for g in geoms(plus, w, 20)) >= 1e-3


def test_flat_constant_weights_kaehler():
    ch = catalog("flat3")
    for g in geoms(ch, weights(3, "0.4", "-0.1"), 20):
        assert np.abs(nijenhuis(g)).max() <= 1e-12
        assert d_omega(g).max_abs() <= 1e-12
        assert np.abs(weighted_jet(g).der).max() <= 1e-12


def test_verdict_flags():
    pts = [(g.x, g.v) for g in geoms(catalog("sphere2"), None, 10)]
    v = verdicts(catalog("sphere2"), weights(2, "0", "0.2*x1"), pts)
    assert v.samples == 10
    assert "base not flat" in v.flags()
    assert "torsion differs from dpsi^1" in v.flags()
    pts = [(g.x, g.v) for g in geoms(catalog("flat2"), None, 10)]
    v = verdicts(chart("flat2", "0.2*x1"), weights(2, "0", "0.2*x1"), pts)
    assert v.flags() == []  # phi1 = 0 makes psi and psibar coincide
    assert v.nijenhuis <= 1e-8
    assert set(v.worst_point) >= {"nijenhuis", "d_omega"}


def test_evaluate_on_top_pairing():
    g = at(catalog("flat2"), [0.0, 0.0], [1.0, 0.0])
    W = omega(g, "S")
    assert evaluate_on(W, np.eye(4)[:, [0, 2]]) == -1.0
    assert evaluate_on(W, np.eye(4)[:, [2, 0]]) == 1.0
