from math import factorial

import numpy as np
import pytest

from helpers import chart, geoms, weights
from tmgeom.catalog import catalog
from tmgeom.contact import (
    DegenerateBasis,
    SpherePoint,
    contact_check,
    contact_form,
    gamma_form,
    kernel_basis,
    radius_jet,
    sphere_point,
    sphere_sample,
    tashiro,
)
from tmgeom.forms import evaluate
from tmgeom.geometry_base import chart_from_strings
from tmgeom.tm_bundle import TMGeometry, at, mu_jet

CASES = [("flat2", None), ("flat3", "x1"), ("sphere2", None), ("sphere2", "x1*x2"), ("hyperbolic2", "x2")]
RADII = ["1", "0.8+0.2*sin(x1)", "1+0.3*x1*x2"]


@pytest.mark.parametrize("name, pot", CASES)
@pytest.mark.parametrize("radius", RADII)
def test_sphere_points_and_tangent_basis(name, pot, radius):
    ch = chart(name, pot)
    w = weights(ch.dim, radius=radius)
    for g in geoms(ch, None, 10):
        sp = sphere_point(ch, w, g.x, g.v)
        geom = TMGeometry(ch, sp.point, w)
        r, _ = radius_jet(geom)
        assert np.sqrt(geom.r2) == pytest.approx(r, rel=1e-13)
        assert sp.basis.shape == (geom.n, geom.n - 1)
        assert np.max(np.abs(gamma_form(geom) @ sp.basis)) <= 1e-12
        np.testing.assert_allclose(sp.basis.T @ sp.basis, np.eye(geom.n - 1), atol=1e-13)


def test_radius_differential_is_horizontal():
    # along a curve x(t) with v parallel transported, ‖v‖ is constant, so γ only sees r dr
    ch = catalog("sphere2")
    w = weights(2, radius="1+0.2*x1")
    sp = sphere_point(ch, w, [0.1, 0.2], [0.3, 0.4])
    geom = TMGeometry(ch, sp.point, w)
    H = geom.F.val[:, 0]
    r, dr = radius_jet(geom)
    assert gamma_form(geom) @ H == pytest.approx(-r * dr[0], abs=1e-14)
    assert gamma_form(geom) @ geom.F.val[:, 2] == pytest.approx(geom.point.v @ geom.base.g.val[:, 0], abs=1e-14)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_flat_unit_contact_value(m):
    ch = catalog(f"flat{m}")
    for g in geoms(ch, None, 5):
        assert contact_check(ch, None, sphere_point(ch, None, g.x, g.v)) == pytest.approx(factorial(m - 1), rel=1e-12)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_contact_value_on_adapted_frame(m):
    """On ``(H_1..H_n, V_1..V_n, H_m)`` at ``v = e_m`` the value is ``(-1)^(n(n+1)/2) n!``."""
    n = m - 1
    v = np.zeros(m)
    v[-1] = 1.0
    g = at(catalog(f"flat{m}"), np.zeros(m), v)
    F = g.F.val
    W = np.column_stack([F[:, :n], F[:, m : m + n], F[:, m - 1]])
    assert evaluate(contact_form(g), W) == pytest.approx((-1) ** (n * (n + 1) // 2) * factorial(n), abs=1e-12)


@pytest.mark.parametrize("name, pot", CASES)
@pytest.mark.parametrize("radius", RADII)
def test_contact_value_is_positive(name, pot, radius):
    ch = chart(name, pot)
    w = weights(ch.dim, radius=radius)
    for g in geoms(ch, None, 10):
        assert contact_check(ch, w, sphere_point(ch, w, g.x, g.v)) > 1e-6


@pytest.mark.parametrize("name, pot", CASES)
def test_normalized_value_ignores_basis_choice(name, pot, rng):
    ch = chart(name, pot)
    w = weights(ch.dim, radius="1+0.1*x1")
    for g in geoms(ch, None, 5):
        sp = sphere_point(ch, w, g.x, g.v)
        A = rng.normal(size=(sp.basis.shape[1],) * 2) + 3 * np.eye(sp.basis.shape[1])
        other = SpherePoint(sp.point, sp.basis @ A)
        assert contact_check(ch, w, other) == pytest.approx(contact_check(ch, w, sp), rel=1e-10)


def test_contact_form_ignores_torsion():
    plain, twisted = catalog("sphere2"), chart("sphere2", "x1^2+x2")
    for g in geoms(plain, None, 5):
        a = contact_form(g)
        b = contact_form(at(twisted, g.x, g.v))
        assert max(abs(a.coeffs[k] - b.coeffs[k]) for k in a.coeffs) <= 1e-12
        np.testing.assert_array_equal(mu_jet(g).val, mu_jet(at(twisted, g.x, g.v)).val)


def test_degenerate_inputs():
    ch = catalog("flat2")
    sp = sphere_point(ch, None, [0.0, 0.0], [1.0, 0.0])
    with pytest.raises(DegenerateBasis):
        contact_check(ch, None, SpherePoint(sp.point, np.zeros_like(sp.basis)))
    line = chart_from_strings([["1"]], [(-1.0, 1.0)])
    lp = sphere_point(line, None, [0.2], [1.0])
    with pytest.raises(ValueError, match="dim M >= 2"):
        contact_check(line, None, lp)


def test_kernel_basis_spans_kernel(rng):
    c = rng.normal(size=6)
    K = kernel_basis(c)
    assert K.shape == (6, 5)
    assert np.max(np.abs(c @ K)) <= 1e-14


def test_sphere_sample_is_reproducible():
    ch = catalog("hyperbolic2")
    a = sphere_sample(ch, None, [0.1, 0.2], 7)
    b = sphere_sample(ch, None, [0.1, 0.2], 7)
    np.testing.assert_array_equal(a.point.v, b.point.v)
    np.testing.assert_array_equal(a.basis, b.basis)


@pytest.mark.parametrize("name", ["flat2", "flat3", "sphere2", "hyperbolic2"])
@pytest.mark.parametrize("r", [1.0, 0.5, 2.0])
def test_tashiro_algebraic_identities(name, r):
    ch = catalog(name)
    w = weights(ch.dim, radius=str(r))
    for g in geoms(ch, None, 10):
        t, res = tashiro(ch, r, sphere_point(ch, w, g.x, g.v))
        for key in ("phi_squared", "phi_zeta", "eta_zeta", "eta_dual", "compatible"):
            assert res[key] <= 1e-12, key
        np.testing.assert_allclose(t.gt, t.gt.T, atol=1e-15)


@pytest.mark.parametrize("name", ["flat2", "flat3", "sphere2", "hyperbolic2"])
def test_tashiro_contact_metric_on_unit_bundle(name):
    ch = catalog(name)
    w = weights(ch.dim)
    for g in geoms(ch, None, 10):
        _, res = tashiro(ch, 1.0, sphere_point(ch, w, g.x, g.v))
        assert res["d_eta"] <= 1e-12


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_tashiro_contact_metric_scales_with_radius(r):
    # dη = 2 g̃(·, φ·) picks up a factor r² away from the unit bundle
    ch = catalog("flat2")
    w = weights(2, radius=str(r))
    _, res = tashiro(ch, r, sphere_point(ch, w, [0.0, 0.0], [1.0, 0.0]))
    assert res["d_eta"] >= 0.1


def test_tashiro_contact_metric_needs_torsion_free_connection():
    ch = chart("sphere2", "x1")
    worst = max(tashiro(ch, 1.0, sphere_point(ch, None, g.x, g.v))[1]["d_eta"] for g in geoms(ch, None, 10))
    assert worst >= 1e-3
