"""Acceptance criteria 1-14, one test each.

Every test records a ``CRITERION n: PASS|FAIL`` line that the terminal summary
prints (see ``conftest.py``); running this file as a script prints them too.
"""

import math

import mpmath
import numpy as np
import pytest

from helpers import chart, geoms, record, vectorial, weights
from tmgeom.catalog import catalog
from tmgeom.connection_tm import (
    oracle_difference,
    pullback_sum_torsion_residual,
    vertical_pair_defect,
    zero_section_defect,
)
from tmgeom.contact import contact_check, sphere_point, tashiro
from tmgeom.dynamics import circle_trajectory, horizontality_residual, integrate_geodesic
from tmgeom.expr import DomainError, eval_jet2, evaluate, parse
from tmgeom.forms import exterior_d, max_difference
from tmgeom.geometry_base import base_jets, tensor_inner, torsion_decompose
from tmgeom.hermitian import conformal_residual, d_omega, liouville_residual, mu_form, nijenhuis, omega
from tmgeom.metrics_tm import f2_difference_residual, k_tensor, parallel_check, weighted_jet

POINTS = 100
CHARTS = ("flat2", "flat3", "sphere2", "hyperbolic2")
TORSIONS = (None, "x1")


def _weight_sets(dim: int, seed: int):
    """One random constant pair and one random nonconstant pair of ``(φ1, φ2)``."""
    r = np.random.default_rng(seed)
    a, b, c, d = r.uniform(-0.5, 0.5, 4)
    return [
        weights(dim, f"{a:.6f}", f"{b:.6f}"),
        weights(dim, f"{c:.6f}*x1+0.2*sin(x2)", f"{d:.6f}*x2-0.1*x1^2"),
    ]


def _configs():
    for i, name in enumerate(CHARTS):
        for t in TORSIONS:
            ch = chart(name, t)
            for w in _weight_sets(ch.dim, i):
                yield ch, w


def _max_over(fn, ch, w, count=POINTS, seed=0, vscale=1.0):
    return max(fn(g) for g in geoms(ch, w, count, seed, vscale))


def _nij(g):
    return float(np.max(np.abs(nijenhuis(g))))


def _domega(g):
    return d_omega(g).max_abs()


def test_criterion_01_oracle_equivalence():
    worst = max(_max_over(oracle_difference, ch, w) for ch, w in _configs())
    ok = worst <= 1e-8
    record(1, ok, f"max |structural - Levi-Civita of G| = {worst:.2e} (<= 1e-8)")
    assert ok


def test_criterion_02_pullback_torsion():
    worst = max(_max_over(pullback_sum_torsion_residual, ch, w) for ch, w in _configs())
    ok = worst <= 1e-10
    record(2, ok, f"max torsion residual = {worst:.2e} (<= 1e-10)")
    assert ok


def test_criterion_03_liouville():
    worst = max(_max_over(liouville_residual, ch, w) for ch, w in _configs())

    def lc(g):
        return max_difference(exterior_d(mu_form(g)), omega(g, "S"))

    worst_lc = max(_max_over(lc, chart(name), weights(chart(name).dim)) for name in CHARTS)
    ok = worst <= 1e-10 and worst_lc <= 1e-10
    record(3, ok, f"dmu - omegaS - mu.T = {worst:.2e}; T=None dmu - omegaS = {worst_lc:.2e} (<= 1e-10)")
    assert ok


def test_criterion_04_conformal():
    worst = max(_max_over(conformal_residual, ch, w) for ch, w in _configs())
    ok = worst <= 1e-13
    record(4, ok, f"omegaG - e^psibar omegaS = {worst:.2e} (<= 1e-13)")
    assert ok


# weights (φ1, φ2) on flat2; the torsion potential is ψ = φ2 - φ1 or ψ̄ = φ2 + φ1
PSI_WEIGHTS = (("0", "x1"), ("0.3*x2", "0.2*x1-0.1*x2"), ("0", "0.5*(x1^2-x2^2)"), ("0.2*x1*x2", "0.1*x1"))


def test_criterion_05_nijenhuis():
    integrable = 0.0
    for p1, p2 in PSI_WEIGHTS:
        ch = chart("flat2", f"({p2})-({p1})")
        integrable = max(integrable, _max_over(_nij, ch, weights(2, p1, p2)))
    w = weights(2, "0.1*x1", "0.2*x2")
    sphere = min(_max_over(_nij, chart("sphere2", t), w) for t in (None, "x1", "0.2*x2-0.1*x1"))
    flat_lc = min(_max_over(_nij, chart(n), weights(chart(n).dim, "0", "x1")) for n in ("flat2", "flat3"))
    ok = integrable <= 1e-8 and sphere >= 1e-3 and flat_lc >= 1e-3
    record(
        5,
        ok,
        f"flat + dpsi^1: {integrable:.2e} (<= 1e-8); sphere: {sphere:.2e}, "
        f"flat LC nonconstant psi: {flat_lc:.2e} (>= 1e-3)",
    )
    assert ok


def test_criterion_06_d_omega():
    closed = 0.0
    for name in ("flat2", "sphere2"):
        for p1, p2 in PSI_WEIGHTS:
            ch = chart(name, f"({p2})+({p1})")
            closed = max(closed, _max_over(_domega, ch, weights(2, p1, p2)))
    lc_const = max(
        _max_over(_domega, chart(n), weights(chart(n).dim, "0.3*x1", "-0.3*x1")) for n in CHARTS
    )
    lc_var = min(_max_over(_domega, chart(n), weights(chart(n).dim, "0.3*x1", "0.2*x2")) for n in CHARTS)
    ok = closed <= 1e-9 and lc_const <= 1e-9 and lc_var >= 1e-4
    record(
        6,
        ok,
        f"T = dpsibar^1: {closed:.2e} (<= 1e-9); LC f1f2 const: {lc_const:.2e} (<= 1e-9); "
        f"LC f1f2 nonconst: {lc_var:.2e} (>= 1e-4)",
    )
    assert ok


def test_criterion_07_flat_kaehler():
    worst = 0.0
    for name in ("flat2", "flat3", "flat4"):
        ch = chart(name)
        w = weights(ch.dim, "0.2", "-0.4")
        for g in geoms(ch, w, POINTS):
            G = weighted_jet(g)
            worst = max(worst, _nij(g), _domega(g), float(np.max(np.abs(G.der))))
    ok = worst <= 1e-12
    record(7, ok, f"max(N, d omegaG, dG) = {worst:.2e} (<= 1e-12)")
    assert ok


def test_criterion_08_contact():
    worst = math.inf
    for name in CHARTS:
        for t in TORSIONS:
            ch = chart(name, t)
            for radius in ("1", "1+0.2*sin(x1)"):
                w = weights(ch.dim, radius=radius)
                for g in geoms(ch, w, POINTS, seed=8):
                    sp = sphere_point(ch, w, g.x, g.v)
                    worst = min(worst, contact_check(ch, w, sp))
    ok = worst > 1e-6
    record(8, ok, f"min normalized |mu^(dmu)^n| = {worst:.3e} (> 1e-6)")
    assert ok


def test_criterion_09_tashiro():
    alg, deta_lc, deta_t = 0.0, 0.0, math.inf
    for name in CHARTS:
        for t in TORSIONS:
            ch = chart(name, t)
            for r in (1.0, 0.5, 2.0):
                w = weights(ch.dim, radius=repr(r))
                top = 0.0
                for g in geoms(ch, w, POINTS, seed=9):
                    _, res = tashiro(ch, r, sphere_point(ch, w, g.x, g.v))
                    alg = max(alg, res["phi_squared"], res["phi_zeta"], res["eta_zeta"], res["compatible"])
                    if r == 1.0:
                        top = max(top, res["d_eta"])
                if r == 1.0:
                    if t is None:
                        deta_lc = max(deta_lc, top)
                    else:
                        deta_t = min(deta_t, top)
    ok = alg <= 1e-10 and deta_lc <= 1e-9 and deta_t >= 1e-4
    record(
        9,
        ok,
        f"algebraic: {alg:.2e} (<= 1e-10); d eta, T=None: {deta_lc:.2e} (<= 1e-9); "
        f"T != 0: {deta_t:.2e} (>= 1e-4)",
    )
    assert ok


def test_criterion_10_adapted_connections():
    d_tilde = f2_prime = diff = 0.0
    k_par = k_vert = 0.0
    for ch, w in _configs():
        d_tilde = max(d_tilde, _max_over(lambda g: parallel_check(g, "d_tilde"), ch, w))
        f2_prime = max(f2_prime, _max_over(lambda g: parallel_check(g, "f2_prime"), ch, w))
        rng = np.random.default_rng(10)
        for g in geoms(ch, w, POINTS):
            X, Y = rng.normal(size=(2, g.n))
            diff = max(diff, f2_difference_residual(g, X, Y))
    for name in CHARTS:
        for t in TORSIONS:
            ch = chart(name, t)
            w = weights(ch.dim, "0.15", "0.1*x1-0.2*x2", f3=0.7)
            rng = np.random.default_rng(11)
            for g in geoms(ch, w, POINTS):
                k_par = max(k_par, parallel_check(g, "d_tilde_k"))
                X, Y = rng.normal(size=(2, g.n))
                k_vert = max(k_vert, float(np.max(np.abs(g.to_frame(k_tensor(g, X, Y))[g.m :]))))
    ok = d_tilde <= 1e-10 and k_par <= 1e-8 and k_vert <= 1e-14 and f2_prime <= 1e-10 and diff <= 1e-12
    record(
        10,
        ok,
        f"(i) {d_tilde:.2e}; (ii) {k_par:.2e}, K^v {k_vert:.2e}; (iii) {f2_prime:.2e}; difference {diff:.2e}",
    )
    assert ok


def test_criterion_11_totally_geodesic():
    const_phi2 = 0.0
    var_phi2 = math.inf
    for name in CHARTS:
        for t in TORSIONS:
            ch = chart(name, t)
            const_phi2 = max(const_phi2, _max_over(vertical_pair_defect, ch, weights(ch.dim, "0.2*x1", "0.3")))
            var_phi2 = min(var_phi2, _max_over(vertical_pair_defect, ch, weights(ch.dim, "0.2*x2", "x1")))
    flat_zero = max(
        _max_over(zero_section_defect, chart(n), weights(chart(n).dim, "0.2*x1", "0.1*x2")) for n in ("flat2", "flat3")
    )
    curved_zero = min(
        _max_over(zero_section_defect, chart(n), weights(2, "0.2*x1", "0.1*x2")) for n in ("sphere2", "hyperbolic2")
    )
    fibres_ok = const_phi2 <= 1e-10 and var_phi2 >= 1e-3
    zero_ok = flat_zero <= 1e-10 and curved_zero >= 1e-3
    ok = fibres_ok and zero_ok
    record(
        11,
        ok,
        f"fibres: grad phi2 = 0 {const_phi2:.2e} (<= 1e-10), phi2 = x1 {var_phi2:.2e} (>= 1e-3); "
        f"zero section: flat {flat_zero:.2e} (<= 1e-10), curved {curved_zero:.2e} (>= 1e-3)",
    )
    assert ok


def test_criterion_12_torsion_decomposition():
    rng = np.random.default_rng(12)
    err = 0.0
    for m in (2, 3, 4):
        for _ in range(POINTS):
            L = rng.normal(size=(m, m))
            g = L @ L.T + m * np.eye(m)
            ginv = np.linalg.inv(g)
            A = rng.normal(size=(m, m, m))
            T = A - A.transpose(1, 0, 2)
            parts = torsion_decompose(T, g)
            comps = (parts.cartan, parts.skew3, parts.vectorial)
            err = max(err, float(np.max(np.abs(sum(comps) - T))))
            for i in range(3):
                for j in range(i + 1, 3):
                    err = max(err, abs(tensor_inner(comps[i], comps[j], ginv)))
    trip = 0.0
    for name, pot in (("flat3", "x1*x2+sin(x3)"), ("sphere2", "x1^2-0.5*x2"), ("hyperbolic2", "exp(x1)*x2")):
        ch = catalog(name).with_torsion(vectorial(pot, catalog(name).dim))
        e = parse(pot, ch.dim)
        for x in ch.sample(rng, POINTS):
            bj = base_jets(ch, x)
            grad = bj.ginv.val @ eval_jet2(e, x).gradient
            trip = max(trip, float(np.max(np.abs(torsion_decompose(bj.torsion.val, bj.g.val).V - grad))))
    ok = err <= 1e-12 and trip <= 1e-12
    record(12, ok, f"reconstruction/orthogonality {err:.2e}; vectorial round trip {trip:.2e} (<= 1e-12)")
    assert ok


def test_criterion_13_geodesics():
    rng = np.random.default_rng(13)
    worst = 0.0
    for name in CHARTS:
        for t in TORSIONS:
            ch = chart(name, t)
            x0 = 0.3 * ch.sample(rng, 1)[0]
            v0 = rng.normal(size=ch.dim)
            v0 *= 0.3 / np.sqrt(v0 @ ch.metric_at(x0) @ v0)
            worst = max(worst, horizontality_residual(ch, integrate_geodesic(ch, x0, v0, 1e-3, 1000)))
    control = horizontality_residual(catalog("flat2"), circle_trajectory(0.5, 1e-3, 1000))
    ok = worst <= 1e-8 and control >= 0.9
    record(13, ok, f"geodesic lift residual {worst:.2e} (<= 1e-8); circle control {control:.3f} (>= 0.9)")
    assert ok


# --- criterion 14 --------------------------------------------------------------

_FUNCS = ("sin", "cos", "exp", "tanh")


def random_expression(rng: np.random.Generator, dim: int, depth: int) -> str:
    """Random well-defined expression on ``[-1, 1]^dim``."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return f"x{rng.integers(1, dim + 1)}"
        return f"{rng.uniform(-2, 2):.3f}"
    sub = lambda: random_expression(rng, dim, depth - 1)  # noqa: E731
    k = rng.integers(0, 9)
    if k < 2:
        return f"({sub()})+({sub()})"
    if k == 2:
        return f"({sub()})-({sub()})"
    if k == 3:
        return f"({sub()})*({sub()})"
    if k == 4:
        return f"({sub()})/(2+({sub()})^2)"
    if k == 5:
        return f"({sub()})^{rng.integers(2, 4)}"
    if k == 6:
        return f"log(1+({sub()})^2)"
    if k == 7:
        return f"sqrt(1.5+sin({sub()}))"
    return f"{_FUNCS[rng.integers(0, 4)]}({sub()})"


def fd_derivatives(e, x, h=1e-6):
    """Central differences in 40-digit arithmetic: gradient and Hessian."""
    with mpmath.workdps(40):
        xs = [mpmath.mpf(float(c)) for c in x]
        hh = mpmath.mpf(h)

        def f(*shifts):
            y = list(xs)
            for i, s in shifts:
                y[i] += s * hh
            return evaluate(e, y, lib=mpmath)

        m = len(xs)
        grad = [(f((i, 1)) - f((i, -1))) / (2 * hh) for i in range(m)]
        hess = [[None] * m for _ in range(m)]
        f0 = f()
        for i in range(m):
            hess[i][i] = (f((i, 1)) - 2 * f0 + f((i, -1))) / hh**2
            for j in range(i + 1, m):
                v = (f((i, 1), (j, 1)) - f((i, 1), (j, -1)) - f((i, -1), (j, 1)) + f((i, -1), (j, -1))) / (4 * hh**2)
                hess[i][j] = hess[j][i] = v
        return np.array([float(g) for g in grad]), np.array([[float(v) for v in row] for row in hess])


def test_criterion_14_jet_engine():
    rng = np.random.default_rng(14)
    pairs, worst = 0, 0.0
    while pairs < 1000:
        dim = int(rng.integers(1, 4))
        e = parse(random_expression(rng, dim, 3), dim)
        x = rng.uniform(-1, 1, dim)
        try:
            jet = eval_jet2(e, x)
        except (DomainError, OverflowError):
            continue
        if not np.isfinite(jet.value):
            continue
        grad, hess = fd_derivatives(e, x)
        worst = max(
            worst,
            float(np.max(np.abs(jet.gradient - grad))) / max(1.0, float(np.max(np.abs(grad)))),
            float(np.max(np.abs(jet.hessian - hess))) / max(1.0, float(np.max(np.abs(hess)))),
        )
        pairs += 1
    ok = worst <= 1e-6
    record(14, ok, f"max relative error over {pairs} pairs = {worst:.2e} (<= 1e-6)")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
