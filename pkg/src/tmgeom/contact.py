"""Tangent sphere bundles ``S_rM = {‖v‖_g = r(x)}``: tangent spaces, contact volume, Tashiro structure."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .expr import Num, eval_jet2
from .forms import AltForm, evaluate, exterior_d, wedge
from .hermitian import mu_form
from .metrics_tm import WeightSpec, sasaki_jet
from .tm_bundle import TMGeometry, TMPoint, at, one_forms


class DegenerateBasis(ValueError):
    pass


@dataclass(frozen=True)
class SpherePoint:
    point: TMPoint
    basis: np.ndarray  # columns span T_p S_rM, shape (2m, 2m-1)


def _radius(weights, x):
    """``r`` at ``x``; ``None`` weights mean the unit sphere bundle."""
    if weights is None:
        return eval_jet2(Num(1.0), x)
    return eval_jet2(weights.radius, x)


def radius_jet(geom: TMGeometry) -> tuple[float, np.ndarray]:
    j = _radius(geom.weights, geom.x)
    return float(j.value), j.gradient


def gamma_form(geom: TMGeometry) -> np.ndarray:
    """``ξ♭ - r dr`` as a coordinate covector; its kernel is ``T S_rM``."""
    r, dr = radius_jet(geom)
    xi_flat, _ = one_forms(geom)
    out = xi_flat.copy()
    out[: geom.m] -= r * dr
    return out


def kernel_basis(covector: np.ndarray) -> np.ndarray:
    """Orthonormal (Euclidean) basis of the kernel of a nonzero covector."""
    _, _, vt = np.linalg.svd(np.asarray(covector, dtype=float)[None, :])
    return vt[1:].T


def sphere_point(chart, weights, x, v) -> SpherePoint:
    """Rescale ``v`` to ``‖v‖_g = r(x)`` and attach a basis of the tangent space."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    r = _radius(weights, x).value
    g = chart.metric_at(x)
    v = r * v / np.sqrt(v @ g @ v)
    geom = at(chart, x, v, weights)
    return SpherePoint(geom.point, kernel_basis(gamma_form(geom)))


def sphere_sample(chart, weights, x, seed) -> SpherePoint:
    rng = np.random.default_rng(seed)
    return sphere_point(chart, weights, x, rng.normal(size=chart.dim))


def contact_form(geom: TMGeometry) -> AltForm:
    """``μ ∧ (dμ)^n`` with ``n = m - 1``."""
    mu = mu_form(geom, second_order=False)
    dmu = AltForm(geom.n, 2, exterior_d(mu).coeffs)
    mu0 = AltForm(geom.n, 1, mu.coeffs)
    return reduce(wedge, [dmu] * (geom.m - 1), mu0)


def gram_volume(geom: TMGeometry, basis: np.ndarray) -> float:
    G = sasaki_jet(geom).val
    return float(np.sqrt(np.linalg.det(basis.T @ G @ basis)))


def contact_check(chart, weights, sp: SpherePoint) -> float:
    """``|μ∧(dμ)^n|`` on the basis, divided by the basis' Sasaki Gram volume."""
    if chart.dim < 2:
        raise ValueError("contact volume needs dim M >= 2")
    geom = TMGeometry(chart, sp.point, weights)
    vol = gram_volume(geom, sp.basis)
    if not vol > 1e-14:
        raise DegenerateBasis("tangent basis is degenerate")
    return abs(evaluate(contact_form(geom), sp.basis)) / vol


# --- Tashiro structure ----------------------------------------------------------


@dataclass(frozen=True)
class Tashiro:
    gt: np.ndarray  # g^S / 4
    eta: np.ndarray  # μ / (2r)
    phi: np.ndarray  # θ - θ^t - ξ⊗μ / r²
    zeta: np.ndarray  # (2/r) θ^t ξ


def tashiro_structure(geom: TMGeometry, r: float) -> Tashiro:
    _, mu = one_forms(geom)
    xi = geom.xi
    phi = geom.theta.val - geom.theta_t.val - np.outer(xi, mu) / r**2
    zeta = (2.0 / r) * (geom.theta_t.val @ xi)
    return Tashiro(sasaki_jet(geom).val / 4.0, mu / (2.0 * r), phi, zeta)


def tashiro(chart, r_const: float, sp: SpherePoint) -> tuple[Tashiro, dict]:
    """The quadruple at ``sp`` and the residuals of its identities on ``T_p S_rM``."""
    geom = TMGeometry(chart, sp.point, WeightSpec(radius=Num(float(r_const))))
    t = tashiro_structure(geom, r_const)
    W = sp.basis
    n = geom.n
    eye = np.eye(n)
    res = {
        "phi_squared": np.max(np.abs((t.phi @ t.phi + eye - np.outer(t.zeta, t.eta)) @ W)),
        "phi_zeta": np.max(np.abs(t.phi @ t.zeta)),
        "eta_zeta": abs(t.eta @ t.zeta - 1.0),
        "eta_dual": np.max(np.abs((t.eta - t.gt @ t.zeta) @ W)),
        "compatible": np.max(
            np.abs(W.T @ (t.phi.T @ t.gt @ t.phi - t.gt + np.outer(t.eta, t.eta)) @ W)
        ),
    }
    dmu = exterior_d(mu_form(geom, second_order=False)).dense()
    d_eta = dmu / (2.0 * r_const)
    res["d_eta"] = np.max(np.abs(W.T @ (d_eta - 2.0 * t.gt @ t.phi) @ W))
    return t, {k: float(v) for k, v in res.items()}
