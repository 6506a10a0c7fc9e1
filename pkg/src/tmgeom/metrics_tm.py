"""Natural metrics on TM and the metric connections adapted to them.

Metrics are assembled as frame-basis bilinear forms and carried to the
induced coordinates; every result keeps exact first derivatives over the
2m coordinates so that parallelism can be measured without finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import Expr, Num, eval_jet2
from .geometry_base import RiemannianChart, conformal_matrix
from .jets import Jet, jblock, jeinsum
from .tm_bundle import TMGeometry, connection_coefficients, mu_jet, pullback_omega, xi_flat_jet

HYPOTHESIS_EPS = 1e-9


class HypothesisViolation(ValueError):
    """A formula was requested outside the range where it is defined."""


@dataclass(frozen=True)
class WeightSpec:
    """``f1 = exp(2 phi1)``, ``f2 = exp(2 phi2)``, constant ``f3``, radius ``r(x)``.

    ``f4``..``f6`` are only used by :func:`natural_metric`.
    """

    phi1: Expr = field(default_factory=lambda: Num(0.0))
    phi2: Expr = field(default_factory=lambda: Num(0.0))
    f3: float = 0.0
    radius: Expr = field(default_factory=lambda: Num(1.0))
    f4: float = 0.0
    f5: float = 0.0
    f6: float = 0.0

    def check(self, chart: RiemannianChart, rng: np.random.Generator, count: int = 20) -> None:
        for x in chart.sample(rng, count):
            f1 = np.exp(2.0 * eval_jet2(self.phi1, x).value)
            if not f1 + self.f3 > 0:
                raise HypothesisViolation(f"f1 + f3 must be positive, fails at {x}")
            if not eval_jet2(self.radius, x).value > 0:
                raise HypothesisViolation(f"radius must be positive, fails at {x}")


@dataclass(frozen=True)
class MetricAtPoint:
    G: np.ndarray
    G_dx: np.ndarray  # G_dx[a, b, k] = ∂G_ab/∂x^k
    G_dv: np.ndarray

    @classmethod
    def from_jet(cls, jet: Jet) -> "MetricAtPoint":
        m = jet.n // 2
        return cls(jet.val, jet.der[..., :m], jet.der[..., m:])

    @property
    def jet(self) -> Jet:
        return Jet(self.G, np.concatenate([self.G_dx, self.G_dv], axis=-1))

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.G)
        except np.linalg.LinAlgError:
            return False
        return True


def _blockdiag(a, b) -> Jet:
    m = a.shape[0]
    zero = np.zeros((m, m))
    return jblock([[a, zero], [zero, b]])


def sasaki_jet(geom: TMGeometry) -> Jet:
    return geom.frame_form(_blockdiag(geom.g, geom.g))


def weighted_jet(geom: TMGeometry) -> Jet:
    return geom.frame_form(_blockdiag(geom.f1 * geom.g, geom.f2 * geom.g))


def g_hat_jet(geom: TMGeometry) -> Jet:
    """``ĝ(X,Y) = g^S(θX,Y) + g^S(X,θY)``."""
    m = geom.m
    zero = np.zeros((m, m))
    return geom.frame_form(jblock([[zero, geom.g], [geom.g, zero]]))


def f3_metric_jet(geom: TMGeometry) -> Jet:
    """``g^{f1,f2} + f3 μ⊗μ``."""
    mu = mu_jet(geom)
    return weighted_jet(geom) + geom.weights.f3 * jeinsum("a,b->ab", mu, mu)


def sasaki(geom: TMGeometry) -> MetricAtPoint:
    return MetricAtPoint.from_jet(sasaki_jet(geom))


def weighted(geom: TMGeometry) -> MetricAtPoint:
    return MetricAtPoint.from_jet(weighted_jet(geom))


def g_hat(geom: TMGeometry) -> MetricAtPoint:
    return MetricAtPoint.from_jet(g_hat_jet(geom))


def natural_metric(geom: TMGeometry) -> MetricAtPoint:
    """``g^{f1,f2} + f3 ĝ + f4 ξ♭⊗ξ♭ + f5 ξ♭⊙μ + f6 μ⊗μ`` with ``a⊙b = a⊗b + b⊗a``.

    Definiteness is not assumed; use :meth:`MetricAtPoint.is_positive_definite`.
    """
    w = geom.weights
    xf, mu = xi_flat_jet(geom), mu_jet(geom)
    G = weighted_jet(geom) + w.f3 * g_hat_jet(geom)
    G = G + w.f4 * jeinsum("a,b->ab", xf, xf)
    G = G + w.f5 * (jeinsum("a,b->ab", xf, mu) + jeinsum("a,b->ab", mu, xf))
    G = G + w.f6 * jeinsum("a,b->ab", mu, mu)
    return MetricAtPoint.from_jet(G)


def cheeger_gromoll(geom: TMGeometry) -> MetricAtPoint:
    """``g^{1,f2} + f2 ξ♭⊗ξ♭`` with the fibre-dependent weight ``f2 = 1/(1 + ‖u‖²)``."""
    r2 = jeinsum("i,ij,j->", geom.v_jet, geom.g, geom.v_jet)
    f2 = (1.0 + r2).reciprocal()
    xf = xi_flat_jet(geom)
    G = geom.frame_form(_blockdiag(geom.g, f2 * geom.g)) + f2 * jeinsum("a,b->ab", xf, xf)
    return MetricAtPoint.from_jet(G)


# --- connections ----------------------------------------------------------------


def _block_omega(geom: TMGeometry, hh: np.ndarray, vv: np.ndarray) -> np.ndarray:
    """Frame connection array from ``hh[i, k, a]`` and ``vv[i, k, a]`` (base index a)."""
    m, n = geom.m, geom.n
    om = np.zeros((n, n, n))
    om[:m, :m, :m] = hh
    om[m:, m:, :m] = vv
    return om


def conformal_omega(geom: TMGeometry, which: str) -> np.ndarray:
    """``C[i, k, a]`` for φ1 or φ2: the extra block term ``C(X, ·)``."""
    d = geom.dphi1 if which == "phi1" else geom.dphi2
    return conformal_matrix(d, geom.base.g.val, geom.base.ginv.val)


def omega_d_tilde(geom: TMGeometry) -> np.ndarray:
    """``∇^{*,f1} ⊕ ∇^{*,f2}``: both blocks corrected by their conformal tensors."""
    base = pullback_omega(geom)[: geom.m, : geom.m, : geom.m]
    return _block_omega(geom, base + conformal_omega(geom, "phi1"), base + conformal_omega(geom, "phi2"))


def omega_d_star(geom: TMGeometry) -> np.ndarray:
    """``D* = ∇^{*,f1} ⊕ ∇^{*,f2,'}`` with ``∇^{*,f2,'}_X Y = ∇*_X Y + X(φ2) Y`` on V."""
    m = geom.m
    base = pullback_omega(geom)[:m, :m, :m]
    vv = base + np.einsum("ik,a->ika", np.eye(m), geom.dphi2)
    return _block_omega(geom, base + conformal_omega(geom, "phi1"), vv)


def k_frame(geom: TMGeometry) -> np.ndarray:
    """Frame tensor ``K[out, X, Y]`` of ``K_X Y``; horizontal-valued."""
    m, n = geom.m, geom.n
    w = geom.weights
    f1 = float(geom.f1.val)
    f3 = float(w.f3)
    r2 = geom.r2
    denom = r2 * f3 + f1
    if denom <= HYPOTHESIS_EPS:
        raise HypothesisViolation(f"r^2 f3 + f1 = {denom} is not positive")
    gv = geom.base.g.val @ geom.v
    K = np.zeros((n, n, n))
    if f3 == 0.0:
        return K
    coef = r2 * f3 * f3 / (denom * f1)
    # W(X)[k] = (f3/f1) x_v^k - coef * Ω(X) v^k with Ω(X) = <v, x_v> / r²
    W = (f3 / f1) * np.eye(m) - coef * np.outer(geom.v, gv) / r2
    K[:m, m:, :m] = np.einsum("kp,q->kpq", W, gv)
    return K


def k_tensor(geom: TMGeometry, X, Y) -> np.ndarray:
    K = k_frame(geom)
    return geom.from_frame(np.einsum("kpq,p,q->k", K, geom.to_frame(X), geom.to_frame(Y)))


def parallel_residual(G: Jet, C: np.ndarray) -> float:
    """``max |∂_a G_bc - C^d_{ab} G_dc - C^d_{ac} G_bd|`` in induced coordinates."""
    dG = G.der.transpose(2, 0, 1)
    res = dG - np.einsum("dab,dc->abc", C, G.val) - np.einsum("dac,bd->abc", C, G.val)
    return float(np.max(np.abs(res)))


def parallel_check(geom: TMGeometry, connection_tag: str) -> float:
    """Residual of the parallelism statements for the adapted connections.

    ``"d_tilde"``: ``g^{f1,f2}`` under ``∇^{*,f1} ⊕ ∇^{*,f2}``.
    ``"d_tilde_k"``: ``g^{f1,f2} + f3 μ⊗μ`` under the same connection plus ``K``.
    ``"f2_prime"``: ``f2 π*g`` on V under ``∇^{*,f2,'}``.
    """
    if connection_tag == "d_tilde":
        return parallel_residual(weighted_jet(geom), connection_coefficients(geom, omega_d_tilde(geom)))
    if connection_tag == "d_tilde_k":
        C = connection_coefficients(geom, omega_d_tilde(geom), k_frame(geom))
        return parallel_residual(f3_metric_jet(geom), C)
    if connection_tag == "f2_prime":
        m = geom.m
        zero = np.zeros((m, m))
        Gv = geom.frame_form(jblock([[zero, zero], [zero, geom.f2 * geom.g]]))
        return parallel_residual(Gv, connection_coefficients(geom, omega_d_star(geom)))
    raise ValueError(f"unknown connection tag {connection_tag!r}")


def f2_difference_residual(geom: TMGeometry, X, Y) -> float:
    """``(∇^{*,f2} - ∇^{*,f2,'})_X Y`` against ``<θ grad φ2, Y> θX - <θX, Y> θ grad φ2``."""
    m = geom.m
    diff = omega_d_tilde(geom) - omega_d_star(geom)
    c = geom.to_frame(Y)
    lhs = np.einsum("kla,a,l->k", diff, np.asarray(X, dtype=float), c)
    x_h = geom.to_frame(X)[:m]
    g = geom.base.g.val
    grad = geom.grad_phi2
    rhs = np.zeros(geom.n)
    rhs[m:] = (grad @ g @ c[m:]) * x_h - (x_h @ g @ c[m:]) * grad
    return float(np.max(np.abs(lhs - rhs)))
