"""Induced geometry of TM in the chart ``(x^1..x^m, v^1..v^m)``.

Tangent vectors to TM are arrays of length ``2m`` in the coordinate basis
``(∂/∂x^i, ∂/∂v^i)``. Tensors are built in the horizontal/vertical frame
``(H_1..H_m, V_1..V_m)`` with ``H_k = ∂/∂x^k - v^j Γ^i_{kj} ∂/∂v^i`` and
``V_i = ∂/∂v^i``, then carried to coordinates with the frame matrix ``F``
(columns are the frame vectors) and its inverse. Frame components of a vector
``X`` are ``F^{-1} X``; the first ``m`` of them equal ``dπ(X)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from types import SimpleNamespace
from typing import Callable, Optional

import numpy as np

from .expr import Num, eval_jet2
from .geometry_base import BaseJets, RiemannianChart, base_jets, curvature_from_coeffs
from .jets import Jet, jblock, jeinsum

TMJet1 = Jet


@dataclass(frozen=True)
class TMPoint:
    x: np.ndarray
    v: np.ndarray

    @classmethod
    def of(cls, x, v) -> "TMPoint":
        return cls(np.asarray(x, dtype=float), np.asarray(v, dtype=float))


@dataclass(frozen=True)
class FramePack:
    """Frame matrix ``F`` (columns H_1..H_m, V_1..V_m), its inverse, and their derivatives."""

    frame: np.ndarray
    inverse: np.ndarray
    frame_d: np.ndarray  # frame_d[:, :, a] = ∂F/∂y^a
    inverse_d: np.ndarray

    @property
    def proj_h(self) -> np.ndarray:
        """Coordinate matrix of X ↦ X^h."""
        m = len(self.frame) // 2
        return self.frame[:, :m] @ self.inverse[:m]

    @property
    def proj_v(self) -> np.ndarray:
        m = len(self.frame) // 2
        return self.frame[:, m:] @ self.inverse[m:]


class TMGeometry:
    """All induced quantities at one point of TM.

    ``weights`` is any object with ``phi1``/``phi2`` expressions (see
    :class:`tmgeom.metrics_tm.WeightSpec`); ``None`` means unit weights.
    Instances are effectively immutable; derived quantities are computed on
    first access and cached per instance.
    """

    def __init__(self, chart: RiemannianChart, point: TMPoint, weights=None):
        self.chart = chart
        self.point = point
        self.weights = weights
        self.m = chart.dim
        self.n = 2 * chart.dim
        self.x = point.x
        self.v = point.v

    # base data lifted to the 2m coordinates of TM

    @cached_property
    def base(self) -> BaseJets:
        return base_jets(self.chart, self.x)

    @cached_property
    def g(self) -> Jet:
        return self.base.g.pad(self.n)

    @cached_property
    def ginv(self) -> Jet:
        return self.base.ginv.pad(self.n)

    @cached_property
    def gamma(self) -> Jet:
        return self.base.gamma.pad(self.n)

    @cached_property
    def torsion(self) -> np.ndarray:
        """Lowered base torsion ``T[i,j,k]`` at x."""
        return self.base.torsion.val

    @cached_property
    def torsion_up(self) -> np.ndarray:
        """``T^i_{jk}``."""
        return np.einsum("il,jkl->ijk", self.base.ginv.val, self.torsion)

    @cached_property
    def curvature(self) -> np.ndarray:
        return curvature_from_coeffs(self.base.coeffs)

    @cached_property
    def curvature_low(self) -> np.ndarray:
        """``R[a, j, k, l] = g(R(∂_k,∂_l)∂_j, ∂_a)``."""
        return np.einsum("ai,ijkl->ajkl", self.base.g.val, self.curvature)

    @cached_property
    def v_jet(self) -> Jet:
        m = self.m
        der = np.zeros((m, self.n))
        der[:, m:] = np.eye(m)
        return Jet(self.v, der)

    # frames

    @cached_property
    def N(self) -> Jet:
        """``N^i_k = Γ^i_{kj} v^j`` (vertical defect of ∂/∂x^k)."""
        return jeinsum("ikj,j->ik", self.gamma, self.v_jet)

    @cached_property
    def F(self) -> Jet:
        m = self.m
        eye, zero = np.eye(m), np.zeros((m, m))
        return jblock([[eye, zero], [-self.N, eye]])

    @cached_property
    def Finv(self) -> Jet:
        m = self.m
        eye, zero = np.eye(m), np.zeros((m, m))
        return jblock([[eye, zero], [self.N, eye]])

    @cached_property
    def framepack(self) -> FramePack:
        return FramePack(self.F.val, self.Finv.val, self.F.der, self.Finv.der)

    def to_frame(self, X) -> np.ndarray:
        return self.Finv.val @ np.asarray(X, dtype=float)

    def from_frame(self, c) -> np.ndarray:
        return self.F.val @ np.asarray(c, dtype=float)

    def frame_matrix(self, M_frame) -> Jet:
        """Coordinate jet of the endomorphism with (possibly jet) frame matrix ``M_frame``."""
        return jeinsum("ak,kl,lb->ab", self.F, M_frame, self.Finv)

    def frame_form(self, B_frame) -> Jet:
        """Coordinate jet of the bilinear form with frame matrix ``B_frame``."""
        return jeinsum("ka,kl,lb->ab", self.Finv, B_frame, self.Finv)

    @cached_property
    def theta_frame(self) -> np.ndarray:
        m = self.m
        t = np.zeros((self.n, self.n))
        t[m:, :m] = np.eye(m)
        return t

    @cached_property
    def theta(self) -> Jet:
        return self.frame_matrix(self.theta_frame)

    @cached_property
    def theta_t(self) -> Jet:
        return self.frame_matrix(self.theta_frame.T)

    @cached_property
    def xi(self) -> np.ndarray:
        """The canonical vertical field ξ at (x, v), in coordinates."""
        return np.concatenate([np.zeros(self.m), self.v])

    # weights

    def _phi(self, name) -> tuple[Jet, np.ndarray]:
        e = getattr(self.weights, name, None) if self.weights is not None else None
        if e is None:
            e = Num(0.0)
        j2 = eval_jet2(e, self.x)
        return Jet(j2.value, j2.gradient).pad(self.n), j2.gradient

    @cached_property
    def phi1(self) -> Jet:
        return self._phi("phi1")[0]

    @cached_property
    def phi2(self) -> Jet:
        return self._phi("phi2")[0]

    @property
    def dphi1(self) -> np.ndarray:
        return self.phi1.der[: self.m]

    @property
    def dphi2(self) -> np.ndarray:
        return self.phi2.der[: self.m]

    @cached_property
    def grad_phi1(self) -> np.ndarray:
        return self.base.ginv.val @ self.dphi1

    @cached_property
    def grad_phi2(self) -> np.ndarray:
        return self.base.ginv.val @ self.dphi2

    @cached_property
    def f1(self) -> Jet:
        return (2.0 * self.phi1).exp()

    @cached_property
    def f2(self) -> Jet:
        return (2.0 * self.phi2).exp()

    @property
    def psi(self) -> Jet:
        return self.phi2 - self.phi1

    @property
    def psibar(self) -> Jet:
        return self.phi2 + self.phi1

    @cached_property
    def r2(self) -> float:
        """``‖v‖²_g``."""
        return float(self.v @ self.base.g.val @ self.v)


def at(chart: RiemannianChart, x, v, weights=None) -> TMGeometry:
    return TMGeometry(chart, TMPoint.of(x, v), weights)


def random_point(chart: RiemannianChart, rng: np.random.Generator, vscale: float = 1.0) -> TMPoint:
    x = chart.sample(rng, 1)[0]
    v = vscale * rng.uniform(-1.0, 1.0, chart.dim)
    return TMPoint(x, v)


# --- operations ---------------------------------------------------------------


def frames(geom: TMGeometry) -> FramePack:
    return geom.framepack


def kernel_defect(geom: TMGeometry, X) -> np.ndarray:
    """``π*∇_X ξ`` in components: ``a_2^i + v^j a_1^k Γ^i_{kj}`` for ``X = (a_1, a_2)``."""
    X = np.asarray(X, dtype=float)
    m = geom.m
    return X[m:] + np.einsum("ikj,j,k->i", geom.gamma.val, geom.v, X[:m])


def split(geom: TMGeometry, X) -> tuple[np.ndarray, np.ndarray]:
    """``X = X^h + X^v`` with ``X^v = ∇*_X ξ`` (as a vertical coordinate vector)."""
    c = geom.to_frame(X)
    m = geom.m
    ch = np.concatenate([c[:m], np.zeros(m)])
    cv = np.concatenate([np.zeros(m), c[m:]])
    return geom.from_frame(ch), geom.from_frame(cv)


def theta(geom: TMGeometry, X) -> np.ndarray:
    return geom.theta.val @ np.asarray(X, dtype=float)


def theta_t(geom: TMGeometry, X) -> np.ndarray:
    return geom.theta_t.val @ np.asarray(X, dtype=float)


def spray(geom: TMGeometry) -> np.ndarray:
    """The geodesic field ``θ^t ξ``."""
    return theta_t(geom, geom.xi)


def one_forms(geom: TMGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Covectors ``ξ^♭(X) = <ξ, X^v>`` and ``μ(X) = <ξ, θX>`` in coordinates."""
    return xi_flat_jet(geom).val, mu_jet(geom).val


def mu_jet(geom: TMGeometry) -> Jet:
    """``μ = g_ij(x) v^j dx^i``; independent of the connection."""
    m = geom.m
    gv = jeinsum("ij,j->i", geom.g, geom.v_jet)
    return jblock([[gv[:, None]], [np.zeros((m, 1))]])[:, 0]


def xi_flat_jet(geom: TMGeometry) -> Jet:
    m = geom.m
    gv = jeinsum("ij,j->i", geom.g, geom.v_jet)
    frame_cov = jblock([[np.zeros((m, 1))], [gv[:, None]]])[:, 0]
    return jeinsum("k,ka->a", frame_cov, geom.Finv)


def mu_second_order(geom: TMGeometry) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value, first and second coordinate derivatives of the coefficients of μ."""
    m, n = geom.m, geom.n
    g, dg = geom.base.g, geom.base.dg
    val = np.zeros(n)
    d1 = np.zeros((n, n))
    d2 = np.zeros((n, n, n))
    val[:m] = g.val @ geom.v
    d1[:m, :m] = np.einsum("ijk,j->ik", g.der, geom.v)
    d1[:m, m:] = g.val
    d2[:m, :m, :m] = np.einsum("ijkl,j->ikl", dg.der, geom.v)
    d2[:m, :m, m:] = dg.val.transpose(0, 2, 1)  # ∂_{x^k} ∂_{v^j} μ_i = ∂_k g_ij
    d2[:m, m:, :m] = dg.val
    return val, d1, d2


def tm_scalar_jet(geom: TMGeometry, builder: Callable[[SimpleNamespace], Jet]) -> Jet:
    """Exact first derivatives over all 2m coordinates of a scalar built from base jets.

    ``builder`` receives a namespace with TM-lifted jets ``g``, ``ginv``,
    ``gamma``, ``v`` and ``x`` and must return a scalar :class:`Jet`.
    """
    m = geom.m
    xder = np.zeros((m, geom.n))
    xder[:, :m] = np.eye(m)
    ns = SimpleNamespace(
        g=geom.g, ginv=geom.ginv, gamma=geom.gamma, v=geom.v_jet, x=Jet(geom.x, xder), m=m
    )
    out = builder(ns)
    if out.val.shape != ():
        raise ValueError("builder must return a scalar jet")
    return out


def partial_phi(geom: TMGeometry, which: str = "phi1") -> float:
    """``∂φ(x, v) = dφ_x(v) = <θ π* grad φ, ξ>``."""
    d = geom.dphi1 if which == "phi1" else geom.dphi2
    return float(d @ geom.v)


# --- pull-back style connections acting through the frame -------------------


def pullback_omega(geom: TMGeometry) -> np.ndarray:
    """Frame connection array of ``∇* ⊕ ∇*``: ``omega[k, l, a]`` is the (k, l) entry of Ω(∂_a)."""
    m, n = geom.m, geom.n
    om = np.zeros((n, n, n))
    G = geom.gamma.val  # G[i, a, k] = Γ^i_{ak}
    blk = G.transpose(0, 2, 1)  # [i, k, a]
    om[:m, :m, :m] = blk
    om[m:, m:, :m] = blk
    return om


def connection_coefficients(geom: TMGeometry, omega: np.ndarray, tensor: Optional[np.ndarray] = None) -> np.ndarray:
    """Coordinate coefficients ``C[c, a, b]`` of ``∇_{∂_a} ∂_b`` for a frame connection.

    The connection acts as ``∇_X Y = F (X(F^{-1}Y) + Ω(X) F^{-1}Y + t(F^{-1}X, F^{-1}Y))``
    where ``t`` is an optional frame-basis tensor ``tensor[k, p, q]``.
    """
    Fi = geom.Finv.val
    frame = geom.Finv.der.transpose(0, 2, 1) + np.einsum("kla,lb->kab", omega, Fi)
    if tensor is not None:
        frame = frame + np.einsum("kpq,pa,qb->kab", tensor, Fi, Fi)
    return np.einsum("ck,kab->cab", geom.F.val, frame)


def covariant(geom: TMGeometry, omega: np.ndarray, X, Y, tensor: Optional[np.ndarray] = None) -> np.ndarray:
    """``∇_X Y`` for a vector field ``Y`` given as a :class:`Jet` (or a constant coordinate field)."""
    X = np.asarray(X, dtype=float)
    if not isinstance(Y, Jet):
        Y = Jet.constant(Y, geom.n)
    c = jeinsum("kb,b->k", geom.Finv, Y)
    out = c.directional(X) + np.einsum("kla,a,l->k", omega, X, c.val)
    if tensor is not None:
        out = out + np.einsum("kpq,p,q->k", tensor, geom.to_frame(X), c.val)
    return geom.from_frame(out)


def frame_field(geom: TMGeometry, k: int) -> Jet:
    """The k-th frame vector field (H_1..H_m, V_1..V_m) as a coordinate jet."""
    return geom.F[:, k]
