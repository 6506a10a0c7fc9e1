"""Geometry of the base chart: metric, metric connections with torsion, curvature.

Index conventions used throughout the package:

* ``gamma[i, j, k] = Γ^i_{jk}`` with ``∇_{∂_j} ∂_k = Γ^i_{jk} ∂_i``;
  ``gamma_dx[i, j, k, l] = ∂_l Γ^i_{jk}``.
* Torsion ``T(X, Y) = ∇_X Y - ∇_Y X - [X, Y]``, so ``T^i_{jk} = Γ^i_{jk} - Γ^i_{kj}``.
  Lowered torsion ``T[i, j, k] = g(T(∂_i, ∂_j), ∂_k)``.
* Curvature ``R(X, Y) = ∇_X ∇_Y - ∇_Y ∇_X - ∇_[X,Y]`` and
  ``R[i, j, k, l] = R^i_{jkl}`` with ``R(∂_k, ∂_l) ∂_j = R^i_{jkl} ∂_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .expr import Expr, Jet2, eval_jet2, max_index, parse
from .jets import Jet, jeinsum, jinv


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class TorsionSpec:
    """Torsion of the base connection.

    ``kind`` is ``"none"``, ``"vectorial"`` (``T(X,Y) = X(ψ)Y - Y(ψ)X`` for the
    scalar ``potential`` ψ) or ``"general"`` (lowered components
    ``components[i][j][k] = g(T(∂_i, ∂_j), ∂_k)``).
    """

    kind: str = "none"
    potential: Optional[Expr] = None
    components: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("none", "vectorial", "general"):
            raise GeometryError(f"unknown torsion kind {self.kind!r}")
        if self.kind == "vectorial" and self.potential is None:
            raise GeometryError("vectorial torsion needs a potential")
        if self.kind == "general" and self.components is None:
            raise GeometryError("general torsion needs components")

    @classmethod
    def none(cls) -> "TorsionSpec":
        return cls("none")

    @classmethod
    def vectorial(cls, potential: Expr) -> "TorsionSpec":
        return cls("vectorial", potential=potential)

    @classmethod
    def general(cls, components) -> "TorsionSpec":
        return cls("general", components=tuple(tuple(tuple(r) for r in s) for s in components))


@dataclass(frozen=True)
class RiemannianChart:
    dim: int
    metric: tuple  # Expr[dim][dim], symmetric
    domain: tuple  # ((a_1, b_1), ..., (a_m, b_m))
    torsion: TorsionSpec = field(default_factory=TorsionSpec.none)
    name: str = "chart"

    def __post_init__(self):
        m = self.dim
        if m < 1:
            raise GeometryError("dimension must be at least 1")
        if len(self.metric) != m or any(len(row) != m for row in self.metric):
            raise GeometryError("metric must be an m x m array of expressions")
        if len(self.domain) != m or any(not a < b for a, b in self.domain):
            raise GeometryError("domain must be a non-empty box with one interval per coordinate")
        exprs = [e for row in self.metric for e in row]
        if self.torsion.kind == "vectorial":
            exprs.append(self.torsion.potential)
        elif self.torsion.kind == "general":
            comps = self.torsion.components
            if len(comps) != m or any(len(s) != m or any(len(r) != m for r in s) for s in comps):
                raise GeometryError("torsion components must be m x m x m")
            exprs.extend(e for s in comps for r in s for e in r)
        for e in exprs:
            if max_index(e) > m:
                raise GeometryError(f"expression references a coordinate beyond dimension {m}")

    def with_torsion(self, torsion: TorsionSpec) -> "RiemannianChart":
        return RiemannianChart(self.dim, self.metric, self.domain, torsion, self.name)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo = np.array([a for a, _ in self.domain])
        hi = np.array([b for _, b in self.domain])
        return lo + (hi - lo) * rng.random((count, self.dim))

    def metric_at(self, x) -> np.ndarray:
        return metric_jets(self, x)[0].val

    def validate(self, rng: np.random.Generator, count: int = 20) -> None:
        """Cholesky-check the metric and torsion antisymmetry on sample points."""
        for x in self.sample(rng, count):
            g = self.metric_at(x)
            if not np.allclose(g, g.T, rtol=0, atol=1e-12):
                raise GeometryError(f"metric is not symmetric at {x}")
            try:
                np.linalg.cholesky(g)
            except np.linalg.LinAlgError:
                raise GeometryError(f"metric is not positive definite at {x}") from None
            if self.torsion.kind == "general":
                T = torsion_jet(self, x, None).val
                if np.max(np.abs(T + T.transpose(1, 0, 2))) > 1e-12:
                    raise GeometryError(f"torsion components are not antisymmetric at {x}")


def chart_from_strings(
    metric: Sequence[Sequence[str]],
    domain,
    torsion: Optional[TorsionSpec] = None,
    name: str = "chart",
) -> RiemannianChart:
    m = len(metric)
    exprs = tuple(tuple(parse(s, m) for s in row) for row in metric)
    return RiemannianChart(m, exprs, tuple(tuple(map(float, d)) for d in domain), torsion or TorsionSpec.none(), name)


@dataclass(frozen=True)
class ConnectionCoeffs:
    gamma: np.ndarray  # Γ^i_{jk}
    gamma_dx: np.ndarray  # ∂_l Γ^i_{jk}


# --- metric and connection jets ---------------------------------------------


def metric_jets(chart: RiemannianChart, x) -> tuple[Jet, Jet]:
    """Jets of ``g_ij`` (derivative ``∂_k g_ij``) and of ``∂_k g_ij`` (derivative ``∂_l∂_k g_ij``)."""
    m = chart.dim
    x = np.asarray(x, dtype=float)
    g = np.empty((m, m))
    dg = np.empty((m, m, m))
    d2g = np.empty((m, m, m, m))
    for i in range(m):
        for j in range(i, m):
            jet = eval_jet2(chart.metric[i][j], x)
            for a, b in ((i, j), (j, i)):
                g[a, b] = jet.value
                dg[a, b] = jet.gradient
                d2g[a, b] = jet.hessian
    return Jet(g, dg), Jet(dg, d2g)


def scalar_jet(e: Expr, x) -> tuple[Jet, Jet]:
    """Jets of a scalar and of its gradient (the latter carrying the Hessian)."""
    j2: Jet2 = eval_jet2(e, x)
    return Jet(j2.value, j2.gradient), Jet(j2.gradient, j2.hessian)


def levi_civita_jet(g: Jet, dg: Jet) -> Jet:
    """Koszul formula ``Γ^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{lj} - ∂_l g_{jk})`` as a jet."""
    lower = 0.5 * (jeinsum("lkj->ljk", dg) + dg - jeinsum("jkl->ljk", dg))
    return jeinsum("il,ljk->ijk", jinv(g), lower)


def torsion_jet(chart: RiemannianChart, x, g: Optional[Jet]) -> Jet:
    """Lowered torsion ``T[i,j,k] = g(T(∂_i,∂_j),∂_k)`` with its x-derivatives."""
    m = chart.dim
    spec = chart.torsion
    if spec.kind == "none":
        return Jet.constant(np.zeros((m, m, m)), m)
    if spec.kind == "vectorial":
        if g is None:
            g = metric_jets(chart, x)[0]
        _, dpsi = scalar_jet(spec.potential, x)
        a = jeinsum("i,jk->ijk", dpsi, g)
        return a - jeinsum("jik->ijk", a)
    val = np.empty((m, m, m))
    der = np.empty((m, m, m, m))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                jet = eval_jet2(spec.components[i][j][k], x)
                val[i, j, k] = jet.value
                der[i, j, k] = jet.gradient
    return Jet(val, der)


def contorsion(T: Jet, ginv: Jet) -> Jet:
    """``g^{il} K_{jkl}`` with ``K(X,Y,Z) = ½(T(X,Y,Z) - T(Y,Z,X) + T(Z,X,Y))``."""
    K = 0.5 * (T - jeinsum("klj->jkl", T) + jeinsum("ljk->jkl", T))
    return jeinsum("il,jkl->ijk", ginv, K)


@dataclass(frozen=True)
class BaseJets:
    """Everything about the base chart at one point, with exact x-derivatives."""

    x: np.ndarray
    g: Jet
    dg: Jet
    ginv: Jet
    gamma: Jet  # connection with the chart's torsion
    torsion: Jet  # lowered

    @property
    def coeffs(self) -> ConnectionCoeffs:
        return ConnectionCoeffs(self.gamma.val, self.gamma.der)


def base_jets(chart: RiemannianChart, x) -> BaseJets:
    x = np.asarray(x, dtype=float)
    g, dg = metric_jets(chart, x)
    ginv = jinv(g)
    gamma = levi_civita_jet(g, dg)
    T = torsion_jet(chart, x, g)
    if chart.torsion.kind != "none":
        gamma = gamma + contorsion(T, ginv)
    return BaseJets(x, g, dg, ginv, gamma, T)


def connection_values(chart: RiemannianChart, x) -> np.ndarray:
    """``Γ^i_{jk}`` of the chart's connection without derivative bookkeeping."""
    g, dg = metric_jets(chart, x)
    ginv = np.linalg.inv(g.val)
    d = dg.val  # d[j, k, l] = ∂_l g_jk
    lower = 0.5 * (d.transpose(0, 2, 1) + d - d.transpose(2, 0, 1))  # [l, j, k]
    gamma = np.einsum("il,ljk->ijk", ginv, lower)
    if chart.torsion.kind != "none":
        T = torsion_jet(chart, x, g).val
        K = 0.5 * (T - np.einsum("klj->jkl", T) + np.einsum("ljk->jkl", T))
        gamma = gamma + np.einsum("il,jkl->ijk", ginv, K)
    return gamma


def christoffel_lc(chart: RiemannianChart, x) -> ConnectionCoeffs:
    """Levi-Civita coefficients and their first derivatives at ``x``."""
    g, dg = metric_jets(chart, x)
    if abs(np.linalg.det(g.val)) < 1e-300:
        raise GeometryError(f"metric is singular at {x}")
    gam = levi_civita_jet(g, dg)
    return ConnectionCoeffs(gam.val, gam.der)


def connection_with_torsion(chart: RiemannianChart, x) -> ConnectionCoeffs:
    """The metric connection whose torsion is the chart's :class:`TorsionSpec`."""
    g, _ = metric_jets(chart, x)
    if abs(np.linalg.det(g.val)) < 1e-300:
        raise GeometryError(f"metric is singular at {x}")
    return base_jets(chart, x).coeffs


def torsion_from_coeffs(gamma: np.ndarray) -> np.ndarray:
    """``T^i_{jk} = Γ^i_{jk} - Γ^i_{kj}``."""
    return gamma - gamma.transpose(0, 2, 1)


def metricity_residual(gamma: np.ndarray, g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``∂_l g_ij - Γ^k_{li} g_kj - Γ^k_{lj} g_ik`` indexed ``[l, i, j]``."""
    return (
        dg.transpose(2, 0, 1)
        - np.einsum("kli,kj->lij", gamma, g)
        - np.einsum("klj,ik->lij", gamma, g)
    )


def curvature_from_coeffs(cc: ConnectionCoeffs) -> np.ndarray:
    G, dG = cc.gamma, cc.gamma_dx
    return (
        np.einsum("iljk->ijkl", dG)
        - np.einsum("ikjl->ijkl", dG)
        + np.einsum("ika,alj->ijkl", G, G)
        - np.einsum("ila,akj->ijkl", G, G)
    )


def curvature(chart: RiemannianChart, x) -> np.ndarray:
    """``R^i_{jkl}`` of the chart's connection (torsion included)."""
    return curvature_from_coeffs(connection_with_torsion(chart, x))


def bianchi_cyclic_sum(R: np.ndarray) -> np.ndarray:
    """``𝔖 R(∂_k,∂_l)∂_j`` over ``(j,k,l)``, indexed ``[i, j, k, l]``."""
    return R + np.einsum("iklj->ijkl", R) + np.einsum("iljk->ijkl", R)


def vectorial_bianchi_rhs(chart: RiemannianChart, x) -> np.ndarray:
    """``𝔖 dV(X,Y)Z`` for vectorial torsion with ``V = grad ψ``, same indexing as above."""
    m = chart.dim
    if chart.torsion.kind != "vectorial":
        raise GeometryError("only defined for vectorial torsion")
    _, dpsi = scalar_jet(chart.torsion.potential, x)
    dV = dpsi.der - dpsi.der.T  # dV[k, l] = ∂_k V_l - ∂_l V_k with V_l = ∂_l ψ
    eye = np.eye(m)
    # dV(∂_k,∂_l)∂_j + dV(∂_l,∂_j)∂_k + dV(∂_j,∂_k)∂_l
    return (
        np.einsum("kl,ij->ijkl", dV, eye)
        + np.einsum("lj,ik->ijkl", dV, eye)
        + np.einsum("jk,il->ijkl", dV, eye)
    )


def conformal_change_tensor(phi: Expr, chart: RiemannianChart, x, X, Y) -> np.ndarray:
    """``C(X,Y) = X(φ)Y + Y(φ)X - g(X,Y) grad φ``."""
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    g = chart.metric_at(x)
    dphi = eval_jet2(phi, x).gradient
    grad = np.linalg.solve(g, dphi)
    return (dphi @ X) * Y + (dphi @ Y) * X - (X @ g @ Y) * grad


def conformal_matrix(dphi: np.ndarray, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """``C[i, k, j]``: component ``i`` of ``C(∂_j, ∂_k)`` (symmetric in j, k)."""
    m = len(dphi)
    eye = np.eye(m)
    grad = ginv @ dphi
    return (
        np.einsum("j,ik->ikj", dphi, eye)
        + np.einsum("k,ij->ikj", dphi, eye)
        - np.einsum("i,kj->ikj", grad, g)
    )


# --- torsion types ------------------------------------------------------------


@dataclass(frozen=True)
class TorsionParts:
    """Lowered coordinate tensors of the three torsion types, and the vector ``V``."""

    cartan: np.ndarray
    skew3: np.ndarray
    vectorial: np.ndarray
    V: np.ndarray


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Columns form a g-orthonormal basis (from the Cholesky factor of ``g``)."""
    L = np.linalg.cholesky(g)
    return np.linalg.inv(L).T


def tensor_inner(S: np.ndarray, T: np.ndarray, ginv: np.ndarray) -> float:
    return float(np.einsum("ijk,lmn,il,jm,kn->", S, T, ginv, ginv, ginv))


def torsion_decompose(T: np.ndarray, g: np.ndarray, frame: Optional[np.ndarray] = None) -> TorsionParts:
    """Split a lowered torsion tensor into Cartan, totally skew and vectorial parts.

    The computation happens in a g-orthonormal ``frame`` (Cholesky-based by
    default); results are returned as coordinate tensors and do not depend on
    the frame chosen.
    """
    T = np.asarray(T, dtype=float)
    m = T.shape[0]
    if m < 2:
        raise GeometryError("torsion decomposition needs dimension at least 2")
    E = orthonormal_frame(g) if frame is None else np.asarray(frame, dtype=float)
    Einv = np.linalg.inv(E)
    Th = np.einsum("ijk,ia,jb,kc->abc", T, E, E, E)
    skew = (Th + Th.transpose(1, 2, 0) + Th.transpose(2, 0, 1)) / 3.0
    Vh = np.einsum("iji->j", Th) / (1.0 - m)
    eye = np.eye(m)
    vec = np.einsum("a,bc->abc", Vh, eye) - np.einsum("b,ac->abc", Vh, eye)
    cartan = Th - skew - vec

    def back(S):
        return np.einsum("abc,ai,bj,ck->ijk", S, Einv, Einv, Einv)

    return TorsionParts(back(cartan), back(skew), back(vec), E @ Vh)
