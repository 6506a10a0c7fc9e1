"""The Levi-Civita connection of the weighted metric ``g^{f1,f2}`` built from its parts.

``∇^G_X Y = D*_X Y - ½ 𝓡(X,Y) + A(X,Y) + B(X,Y) + τ(X,Y)`` where every
correction term is a frame tensor ``t[out, X, Y]`` over ``(H_1..H_m, V_1..V_m)``.
A brute-force Koszul computation on the induced chart serves as the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics_tm import omega_d_star, weighted_jet
from .tm_bundle import TMGeometry, connection_coefficients, covariant, pullback_omega


def rcal_frame(geom: TMGeometry) -> np.ndarray:
    """``𝓡(X,Y) = R(dπX, dπY) v`` as a vertical vector: ``t[m+i, k, l] = R^i_{jkl} v^j``."""
    m, n = geom.m, geom.n
    t = np.zeros((n, n, n))
    t[m:, :m, :m] = np.einsum("ijkl,j->ikl", geom.curvature, geom.v)
    return t


def a_frame(geom: TMGeometry) -> np.ndarray:
    """``A`` from ``f1 <A(X,Y), Z> = f2/2 (<R(X^h,Z)ξ, Y^v> + <R(Y^h,Z)ξ, X^v>)``.

    The covector on the right is formed for every frame pair and raised by
    solving against ``f1 g``; ``A`` is horizontal-valued.
    """
    m, n = geom.m, geom.n
    f1, f2 = float(geom.f1.val), float(geom.f2.val)
    # rv[q, p, z] = <R(∂_p, ∂_z) v, ∂_q>
    rv = np.einsum("qjpz,j->qpz", geom.curvature_low, geom.v)
    cov = np.zeros((n, n, m))
    cov[:m, m:] = 0.5 * f2 * rv.transpose(1, 0, 2)  # X = H_p, Y = V_q
    cov[m:, :m] = 0.5 * f2 * rv  # X = V_q, Y = H_p
    t = np.zeros((n, n, n))
    t[:m] = np.linalg.solve(f1 * geom.base.g.val, cov.reshape(n * n, m).T).reshape(m, n, n)
    return t


def b_frame(geom: TMGeometry) -> np.ndarray:
    """``B(X,Y) = Y(φ2) X^v - (f2/f1) <X^v, Y^v> grad φ2`` (gradient lifted horizontally)."""
    m, n = geom.m, geom.n
    f1, f2 = float(geom.f1.val), float(geom.f2.val)
    t = np.zeros((n, n, n))
    t[m:, m:, :m] = np.einsum("ip,l->ipl", np.eye(m), geom.dphi2)
    t[:m, m:, m:] = -(f2 / f1) * np.einsum("i,pq->ipq", geom.grad_phi2, geom.base.g.val)
    return t


def tau_frame(geom: TMGeometry) -> np.ndarray:
    """``<τ(X,Y), Z> = ½ (T(Y,X,Z) + T(X,Z,Y) + T(Y,Z,X))`` on horizontal slots."""
    m, n = geom.m, geom.n
    T = geom.torsion
    low = 0.5 * (T.transpose(1, 0, 2) + T.transpose(0, 2, 1) + T.transpose(2, 0, 1))
    # low[x, y, z]: T(Y,X,Z) = T[y,x,z]; T(X,Z,Y) = T[x,z,y]; T(Y,Z,X) = T[y,z,x]
    t = np.zeros((n, n, n))
    t[:m, :m, :m] = np.einsum("kz,xyz->kxy", geom.base.ginv.val, low)
    return t


def structural_tensor(geom: TMGeometry) -> np.ndarray:
    return -0.5 * rcal_frame(geom) + a_frame(geom) + b_frame(geom) + tau_frame(geom)


def _apply(geom: TMGeometry, t: np.ndarray, X, Y) -> np.ndarray:
    return geom.from_frame(np.einsum("kpq,p,q->k", t, geom.to_frame(X), geom.to_frame(Y)))


def tensor_A(geom: TMGeometry, X, Y) -> np.ndarray:
    return _apply(geom, a_frame(geom), X, Y)


def tensor_B(geom: TMGeometry, X, Y) -> np.ndarray:
    return _apply(geom, b_frame(geom), X, Y)


def tensor_tau(geom: TMGeometry, X, Y) -> np.ndarray:
    return _apply(geom, tau_frame(geom), X, Y)


def r_xi(geom: TMGeometry, X, Y) -> np.ndarray:
    return _apply(geom, rcal_frame(geom), X, Y)


@dataclass(frozen=True)
class StructuralConnection:
    """``∇^G_X Y`` and its five summands, as coordinate vectors."""

    d_star: np.ndarray
    rcal: np.ndarray  # 𝓡(X,Y); enters the total with factor -1/2
    A: np.ndarray
    B: np.ndarray
    tau: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.d_star - 0.5 * self.rcal + self.A + self.B + self.tau


def nabla_G(geom: TMGeometry, X, Y) -> StructuralConnection:
    """Structural ``∇^G_X Y`` for a vector field ``Y`` (a :class:`Jet` or a constant coordinate field)."""
    X = np.asarray(X, dtype=float)
    d_star = covariant(geom, omega_d_star(geom), X, Y)
    Yv = Y.val if hasattr(Y, "val") else np.asarray(Y, dtype=float)
    return StructuralConnection(
        d_star, r_xi(geom, X, Yv), tensor_A(geom, X, Yv), tensor_B(geom, X, Yv), tensor_tau(geom, X, Yv)
    )


def structural_coefficients(geom: TMGeometry) -> np.ndarray:
    """``C[c, a, b]`` with ``∇^G_{∂_a} ∂_b = C^c_{ab} ∂_c`` from the structural formula."""
    return connection_coefficients(geom, omega_d_star(geom), structural_tensor(geom))


def koszul(G, dG) -> np.ndarray:
    """Christoffel symbols from a metric and ``dG[a, b, c] = ∂_c G_ab``."""
    low = 0.5 * (dG.transpose(0, 2, 1) + dG - dG.transpose(2, 0, 1))
    # low[d, a, b] = ½(∂_a G_db + ∂_b G_da - ∂_d G_ab)
    return np.linalg.solve(G, low.reshape(len(G), -1)).reshape(dG.shape)


def levi_civita_oracle(geom: TMGeometry) -> np.ndarray:
    """Christoffel symbols of ``g^{f1,f2}`` on the induced 2m-chart, straight from the Koszul formula."""
    G = weighted_jet(geom)
    return koszul(G.val, G.der)


def oracle_difference(geom: TMGeometry) -> float:
    return float(np.max(np.abs(structural_coefficients(geom) - levi_civita_oracle(geom))))


# --- derived checks -------------------------------------------------------------


def pullback_sum_torsion_residual(geom: TMGeometry) -> float:
    """Torsion of ``∇* ⊕ ∇*`` on coordinate fields minus ``π*T + 𝓡``."""
    C = connection_coefficients(geom, pullback_omega(geom))
    tor = C - C.transpose(0, 2, 1)
    m, n = geom.m, geom.n
    expected = np.zeros((n, n, n))
    # frame tensor of π*T + 𝓡, converted to coordinate slots
    t = rcal_frame(geom)
    t[:m, :m, :m] += geom.torsion_up
    Fi, F = geom.Finv.val, geom.F.val
    expected = np.einsum("ck,kpq,pa,qb->cab", F, t, Fi, Fi)
    return float(np.max(np.abs(tor - expected)))


def torsion_free_residual(geom: TMGeometry) -> float:
    C = structural_coefficients(geom)
    return float(np.max(np.abs(C - C.transpose(0, 2, 1))))


def metricity_residual(geom: TMGeometry) -> float:
    G = weighted_jet(geom)
    C = structural_coefficients(geom)
    dG = G.der.transpose(2, 0, 1)
    res = dG - np.einsum("dab,dc->abc", C, G.val) - np.einsum("dac,bd->abc", C, G.val)
    return float(np.max(np.abs(res)))


def _frame_out(geom: TMGeometry) -> np.ndarray:
    """``out[k, p, q]``: frame component k of ``∇^G_{E_p} E_q`` for the frame ``E = F``."""
    C = structural_coefficients(geom)
    F, Fi = geom.F.val, geom.Finv.val
    # ∇_{E_p} E_q = E_p(F[:, q]) + C(E_p, E_q)
    dE = np.einsum("cqa,ap->cpq", geom.F.der, F)
    full = dE + np.einsum("cab,ap,bq->cpq", C, F, F)
    return np.einsum("kc,cpq->kpq", Fi, full)


def vertical_pair_defect(geom: TMGeometry) -> float:
    """``max ‖(∇^G_{V_p} V_q)^h‖`` in the metric ``f1 g``: second fundamental form of the fibre."""
    m = geom.m
    out = _frame_out(geom)[:m, m:, m:]
    gf = float(geom.f1.val) * geom.base.g.val
    return float(np.sqrt(max(np.einsum("kpq,kl,lpq->pq", out, gf, out).max(), 0.0)))


def zero_section_defect(geom: TMGeometry) -> float:
    """Normal part of ``∇^G_{H_p} H_q`` at ``v = 0``: second fundamental form of the zero section.

    Evaluated at the geometry's point with ``v`` replaced by 0; tangent space of
    the zero section is ``H`` there.
    """
    zero = TMGeometry(geom.chart, type(geom.point)(geom.x, np.zeros(geom.m)), geom.weights)
    m = zero.m
    out = _frame_out(zero)
    sym = 0.5 * (out + out.transpose(0, 2, 1))
    nrm = sym[m:, :m, :m]
    gf = float(zero.f2.val) * zero.base.g.val
    return float(np.sqrt(max(np.einsum("kpq,kl,lpq->pq", nrm, gf, nrm).max(), 0.0)))


def horizontal_defect(geom: TMGeometry) -> float:
    """``max ‖(∇^G_{H_p} H_q)^v‖``: vertical part of the horizontal-pair derivative at ``v``."""
    m = geom.m
    out = _frame_out(geom)[m:, :m, :m]
    gf = float(geom.f2.val) * geom.base.g.val
    return float(np.sqrt(max(np.einsum("kpq,kl,lpq->pq", out, gf, out).max(), 0.0)))
