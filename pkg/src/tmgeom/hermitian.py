"""Almost-Hermitian structures on TM: ``I^G``, ``ω^G``, Nijenhuis tensor and closedness.

In the H/V frame ``I^G = [[0, e^ψ], [-e^{-ψ}, 0]]`` with ``ψ = φ2 - φ1``,
``ψ̄ = φ2 + φ1``, and ``ω(X, Y) = G(IX, Y)``. With these definitions
``ω^S(H_i, V_j) = -g_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .forms import AltForm, evaluate, exterior_d, from_covector, from_matrix, max_difference, wedge
from .jets import Jet, jblock, jeinsum
from .tm_bundle import TMGeometry, mu_second_order


def _complex_frame(geom: TMGeometry, which: str) -> Jet:
    m = geom.m
    eye = np.eye(m)
    zero = np.zeros((m, m))
    if which == "S":
        return jblock([[zero, Jet.constant(eye, geom.n)], [-eye, zero]])
    if which == "G":
        e = geom.psi.exp()
        return jblock([[zero, e * eye], [-(e.reciprocal() * eye), zero]])
    raise ValueError(f"unknown structure {which!r}")


def almost_complex(geom: TMGeometry, which: str = "G") -> Jet:
    """Coordinate jet of ``I^S = θ^t - θ`` (``which="S"``) or ``I^G = e^ψ θ^t - e^{-ψ} θ``."""
    return geom.frame_matrix(_complex_frame(geom, which))


def omega_jet(geom: TMGeometry, which: str = "G") -> Jet:
    """Matrix jet of ``ω(∂_a, ∂_b) = G(I ∂_a, ∂_b)``.

    The product ``I^T G`` is formed in the H/V frame before the change to
    coordinates, which avoids cancellation in ``F^T F^{-T}`` when ``N`` is large.
    """
    m = geom.m
    zero = np.zeros((m, m))
    if which == "S":
        metric = jblock([[geom.g, zero], [zero, geom.g]])
    else:
        metric = jblock([[geom.f1 * geom.g, zero], [zero, geom.f2 * geom.g]])
    return geom.frame_form(jeinsum("ca,cb->ab", _complex_frame(geom, which), metric))


def omega(geom: TMGeometry, which: str = "G") -> AltForm:
    w = omega_jet(geom, which)
    return from_matrix(w.val, w.der)


def nijenhuis(geom: TMGeometry, which: str = "G") -> np.ndarray:
    """``N[c, a, b]``: component c of ``N(∂_a, ∂_b) = [I∂_a, I∂_b] - I[I∂_a, ∂_b] - I[∂_a, I∂_b] - [∂_a, ∂_b]``."""
    I = almost_complex(geom, which)
    J, dJ = I.val, I.der  # dJ[c, b, d] = ∂_d I^c_b
    return (
        np.einsum("da,cbd->cab", J, dJ)
        - np.einsum("db,cad->cab", J, dJ)
        + np.einsum("cd,dab->cab", J, dJ)
        - np.einsum("cd,dba->cab", J, dJ)
    )


def nijenhuis_vector(geom: TMGeometry, X, Y, which: str = "G") -> np.ndarray:
    return np.einsum("cab,a,b->c", nijenhuis(geom, which), np.asarray(X, float), np.asarray(Y, float))


def d_omega(geom: TMGeometry, which: str = "G") -> AltForm:
    return exterior_d(omega(geom, which))


def mu_form(geom: TMGeometry, second_order: bool = True) -> AltForm:
    val, d1, d2 = mu_second_order(geom)
    return from_covector(val, d1, d2 if second_order else None)


def mu_torsion_form(geom: TMGeometry) -> AltForm:
    """``(μ∘T)(X, Y) = μ(π*T(X, Y)) = <v, T(dπX, dπY)>``."""
    m, n = geom.m, geom.n
    M = np.zeros((n, n))
    M[:m, :m] = np.einsum("ijk,k->ij", geom.torsion, geom.v)
    return from_matrix(M)


def liouville_residual(geom: TMGeometry) -> float:
    """``max |dμ - ω^S - μ∘T|`` componentwise."""
    dmu = exterior_d(mu_form(geom, second_order=False))
    target = omega(geom, "S") + mu_torsion_form(geom)
    return max_difference(dmu, target)


def conformal_residual(geom: TMGeometry) -> float:
    """``ω^G - e^ψ̄ ω^S`` componentwise."""
    return max_difference(omega(geom, "G"), omega(geom, "S").scale(float(np.exp(geom.psibar.val))))


def d_conformal_residual(geom: TMGeometry) -> float:
    """``dω^G - e^ψ̄ (dψ̄ ∧ ω^S + dω^S)``."""
    wS = omega(geom, "S")
    dpsibar = from_covector(geom.psibar.der)
    rhs = (wedge(dpsibar, wS) + exterior_d(wS)).scale(float(np.exp(geom.psibar.val)))
    return max_difference(d_omega(geom, "G"), rhs)


def d_omega_s_frame(geom: TMGeometry) -> np.ndarray:
    """Predicted frame components ``dω^S(E_p, E_q, E_r)``.

    Nonzero only on (h,h,h), where it is the cyclic sum of ``<R(∂_i,∂_j)v, ∂_k>``,
    and on (h,h,v), where it equals ``-T_{ijk}``; arranged fully antisymmetric.
    """
    m, n = geom.m, geom.n
    rv = np.einsum("kjab,j->abk", geom.curvature_low, geom.v)  # <R(∂_a,∂_b)v, ∂_k>
    hhh = rv + rv.transpose(1, 2, 0) + rv.transpose(2, 0, 1)
    out = np.zeros((n, n, n))
    out[:m, :m, :m] = hhh
    hhv = -geom.torsion
    out[:m, :m, m:] = hhv
    out[:m, m:, :m] = -hhv.transpose(0, 2, 1)
    out[m:, :m, :m] = hhv.transpose(2, 0, 1)
    return out


def d_omega_s_frame_residual(geom: TMGeometry) -> float:
    dw = exterior_d(omega(geom, "S"))
    F = geom.F.val
    measured = np.einsum("abc,ap,bq,cr->pqr", dw.dense(), F, F, F)
    return float(np.max(np.abs(measured - d_omega_s_frame(geom))))


# --- verdicts -------------------------------------------------------------------


def vectorial_torsion_target(geom: TMGeometry, dfun: np.ndarray) -> np.ndarray:
    """Lowered ``T(X,Y) = X(f)Y - Y(f)X``: ``T[i,j,k] = ∂_i f g_jk - ∂_j f g_ik``."""
    g = geom.base.g.val
    a = np.einsum("i,jk->ijk", dfun, g)
    return a - a.transpose(1, 0, 2)


@dataclass
class Verdicts:
    """Per-sample maxima of the integrability and closedness residuals with hypothesis flags."""

    nijenhuis: float = 0.0
    d_omega: float = 0.0
    flatness: float = 0.0  # max |R|
    torsion_vs_dpsi: float = 0.0  # max |T - dψ∧1|
    torsion_vs_dpsibar: float = 0.0  # max |T - dψ̄∧1|
    samples: int = 0
    worst_point: dict = field(default_factory=dict)

    def flags(self, tol: float = 1e-10) -> list[str]:
        out = []
        if self.flatness > tol:
            out.append("base not flat")
        if self.torsion_vs_dpsi > tol:
            out.append("torsion differs from dpsi^1")
        if self.torsion_vs_dpsibar > tol:
            out.append("torsion differs from dpsibar^1")
        return out


def verdicts(chart, weights, points) -> Verdicts:
    """Evaluate the residuals at each ``(x, v)`` in ``points`` and keep the maxima."""
    from .tm_bundle import at

    out = Verdicts()
    for x, v in points:
        geom = at(chart, x, v, weights)
        res = {
            "nijenhuis": float(np.max(np.abs(nijenhuis(geom)))),
            "d_omega": d_omega(geom).max_abs(),
            "flatness": float(np.max(np.abs(geom.curvature))),
            "torsion_vs_dpsi": float(np.max(np.abs(geom.torsion - vectorial_torsion_target(geom, geom.psi.der[: geom.m])))),
            "torsion_vs_dpsibar": float(
                np.max(np.abs(geom.torsion - vectorial_torsion_target(geom, geom.psibar.der[: geom.m])))
            ),
        }
        for k, r in res.items():
            if r > getattr(out, k):
                setattr(out, k, r)
                out.worst_point[k] = [float(c) for c in np.concatenate([x, v])]
        out.samples += 1
    return out


def evaluate_on(form: AltForm, vectors) -> float:
    return evaluate(form, vectors)
