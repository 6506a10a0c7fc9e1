"""Verification suites: sample a chart, evaluate residuals, aggregate into checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .connection_tm import (
    koszul,
    pullback_sum_torsion_residual,
    structural_coefficients,
    vertical_pair_defect,
    zero_section_defect,
)
from .contact import contact_check, gamma_form, sphere_point, tashiro
from .dynamics import circle_trajectory, horizontality_residual, integrate_geodesic, speed
from .expr import eval_jet2, is_constant, to_source
from .geometry_base import (
    TorsionSpec,
    base_jets,
    bianchi_cyclic_sum,
    curvature_from_coeffs,
    metricity_residual,
    tensor_inner,
    torsion_decompose,
    torsion_from_coeffs,
    vectorial_bianchi_rhs,
)
from .hermitian import (
    almost_complex,
    conformal_residual,
    d_conformal_residual,
    d_omega,
    d_omega_s_frame_residual,
    liouville_residual,
    nijenhuis,
    vectorial_torsion_target,
)
from .metrics_tm import (
    HYPOTHESIS_EPS,
    f2_difference_residual,
    k_frame,
    parallel_check,
    weighted_jet,
)
from .catalog import catalog
from .specfile import SUITES, VerifySpec
from .tm_bundle import TMGeometry, TMPoint, one_forms

SCHEMA_VERSION = 1
FLAT_TOL = 1e-10
DEFAULT_NONVANISH = 1e-3


@dataclass
class Check:
    """Aggregated residual. ``comparison`` is ``"<="`` (must stay below) or ``">="``.

    ``statistic`` is ``"max"`` (worst sample) or ``"min"`` (every sample must exceed).
    """

    name: str
    threshold: float
    comparison: str = "<="
    statistic: str = "max"
    value: Optional[float] = None
    samples: int = 0
    worst_point: Optional[list] = None
    flags: list = field(default_factory=list)
    note: str = ""

    def add(self, value: float, point) -> None:
        value = float(value)
        point = [float(c) for c in np.ravel(point)]
        self.samples += 1
        if self.value is None:
            better = True
        elif self.statistic == "max":
            better = value > self.value or (value == self.value and point < self.worst_point)
        else:
            better = value < self.value or (value == self.value and point < self.worst_point)
        if better:
            self.value, self.worst_point = value, point

    @property
    def passed(self) -> bool:
        if self.value is None or not np.isfinite(self.value):
            return False
        return self.value <= self.threshold if self.comparison == "<=" else self.value >= self.threshold

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "value": self.value,
            "comparison": self.comparison,
            "threshold": self.threshold,
            "passed": self.passed,
            "samples": self.samples,
            "worst_point": self.worst_point,
            "flags": list(self.flags),
            "note": self.note,
        }


class SuiteContext:
    def __init__(self, spec: VerifySpec, nonvanish: float = DEFAULT_NONVANISH):
        self.spec = spec
        self.chart = spec.chart
        self.weights = spec.weights
        self.nonvanish = nonvanish
        self.checks: list[Check] = []

    def check(self, name: str, threshold: float, comparison: str = "<=", statistic: str = "max") -> Check:
        c = Check(name, self.spec.tolerances.get(name, threshold), comparison, statistic)
        self.checks.append(c)
        return c

    def rng(self, suite: str) -> np.random.Generator:
        return np.random.default_rng([self.spec.seed, SUITES.index(suite)])

    def tm_points(self, rng, count: int):
        m = self.chart.dim
        for x in self.chart.sample(rng, count):
            yield x, rng.uniform(-1.0, 1.0, m)


def _max(a) -> float:
    return float(np.max(np.abs(a)))


# --- base -------------------------------------------------------------------------


def run_base(ctx: SuiteContext) -> None:
    chart = ctx.chart
    m = chart.dim
    rng = ctx.rng("base")
    metric = ctx.check("base.metricity", 1e-12)
    recon = ctx.check("base.torsion_reconstruction", 1e-12)
    anti = ctx.check("base.curvature_antisymmetry", 1e-12)
    pair = ctx.check("base.curvature_pair_symmetry", 1e-12) if chart.torsion.kind == "none" else None
    bianchi = ctx.check("base.first_bianchi", 1e-10) if chart.torsion.kind != "general" else None
    dec = ctx.check("base.torsion_decomposition", 1e-12) if m >= 2 else None
    for x in chart.sample(rng, ctx.spec.samples):
        bj = base_jets(chart, x)
        g, ginv = bj.g.val, bj.ginv.val
        metric.add(_max(metricity_residual(bj.gamma.val, g, bj.dg.val)), x)
        Tup = torsion_from_coeffs(bj.gamma.val)
        recon.add(_max(np.einsum("ijk,il->jkl", Tup, g) - bj.torsion.val), x)
        R = curvature_from_coeffs(bj.coeffs)
        anti.add(_max(R + R.transpose(0, 1, 3, 2)), x)
        if pair is not None:
            Rl = np.einsum("ai,ijkl->ajkl", g, R)
            pair.add(_max(Rl - Rl.transpose(2, 3, 0, 1)), x)
        if bianchi is not None:
            lhs = bianchi_cyclic_sum(R)
            rhs = vectorial_bianchi_rhs(chart, x) if chart.torsion.kind == "vectorial" else 0.0
            bianchi.add(_max(lhs - rhs), x)
        if dec is not None:
            T = bj.torsion.val
            if not np.any(T):
                A = rng.normal(size=(m, m, m))
                T = A - A.transpose(1, 0, 2)
            parts = torsion_decompose(T, g)
            comps = (parts.cartan, parts.skew3, parts.vectorial)
            err = _max(sum(comps) - T)
            for i in range(3):
                for j in range(i + 1, 3):
                    err = max(err, abs(tensor_inner(comps[i], comps[j], ginv)))
            dec.add(err, x)


# --- connection ---------------------------------------------------------------


def run_connection(ctx: SuiteContext) -> None:
    chart, w = ctx.chart, ctx.weights
    rng = ctx.rng("connection")
    oracle = ctx.check("connection.levi_civita_oracle", 1e-8)
    ptor = ctx.check("connection.pullback_torsion", 1e-10)
    metric = ctx.check("connection.metricity", 1e-9)
    tfree = ctx.check("connection.torsion_free", 1e-9)
    p1 = ctx.check("connection.parallel_d_tilde", 1e-10)
    p3 = ctx.check("connection.parallel_f2_prime", 1e-10)
    e27 = ctx.check("connection.f2_difference", 1e-12)
    f1_const = is_constant(w.phi1)
    if f1_const:
        p2 = ctx.check("connection.parallel_d_tilde_k", 1e-8)
        kv = ctx.check("connection.k_vertical", 1e-14)
    phi2_const = is_constant(w.phi2)
    fib = ctx.check("connection.fibre_defect", 1e-10) if phi2_const else ctx.check(
        "connection.fibre_defect", ctx.nonvanish, ">="
    )
    fib.note = "grad phi2 = 0, fibres expected totally geodesic" if phi2_const else "grad phi2 != 0, defect expected"
    zs_points = []
    flat = 0.0
    for x, v in ctx.tm_points(rng, ctx.spec.samples):
        geom = TMGeometry(chart, TMPoint(x, v), w)
        pt = np.concatenate([x, v])
        C = structural_coefficients(geom)
        G = weighted_jet(geom)
        oracle.add(_max(C - koszul(G.val, G.der)), pt)
        ptor.add(pullback_sum_torsion_residual(geom), pt)
        dG = G.der.transpose(2, 0, 1)
        res = dG - np.einsum("dab,dc->abc", C, G.val) - np.einsum("dac,bd->abc", C, G.val)
        metric.add(_max(res), pt)
        tfree.add(_max(C - C.transpose(0, 2, 1)), pt)
        p1.add(parallel_check(geom, "d_tilde"), pt)
        p3.add(parallel_check(geom, "f2_prime"), pt)
        e27.add(f2_difference_residual(geom, rng.normal(size=geom.n), rng.normal(size=geom.n)), pt)
        if f1_const:
            f1 = float(geom.f1.val)
            if geom.r2 * w.f3 + f1 > HYPOTHESIS_EPS:
                p2.add(parallel_check(geom, "d_tilde_k"), pt)
                kv.add(_max(k_frame(geom)[geom.m :]), pt)
        fib.add(vertical_pair_defect(geom), pt)
        flat = max(flat, _max(geom.curvature))
        zs_points.append((geom, pt))
    base_flat = flat <= FLAT_TOL
    zs = ctx.check("connection.zero_section_defect", 1e-10) if base_flat else ctx.check(
        "connection.zero_section_defect", ctx.nonvanish, ">="
    )
    zs.flags = [] if base_flat else ["base not flat"]
    zs.note = "base flat, zero section expected totally geodesic" if base_flat else "base not flat, defect expected"
    for geom, pt in zs_points:
        zs.add(zero_section_defect(geom), pt[: chart.dim])
    if f1_const and p2.samples == 0:
        p2.note = kv.note = "hypothesis r^2 f3 + f1 > 0 failed at every sample"


# --- hermitian ----------------------------------------------------------------


def run_hermitian(ctx: SuiteContext) -> None:
    chart, w = ctx.chart, ctx.weights
    rng = ctx.rng("hermitian")
    sq = ctx.check("hermitian.complex_square", 1e-13)
    comp = ctx.check("hermitian.metric_compatible", 1e-12)
    e34 = ctx.check("hermitian.omega_conformal", 1e-13)
    e38 = ctx.check("hermitian.d_mu", 1e-10)
    dconf = ctx.check("hermitian.d_omega_conformal", 1e-10)
    frame = ctx.check("hermitian.d_omega_s_frame", 1e-10)
    rows = []
    flat = tdpsi = tdpsibar = 0.0
    for x, v in ctx.tm_points(rng, ctx.spec.samples):
        geom = TMGeometry(chart, TMPoint(x, v), w)
        pt = np.concatenate([x, v])
        I = almost_complex(geom).val
        G = weighted_jet(geom).val
        sq.add(_max(I @ I + np.eye(geom.n)), pt)
        comp.add(_max(I.T @ G @ I - G), pt)
        e34.add(conformal_residual(geom), pt)
        e38.add(liouville_residual(geom), pt)
        dconf.add(d_conformal_residual(geom), pt)
        frame.add(d_omega_s_frame_residual(geom), pt)
        rows.append((pt, _max(nijenhuis(geom)), d_omega(geom).max_abs()))
        m = geom.m
        flat = max(flat, _max(geom.curvature))
        tdpsi = max(tdpsi, _max(geom.torsion - vectorial_torsion_target(geom, geom.psi.der[:m])))
        tdpsibar = max(tdpsibar, _max(geom.torsion - vectorial_torsion_target(geom, geom.psibar.der[:m])))
    flags = []
    if flat > FLAT_TOL:
        flags.append("base not flat")
    if tdpsi > FLAT_TOL:
        flags.append("torsion differs from dpsi^1")
    integrable = not flags
    nij = ctx.check("hermitian.nijenhuis", 1e-8) if integrable else ctx.check("hermitian.nijenhuis", ctx.nonvanish, ">=")
    nij.flags = flags
    nij.note = "hypotheses hold, integrable expected" if integrable else "hypotheses fail, non-vanishing expected"
    symp = tdpsibar <= FLAT_TOL
    dw = ctx.check("hermitian.d_omega", 1e-9) if symp else ctx.check("hermitian.d_omega", 1e-4, ">=")
    dw.flags = [] if symp else ["torsion differs from dpsibar^1"]
    dw.note = "torsion matches dpsibar^1, closed expected" if symp else "torsion differs from dpsibar^1, non-closed expected"
    for pt, n, d in rows:
        nij.add(n, pt)
        dw.add(d, pt)


# --- contact ------------------------------------------------------------------


def run_contact(ctx: SuiteContext) -> None:
    chart, w = ctx.chart, ctx.weights
    if chart.dim < 2:
        return
    rng = ctx.rng("contact")
    ann = ctx.check("contact.tangent_basis", 1e-12)
    vol = ctx.check("contact.contact_volume", 1e-6, ">=", "min")
    mu_ind = ctx.check("contact.mu_connection_independent", 1e-13)
    radius_const = is_constant(w.radius)
    r0 = float(eval_jet2(w.radius, np.zeros(chart.dim)).value) if radius_const else None
    torsion_free = chart.torsion.kind == "none"
    if radius_const:
        alg = ctx.check("contact.tashiro_algebraic", 1e-10)
        if torsion_free and r0 == 1.0:
            deta = ctx.check("contact.tashiro_d_eta", 1e-9)
        elif not torsion_free:
            deta = ctx.check("contact.tashiro_d_eta", 1e-4, ">=")
            deta.note = "torsion present, identity expected to fail somewhere"
        else:
            deta = None
    plain = chart.with_torsion(TorsionSpec.none())
    for x, v in ctx.tm_points(rng, ctx.spec.samples):
        sp = sphere_point(chart, w, x, v)
        geom = TMGeometry(chart, sp.point, w)
        pt = np.concatenate([sp.point.x, sp.point.v])
        ann.add(_max(gamma_form(geom) @ sp.basis), pt)
        vol.add(contact_check(chart, w, sp), pt)
        mu_ind.add(_max(one_forms(geom)[1] - one_forms(TMGeometry(plain, sp.point, w))[1]), pt)
        if radius_const:
            _, res = tashiro(chart, r0, sp)
            alg.add(max(res[k] for k in ("phi_squared", "phi_zeta", "eta_zeta", "eta_dual", "compatible")), pt)
            if deta is not None:
                deta.add(res["d_eta"], pt)


# --- dynamics -----------------------------------------------------------------


def run_dynamics(ctx: SuiteContext, h: float = 1e-3, duration: float = 1.0) -> None:
    chart = ctx.chart
    rng = ctx.rng("dynamics")
    count = max(1, ctx.spec.samples // 25)
    horiz = ctx.check("dynamics.horizontality", 1e-8)
    drift = ctx.check("dynamics.speed_drift", 1e-8)
    steps = int(round(duration / h))
    lo = np.array([a for a, _ in chart.domain])
    hi = np.array([b for _, b in chart.domain])
    mid, half = 0.5 * (lo + hi), 0.25 * (hi - lo)
    for _ in range(count):
        x0 = mid + half * rng.uniform(-1.0, 1.0, chart.dim)
        d = rng.normal(size=chart.dim)
        g = chart.metric_at(x0)
        v0 = 0.3 * d / np.sqrt(d @ g @ d)
        traj = integrate_geodesic(chart, x0, v0, h, steps)
        pt = np.concatenate([x0, v0])
        horiz.add(horizontality_residual(chart, traj), pt)
        drift.add(float(np.ptp(speed(chart, traj))), pt)
    control = ctx.check("dynamics.control_circle", 0.9, ">=")
    control.note = "unit circle in the flat plane, not a geodesic"
    control.add(horizontality_residual(catalog("flat2"), circle_trajectory(1.0, h, steps)), [1.0, 0.0])


RUNNERS = {
    "base": run_base,
    "connection": run_connection,
    "hermitian": run_hermitian,
    "contact": run_contact,
    "dynamics": run_dynamics,
}


def run(spec: VerifySpec, nonvanish: float = DEFAULT_NONVANISH) -> dict:
    """Run the selected suites and return the report dictionary.

    The chart and weights are validated on sample points first; violations
    raise :class:`GeometryError` or :class:`HypothesisViolation`.
    """
    spec.chart.validate(np.random.default_rng([spec.seed, 99]))
    spec.weights.check(spec.chart, np.random.default_rng([spec.seed, 98]))
    suites = {}
    for name in spec.suites:
        ctx = SuiteContext(spec, nonvanish)
        RUNNERS[name](ctx)
        suites[name] = {
            "passed": all(c.passed for c in ctx.checks),
            "checks": [c.to_dict() for c in ctx.checks],
        }
    w = spec.weights
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": "tmgeom",
        "version": __version__,
        "seed": spec.seed,
        "samples": spec.samples,
        "nonvanish_threshold": nonvanish,
        "chart": {
            "name": spec.chart.name,
            "dim": spec.chart.dim,
            "torsion": spec.chart.torsion.kind,
        },
        "weights": {
            "phi1": to_source(w.phi1),
            "phi2": to_source(w.phi2),
            "f3": w.f3,
            "radius": to_source(w.radius),
        },
        "suites": suites,
        "passed": all(s["passed"] for s in suites.values()),
    }
