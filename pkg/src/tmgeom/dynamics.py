"""Geodesics of the base connection and the horizontality test of their velocity lifts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry_base import RiemannianChart, connection_values


@dataclass(frozen=True)
class GeodesicState:
    x: np.ndarray
    xdot: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Samples ``x(t_k)``, ``ẋ(t_k)`` on a uniform grid of step ``h``."""

    h: float
    xs: np.ndarray
    vs: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(len(self.xs))


def _gamma(chart: RiemannianChart, x) -> np.ndarray:
    return connection_values(chart, x)


def geodesic_rhs(chart: RiemannianChart, state: np.ndarray) -> np.ndarray:
    """``(ẋ, -Γ^i_{kj} ẋ^j ẋ^k)``: the second slot of Γ takes the first velocity factor."""
    m = chart.dim
    x, v = state[:m], state[m:]
    acc = -np.einsum("ikj,j,k->i", _gamma(chart, x), v, v)
    return np.concatenate([v, acc])


def integrate_geodesic(chart: RiemannianChart, x0, v0, h: float, steps: int) -> Trajectory:
    """Classical fixed-step RK4."""
    y = np.concatenate([np.asarray(x0, dtype=float), np.asarray(v0, dtype=float)])
    out = [y]
    for _ in range(steps):
        k1 = geodesic_rhs(chart, y)
        k2 = geodesic_rhs(chart, y + 0.5 * h * k1)
        k3 = geodesic_rhs(chart, y + 0.5 * h * k2)
        k4 = geodesic_rhs(chart, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(y)
    arr = np.array(out)
    m = chart.dim
    return Trajectory(h, arr[:, :m], arr[:, m:])


def speed(chart: RiemannianChart, traj: Trajectory) -> np.ndarray:
    return np.array([np.sqrt(v @ chart.metric_at(x) @ v) for x, v in zip(traj.xs, traj.vs)])


def _stencil_derivative(samples: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order five-point derivative at interior samples ``2..N-3``."""
    s = samples
    return (s[:-4] - 8.0 * s[1:-3] + 8.0 * s[3:-1] - s[4:]) / (12.0 * h)


def horizontality_residual(chart: RiemannianChart, traj: Trajectory) -> float:
    """Max over interior samples of ``‖(γ̈)^v‖_g`` for the lift ``t ↦ (x, ẋ)``.

    The vertical part of the second lift at ``(x, ẋ)`` is
    ``a^i + Γ^i_{kj} ẋ^j ẋ^k`` with ``a = d ẋ/dt`` taken from the samples.
    """
    if len(traj.xs) < 5:
        raise ValueError("need at least five samples")
    acc = _stencil_derivative(traj.vs, traj.h)
    worst = 0.0
    for a, x, v in zip(acc, traj.xs[2:-2], traj.vs[2:-2]):
        r = a + np.einsum("ikj,j,k->i", _gamma(chart, x), v, v)
        worst = max(worst, float(np.sqrt(r @ chart.metric_at(x) @ r)))
    return worst


def circle_trajectory(rho: float, h: float, steps: int, center=(0.0, 0.0)) -> Trajectory:
    """Unit-speed circle of radius ``rho`` in the plane (not a geodesic of the flat metric)."""
    t = h * np.arange(steps + 1)
    c = np.asarray(center, dtype=float)
    xs = c + rho * np.stack([np.cos(t / rho), np.sin(t / rho)], axis=1)
    vs = np.stack([-np.sin(t / rho), np.cos(t / rho)], axis=1)
    return Trajectory(h, xs, vs)
