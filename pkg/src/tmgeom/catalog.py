"""Shipped charts. Domain boxes stay clear of chart singularities."""

from __future__ import annotations

from .geometry_base import RiemannianChart, TorsionSpec, chart_from_strings


def _flat(m: int) -> RiemannianChart:
    metric = [["1" if i == j else "0" for j in range(m)] for i in range(m)]
    return chart_from_strings(metric, [(-1.0, 1.0)] * m, name=f"flat{m}")


def _conformal2(factor: str, half_width: float, name: str) -> RiemannianChart:
    return chart_from_strings([[factor, "0"], ["0", factor]], [(-half_width, half_width)] * 2, name=name)


def _sphere2() -> RiemannianChart:
    return _conformal2("4/(1+x1^2+x2^2)^2", 0.8, "sphere2")


def _hyperbolic2() -> RiemannianChart:
    # the box corners sit at |x| ≈ 0.78, inside the disk
    return _conformal2("4/(1-x1^2-x2^2)^2", 0.55, "hyperbolic2")


_BUILDERS = {
    "flat": lambda: _flat(2),
    "flat2": lambda: _flat(2),
    "flat3": lambda: _flat(3),
    "flat4": lambda: _flat(4),
    "sphere2": _sphere2,
    "hyperbolic2": _hyperbolic2,
}

NAMES = tuple(_BUILDERS)


def catalog(name: str, torsion: TorsionSpec | None = None) -> RiemannianChart:
    try:
        chart = _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown catalog chart {name!r}; choose from {', '.join(NAMES)}") from None
    return chart if torsion is None else chart.with_torsion(torsion)
