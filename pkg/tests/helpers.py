import numpy as np

from tmgeom.catalog import catalog
from tmgeom.expr import parse
from tmgeom.geometry_base import TorsionSpec
from tmgeom.metrics_tm import WeightSpec
from tmgeom.tm_bundle import at, random_point


def vectorial(potential: str, dim: int) -> TorsionSpec:
    return TorsionSpec.vectorial(parse(potential, dim))


def chart(name: str, potential: str | None = None):
    base = catalog(name)
    if potential is None:
        return base
    return base.with_torsion(vectorial(potential, base.dim))


def weights(dim: int, phi1="0", phi2="0", radius="1", f3=0.0) -> WeightSpec:
    return WeightSpec(parse(phi1, dim), parse(phi2, dim), f3, parse(radius, dim))


def geoms(ch, w, count: int, seed: int = 0, vscale: float = 1.0):
    """``count`` random TMGeometry objects over ``ch``."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        p = random_point(ch, rng, vscale)
        yield at(ch, p.x, p.v, w)



ACCEPTANCE: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    """Remember one acceptance line; printed again in the pytest terminal summary."""
    line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
