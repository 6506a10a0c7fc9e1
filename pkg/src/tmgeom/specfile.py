"""Line-oriented ``key = value`` verification specs.

Example::

    catalog = sphere2
    torsion = vectorial
    torsion.potential = "x1"
    phi2 = "0.1*x1"
    samples = 50
    seed = 7

Inline charts use ``dim``, ``g[i][j]`` (1-based; unspecified entries default
by symmetry, then to 0) and ``domain = [a,b] [c,d]``. General torsion uses
``T[i][j][k]``, filled by antisymmetry in the first two slots, then 0.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .catalog import catalog
from .expr import Expr, Neg, Num, ParseError, parse
from .geometry_base import GeometryError, RiemannianChart, TorsionSpec
from .metrics_tm import WeightSpec

SUITES = ("base", "connection", "hermitian", "contact", "dynamics")


class SpecError(ValueError):
    pass


@dataclass
class VerifySpec:
    chart: RiemannianChart
    weights: WeightSpec
    samples: int = 100
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    suites: tuple = SUITES


_LINE = re.compile(r"^\s*([A-Za-z_][\w.]*(?:\[\d+\])*)\s*=\s*(.*?)\s*$")
_INDEXED = re.compile(r"^(g|T)((?:\[\d+\])+)$")


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _expr(text: str, dim: int, lineno: int, key: str) -> Expr:
    try:
        return parse(text, dim)
    except ParseError as exc:
        raise SpecError(f"line {lineno}: {key}: {exc.reason} at byte offset {exc.offset}") from None


def _number(text: str, lineno: int, key: str, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise SpecError(f"line {lineno}: {key}: expected a number, got {text!r}") from None


def _domain(text: str, lineno: int):
    parts = re.findall(r"\[([^\]]*)\]", text)
    if not parts:
        raise SpecError(f"line {lineno}: domain must look like [a,b] [c,d]")
    out = []
    for p in parts:
        ab = [s.strip() for s in p.split(",")]
        if len(ab) != 2:
            raise SpecError(f"line {lineno}: bad interval [{p}]")
        out.append((_number(ab[0], lineno, "domain"), _number(ab[1], lineno, "domain")))
    return tuple(out)


def loads(text: str) -> VerifySpec:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        mt = _LINE.match(line)
        if not mt:
            raise SpecError(f"line {lineno}: expected 'key = value'")
        key, value = mt.group(1), _unquote(mt.group(2))
        if key in entries:
            raise SpecError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return _build(entries)


def _strip_comment(line: str) -> str:
    """Drop a trailing ``# ...`` comment that is not inside quotes."""
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def load(path: str) -> VerifySpec:
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise SpecError(f"cannot read spec file: {exc}") from None


def _build(entries: dict) -> VerifySpec:
    def take(key, default=None):
        return entries.pop(key, (default, 0))

    cat, cat_line = take("catalog")
    dim_s, dim_line = take("dim")
    metric_keys = {k: v for k, v in entries.items() if k.startswith("g[")}
    if cat is not None and (dim_s is not None or metric_keys):
        raise SpecError(f"line {cat_line}: give either a catalog chart or an inline metric, not both")
    if cat is not None:
        try:
            base = catalog(cat)
        except KeyError as exc:
            raise SpecError(f"line {cat_line}: {exc.args[0]}") from None
        dim = base.dim
    else:
        if dim_s is None:
            raise SpecError("spec needs 'catalog' or 'dim'")
        dim = _number(dim_s, dim_line, "dim", int)
        if dim < 1:
            raise SpecError(f"line {dim_line}: dim must be at least 1")
        base = None

    metric = [[None] * dim for _ in range(dim)]
    torsion_comps: dict = {}
    for key in [k for k in entries if _INDEXED.match(k)]:
        value, lineno = entries.pop(key)
        name, idx = _INDEXED.match(key).groups()
        ids = [int(s) for s in re.findall(r"\d+", idx)]
        want = 2 if name == "g" else 3
        if len(ids) != want or any(not 1 <= i <= dim for i in ids):
            raise SpecError(f"line {lineno}: index out of range in {key}")
        e = _expr(value, dim, lineno, key)
        if name == "g":
            metric[ids[0] - 1][ids[1] - 1] = e
        else:
            torsion_comps[tuple(i - 1 for i in ids)] = e

    domain_s, domain_line = take("domain")
    if base is None:
        for i in range(dim):
            for j in range(dim):
                if metric[i][j] is None:
                    metric[i][j] = metric[j][i] if metric[j][i] is not None else Num(0.0)
        if domain_s is None:
            raise SpecError("an inline metric needs a 'domain'")
    domain = _domain(domain_s, domain_line) if domain_s is not None else (base.domain if base else None)
    if len(domain) != dim:
        raise SpecError(f"line {domain_line}: domain needs {dim} intervals")

    kind, kind_line = take("torsion", "none")
    pot_s, pot_line = take("torsion.potential")
    if kind == "none":
        torsion = TorsionSpec.none()
    elif kind == "vectorial":
        if pot_s is None:
            raise SpecError(f"line {kind_line}: vectorial torsion needs 'torsion.potential'")
        torsion = TorsionSpec.vectorial(_expr(pot_s, dim, pot_line, "torsion.potential"))
    elif kind == "general":
        comps = [[[Num(0.0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j, k), e in torsion_comps.items():
            comps[i][j][k] = e
            if (j, i, k) not in torsion_comps:
                comps[j][i][k] = Num(0.0) if i == j else _negate(e)
        torsion = TorsionSpec.general(comps)
    else:
        raise SpecError(f"line {kind_line}: torsion must be none, vectorial or general")

    try:
        if base is None:
            chart = RiemannianChart(dim, tuple(tuple(r) for r in metric), domain, torsion, "inline")
        else:
            chart = RiemannianChart(dim, base.metric, domain, torsion, base.name)
    except GeometryError as exc:
        raise SpecError(str(exc)) from None

    wkw = {}
    for name in ("phi1", "phi2", "radius"):
        s, ln = take(name)
        if s is not None:
            wkw[name] = _expr(s, dim, ln, name)
    for name in ("f3", "f4", "f5", "f6"):
        s, ln = take(name)
        if s is not None:
            wkw[name] = _number(s, ln, name)
    weights = WeightSpec(**wkw)

    samples_s, ln = take("samples", "100")
    samples = _number(samples_s, ln, "samples", int)
    if samples < 1:
        raise SpecError(f"line {ln}: samples must be at least 1")
    seed_s, ln = take("seed", "0")
    seed = _number(seed_s, ln, "seed", int)
    suite_s, ln = take("suite", "all")
    suites = parse_suites(suite_s, ln)

    tolerances = {}
    for key in [k for k in entries if k.startswith("tol.")]:
        value, lineno = entries.pop(key)
        tolerances[key[4:]] = _number(value, lineno, key)

    if entries:
        key, (_, lineno) = next(iter(entries.items()))
        raise SpecError(f"line {lineno}: unknown key {key!r}")
    return VerifySpec(chart, weights, samples, seed, tolerances, suites)


def parse_suites(text: str, lineno: int = 0) -> tuple:
    names = [s.strip() for s in text.split(",") if s.strip()]
    if names == ["all"]:
        return SUITES
    for s in names:
        if s not in SUITES:
            raise SpecError(f"line {lineno}: unknown suite {s!r}")
    return tuple(s for s in SUITES if s in names)


def _negate(e: Expr) -> Expr:
    return Neg(e)


def from_catalog(name: str, torsion: Optional[TorsionSpec] = None, weights: Optional[WeightSpec] = None, **kw) -> VerifySpec:
    return VerifySpec(catalog(name, torsion), weights or WeightSpec(), **kw)
