"""Alternating forms on an n-dimensional coordinate space, with coordinate derivatives.

A degree-k form stores one coefficient per strictly increasing multi-index
``I = (i_1 < ... < i_k)``: ``ω = Σ_I ω_I dy^{i_1} ∧ ... ∧ dy^{i_k}``. Optional
first (``grads``) and second (``hess``) derivatives of the coefficients let
:func:`exterior_d` be applied once or twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Optional

import numpy as np


def _sort_sign(idx) -> tuple[int, tuple]:
    """Sign of the permutation sorting ``idx`` (0 if an index repeats), and the sorted tuple."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


@dataclass
class AltForm:
    n: int
    k: int
    coeffs: dict = field(default_factory=dict)
    grads: Optional[dict] = None  # I -> array[n]
    hess: Optional[dict] = None  # I -> array[n, n]

    def __getitem__(self, idx) -> float:
        sign, key = _sort_sign(idx)
        return sign * self.coeffs.get(key, 0.0) if sign else 0.0

    def indices(self):
        return combinations(range(self.n), self.k)

    def __add__(self, other: "AltForm") -> "AltForm":
        _check(self, other)
        keys = set(self.coeffs) | set(other.coeffs)
        coeffs = {I: self.coeffs.get(I, 0.0) + other.coeffs.get(I, 0.0) for I in keys}
        grads = _merge(self.grads, other.grads, keys, (self.n,))
        hess = _merge(self.hess, other.hess, keys, (self.n, self.n))
        return AltForm(self.n, self.k, coeffs, grads, hess)

    def __neg__(self) -> "AltForm":
        return self.scale(-1.0)

    def __sub__(self, other: "AltForm") -> "AltForm":
        return self + (-other)

    def scale(self, c: float) -> "AltForm":
        coeffs = {I: c * a for I, a in self.coeffs.items()}
        grads = None if self.grads is None else {I: c * a for I, a in self.grads.items()}
        hess = None if self.hess is None else {I: c * a for I, a in self.hess.items()}
        return AltForm(self.n, self.k, coeffs, grads, hess)

    def dense(self) -> np.ndarray:
        """Fully antisymmetric component array ``ω(∂_{i_1}, ..., ∂_{i_k})``."""
        out = np.zeros((self.n,) * self.k)
        for I, a in self.coeffs.items():
            for perm in permutations(I):
                sign, _ = _sort_sign(perm)
                out[perm] = sign * a
        return out

    def max_abs(self) -> float:
        return max((abs(a) for a in self.coeffs.values()), default=0.0)


def _check(a: AltForm, b: AltForm) -> None:
    if a.n != b.n or a.k != b.k:
        raise ValueError("forms must share dimension and degree")


def _merge(a, b, keys, shape):
    if a is None or b is None:
        return None
    zero = np.zeros(shape)
    return {I: a.get(I, zero) + b.get(I, zero) for I in keys}


def from_covector(c, grads=None, hess=None) -> AltForm:
    c = np.asarray(c, dtype=float)
    n = len(c)
    coeffs = {(i,): float(c[i]) for i in range(n)}
    g = None if grads is None else {(i,): np.asarray(grads[i], dtype=float) for i in range(n)}
    h = None if hess is None else {(i,): np.asarray(hess[i], dtype=float) for i in range(n)}
    return AltForm(n, 1, coeffs, g, h)


def from_matrix(M, grads=None) -> AltForm:
    """2-form with ``ω(∂_i, ∂_j) = M[i, j]`` (``M`` antisymmetric); ``grads[i, j, a] = ∂_a M[i, j]``."""
    M = np.asarray(M, dtype=float)
    n = len(M)
    coeffs = {(i, j): float(M[i, j]) for i, j in combinations(range(n), 2)}
    g = None
    if grads is not None:
        grads = np.asarray(grads, dtype=float)
        g = {(i, j): grads[i, j] for i, j in combinations(range(n), 2)}
    return AltForm(n, 2, coeffs, g)


def wedge(a: AltForm, b: AltForm) -> AltForm:
    """``a ∧ b``; derivatives follow the product rule when both factors carry them."""
    if a.n != b.n:
        raise ValueError("forms live on different spaces")
    n, k = a.n, a.k + b.k
    coeffs: dict = {}
    with_grads = a.grads is not None and b.grads is not None
    grads: dict = {} if with_grads else None
    for I, x in a.coeffs.items():
        for J, y in b.coeffs.items():
            sign, K = _sort_sign(I + J)
            if not sign:
                continue
            coeffs[K] = coeffs.get(K, 0.0) + sign * x * y
            if with_grads:
                d = sign * (a.grads[I] * y + x * b.grads[J])
                grads[K] = grads.get(K, np.zeros(n)) + d
    return AltForm(n, k, coeffs, grads)


def exterior_d(form: AltForm) -> AltForm:
    """``(dω)_{i_0..i_k} = Σ_j (-1)^j ∂_{i_j} ω_{i_0..î_j..i_k}`` on sorted multi-indices."""
    if form.grads is None:
        raise ValueError("exterior derivative needs coefficient derivatives")
    n, k = form.n, form.k
    zero = np.zeros(n)
    coeffs = {}
    grads = {} if form.hess is not None else None
    for K in combinations(range(n), k + 1):
        total = 0.0
        gtot = np.zeros(n)
        for j, i in enumerate(K):
            rest = K[:j] + K[j + 1 :]
            sign = -1.0 if j % 2 else 1.0
            total += sign * form.grads.get(rest, zero)[i]
            if grads is not None and rest in form.hess:
                gtot = gtot + sign * form.hess[rest][i]
        coeffs[K] = total
        if grads is not None:
            grads[K] = gtot
    return AltForm(n, k + 1, coeffs, grads)


def evaluate(form: AltForm, vectors) -> float:
    """``ω(w_1, ..., w_k)`` for the columns of ``vectors`` (shape ``n × k``).

    Each coefficient contributes the determinant of the corresponding k×k minor.
    """
    W = np.asarray(vectors, dtype=float)
    if W.shape != (form.n, form.k):
        raise ValueError(f"expected {form.k} vectors of length {form.n}")
    return float(sum(a * np.linalg.det(W[list(I), :]) for I, a in form.coeffs.items()))


def max_difference(a: AltForm, b: AltForm) -> float:
    """Largest coefficient difference, ignoring any derivative data."""
    return (AltForm(a.n, a.k, a.coeffs) - AltForm(b.n, b.k, b.coeffs)).max_abs()
