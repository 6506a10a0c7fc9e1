"""First-order forward-mode jets of array-valued quantities.

A :class:`Jet` holds an array ``val`` and its partial derivatives ``der``
with respect to ``n`` coordinates, stored on a trailing axis:
``der[..., k] = d val[...] / d y^k``. On the tangent bundle the coordinates
are ``(x^1..x^m, v^1..v^m)``, so ``n = 2m``.
"""

from __future__ import annotations

import numpy as np

_DERIV_LETTER = "Z"


class Jet:
    __slots__ = ("val", "der")

    def __init__(self, val, der):
        self.val = np.asarray(val, dtype=float)
        self.der = np.asarray(der, dtype=float)
        if self.der.shape[:-1] != self.val.shape:
            raise ValueError(f"derivative shape {self.der.shape} does not match value {self.val.shape}")

    @classmethod
    def constant(cls, val, n: int) -> "Jet":
        val = np.asarray(val, dtype=float)
        return cls(val, np.zeros(val.shape + (n,)))

    @property
    def n(self) -> int:
        return self.der.shape[-1]

    @property
    def shape(self):
        return self.val.shape

    def d_x(self, m: int) -> np.ndarray:
        return self.der[..., :m]

    def d_v(self, m: int) -> np.ndarray:
        return self.der[..., m:]

    def directional(self, X) -> np.ndarray:
        """Derivative of the value along the coordinate vector ``X``."""
        return self.der @ np.asarray(X, dtype=float)

    def pad(self, n: int, offset: int = 0) -> "Jet":
        """Embed into ``n`` coordinates, placing the current ones at ``offset``."""
        der = np.zeros(self.val.shape + (n,))
        der[..., offset : offset + self.n] = self.der
        return Jet(self.val, der)

    def transpose(self, *axes) -> "Jet":
        if not axes:
            axes = tuple(reversed(range(self.val.ndim)))
        return Jet(self.val.transpose(axes), self.der.transpose(tuple(axes) + (self.val.ndim,)))

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def __getitem__(self, idx) -> "Jet":
        # leading-axis indexing only; the derivative axis is always kept
        return Jet(self.val[idx], self.der[idx])

    def __neg__(self) -> "Jet":
        return Jet(-self.val, -self.der)

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            val = self.val + other.val
            return Jet(val, _bcast(self.der, val.shape) + _bcast(other.der, val.shape))
        val = self.val + other
        return Jet(val, _bcast(self.der, val.shape))

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            val = self.val * other.val
            der = self.der * other.val[..., None] + self.val[..., None] * other.der
            return Jet(val, _bcast(der, val.shape))
        other = np.asarray(other, dtype=float)
        val = self.val * other
        return Jet(val, _bcast(self.der * other[..., None], val.shape))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def reciprocal(self) -> "Jet":
        r = 1.0 / self.val
        return Jet(r, -(r * r)[..., None] * self.der)

    def exp(self) -> "Jet":
        e = np.exp(self.val)
        return Jet(e, e[..., None] * self.der)

    def __repr__(self) -> str:
        return f"Jet(val={self.val!r}, n={self.n})"


def _bcast(der, shape):
    return np.broadcast_to(der, tuple(shape) + der.shape[-1:])


def as_jet(a, n: int) -> Jet:
    return a if isinstance(a, Jet) else Jet.constant(a, n)


def jeinsum(subscripts: str, *operands) -> Jet:
    """``np.einsum`` with the product rule applied to jet operands.

    Plain arrays are treated as constants. The result is a :class:`Jet` whose
    derivative is the sum over jet operands of the contraction with that
    operand replaced by its derivative.
    """
    inputs, output = subscripts.replace(" ", "").split("->")
    terms = inputs.split(",")
    if len(terms) != len(operands):
        raise ValueError("operand count does not match subscripts")
    if _DERIV_LETTER in subscripts:
        raise ValueError(f"subscript letter {_DERIV_LETTER!r} is reserved")
    vals = [op.val if isinstance(op, Jet) else np.asarray(op, dtype=float) for op in operands]
    value = np.einsum(subscripts, *vals)
    n = None
    der = None
    for p, op in enumerate(operands):
        if not isinstance(op, Jet):
            continue
        n = op.n
        args = list(vals)
        args[p] = op.der
        spec = ",".join(t + _DERIV_LETTER if q == p else t for q, t in enumerate(terms))
        contrib = np.einsum(f"{spec}->{output}{_DERIV_LETTER}", *args)
        der = contrib if der is None else der + contrib
    if n is None:
        raise ValueError("jeinsum needs at least one Jet operand")
    return Jet(value, der)


def jinv(a: Jet) -> Jet:
    """Matrix inverse: ``d(A^-1) = -A^-1 dA A^-1``."""
    inv = np.linalg.inv(a.val)
    der = -np.einsum("ij,jkZ,kl->ilZ", inv, a.der, inv)
    return Jet(inv, der)


def jblock(blocks) -> Jet:
    """Assemble a block matrix from a nested list of jets/arrays (like ``np.block``)."""
    n = next(b.n for row in blocks for b in row if isinstance(b, Jet))
    jrows = [[as_jet(b, n) for b in row] for row in blocks]
    val = np.block([[b.val for b in row] for row in jrows])
    der = np.concatenate(
        [np.concatenate([b.der for b in row], axis=1) for row in jrows], axis=0
    )
    return Jet(val, der)
