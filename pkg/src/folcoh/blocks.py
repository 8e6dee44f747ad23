"""Shared block and pointwise-operator plumbing for both backends."""

from __future__ import annotations

import numpy as np


class PointwiseOp:
    """Zeroth-order operator given by one matrix per point (or one shared matrix).

    ``mat`` has shape (P, rows, cols) with P the number of points, or P = 1
    for an operator that is the same everywhere.
    """

    def __init__(self, mat, k_dom, k_cod):
        self.mat = np.asarray(mat)
        if self.mat.ndim == 2:
            self.mat = self.mat[None]
        self.k_dom = k_dom
        self.k_cod = k_cod

    def __matmul__(self, other: "PointwiseOp"):
        if other.k_cod != self.k_dom:
            raise ValueError("degree mismatch in pointwise composition")
        return PointwiseOp(self.mat @ other.mat, other.k_dom, self.k_cod)

    def __add__(self, other: "PointwiseOp"):
        if (other.k_dom, other.k_cod) != (self.k_dom, self.k_cod):
            raise ValueError("degree mismatch in pointwise sum")
        return PointwiseOp(self.mat + other.mat, self.k_dom, self.k_cod)

    def __neg__(self):
        return PointwiseOp(-self.mat, self.k_dom, self.k_cod)

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, c):
        return PointwiseOp(c * self.mat, self.k_dom, self.k_cod)

    def max_abs(self):
        return float(np.max(np.abs(self.mat))) if self.mat.size else 0.0


class Block:
    """One invariant block of a backend.

    Subclasses provide ``dims`` (per degree), ``weight`` (how many identical
    copies the block stands for), ``d(k)``, ``mass(k)``, ``pointwise(op)``,
    and ``lift`` / ``restrict`` between block and full coefficients.
    """

    key: object
    weight: int
    copies: int
    dims: list

    def constraint(self, frame_ops_k, frame_ops_k1, k):
        """Stacked basic constraint (i_X w ; i_X dw) for the given interior ops."""
        parts = []
        for op in frame_ops_k:
            parts.append(self.pointwise(op))
        if k < len(self.dims) - 1:
            dk = self.d(k)
            for op in frame_ops_k1:
                parts.append(self.pointwise(op) @ dk)
        if not parts:
            return np.zeros((0, self.dims[k]), dtype=complex)
        return np.vstack(parts)
