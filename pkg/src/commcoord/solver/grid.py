"""Regular lattice on a probability simplex with Freudenthal interpolation.

Lattice nodes are beliefs whose entries are multiples of ``1/M``.  A point
is written in the cumulative coordinates ``y_j = M * sum_{k >= j} b_k``
(j = 1..n-1), where the lattice is the integer points of
``M >= y_1 >= ... >= y_{n-1} >= 0`` and the Freudenthal (Kuhn) triangulation
gives barycentric weights from a sort of the fractional parts.  With two
states this is plain linear interpolation on [0, 1].
"""
from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp


class SimplexGrid:
    def __init__(self, num_states: int, resolution: int):
        if num_states < 1:
            raise ValueError("need at least one state")
        if resolution < 1:
            raise ValueError("resolution (subdivisions per axis) must be >= 1")
        self.n = num_states
        self.M = resolution
        d = num_states - 1
        self._lookup = np.full((resolution + 1,) * d, -1, dtype=np.int64) if d else np.zeros((), dtype=np.int64)
        coords = []
        for y in itertools.product(range(resolution + 1), repeat=d):
            if all(y[j] >= y[j + 1] for j in range(d - 1)):
                self._lookup[y] = len(coords)
                coords.append(y)
        self.coords = np.array(coords, dtype=np.int64).reshape(len(coords), d)
        self.nodes = self._to_belief(self.coords)

    @property
    def size(self) -> int:
        return len(self.nodes)

    def _to_belief(self, y: np.ndarray) -> np.ndarray:
        full = np.concatenate([np.full((len(y), 1), self.M), y, np.zeros((len(y), 1), dtype=np.int64)], axis=1)
        return (full[:, :-1] - full[:, 1:]) / self.M

    def _to_coords(self, beliefs: np.ndarray) -> np.ndarray:
        b = np.atleast_2d(np.asarray(beliefs, dtype=float))
        tail = np.cumsum(b[:, ::-1], axis=1)[:, ::-1]
        y = self.M * tail[:, 1:]
        return np.clip(y, 0.0, self.M)

    def index_of(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.int64)
        if self.n == 1:
            return np.zeros(len(y), dtype=np.int64)
        return self._lookup[tuple(y.T)]

    def vertex(self, x: int) -> int:
        """Node index of the point mass on state x."""
        y = np.zeros((1, self.n - 1), dtype=np.int64)
        y[0, :x] = self.M
        return int(self.index_of(y)[0])

    def interpolation(self, beliefs) -> tuple:
        """Vertex indices and barycentric weights, each of shape (R, n)."""
        b = np.atleast_2d(np.asarray(beliefs, dtype=float))
        R, d = len(b), self.n - 1
        if d == 0:
            return np.zeros((R, 1), dtype=np.int64), np.ones((R, 1))
        y = self._to_coords(b)
        base = np.minimum(np.floor(y), self.M - 1).astype(np.int64)
        frac = y - base
        order = np.argsort(-frac, axis=1, kind="stable")
        fs = np.take_along_axis(frac, order, axis=1)
        weights = np.empty((R, d + 1))
        weights[:, 0] = 1.0 - fs[:, 0]
        weights[:, 1:d] = fs[:, :-1] - fs[:, 1:]
        weights[:, d] = fs[:, -1]
        verts = np.empty((R, d + 1), dtype=np.int64)
        cur = base.copy()
        verts[:, 0] = self._safe_index(cur)
        rows = np.arange(R)
        for k in range(d):
            cur[rows, order[:, k]] += 1
            verts[:, k + 1] = self._safe_index(cur)
        dead = verts < 0
        if np.any(dead & (weights > 1e-12)):
            raise ValueError("belief outside the simplex")
        verts[dead] = 0
        weights[dead] = 0.0
        weights = np.clip(weights, 0.0, None)
        weights /= weights.sum(axis=1, keepdims=True)
        return verts, weights

    def _safe_index(self, y: np.ndarray) -> np.ndarray:
        ok = np.all((y >= 0) & (y <= self.M), axis=1)
        if self.n > 2:
            ok &= np.all(y[:, :-1] >= y[:, 1:], axis=1)
        out = np.full(len(y), -1, dtype=np.int64)
        out[ok] = self.index_of(y[ok])
        return out

    def interpolation_matrix(self, beliefs, row_mask=None) -> sp.csr_matrix:
        """Sparse (R, size) matrix W with ``W @ values`` = interpolated values.

        Rows where ``row_mask`` is False are left empty.
        """
        verts, weights = self.interpolation(beliefs)
        if row_mask is not None:
            weights = np.where(np.asarray(row_mask)[:, None], weights, 0.0)
        R = len(verts)
        rows = np.repeat(np.arange(R), verts.shape[1])
        W = sp.csr_matrix((weights.ravel(), (rows, verts.ravel())), shape=(R, self.size))
        W.eliminate_zeros()
        return W

    def nearest(self, beliefs) -> np.ndarray:
        """Index of the nearest lattice node (largest-remainder rounding)."""
        b = np.atleast_2d(np.asarray(beliefs, dtype=float))
        scaled = b * self.M
        k = np.floor(scaled).astype(np.int64)
        short = self.M - k.sum(axis=1)
        rem = scaled - k
        order = np.argsort(-rem, axis=1, kind="stable")
        ranks = np.empty_like(order)
        np.put_along_axis(ranks, order, np.arange(self.n)[None, :].repeat(len(b), 0), axis=1)
        k += ranks < short[:, None]
        y = np.cumsum(k[:, ::-1], axis=1)[:, ::-1][:, 1:]
        return self.index_of(y)
