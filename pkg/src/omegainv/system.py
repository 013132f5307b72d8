"""Disturbed discrete-time linear control systems ``x+ = A x + B u + w``."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import DimensionMismatchError, PCollection, Polytope


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    B: np.ndarray
    U: Polytope
    W: Polytope
    X0: Optional[PCollection] = field(default=None)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        B = np.asarray(self.B, float)
        if B.ndim == 1:
            B = B[:, None]
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        n, m = A.shape[0], B.shape[1]
        if A.shape != (n, n):
            raise DimensionMismatchError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionMismatchError(f"B has {B.shape[0]} rows, expected {n}")
        if self.U.dim != m:
            raise DimensionMismatchError(f"U has dim {self.U.dim}, B has {m} columns")
        if self.W.dim != n:
            raise DimensionMismatchError(f"W has dim {self.W.dim}, state dim is {n}")
        if self.X0 is not None and self.X0.dim != n:
            raise DimensionMismatchError(f"X0 has dim {self.X0.dim}, state dim is {n}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def step(self, x, u, w) -> np.ndarray:
        return self.A @ np.asarray(x, float) + self.B @ np.atleast_1d(u) + np.asarray(w, float)

    def controllability_matrix(self) -> np.ndarray:
        blocks, Ak = [], np.eye(self.n)
        for _ in range(self.n):
            blocks.append(Ak @ self.B)
            Ak = self.A @ Ak
        return np.hstack(blocks)

    def controllability_rank(self) -> int:
        return int(np.linalg.matrix_rank(self.controllability_matrix()))

    def with_sets(self, U: Polytope = None, W: Polytope = None) -> "LinearSystem":
        return LinearSystem(self.A, self.B, self.U if U is None else U,
                            self.W if W is None else W, self.X0)
