"""Particle configuration grids on Dirichlet boxes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = ["ParticleGrid", "pauli_matrices"]


def pauli_matrices():
    return [np.array([[0, 1], [1, 0]], dtype=complex),
            np.array([[0, -1j], [1j, 0]], dtype=complex),
            np.array([[1, 0], [0, -1]], dtype=complex)]


@dataclass(frozen=True, eq=False)
class ParticleGrid:
    """Uniform grid on ``[0, L]^d`` per particle with Dirichlet boundary.

    The box is cut into ``n`` intervals per axis (spacing ``h = L / n``); the
    unknowns sit on the ``(n - 1)^d`` interior nodes.  The configuration grid
    of ``N`` particles is the ``N``-fold product.  Operators order the
    unknowns particle-major: particle 0 slowest, axis 0 slowest within a
    particle, and each particle's spin index directly after its position.

    Parameters
    ----------
    d : int
    L : float
        Box side.
    n : int
        Intervals per axis (``n >= 2``).
    N : int
        Number of particles.
    s : int
        Spin multiplicity; ``s = 2`` defaults to the Pauli matrices.
    sigma : list of (s, s) arrays, optional
        ``d`` hermitian spin matrices.
    """

    d: int
    L: float
    n: int
    N: int = 1
    s: int = 1
    sigma: Optional[list] = field(default=None)

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError("d must be 1, 2 or 3")
        if not self.L > 0 or int(self.n) != self.n or self.n < 2:
            raise ValueError("need L > 0 and an integer number of intervals n >= 2")
        if self.N < 1 or self.s < 1:
            raise ValueError("need N >= 1 and s >= 1")
        sig = self.sigma
        if sig is None:
            if self.s == 1:
                sig = [np.zeros((1, 1), dtype=complex)] * self.d
            elif self.s == 2:
                sig = pauli_matrices()[: min(self.d, 3)]
            else:
                raise ValueError(f"no default spin matrices for s={self.s}")
        sig = [np.asarray(m, dtype=complex) for m in sig]
        if len(sig) != self.d:
            raise ValueError("need one spin matrix per spatial component")
        for m in sig:
            if m.shape != (self.s, self.s):
                raise ValueError("spin matrices must be s x s")
            if np.abs(m - m.conj().T).max() > 1e-13:
                raise ValueError("spin matrices must be hermitian")
        object.__setattr__(self, "sigma", sig)

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def n_side(self) -> int:
        """Interior nodes per axis."""
        return self.n - 1

    @property
    def n_points(self) -> int:
        """Interior nodes of the one-particle grid."""
        return self.n_side ** self.d

    @property
    def n_config(self) -> int:
        return self.n_points ** self.N

    @property
    def dim(self) -> int:
        return self.n_config * self.s ** self.N

    @property
    def shape(self):
        return (self.n_side,) * self.d

    @property
    def axis(self) -> np.ndarray:
        return self.h * np.arange(1, self.n)

    @property
    def points(self) -> np.ndarray:
        """``(P, d)`` one-particle interior nodes in C order."""
        mesh = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def config_points(self) -> np.ndarray:
        """``(P^N, N d)`` configuration nodes."""
        if self.N == 1:
            return self.points
        idx = np.indices((self.n_points,) * self.N).reshape(self.N, -1).T
        return np.concatenate([self.points[idx[:, j]] for j in range(self.N)], axis=1)

    @property
    def center(self) -> np.ndarray:
        return np.full(self.d, self.L / 2)

    def contains(self, x) -> bool:
        x = np.atleast_2d(x)
        return bool(np.all((x >= 0) & (x <= self.L)))

    def describe(self) -> dict:
        return {"d": self.d, "L": self.L, "n": self.n, "h": self.h, "N": self.N,
                "s": self.s, "dim": self.dim}
