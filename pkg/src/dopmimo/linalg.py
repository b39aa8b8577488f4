"""Small linear-algebra helpers shared by the receiver and analysis code.

Everything sized N*N_R in this package is block-diagonal with N_R equal
N x N blocks (identity Kronecker structure), so the helpers here operate
on the block and a repetition count instead of materializing full-size
matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh

__all__ = ["KronCov", "gauss_legendre", "psd_sqrt", "psd_inv_sqrt",
           "psd_product_spectrum", "symmetrize"]


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Cached nodes/weights on [-1, 1]."""
    return leggauss(n)

EIG_FLOOR = 1e-12


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def _clamped_eigh(m: np.ndarray, floor: float):
    w, v = eigh(symmetrize(m))
    return np.maximum(w, floor), v


def psd_sqrt(m: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    """Symmetric PSD square root, eigenvalues clamped below `floor`."""
    w, v = _clamped_eigh(m, floor)
    return (v * np.sqrt(w)) @ v.conj().T


def psd_inv_sqrt(m: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    """Symmetric PSD inverse square root with the same clamping."""
    w, v = _clamped_eigh(m, floor)
    return (v / np.sqrt(w)) @ v.conj().T


def psd_product_spectrum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Eigenvalues of a @ b for symmetric PSD a, b (real, >= 0).

    a @ b is similar to b^(1/2) a b^(1/2), which is symmetric PSD, so the
    spectrum can be computed stably with a Hermitian solver.
    """
    rb = psd_sqrt(b, floor=0.0)
    w = eigh(symmetrize(rb @ a @ rb), eigvals_only=True)
    return np.maximum(w, 0.0)


@dataclass(frozen=True)
class KronCov:
    """Block-diagonal matrix I_reps (x) block, stored as its factor."""

    block: np.ndarray
    reps: int

    @property
    def shape(self):
        n = self.block.shape[0] * self.reps
        return (n, n)

    def dense(self) -> np.ndarray:
        return np.kron(np.eye(self.reps), self.block)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Multiply a stacked vector/matrix whose rows group as
        `reps` blocks of the block size."""
        n = self.block.shape[0]
        lead = x.shape[1:] if x.ndim > 1 else ()
        xr = x.reshape(self.reps, n, *([-1] if lead else []))
        if lead:
            out = np.einsum("ij,rjm->rim", self.block, xr)
        else:
            out = np.einsum("ij,rj->ri", self.block, xr)
        return out.reshape(x.shape)

    def quadratic(self, x: np.ndarray, y: np.ndarray = None) -> complex:
        """x^H (I (x) block) y over stacked vectors."""
        y = x if y is None else y
        return complex(np.vdot(x, self.apply(y)))
