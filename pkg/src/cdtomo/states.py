"""Density matrices, random-state ensembles, the unbiased basis pair, and the
trace-distance figure of merit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import HERM_TOL, singular_values

MUB_TOL = 1e-12


@dataclass(frozen=True)
class DensityMatrix:
    """A physical state: Hermitian, unit-trace, positive semidefinite."""

    dim: int
    mat: np.ndarray

    def __post_init__(self):
        mat = np.ascontiguousarray(self.mat, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"expected shape {(self.dim, self.dim)}, got {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > HERM_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > HERM_TOL or abs(np.trace(mat).imag) > HERM_TOL:
            raise ValueError("density matrix trace differs from 1")
        if np.min(np.linalg.eigvalsh(mat)) < -HERM_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)


@dataclass(frozen=True)
class ReconstructedMatrix:
    """Raw linear-inversion estimate of a state.

    Statistical noise may break Hermiticity, positivity and unit trace;
    deliberately only finiteness is enforced.
    """

    dim: int
    mat: np.ndarray
    scheme: str
    n_samples: int

    def __post_init__(self):
        mat = np.ascontiguousarray(self.mat, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise ValueError(f"expected shape {(self.dim, self.dim)}, got {mat.shape}")
        if not np.all(np.isfinite(mat.view(float))):
            raise ValueError("reconstruction contains non-finite entries")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)


@dataclass(frozen=True)
class MubPair:
    """Computational basis plus a second basis with all overlaps 1/sqrt(d).

    ``a_basis`` and ``psi_basis`` hold the basis vectors as columns;
    ``psi_basis[i, f]`` is the amplitude <a_i|psi_f>.
    """

    dim: int
    a_basis: np.ndarray
    psi_basis: np.ndarray

    def __post_init__(self):
        for name in ("a_basis", "psi_basis"):
            b = np.ascontiguousarray(getattr(self, name), dtype=complex)
            if b.shape != (self.dim, self.dim):
                raise ValueError(f"{name} must be {self.dim} x {self.dim}")
            if np.max(np.abs(b.conj().T @ b - np.eye(self.dim))) > MUB_TOL:
                raise ValueError(f"{name} columns are not orthonormal")
            b.setflags(write=False)
            object.__setattr__(self, name, b)
        overlaps = np.abs(self.a_basis.conj().T @ self.psi_basis)
        if np.max(np.abs(overlaps - 1.0 / np.sqrt(self.dim))) > MUB_TOL:
            raise ValueError("bases are not mutually unbiased")

    def overlap(self, i: int, f: int) -> complex:
        """<psi_f|a_i>."""
        return complex(np.vdot(self.psi_basis[:, f], self.a_basis[:, i]))


def fourier_mub(d: int) -> MubPair:
    """Computational/Fourier basis pair; unbiased for every d >= 2."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    i, f = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    psi = np.exp(2j * np.pi * i * f / d) / np.sqrt(d)
    return MubPair(dim=d, a_basis=np.eye(d, dtype=complex), psi_basis=psi)


def random_density_hs(d: int, rng: np.random.Generator) -> DensityMatrix:
    """Hilbert-Schmidt random mixed state: G G^dag / tr(G G^dag) for square Ginibre G."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return DensityMatrix(dim=d, mat=m / np.trace(m).real)


def random_pure(d: int, rng: np.random.Generator) -> DensityMatrix:
    """Haar-random pure state |psi><psi|."""
    if d < 2:
        raise ValueError("dimension must be at least 2")
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    return DensityMatrix(dim=d, mat=np.outer(psi, psi.conj()))


def hermitize(m: np.ndarray) -> np.ndarray:
    """(M + M^dag) / 2, the optional pre-scoring projection for noisy estimates."""
    return (m + m.conj().T) / 2.0


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Half the sum of singular values of a - b.

    For Hermitian arguments this is the usual (1/2) tr|a - b|; non-Hermitian
    reconstructions are scored on the same definition without symmetrizing.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return 0.5 * float(np.sum(singular_values(a - b)))
