"""Coupled system-pointer measurement physics.

Conventions used throughout:

* The pointer is a single qubit initialized in |0><0| (the +1 eigenstate of
  sigma_z); the system is the left kron factor, so joint operators are
  ``kron(system_op, pointer_op)`` and joint indices are
  ``system_index * 2 + pointer_index``.
* The measurement coupling on setting i with strength g is
  ``U_i(g) = exp(-i g A_i x sigma_x)`` with ``A_i = |a_i><a_i|``, built from
  the projector closed form
  ``(I - A_i) x I + A_i x (cos g I - i sin g sigma_x)``.
* One experimental run postselects the system onto the second basis of a
  MubPair and reads one pointer observable; both results are kept, so a run
  is a single projective measurement with 2d outcomes (f, k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import HERM_TOL, hermitian_eig
from .states import DensityMatrix, MubPair

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)

MIN_SIN_G = 1e-6
IMAG_TOL = 1e-9
NEG_PROB_TOL = 1e-9


class NumericalConsistencyError(RuntimeError):
    """An internal identity failed beyond roundoff; indicates a bug, not noise."""


@dataclass(frozen=True)
class PointerObservable:
    """2x2 Hermitian pointer readout with its spectral decomposition."""

    label: str
    mat: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    def __post_init__(self):
        mat = np.ascontiguousarray(self.mat, dtype=complex)
        w = np.ascontiguousarray(self.eigvals, dtype=float)
        v = np.ascontiguousarray(self.eigvecs, dtype=complex)
        resid = np.max(np.abs((v * w) @ v.conj().T - mat))
        if resid > HERM_TOL:
            raise ValueError(f"spectral decomposition residual {resid:.3e} too large")
        for arr in (mat, w, v):
            arr.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "eigvals", w)
        object.__setattr__(self, "eigvecs", v)

    @classmethod
    def from_matrix(cls, label: str, mat: np.ndarray) -> "PointerObservable":
        w, v = hermitian_eig(np.asarray(mat, dtype=complex))
        return cls(label=label, mat=np.asarray(mat, dtype=complex), eigvals=w, eigvecs=v)


@dataclass(frozen=True)
class MeasurementSetting:
    """One experimental configuration: coupled index, strength, pointer readout."""

    index: int
    g: float
    observable: PointerObservable
    mub: MubPair

    def __post_init__(self):
        if not 0 <= self.index < self.mub.dim:
            raise ValueError(f"coupled index {self.index} out of range for d={self.mub.dim}")
        if self.observable.label in ("q_cd", "p_cd"):
            _check_cd_strength(self.g)
        elif self.g <= 0:
            raise ValueError("coupling strength must be positive")


@dataclass(frozen=True)
class JointState:
    """Evolved system-pointer state U_i(g) (rho x |0><0|) U_i(g)^dag."""

    dim: int
    mat: np.ndarray

    def __post_init__(self):
        mat = np.ascontiguousarray(self.mat, dtype=complex)
        n = 2 * self.dim
        if mat.shape != (n, n):
            raise ValueError(f"expected shape {(n, n)}, got {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > HERM_TOL:
            raise ValueError("joint state is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > HERM_TOL:
            raise ValueError("joint state trace differs from 1")
        if np.min(np.linalg.eigvalsh(mat)) < -HERM_TOL:
            raise ValueError("joint state has a negative eigenvalue")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)


def _check_cd_strength(g: float) -> None:
    if not 0.0 < g < np.pi or abs(np.sin(g)) < MIN_SIN_G:
        raise ValueError(
            f"coupling strength g={g!r} invalid for coupling-deformed observables: "
            f"they divide by sin(g), so g must lie in (0, pi) with |sin g| >= {MIN_SIN_G}"
        )


def coupling_unitary(i: int, g: float, d: int) -> np.ndarray:
    """exp(-i g A_i x sigma_x) in projector closed form, shape (2d, 2d)."""
    if not 0 <= i < d:
        raise ValueError(f"coupled index {i} out of range for d={d}")
    a = np.zeros((d, d), dtype=complex)
    a[i, i] = 1.0
    pointer = np.cos(g) * I2 - 1j * np.sin(g) * SIGMA_X
    return np.kron(np.eye(d, dtype=complex) - a, I2) + np.kron(a, pointer)


def standard_observables() -> tuple[PointerObservable, PointerObservable]:
    """Weak-limit pointer readouts: q = sigma_y, p = sigma_x."""
    return (
        PointerObservable.from_matrix("q", SIGMA_Y),
        PointerObservable.from_matrix("p", SIGMA_X),
    )


def cd_observables(g: float) -> tuple[PointerObservable, PointerObservable]:
    """Coupling-deformed pointer readouts, exact at any valid strength.

    q_cd(g) = (sigma_y - tan(g/2) (I - sigma_z)) / sin(g)
    p_cd(g) = sigma_x / sin(g)
    """
    _check_cd_strength(g)
    s = np.sin(g)
    q = (SIGMA_Y - np.tan(g / 2.0) * (I2 - SIGMA_Z)) / s
    p = SIGMA_X / s
    return (
        PointerObservable.from_matrix("q_cd", q),
        PointerObservable.from_matrix("p_cd", p),
    )


def evolve(rho: DensityMatrix, i: int, g: float) -> JointState:
    """Couple the pointer to |a_i><a_i| at strength g, starting from rho x |0><0|."""
    u = coupling_unitary(i, g, rho.dim)
    pointer0 = np.zeros((2, 2), dtype=complex)
    pointer0[0, 0] = 1.0
    joint = u @ np.kron(rho.mat, pointer0) @ u.conj().T
    return JointState(dim=rho.dim, mat=joint)


def exact_expectation(js: JointState, f: int, s: PointerObservable, mub: MubPair) -> float:
    """tr[js (Pi_f x s)] where Pi_f projects onto the postselection vector."""
    if mub.dim != js.dim:
        raise ValueError("basis pair dimension does not match joint state")
    psi = mub.psi_basis[:, f]
    pi_f = np.outer(psi, psi.conj())
    value = complex(np.trace(js.mat @ np.kron(pi_f, s.mat)))
    if abs(value.imag) >= IMAG_TOL:
        raise NumericalConsistencyError(
            f"expectation of a Hermitian joint observable has imaginary part {value.imag:.3e}"
        )
    return value.real


def born_distribution(js: JointState, s: PointerObservable, mub: MubPair) -> np.ndarray:
    """Outcome probabilities p[f, k] of the joint (postselection, pointer) measurement.

    Tiny negative weights from roundoff are clipped and the distribution
    renormalized; anything below -1e-9 is treated as an internal error.
    """
    if mub.dim != js.dim:
        raise ValueError("basis pair dimension does not match joint state")
    vecs = np.kron(mub.psi_basis, s.eigvecs)  # column (f, k) -> index 2 f + k
    p = np.einsum("ic,ij,jc->c", vecs.conj(), js.mat, vecs).real
    if np.min(p) < -NEG_PROB_TOL:
        raise NumericalConsistencyError(f"Born weight {np.min(p):.3e} below tolerance")
    p = np.clip(p, 0.0, None)
    return (p / p.sum()).reshape(js.dim, 2)


def sample_outcome(js: JointState, s: PointerObservable, mub: MubPair,
                   rng: np.random.Generator) -> tuple[int, int]:
    """Draw one (postselection index f, pointer eigenvalue index k)."""
    p = born_distribution(js, s, mub).ravel()
    idx = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
    idx = min(idx, p.size - 1)
    return divmod(idx, 2)
