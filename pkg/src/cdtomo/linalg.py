"""Dense complex linear algebra and random-sampling primitives.

Everything here works on plain complex ndarrays at the small dimensions this
package needs (joint system-pointer matrices up to 2d <= 40, double precision
throughout). Eigen/SVD work is delegated to LAPACK via numpy; the contracts
are the residual tolerances checked by the test suite, not the algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERM_TOL = 1e-10
AXIS_TOL = 1e-12


def make_stream(*key: int) -> np.random.Generator:
    """Deterministic counter-based RNG stream keyed by a tuple of integers.

    Philox is counter-based, so streams derived from distinct keys are
    statistically independent and reproducible regardless of scheduling.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def hermitian_eig(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, unitary matrix of eigenvector columns)
    such that ``h = V @ diag(w) @ V.conj().T``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not is_hermitian(h):
        dev = float(np.max(np.abs(h - h.conj().T)))
        raise ValueError(f"matrix is not Hermitian (max |H - H^dag| = {dev:.3e})")
    w, v = np.linalg.eigh(h)
    return w, v


def singular_values(m: np.ndarray) -> np.ndarray:
    """Singular values of an arbitrary complex matrix, descending."""
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m.view(float))):
        raise ValueError("matrix contains non-finite entries")
    return np.linalg.svd(m, compute_uv=False)


def herm_unitary_exp(h: np.ndarray, theta: float) -> np.ndarray:
    """exp(-i * theta * h) for Hermitian h, via spectral decomposition."""
    w, v = hermitian_eig(h)
    return (v * np.exp(-1j * theta * w)) @ v.conj().T


def partial_trace_system(m: np.ndarray, d: int) -> np.ndarray:
    """Trace out the d-dimensional system factor of a (d*2) x (d*2) matrix.

    Index convention: row/column index = system_index * 2 + pointer_index
    (system is the left kron factor). The result is the 2x2 pointer block.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (2 * d, 2 * d):
        raise ValueError(f"expected shape {(2 * d, 2 * d)}, got {m.shape}")
    return np.einsum("spsq->pq", m.reshape(d, 2, d, 2))


@dataclass(frozen=True)
class AxisAngle:
    """Rotation axis (unit 3-vector) and angle in [0, 2*pi)."""

    axis: np.ndarray
    angle: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,):
            raise ValueError("axis must be a 3-vector")
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_TOL:
            raise ValueError("axis must be a unit vector")
        if not 0.0 <= self.angle < 2.0 * np.pi:
            raise ValueError("angle must lie in [0, 2*pi)")
        object.__setattr__(self, "axis", axis)


def haar_su2_sample_batch(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n Haar samples on SU(2) as (axes (n,3), angles (n,)).

    A uniform unit quaternion (q0, qv) on S^3 maps to angle 2*arccos(q0) in
    [0, 2*pi) and axis qv/|qv|; the induced angle density is sin^2(angle/2)/pi.
    """
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    angles = 2.0 * np.arccos(np.clip(q[:, 0], -1.0, 1.0))
    angles = np.minimum(angles, np.nextafter(2.0 * np.pi, 0.0))
    vnorm = np.linalg.norm(q[:, 1:], axis=1)
    degenerate = vnorm < 1e-12
    vnorm[degenerate] = 1.0
    axes = q[:, 1:] / vnorm[:, None]
    axes[degenerate] = (0.0, 0.0, 1.0)
    return axes, angles


def haar_su2_sample(rng: np.random.Generator) -> AxisAngle:
    """One Haar-distributed SU(2) element as an AxisAngle."""
    axes, angles = haar_su2_sample_batch(rng, 1)
    return AxisAngle(axis=axes[0], angle=float(angles[0]))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random d x d unitary: QR of a complex Ginibre matrix, phase-fixed."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal traceless Hermitian basis of su(d), shape (d^2 - 1, d, d).

    Generalized Gell-Mann construction: symmetric and antisymmetric pair
    matrices plus diagonal matrices, normalized to tr(T_a T_b) = delta_ab.
    """
    mats = []
    for k in range(1, d):
        for j in range(k):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0 / np.sqrt(2.0)
            mats.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j / np.sqrt(2.0)
            m[k, j] = 1j / np.sqrt(2.0)
            mats.append(m)
    for ell in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[np.arange(ell), np.arange(ell)] = 1.0
        m[ell, ell] = -float(ell)
        mats.append(m / np.sqrt(ell * (ell + 1)))
    return np.stack(mats)
