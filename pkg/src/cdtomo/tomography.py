"""The four state estimators.

Every estimator maps (true state, parameters, sample budget, RNG stream) to a
raw linear-inversion ReconstructedMatrix. The estimators only touch the true
state through Born-rule outcome sampling: each sampled pipeline first computes
an outcome distribution, draws outcomes from it, and feeds nothing but the
outcomes into the reconstruction arithmetic. Analytic (infinite-statistics)
variants replace sampled frequencies with exact expectations and isolate
systematic bias from statistical noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import haar_su2_sample_batch, haar_unitary, hermitian_basis
from .measurement import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    I2,
    JointState,
    MeasurementSetting,
    NumericalConsistencyError,
    PointerObservable,
    _check_cd_strength,
    cd_observables,
    evolve,
    standard_observables,
)
from .measurement import IMAG_TOL, NEG_PROB_TOL, born_distribution
from .states import DensityMatrix, MubPair, ReconstructedMatrix

SCHEME_KINDS = ("mdst", "dst", "pauli", "su2", "lsq")

# Chunk length for the batched group-kernel sampler. Fixed so that a given
# stream always produces the same draw order regardless of sample budget.
_KERNEL_CHUNK = 4096


@dataclass(frozen=True)
class TomographyScheme:
    """Tag plus parameters selecting one estimator."""

    kind: str
    g: float | None = None
    basis_count: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}; expected one of {SCHEME_KINDS}")
        if self.kind == "mdst":
            if self.g is None:
                raise ValueError("mdst requires a coupling strength")
            _check_cd_strength(self.g)
        elif self.kind == "dst":
            if self.g is None or self.g <= 0:
                raise ValueError("dst requires a coupling strength g > 0")
        elif self.g is not None:
            raise ValueError(f"scheme {self.kind!r} takes no coupling strength")
        if self.basis_count is not None and self.kind != "lsq":
            raise ValueError(f"scheme {self.kind!r} takes no basis count")

    def describe(self) -> str:
        if self.g is not None:
            return f"{self.kind}(g={self.g:g})"
        if self.basis_count is not None:
            return f"{self.kind}(B={self.basis_count})"
        return self.kind


def parse_scheme(text: str) -> TomographyScheme:
    """Parse a compact scheme spec: mdst:1.3, dst:0.1, pauli, su2, lsq, lsq:6."""
    head, _, arg = text.strip().partition(":")
    head = head.lower()
    if head in ("mdst", "dst"):
        if not arg:
            raise ValueError(f"scheme {head!r} needs a coupling strength, e.g. {head}:1.3")
        return TomographyScheme(kind=head, g=float(arg))
    if head == "lsq":
        return TomographyScheme(kind=head, basis_count=int(arg) if arg else None)
    if head in ("pauli", "su2"):
        if arg:
            raise ValueError(f"scheme {head!r} takes no argument")
        return TomographyScheme(kind=head)
    raise ValueError(f"unknown scheme {text!r}")


@dataclass(frozen=True)
class WeakValueTable:
    """Estimates of the postselected-coupling products, one per (i, f) pair.

    ``pw[i, f]`` estimates the product of the postselection probability and
    the conditioned matrix element <psi_f|a_i><a_i|rho|psi_f> / P_f;
    ``counts[i, obs]`` records the samples consumed per measurement setting.
    """

    dim: int
    pw: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        pw = np.ascontiguousarray(self.pw, dtype=complex)
        counts = np.ascontiguousarray(self.counts, dtype=int)
        if pw.shape != (self.dim, self.dim):
            raise ValueError(f"pw must be {self.dim} x {self.dim}")
        if counts.shape != (self.dim, 2):
            raise ValueError("counts must have shape (dim, 2)")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        pw.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "pw", pw)
        object.__setattr__(self, "counts", counts)


def reconstruct_from_table(table: WeakValueTable, mub: MubPair,
                           scheme: str = "direct") -> ReconstructedMatrix:
    """Linear inversion: rho_r = sum_{i,f} pw[i,f] / <psi_f|a_i> |a_i><psi_f|."""
    if table.dim != mub.dim:
        raise ValueError("table and basis pair dimensions differ")
    if not np.all(np.isfinite(table.pw.view(float))):
        raise ValueError("weak-value table is incomplete (non-finite entries)")
    overlaps = mub.psi_basis.conj()  # overlaps[i, f] = <psi_f|a_i>
    varrho = table.pw / overlaps
    mat = mub.a_basis @ varrho @ mub.psi_basis.conj().T
    return ReconstructedMatrix(dim=table.dim, mat=mat, scheme=scheme,
                               n_samples=int(table.counts.sum()))


def _split_counts(total: int, buckets: int) -> list[int]:
    """Equal split with the remainder assigned round-robin from bucket 0."""
    base, rem = divmod(total, buckets)
    return [base + (1 if s < rem else 0) for s in range(buckets)]


def _exact_expectations(js: JointState, s: PointerObservable, mub: MubPair) -> np.ndarray:
    """tr[js (Pi_f x s)] for every postselection outcome f at once."""
    d = js.dim
    pointer_traced = np.einsum("apbq,qp->ab", js.mat.reshape(d, 2, d, 2), s.mat)
    vals = np.einsum("af,ab,bf->f", mub.psi_basis.conj(), pointer_traced, mub.psi_basis)
    if np.max(np.abs(vals.imag)) >= IMAG_TOL:
        raise NumericalConsistencyError("joint expectation has a large imaginary part")
    return vals.real


def _direct_observables(kind: str, g: float) -> tuple[tuple[PointerObservable, PointerObservable], float]:
    """Pointer observable pair and quadrature prefactor for mdst / dst."""
    if kind == "mdst":
        return cd_observables(g), 0.5
    if kind == "dst":
        if g <= 0:
            raise ValueError("coupling strength must be positive")
        return standard_observables(), 1.0 / (2.0 * g)
    raise ValueError(f"not a direct scheme: {kind!r}")


def _run_direct(rho: DensityMatrix, kind: str, g: float, n: int, mub: MubPair,
                rng: np.random.Generator) -> ReconstructedMatrix:
    d = rho.dim
    if mub.dim != d:
        raise ValueError("basis pair dimension does not match the state")
    if n < 2 * d:
        raise ValueError(f"need at least 2d = {2 * d} samples, got {n}")
    (obs_q, obs_p), scale = _direct_observables(kind, g)
    shares = _split_counts(n, 2 * d)
    pw = np.empty((d, d), dtype=complex)
    counts = np.empty((d, 2), dtype=int)
    for i in range(d):
        js = evolve(rho, i, g)
        means = []
        for oi, ob in enumerate((obs_q, obs_p)):
            setting = MeasurementSetting(index=i, g=g, observable=ob, mub=mub)
            n_s = shares[2 * i + oi]
            p = born_distribution(js, setting.observable, setting.mub)
            c = rng.multinomial(n_s, p.ravel()).reshape(d, 2)
            means.append(c @ ob.eigvals / n_s)
            counts[i, oi] = n_s
        pw[i] = scale * (-means[0] + 1j * means[1])
    table = WeakValueTable(dim=d, pw=pw, counts=counts)
    return reconstruct_from_table(table, mub, scheme=f"{kind}(g={g:g})")


def run_mdst(rho: DensityMatrix, g: float, n: int, mub: MubPair,
             rng: np.random.Generator) -> ReconstructedMatrix:
    """Sampled reconstruction with coupling-deformed pointer readouts.

    The budget n is split evenly over the 2d settings (coupled index) x
    (q_cd, p_cd); per setting the 2d-outcome joint measurement is sampled and
    the quadratures combined as pw = (-E_q + i E_p) / 2.
    """
    _check_cd_strength(g)
    return _run_direct(rho, "mdst", g, n, mub, rng)


def run_dst(rho: DensityMatrix, g: float, n: int, mub: MubPair,
            rng: np.random.Generator) -> ReconstructedMatrix:
    """Sampled reconstruction with the weak-limit readouts sigma_y, sigma_x.

    Identical pipeline to run_mdst but with pw = (-E_q + i E_p) / (2 g); the
    finite-strength systematic bias is deliberately kept.
    """
    return _run_direct(rho, "dst", g, n, mub, rng)


def analytic_reconstruction(rho: DensityMatrix, scheme: TomographyScheme,
                            mub: MubPair) -> ReconstructedMatrix:
    """Infinite-statistics variant of run_mdst / run_dst.

    Quadratures come from exact joint expectations instead of sampling, so
    the result isolates systematic bias: exact recovery for mdst at any valid
    strength, the finite-g bias for dst.
    """
    if scheme.kind not in ("mdst", "dst"):
        raise ValueError("analytic reconstruction covers the mdst and dst schemes")
    d = rho.dim
    (obs_q, obs_p), scale = _direct_observables(scheme.kind, scheme.g)
    pw = np.empty((d, d), dtype=complex)
    for i in range(d):
        js = evolve(rho, i, scheme.g)
        e_q = _exact_expectations(js, obs_q, mub)
        e_p = _exact_expectations(js, obs_p, mub)
        pw[i] = scale * (-e_q + 1j * e_p)
    table = WeakValueTable(dim=d, pw=pw, counts=np.zeros((d, 2), dtype=int))
    return reconstruct_from_table(table, mub, scheme=f"{scheme.kind}-analytic(g={scheme.g:g})")


_PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


def run_pauli(rho: DensityMatrix, n: int, rng: np.random.Generator,
              exact: bool = False) -> ReconstructedMatrix:
    """Qubit tomography from the three Pauli expectations.

    rho_r = I/2 + sum_i <sigma_i>/2 sigma_i with each expectation estimated
    from n/3 two-outcome samples (exact=True substitutes the exact values,
    under which the Bloch decomposition returns rho itself).
    """
    if rho.dim != 2:
        raise ValueError("Pauli tomography is defined for d = 2 only")
    if not exact and n < 3:
        raise ValueError("need at least one sample per Pauli axis")
    shares = _split_counts(n, 3)
    mat = I2 / 2.0
    for axis, sigma in enumerate(_PAULIS):
        expectation = float(np.trace(rho.mat @ sigma).real)
        if exact:
            mean = expectation
        else:
            n_a = shares[axis]
            p_plus = min(1.0, max(0.0, (1.0 + expectation) / 2.0))
            k = rng.binomial(n_a, p_plus)
            mean = (2.0 * k - n_a) / n_a
        mat = mat + (mean / 2.0) * sigma
    label = "pauli-analytic" if exact else "pauli"
    return ReconstructedMatrix(dim=2, mat=mat, scheme=label, n_samples=0 if exact else n)


@lru_cache(maxsize=None)
def spin_operators(d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spin-j angular momentum matrices (Jx, Jy, Jz) with j = (d-1)/2.

    Basis ordering is m = j, j-1, ..., -j; ladder elements are
    <m+1|J+|m> = sqrt(j(j+1) - m(m+1)).
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    j = (d - 1) / 2.0
    m = j - np.arange(d)
    jz = np.diag(m.astype(complex))
    jplus = np.zeros((d, d), dtype=complex)
    for k in range(1, d):
        jplus[k - 1, k] = np.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    jminus = jplus.conj().T
    jx = (jplus + jminus) / 2.0
    jy = (jplus - jminus) / 2j
    for arr in (jx, jy, jz):
        arr.setflags(write=False)
    return jx, jy, jz


def _bloch_vector(mat: np.ndarray) -> np.ndarray:
    return np.array([np.trace(mat @ s).real for s in _PAULIS])


def _kernel_qubit(rho: DensityMatrix, n: int, rng: np.random.Generator) -> np.ndarray:
    """Closed-form qubit path of the group-kernel estimator (j = 1/2)."""
    r = _bloch_vector(rho.mat)
    acc = np.zeros((2, 2), dtype=complex)
    done = 0
    while done < n:
        c = min(_KERNEL_CHUNK, n - done)
        axes, angles = haar_su2_sample_batch(rng, c)
        u = rng.random(c)
        p_down = (1.0 - axes @ r) / 2.0  # outcome m = -1/2, ascending order
        m_out = np.where(u < p_down, -0.5, 0.5)
        phase = np.exp(1j * angles * m_out)
        half = angles / 2.0
        s0 = np.sum(phase * np.cos(half))
        sv = (phase * np.sin(half)) @ axes
        acc += 2.0 * (s0 * I2 - 1j * (sv[0] * SIGMA_X + sv[1] * SIGMA_Y + sv[2] * SIGMA_Z))
        done += c
    return acc / n


def _kernel_generic(rho: DensityMatrix, n: int, rng: np.random.Generator) -> np.ndarray:
    """Batched general-d path: eigendecompose n.J per sample and accumulate."""
    d = rho.dim
    jx, jy, jz = spin_operators(d)
    j_ops = np.stack([jx, jy, jz])
    j = (d - 1) / 2.0
    m_asc = -j + np.arange(d)  # np.linalg.eigh returns ascending eigenvalues
    acc = np.zeros((d, d), dtype=complex)
    done = 0
    while done < n:
        c = min(_KERNEL_CHUNK, n - done)
        axes, angles = haar_su2_sample_batch(rng, c)
        u = rng.random(c)
        h = np.einsum("nc,cij->nij", axes, j_ops)
        _, v = np.linalg.eigh(h)
        p = np.einsum("nim,ij,njm->nm", v.conj(), rho.mat, v).real
        if np.min(p) < -NEG_PROB_TOL:
            raise NumericalConsistencyError(f"Born weight {np.min(p):.3e} below tolerance")
        p = np.clip(p, 0.0, None)
        cdf = np.cumsum(p / p.sum(axis=1, keepdims=True), axis=1)
        k = np.sum(cdf < u[:, None], axis=1)
        k = np.minimum(k, d - 1)
        m_out = m_asc[k]
        # X = d e^{i angle m_out} V diag(e^{-i angle m}) V^dag, summed over the chunk
        coeff = np.exp(1j * angles[:, None] * (m_out[:, None] - m_asc[None, :]))
        acc += d * np.einsum("nk,nik,njk->ij", coeff, v, v.conj())
        done += c
    return acc / n


def run_su2_kernel(rho: DensityMatrix, n: int, rng: np.random.Generator) -> ReconstructedMatrix:
    """Group-kernel tomography from spin measurements along Haar-random elements.

    Per sample: draw a Haar group element (axis, angle), measure the spin
    component along the axis once obtaining m, and accumulate the unbiased
    single-sample kernel X = d e^{i angle m} exp(-i angle n.J). The mean of X
    over the budget estimates the state.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    mat = _kernel_qubit(rho, n, rng) if rho.dim == 2 else _kernel_generic(rho, n, rng)
    return ReconstructedMatrix(dim=rho.dim, mat=mat, scheme="su2", n_samples=n)


@lru_cache(maxsize=None)
def _design_cache(d: int):
    return hermitian_basis(d)


def run_random_basis_lsq(rho: DensityMatrix, n: int, rng: np.random.Generator,
                         basis_count: int | None = None,
                         exact: bool = False) -> ReconstructedMatrix:
    """Least-squares inversion of outcome frequencies in Haar-random bases.

    Draws B orthonormal bases, spends n/B shots in each, and solves the
    normal equations for the Hermitian unit-trace matrix X minimizing
    sum (tr[X P_{b,k}] - freq_{b,k})^2 over an orthonormal traceless
    Hermitian parametrization (trace fixed, so the output is physical in
    trace and Hermiticity but not necessarily positive).
    """
    d = rho.dim
    b_count = 2 * d if basis_count is None else basis_count
    if b_count < d:
        raise ValueError(f"basis count {b_count} below dimension {d}")
    if not exact and n < b_count * d:
        raise ValueError(f"need at least B*d = {b_count * d} samples, got {n}")
    basis_ops = _design_cache(d)
    shares = _split_counts(n, b_count)
    rows = []
    targets = []
    for b in range(b_count):
        u = haar_unitary(d, rng)
        p = np.einsum("ik,ij,jk->k", u.conj(), rho.mat, u).real
        p = np.clip(p, 0.0, None)
        p /= p.sum()
        if exact:
            freq = p
        else:
            freq = rng.multinomial(shares[b], p) / shares[b]
        # row (b, k): tr[T_a |u_k><u_k|] for every generator T_a
        rows.append(np.einsum("ik,aij,jk->ka", u.conj(), basis_ops, u).real)
        targets.append(freq - 1.0 / d)
    a = np.concatenate(rows)
    y = np.concatenate(targets)
    normal = a.T @ a
    w = np.linalg.eigvalsh(normal)
    if w[0] <= 1e-10 * max(w[-1], 1.0):
        raise ValueError(
            "normal matrix is singular: the drawn bases are not informationally "
            "complete; increase the basis count (need B >= d + 1 in general)"
        )
    x = np.linalg.solve(normal, a.T @ y)
    mat = np.eye(d, dtype=complex) / d + np.einsum("a,aij->ij", x, basis_ops)
    label = "lsq-analytic" if exact else "lsq"
    return ReconstructedMatrix(dim=d, mat=mat, scheme=label, n_samples=0 if exact else n)
