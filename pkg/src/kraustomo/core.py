"""Quantum channel representations and the process-fidelity metric.

Conventions used throughout the package:

* All matrix flattening is row-major (C order).
* The Choi matrix acts on H_in (x) H_out, first tensor factor input,
  second output.  A Kraus operator K maps to the vector
  |K> = (I (x) K) sum_i |i>|i>, i.e. |K>[i*N + m] = K[m, i].

Tolerances are module constants; every check accepts an override.
"""

from __future__ import annotations

import numpy as np

# Exactness tolerance for identities that hold to machine precision.
EXACT_TOL = 1e-10
# Validity tolerance for constraints maintained by iterative algorithms.
VALID_TOL = 1e-8


def _as_complex(mat):
    return np.ascontiguousarray(np.asarray(mat, dtype=np.complex128))


class DensityMatrix:
    """An N x N Hermitian, unit-trace, PSD matrix (probe or output state)."""

    def __init__(self, mat, *, herm_tol=EXACT_TOL, trace_tol=EXACT_TOL,
                 eig_tol=EXACT_TOL):
        mat = _as_complex(mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got {mat.shape}")
        herm = np.max(np.abs(mat - mat.conj().T))
        if herm > herm_tol:
            raise ValueError(f"not Hermitian: max |M - M^dag| = {herm:.3e}")
        tr = mat.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace is {tr}, expected 1")
        lo = np.linalg.eigvalsh(mat)[0]
        if lo < -eig_tol:
            raise ValueError(f"negative eigenvalue {lo:.3e}")
        self.mat = mat

    @property
    def dim(self):
        return self.mat.shape[0]

    def purity(self):
        return float(np.real(np.trace(self.mat @ self.mat)))


class KrausStack:
    """An ordered set of k Kraus operators, also viewed as a kN x N stack.

    The stack is trace-preserving (TP) when sum_l K_l^dag K_l = I.  Raw
    intermediate estimates are allowed to violate this; use :meth:`is_tp`
    or :func:`tp_defect` to check.
    """

    def __init__(self, blocks):
        blocks = _as_complex(blocks)
        if blocks.ndim == 2:
            blocks = blocks[None]
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise ValueError(f"expected (k, N, N) blocks, got {blocks.shape}")
        self.blocks = blocks

    @classmethod
    def from_stacked(cls, stacked, dim):
        stacked = _as_complex(stacked)
        if stacked.shape[0] % dim or stacked.shape[1] != dim:
            raise ValueError(f"stacked shape {stacked.shape} not (k*{dim}, {dim})")
        return cls(stacked.reshape(-1, dim, dim))

    @property
    def dim(self):
        return self.blocks.shape[1]

    @property
    def count(self):
        return self.blocks.shape[0]

    @property
    def stacked(self):
        """The kN x N matrix obtained by stacking the blocks vertically."""
        return self.blocks.reshape(-1, self.dim)

    def is_tp(self, tol=VALID_TOL):
        return tp_defect(self) <= tol


class ChoiMatrix:
    """The N^2 x N^2 Choi representation on H_in (x) H_out."""

    def __init__(self, mat, *, herm_tol=None):
        mat = _as_complex(mat)
        n2 = mat.shape[0]
        dim = round(np.sqrt(n2))
        if mat.ndim != 2 or mat.shape[1] != n2 or dim * dim != n2:
            raise ValueError(f"Choi matrix must be N^2 x N^2, got {mat.shape}")
        if herm_tol is not None:
            herm = np.max(np.abs(mat - mat.conj().T))
            if herm > herm_tol:
                raise ValueError(f"not Hermitian: max |M - M^dag| = {herm:.3e}")
        self.mat = mat
        self.dim = dim


class ProcessMetric:
    """A process fidelity in [0, 1] and its complement."""

    def __init__(self, fidelity):
        self.fidelity = float(fidelity)

    @property
    def infidelity(self):
        return 1.0 - self.fidelity

    def __repr__(self):
        return f"ProcessMetric(fidelity={self.fidelity:.6f})"


def channel_outputs(blocks, states):
    """Apply sum_l K_l rho K_l^dag to a stack of states; (P, N, N) result.

    Hot path for synthesis and fitting; uses batched BLAS matmuls.
    """
    left = np.matmul(blocks[:, None], states[None])          # (k, P, N, N)
    return np.matmul(left, blocks.conj().swapaxes(1, 2)[:, None]).sum(axis=0)


def channel_expectations(blocks, states, observables):
    """Real expectation matrix e[i, j] = Tr[M_j sum_l K_l rho_i K_l^dag]."""
    out = channel_outputs(blocks, states)
    p, n = out.shape[0], out.shape[1]
    obs_flat = observables.reshape(observables.shape[0], n * n)
    out_flat = out.swapaxes(1, 2).reshape(p, n * n)
    return np.real(out_flat @ obs_flat.T)


def apply_kraus(kraus, rho):
    """Apply the channel sum_l K_l rho K_l^dag to a density matrix.

    Accepts a DensityMatrix or a raw N x N array for ``rho``; returns a raw
    complex N x N array (for a TP stack it is again a valid state).
    """
    mat = rho.mat if isinstance(rho, DensityMatrix) else _as_complex(rho)
    if kraus.dim != mat.shape[0]:
        raise ValueError(f"dimension mismatch: Kraus dim {kraus.dim}, "
                         f"state dim {mat.shape[0]}")
    return channel_outputs(kraus.blocks, mat[None])[0]


def kraus_to_choi(kraus):
    """Build the Choi matrix Phi = sum_l |K_l><K_l|.

    With the row-major convention, |K_l> is the flattening of K_l^T.
    The result is Hermitian PSD for any stack and has trace N when TP.
    """
    n = kraus.dim
    vecs = kraus.blocks.transpose(0, 2, 1).reshape(kraus.count, n * n)
    return ChoiMatrix(np.einsum("la,lb->ab", vecs, vecs.conj()))


def choi_apply(choi, rho):
    """Apply a channel in Choi form: rho' = Tr_in[(rho^T (x) I) Phi]."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else _as_complex(rho)
    n = choi.dim
    if mat.shape[0] != n:
        raise ValueError(f"dimension mismatch: Choi dim {n}, state dim {mat.shape[0]}")
    phi = choi.mat.reshape(n, n, n, n)  # [in, out, in', out']
    return np.einsum("ik,kaib->ab", mat.T, phi, optimize=True)


def partial_trace_out(choi):
    """Trace out the output (second) factor; equals I for a TP Choi matrix."""
    n = choi.dim
    return np.einsum("iaja->ij", choi.mat.reshape(n, n, n, n))


def tp_defect(kraus):
    """Frobenius norm of sum_l K_l^dag K_l - I (zero iff trace-preserving)."""
    k = kraus.blocks
    gram = np.einsum("lab,lac->bc", k.conj(), k)
    return float(np.linalg.norm(gram - np.eye(kraus.dim)))


def _sqrtm_psd(mat, psd_tol):
    """Square root of a Hermitian PSD matrix via eigendecomposition.

    Eigenvalues in [-psd_tol, 0) are clipped to zero; anything below
    -psd_tol is an error, not noise.
    """
    w, v = np.linalg.eigh(mat)
    if w[0] < -psd_tol:
        raise ValueError(f"matrix is not PSD: eigenvalue {w[0]:.3e} "
                         f"below -{psd_tol:.0e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def process_fidelity(choi_a, choi_b, *, psd_tol=VALID_TOL):
    """Fidelity F = Tr sqrt(sqrt(A) B sqrt(A)) of trace-normalized Choi matrices.

    Both inputs are divided by N (unit trace for TP channels) before the
    comparison.  Returns a ProcessMetric with F clamped to [0, 1].
    """
    if choi_a.dim != choi_b.dim:
        raise ValueError(f"dimension mismatch: {choi_a.dim} vs {choi_b.dim}")
    n = choi_a.dim
    a = 0.5 * (choi_a.mat + choi_a.mat.conj().T) / n
    b = 0.5 * (choi_b.mat + choi_b.mat.conj().T) / n
    ra = _sqrtm_psd(a, psd_tol)
    inner = ra @ b @ ra
    inner = 0.5 * (inner + inner.conj().T)
    w = np.linalg.eigvalsh(inner)
    if w[0] < -psd_tol:
        raise ValueError(f"inner matrix not PSD: eigenvalue {w[0]:.3e}")
    fid = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    return ProcessMetric(min(max(fid, 0.0), 1.0))
