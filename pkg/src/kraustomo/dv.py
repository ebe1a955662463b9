"""Discrete-variable probe/measurement ensembles and random CPTP processes.

Probes and measurements are tensor products of single-qubit Pauli
eigenstate projectors, ordered lexicographically over the per-qubit labels
(x+, x-, y+, y-, z+, z-).
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import DensityMatrix, KrausStack

PAULI_LABELS = ("x+", "x-", "y+", "y-", "z+", "z-")

# Memory guard for explicit ensembles: 2 * 6^n * 4^n * 16 bytes.
_MAX_ENSEMBLE_BYTES = 2 << 30

_KETS = {
    "x+": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "x-": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "y+": np.array([1, 1j], dtype=complex) / np.sqrt(2),
    "y-": np.array([1, -1j], dtype=complex) / np.sqrt(2),
    "z+": np.array([1, 0], dtype=complex),
    "z-": np.array([0, 1], dtype=complex),
}


class PauliEnsemble:
    """The 6^n Pauli-eigenstate probes and projective measurements."""

    def __init__(self, n_qubits, probes, measurements, labels):
        self.n_qubits = n_qubits
        self.probes = probes                # list of DensityMatrix
        self.measurements = measurements    # list of Hermitian projectors
        self.labels = labels                # list of per-qubit label tuples

    @property
    def dim(self):
        return 2 ** self.n_qubits


def pauli_projector(labels):
    """Tensor product of single-qubit eigenstate projectors for a label tuple."""
    ket = np.array([1.0 + 0j])
    for lab in labels:
        ket = np.kron(ket, _KETS[lab])
    return np.outer(ket, ket.conj())


def pauli_ensemble(n):
    """Build the full 6^n probe and measurement sets for n qubits.

    Raises MemoryError (with the offending size) instead of attempting an
    allocation that cannot fit in memory.
    """
    if n < 1:
        raise ValueError(f"need at least one qubit, got n={n}")
    nbytes = 2 * 6 ** n * 4 ** n * 16
    if nbytes > _MAX_ENSEMBLE_BYTES:
        raise MemoryError(
            f"explicit Pauli ensemble for n={n} needs ~{nbytes / 2**30:.1f} GiB; "
            f"use pauli_projector on a subset of labels instead")
    labels = list(itertools.product(PAULI_LABELS, repeat=n))
    projectors = [pauli_projector(lab) for lab in labels]
    probes = [DensityMatrix(p) for p in projectors]
    return PauliEnsemble(n, probes, [p.copy() for p in projectors], labels)


def random_unitary(dim, rng):
    """A random unitary U = exp(-iH), H = (X + X^dag)/2.

    X has independent real and imaginary parts, each uniform on [-1, 1].
    The exponential is computed from the eigendecomposition of H, so U is
    unitary to machine precision.
    """
    x = rng.uniform(-1, 1, (dim, dim)) + 1j * rng.uniform(-1, 1, (dim, dim))
    h = 0.5 * (x + x.conj().T)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ v.conj().T


def random_process(dim, rank, rng):
    """A random CPTP process as a weighted combination of random unitaries.

    K_l = w_l U_l with weights drawn uniform on (0, 1] and normalized so
    that sum_l w_l^2 = 1, which makes the stack trace-preserving.
    """
    if not 1 <= rank <= dim * dim:
        raise ValueError(f"rank must be in [1, {dim * dim}], got {rank}")
    weights = 1.0 - rng.random(rank)
    weights /= np.sqrt(np.sum(weights ** 2))
    blocks = np.array([w * random_unitary(dim, rng) for w in weights])
    return KrausStack(blocks)
