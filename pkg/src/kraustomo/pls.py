"""Projected-least-squares baseline: linear inversion + CPTP projection.

The unconstrained Choi estimate comes from the pseudo-inverse of the
sensing matrix; it is then projected onto the CPTP set with Dykstra's
alternating projections between the PSD cone (CP) and the TP affine
subspace.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .core import ChoiMatrix, partial_trace_out
from .data import sensing_matrix

_PINV_CACHE = {}


class InformationIncompleteError(ValueError):
    """Raised when the data cannot determine the process uniquely."""


@dataclass
class PlsConfig:
    dykstra_max_iters: int = 1000
    dykstra_tol: float = 1e-7
    solver: str = "pseudo-inverse"   # or "normal-equations"

    def __post_init__(self):
        if self.dykstra_max_iters < 1 or self.dykstra_tol <= 0:
            raise ValueError("iteration count and tolerance must be positive")
        if self.solver not in ("pseudo-inverse", "normal-equations"):
            raise ValueError(f"unknown solver {self.solver!r}")

    def to_dict(self):
        return {"dykstra_max_iters": self.dykstra_max_iters,
                "dykstra_tol": self.dykstra_tol, "solver": self.solver,
                "projection": "dykstra-alternating"}


@dataclass
class PlsResult:
    choi: ChoiMatrix
    converged: bool
    cycles: int


def _ensemble_key(tomogram):
    digest = hashlib.sha1()
    digest.update(np.ascontiguousarray(tomogram.probes))
    digest.update(np.ascontiguousarray(tomogram.measurements))
    return digest.hexdigest()


def _pinv(tomogram):
    key = _ensemble_key(tomogram)
    if key not in _PINV_CACHE:
        s = sensing_matrix(tomogram.probes, tomogram.measurements)
        n4 = tomogram.dim ** 4
        rank = np.linalg.matrix_rank(s)
        if rank < n4:
            raise InformationIncompleteError(
                f"sensing matrix rank {rank} < {n4} unknowns: the probe and "
                f"measurement sets are not informationally complete "
                f"(subsampled or too few operators); linear inversion has "
                f"no unique solution")
        _PINV_CACHE[key] = np.linalg.pinv(s)
    return _PINV_CACHE[key]


def linear_inversion(tomogram):
    """Unconstrained least-squares Choi estimate, Hermitized.

    Requires an informationally complete tomogram (full-column-rank
    sensing matrix); raises InformationIncompleteError otherwise.
    """
    pinv = _pinv(tomogram)
    vec = pinv @ tomogram.data.ravel()
    n2 = tomogram.dim ** 2
    est = vec.reshape(n2, n2)
    return ChoiMatrix(0.5 * (est + est.conj().T))


def project_cp(choi):
    """Frobenius-nearest PSD matrix: clip negative eigenvalues to zero."""
    mat = 0.5 * (choi.mat + choi.mat.conj().T)
    w, v = np.linalg.eigh(mat)
    w = np.clip(w, 0.0, None)
    return ChoiMatrix((v * w) @ v.conj().T)


def project_tp(choi):
    """Orthogonal projection onto the trace-preserving affine subspace.

    Adds X (x) I_out with X = (I - Tr_out Phi) / N, which makes the
    output partial trace exactly the identity.
    """
    n = choi.dim
    x = (np.eye(n) - partial_trace_out(choi)) / n
    return ChoiMatrix(choi.mat + np.kron(x, np.eye(n)))


def tp_violation(choi):
    """Frobenius distance of Tr_out(Phi) from the identity."""
    return float(np.linalg.norm(partial_trace_out(choi) - np.eye(choi.dim)))


def cp_violation(choi):
    """Magnitude of the most negative eigenvalue (0 if PSD)."""
    w = np.linalg.eigvalsh(0.5 * (choi.mat + choi.mat.conj().T))
    return float(max(0.0, -w[0]))


def project_cptp(choi, cfg=None):
    """Project onto the CPTP set with Dykstra's alternating projections.

    Stops when the Frobenius change per cycle drops below dykstra_tol;
    past dykstra_max_iters the best iterate is returned flagged
    non-converged.
    """
    cfg = cfg or PlsConfig()
    x = ChoiMatrix(0.5 * (choi.mat + choi.mat.conj().T))
    p = np.zeros_like(x.mat)
    q = np.zeros_like(x.mat)
    cycles = 0
    converged = False
    for cycles in range(1, cfg.dykstra_max_iters + 1):
        y = project_cp(ChoiMatrix(x.mat + p))
        p = x.mat + p - y.mat
        x_new = project_tp(ChoiMatrix(y.mat + q))
        q = y.mat + q - x_new.mat
        delta = float(np.linalg.norm(x_new.mat - x.mat))
        x = x_new
        if delta < cfg.dykstra_tol:
            converged = True
            break
    return PlsResult(x, converged, cycles)


def fit_pls(tomogram, cfg=None):
    """Estimate-then-project reconstruction: linear inversion + CPTP projection."""
    return project_cptp(linear_inversion(tomogram), cfg)
