"""Kraus-operator reconstruction by gradient descent on the Stiefel manifold.

The stacked Kraus matrix is updated along the normalized conjugate
(Wirtinger) gradient of a least-squares + L1 loss, with a Cayley
retraction in the low-rank Wen-Yin form keeping the stack orthonormal
(hence the channel trace-preserving) after every step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import KrausStack, channel_expectations, tp_defect
from .data import batches as batch_stream
from .dv import random_unitary

_SIGN_EPS = 1e-15


@dataclass
class GdConfig:
    """Hyperparameters for the Stiefel-manifold fit."""

    k: int = 1
    eta0: float = 0.1
    decay: float = 0.999
    lam: float = 1e-3
    max_iters: int = 200
    batch_size: int | None = None     # None = full batch
    seed: int = 0
    grad_norm_floor: float = 1e-12
    plateau_tol: float = 1e-10
    plateau_window: int = 20

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.eta0 <= 0:
            raise ValueError(f"eta0 must be > 0, got {self.eta0}")
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    def to_dict(self):
        return {"k": self.k, "eta0": self.eta0, "decay": self.decay,
                "lambda": self.lam, "max_iters": self.max_iters,
                "batch_size": self.batch_size, "seed": self.seed,
                "grad_norm_floor": self.grad_norm_floor,
                "plateau_tol": self.plateau_tol,
                "plateau_window": self.plateau_window}


@dataclass
class FitTrace:
    """Per-iteration history of a fit."""

    loss: list = field(default_factory=list)
    tp_defect: list = field(default_factory=list)
    iter_time_s: list = field(default_factory=list)
    full_loss: list = field(default_factory=list)   # (iteration, value) pairs
    n_iters: int = 0
    stop_reason: str = "max_iters"


def _batch_arrays(tomogram, batch):
    """Per-pair (residual-ready) probe/measurement/data arrays for a batch."""
    idx = np.asarray(batch, dtype=int)
    if idx.size == 0:
        return None
    i, j = idx[:, 0], idx[:, 1]
    return tomogram.probes[i], tomogram.measurements[j], tomogram.data[i, j]


def _pair_left_products(blocks, rho):
    """K_l rho_p for every block and state: (k, P, N, N)."""
    return np.matmul(blocks[:, None], rho[None])


def _residuals(kraus_blocks, rho, meas, d):
    """Per-pair residuals d_b - Tr[M_b sum_l K_l rho_b K_l^dag]."""
    out = np.matmul(_pair_left_products(kraus_blocks, rho),
                    kraus_blocks.conj().swapaxes(1, 2)[:, None]).sum(axis=0)
    n = out.shape[-1]
    pred = np.real(np.sum(out.swapaxes(1, 2).reshape(-1, n * n)
                          * meas.reshape(-1, n * n), axis=1))
    return d - pred


def loss(kraus, tomogram, batch=None, lam=1e-3):
    """Squared-residual sum over the batch plus lam * sum of entry moduli.

    batch is an iterable of (i, j) index pairs; None means all entries.
    """
    value = lam * float(np.sum(np.abs(kraus.blocks)))
    if batch is None:
        pred = channel_expectations(kraus.blocks, tomogram.probes,
                                    tomogram.measurements)
        value += float(np.sum((tomogram.data - pred) ** 2))
        return value
    arrays = _batch_arrays(tomogram, batch)
    if arrays is not None:
        value += float(np.sum(_residuals(kraus.blocks, *arrays) ** 2))
    return value


def _complex_sign(mat):
    out = np.zeros_like(mat)
    mod = np.abs(mat)
    mask = mod >= _SIGN_EPS
    out[mask] = mat[mask] / mod[mask]
    return out


def wirtinger_gradient(kraus, tomogram, batch=None, lam=1e-3):
    """Conjugate gradient of the loss w.r.t. the stacked Kraus matrix.

    Block l is -2 sum_(i,j) r_ij M_j K_l rho_i + lam * sign(K_l), with
    r_ij the residual and sign the elementwise phase (0 at 0).  Returns a
    kN x N array; validated against central finite differences in tests.
    """
    k = kraus.blocks
    n = kraus.dim
    grad = lam * _complex_sign(k)
    if batch is None:
        pred = channel_expectations(k, tomogram.probes, tomogram.measurements)
        res = tomogram.data - pred
        # W_i = sum_j r_ij M_j, then block l -= 2 sum_i W_i K_l rho_i
        meas_flat = tomogram.measurements.reshape(-1, n * n)
        weighted = (res @ meas_flat).reshape(-1, n, n)
        right = _pair_left_products(k, tomogram.probes)      # (k, P, N, N)
        grad -= 2.0 * np.matmul(weighted[None], right).sum(axis=1)
    else:
        arrays = _batch_arrays(tomogram, batch)
        if arrays is not None:
            rho, meas, d = arrays
            res = _residuals(k, rho, meas, d)
            weighted = res[:, None, None] * meas
            right = _pair_left_products(k, rho)
            grad -= 2.0 * np.matmul(weighted[None], right).sum(axis=1)
    return grad.reshape(-1, n)


def cayley_step(kraus, grad, eta, *, tp_tol=1e-8, max_halvings=10):
    """One Cayley-retraction update K' = K - eta A (I + eta/2 B^dag A)^-1 B^dag K.

    A = [G K] and B = [K -G] (kN x 2N), the Sherman-Morrison-Woodbury form
    of the Cayley transform; the result stays orthonormal.  A singular
    inner system triggers step halving, up to max_halvings times.
    """
    stack = kraus.stacked
    n = kraus.dim
    if tp_defect(kraus) > tp_tol:
        raise ValueError("cayley_step requires an orthonormal (TP) stack")
    grad = np.asarray(grad)
    if grad.shape != stack.shape:
        raise ValueError(f"gradient shape {grad.shape} != stack {stack.shape}")
    a = np.hstack([grad, stack])
    b = np.hstack([stack, -grad])
    bh_a = b.conj().T @ a
    bh_k = b.conj().T @ stack
    eye = np.eye(2 * n)
    for _ in range(max_halvings + 1):
        try:
            inner = np.linalg.solve(eye + 0.5 * eta * bh_a, bh_k)
        except np.linalg.LinAlgError:
            eta *= 0.5
            continue
        return KrausStack.from_stacked(stack - eta * (a @ inner), n)
    raise np.linalg.LinAlgError(
        f"Cayley inner system singular after {max_halvings} step halvings")


def init_kraus(k, dim, rng):
    """Random TP starting point: k random unitaries scaled by 1/sqrt(k)."""
    blocks = np.array([random_unitary(dim, rng) for _ in range(k)])
    return KrausStack(blocks / np.sqrt(k))


def fit(tomogram, cfg, init=None):
    """Reconstruct a Kraus stack from tomogram data.

    Iterates normalized-gradient Cayley steps with a decaying learning
    rate until max_iters, a vanishing gradient, or a loss plateau
    (relative change of the full-batch loss below plateau_tol between
    evaluations spaced plateau_window iterations apart).

    ``init`` overrides the random starting point; it must be a TP stack
    with cfg.k blocks of the tomogram's dimension.

    Returns (KrausStack, FitTrace).
    """
    rng = np.random.default_rng(cfg.seed)
    if init is None:
        kraus = init_kraus(cfg.k, tomogram.dim, rng)
    else:
        if init.count != cfg.k or init.dim != tomogram.dim:
            raise ValueError(f"init has {init.count} blocks of dim {init.dim}; "
                             f"expected {cfg.k} of dim {tomogram.dim}")
        if not init.is_tp():
            raise ValueError("init stack is not trace-preserving")
        kraus = init
    trace = FitTrace()
    full_batch = (cfg.batch_size is None
                  or cfg.batch_size >= tomogram.num_entries)
    stream = None if full_batch else batch_stream(tomogram, cfg.batch_size, rng)
    eta = cfg.eta0
    prev_full = None
    for it in range(cfg.max_iters):
        t0 = time.perf_counter()
        batch = None if full_batch else next(stream)
        grad = wirtinger_gradient(kraus, tomogram, batch, cfg.lam)
        gnorm = float(np.linalg.norm(grad))
        if gnorm < cfg.grad_norm_floor:
            trace.stop_reason = "gradient_floor"
            break
        kraus = cayley_step(kraus, grad / gnorm, eta)
        trace.loss.append(loss(kraus, tomogram, batch, cfg.lam))
        trace.tp_defect.append(tp_defect(kraus))
        trace.iter_time_s.append(time.perf_counter() - t0)
        trace.n_iters = it + 1
        eta *= cfg.decay
        if (it + 1) % cfg.plateau_window == 0:
            full = (trace.loss[-1] if full_batch
                    else loss(kraus, tomogram, None, cfg.lam))
            trace.full_loss.append((it + 1, full))
            if prev_full is not None:
                rel = abs(prev_full - full) / max(abs(full), 1e-300)
                if rel < cfg.plateau_tol:
                    trace.stop_reason = "plateau"
                    break
            prev_full = full
    return kraus, trace
