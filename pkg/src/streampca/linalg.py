"""Deterministic dense kernels: seeded Gaussian draws, unpivoted QR with a
fixed sign convention, small SVD, triangular solves, and projector application.

Everything computes in float64 regardless of how inputs are stored on disk.
All kernels are deterministic for fixed inputs when the BLAS runs single
threaded (see the --threads flag on the CLI).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    RankDeficiencyError,
    SingularMatrixError,
)

# Relative threshold for declaring a QR column numerically dependent:
# |r_jj| < RANK_TOL * (largest column norm of the input).
RANK_TOL = 1e-12

# Independent substreams of the counter-based generator. One user-facing
# seed plus a stream id fully determines every random draw in the package,
# so runs are reproducible and the draws of different roles never overlap.
STREAM_SKETCH = 0        # the sketch test matrix Omega
STREAM_COSKETCH = 1      # the co-sketch matrix used by the one-pass baseline
STREAM_FACTOR_U = 2      # synthetic left factor
STREAM_FACTOR_V = 3      # synthetic right factor
STREAM_REPAIR = 4        # replacement directions for rank-deficient blocks
                         # (block i draws from stream STREAM_REPAIR + i)


def _generator(seed: int, stream: int) -> np.random.Generator:
    if seed < 0 or stream < 0:
        raise ConfigError("seed and stream must be nonnegative")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gaussian_matrix(rows: int, cols: int, seed: int, stream: int = STREAM_SKETCH) -> np.ndarray:
    """Draw an i.i.d. standard normal (rows x cols) matrix.

    The generator is Philox, counter based and keyed by (seed, stream), so
    the same arguments give bit-identical output on any platform running
    the same numpy version. Different seeds or streams give independent
    matrices.
    """
    if rows < 1 or cols < 1:
        raise DimensionError(f"gaussian_matrix needs positive dims, got {rows}x{cols}")
    return _generator(seed, stream).standard_normal((rows, cols))


@dataclass(frozen=True)
class QrPair:
    """Thin QR factorization with orthonormal q and upper triangular r.

    The diagonal of r is nonnegative (column signs of q flipped to match),
    which makes the factorization unique and test expectations stable.
    """

    q: np.ndarray
    r: np.ndarray


def qr_unpivoted(y: np.ndarray, rank_check: bool = True) -> QrPair:
    """Unpivoted thin QR of an m x b matrix (m >= b) with nonnegative diag(r).

    With rank_check on (the default), a numerically dependent column raises
    RankDeficiencyError carrying the offending column index; the threshold
    is RANK_TOL times the largest column norm of y.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2:
        raise DimensionError("qr_unpivoted expects a 2-d array")
    m, b = y.shape
    if b < 1 or m < b:
        raise DimensionError(f"qr_unpivoted needs m >= b >= 1, got {m}x{b}")
    q, r = np.linalg.qr(y)
    sign = np.where(np.diag(r) < 0.0, -1.0, 1.0)
    q = q * sign
    r = r * sign[:, None]
    if rank_check:
        tol = RANK_TOL * float(np.max(np.linalg.norm(y, axis=0)))
        small = np.abs(np.diag(r)) < tol
        if small.any():
            j = int(np.argmax(small))
            raise RankDeficiencyError(
                f"column {j} of the QR input is numerically dependent "
                f"(|r_jj| = {abs(r[j, j]):.3e} < tol = {tol:.3e})",
                column=j,
            )
    return QrPair(q=q, r=r)


@dataclass(frozen=True)
class SvdTriple:
    """Full thin SVD: u (m x p), s descending nonnegative, v (n x p)."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


def dense_svd(b: np.ndarray) -> SvdTriple:
    """Thin SVD of a small dense matrix, intended for the l x n sketch."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] < 1 or b.shape[1] < 1:
        raise DimensionError("dense_svd expects a nonempty 2-d array")
    if not np.all(np.isfinite(b)):
        raise DataError("dense_svd input contains non-finite entries")
    u, s, vt = np.linalg.svd(b, full_matrices=False)
    return SvdTriple(u=u, s=s, v=vt.T)


def solve_rt(r: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Solve r^T x = m for x by forward substitution (r upper triangular)."""
    r = np.asarray(r, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise DimensionError("solve_rt expects a square triangular matrix")
    if m.shape[0] != r.shape[0]:
        raise DimensionError(
            f"solve_rt shape mismatch: r is {r.shape}, rhs has {m.shape[0]} rows"
        )
    diag = np.abs(np.diag(r))
    scale = float(np.max(diag)) if r.shape[0] else 0.0
    if scale == 0.0 or np.any(diag < 1e-300) or np.any(diag < 1e-15 * scale):
        j = int(np.argmin(diag))
        raise SingularMatrixError(f"triangular factor has near-zero diagonal at {j}")
    return scipy.linalg.solve_triangular(r, m, trans="T", lower=False)


def projector_apply(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Orthogonal projection q (q^T x) of x onto range(q).

    q must have orthonormal columns. x may be a vector or a matrix of
    column vectors.
    """
    q = np.asarray(q, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if q.ndim != 2:
        raise DimensionError("projector_apply expects a 2-d q")
    if x.shape[0] != q.shape[0]:
        raise DimensionError(
            f"projector_apply dimension mismatch: q is {q.shape}, x has length {x.shape[0]}"
        )
    return q @ (q.T @ x)


def sign_align(u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fix the sign ambiguity of singular vector pairs.

    Flips each (u_j, v_j) pair so the largest-magnitude entry of v_j is
    positive. Keeps components comparable across runs and against oracles.
    """
    v = np.array(v, dtype=np.float64, copy=True)
    u = np.array(u, dtype=np.float64, copy=True)
    for j in range(v.shape[1]):
        i = int(np.argmax(np.abs(v[:, j])))
        if v[i, j] < 0.0:
            v[:, j] = -v[:, j]
            u[:, j] = -u[:, j]
    return u, v
