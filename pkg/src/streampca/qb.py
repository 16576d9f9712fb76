"""Blocked QB factorization driven entirely by the sketch.

Given G = A Omega and H = A^T G from one pass, the loop reconstructs an
orthonormal Q and B = Q^T A without touching A again. Per block i
(columns c = i*b .. (i+1)*b of the sketch):

    Y_i = G[:, c] - Q (B Omega_i)
    Q_i, R_i = qr(Y_i)
    Q_i, Rt  = qr(Q_i - Q (Q^T Q_i))      re-orthogonalization
    R_i = Rt R_i
    B_i = R_i^{-T} (H[:, c]^T - (Y_i^T Q) B - (Omega_i^T B^T) B)

then Q gains the b columns Q_i and B the b rows B_i. On the first block
Q and B have zero width, so the correction terms vanish on their own.
The two right-hand-side products are grouped as (Y_i^T Q) B and
(Omega_i^T B^T) B; grouping the other way would cost O(n^2 b) instead of
O(l n b).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, RankDeficiencyError
from .linalg import (
    RANK_TOL,
    STREAM_REPAIR,
    gaussian_matrix,
    qr_unpivoted,
    solve_rt,
)


@dataclass(frozen=True)
class QbFactor:
    """Q with orthonormal columns and B approximating Q^T A.

    repaired_columns lists global sketch columns whose directions were
    replaced because the corresponding residual block was numerically
    rank-deficient (empty in the default error mode).
    """

    q: np.ndarray
    b: np.ndarray
    repaired_columns: tuple[int, ...] = ()


def _first_deficient(r: np.ndarray, scale: float) -> Optional[int]:
    # scale is the largest column norm of the whole sketch G, not of the
    # current residual block: a block that is tiny in every column (exact
    # low-rank data) must still be flagged.
    small = np.abs(np.diag(r)) < RANK_TOL * scale
    return int(np.argmax(small)) if small.any() else None


def blocked_qb(
    g: np.ndarray,
    h: np.ndarray,
    omega: np.ndarray,
    b: int,
    reorth: bool = True,
    on_deficiency: str = "error",
    repair_seed: int = 0,
    on_block: Optional[Callable[[int, np.ndarray, np.ndarray], None]] = None,
) -> QbFactor:
    """Factor the sketch into Q (m x l) and B (l x n).

    b is the block size; the sketch width l must be a multiple of it.
    reorth applies the second QR pass per block (on by default; turning it
    off exists to demonstrate the orthogonality loss it prevents).
    on_deficiency is "error" (raise, identifying block and column) or
    "repair" (replace dependent directions with fresh random ones
    orthogonalized against the basis, and zero the matching B rows; an
    extension useful when the data has exact low rank and the sketch
    necessarily degenerates). on_block, if given, is called with
    (i, q_so_far, b_so_far) after every block append; the arrays are live
    views and must not be mutated.
    """
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    omega = np.asarray(omega, dtype=np.float64)
    m, l = g.shape
    n = h.shape[0]
    if h.shape[1] != l or omega.shape != (n, l):
        raise ConfigError(
            f"inconsistent sketch shapes: g {g.shape}, h {h.shape}, omega {omega.shape}"
        )
    if b < 1 or l % b != 0:
        raise ConfigError(f"sketch width {l} is not a multiple of block size {b}")
    if on_deficiency not in ("error", "repair"):
        raise ConfigError(f"unknown deficiency policy {on_deficiency!r}")

    t = l // b
    q_acc = np.empty((m, 0))
    b_acc = np.empty((0, n))
    repaired: list[int] = []
    g_scale = float(np.max(np.linalg.norm(g, axis=0))) if g.size else 0.0

    for i in range(t):
        cols = slice(i * b, (i + 1) * b)
        omega_i = omega[:, cols]
        y_i = g[:, cols] - q_acc @ (b_acc @ omega_i)
        pair = qr_unpivoted(y_i, rank_check=False)
        q_i, r_i = pair.q, pair.r
        bad = _first_deficient(r_i, g_scale)

        if bad is None:
            if reorth:
                pair2 = qr_unpivoted(q_i - q_acc @ (q_acc.T @ q_i), rank_check=False)
                q_i = pair2.q
                r_i = pair2.r @ r_i
            rhs = h[:, cols].T - (y_i.T @ q_acc) @ b_acc - (omega_i.T @ b_acc.T) @ b_acc
            b_i = solve_rt(r_i, rhs)
        elif on_deficiency == "error":
            raise RankDeficiencyError(
                f"residual block {i} is numerically rank-deficient at sketch "
                f"column {i * b + bad}",
                column=i * b + bad,
                block=i,
            )
        else:
            q_i, b_i = _repair_block(
                q_acc, b_acc, h[:, cols], y_i, omega_i, bad, i, repair_seed
            )
            repaired.extend(range(i * b + bad, (i + 1) * b))

        q_acc = np.hstack([q_acc, q_i])
        b_acc = np.vstack([b_acc, b_i])
        if on_block is not None:
            on_block(i, q_acc, b_acc)

    return QbFactor(q=q_acc, b=b_acc, repaired_columns=tuple(repaired))


def _repair_block(q_acc, b_acc, h_cols, y_i, omega_i, split, i, repair_seed):
    """Rebuild a deficient block: keep the leading independent columns,
    fill the rest with random directions orthogonal to everything kept.

    The filled directions carry zero rows of B. That is exact whenever the
    deficiency means the residual A - QB has (numerically) no energy left,
    the case exact low-rank data produces; for adversarial sketches it is
    a documented approximation.
    """
    m = y_i.shape[0]
    good = split
    if good > 0:
        pair = qr_unpivoted(y_i[:, :good], rank_check=False)
        q_g, r_g = pair.q, pair.r
        pair2 = qr_unpivoted(q_g - q_acc @ (q_acc.T @ q_g), rank_check=False)
        q_g = pair2.q
        r_g = pair2.r @ r_g
        rhs = (
            h_cols[:, :good].T
            - (y_i[:, :good].T @ q_acc) @ b_acc
            - (omega_i[:, :good].T @ b_acc.T) @ b_acc
        )
        b_g = solve_rt(r_g, rhs)
    else:
        q_g = np.empty((m, 0))
        b_g = np.empty((0, b_acc.shape[1]))

    fill = y_i.shape[1] - good
    rand = gaussian_matrix(m, fill, repair_seed, stream=STREAM_REPAIR + i)
    basis = np.hstack([q_acc, q_g])
    for _ in range(2):  # twice is enough to defeat cancellation
        rand = rand - basis @ (basis.T @ rand)
    q_f = qr_unpivoted(rand, rank_check=False).q
    return np.hstack([q_g, q_f]), np.vstack([b_g, np.zeros((fill, b_acc.shape[1]))])
