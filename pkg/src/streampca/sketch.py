"""One-pass sketch accumulation and streaming preprocessing.

A single traversal of the row stream builds three things at once:

    G = A Omega        one new row per data row,
    H = A^T G          a running n x l sum of rank-1 updates,
    col_sums           running column sums, kept so the sketch can be
                       corrected afterwards to that of the column-centered
                       matrix without a second pass.

Retained storage is G (m x l), H (n x l), Omega (n x l) and the n-vector,
i.e. (m + 2n) l + n floats; the transient beyond that is one row block.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, EmptyStreamError, StreamFormatError
from .streams import RowBlock, RowStream


@dataclass(frozen=True)
class SketchState:
    """Accumulators after (or during) one pass of the stream."""

    g: np.ndarray          # m x l
    h: np.ndarray          # n x l
    col_sums: np.ndarray   # n
    rows_seen: int

    @property
    def retained_floats(self) -> int:
        """Floats held by the sketch itself (excluding Omega)."""
        return int(self.g.size + self.h.size + self.col_sums.size)


def _check_block(vals: np.ndarray, n: int, first_row: int) -> None:
    if vals.ndim != 2 or vals.shape[1] != n:
        raise StreamFormatError(
            f"block at row {first_row} has shape {vals.shape}, expected (*, {n})"
        )
    if not np.all(np.isfinite(vals)):
        bad = int(np.argmax(~np.isfinite(vals).all(axis=1)))
        raise DataError(
            f"non-finite value in row {first_row + bad}", row=first_row + bad
        )


def sketch_pass(
    stream: RowStream,
    omega: np.ndarray,
    block_rows: int | None = None,
    fixed_order: bool = False,
    compensated: bool = False,
) -> SketchState:
    """Accumulate the sketch of the streamed matrix in exactly one pass.

    block_rows defaults to l, the sketch width. With fixed_order the
    accumulation runs strictly row by row (one gemv and one rank-1 update
    per row), which makes the result bit-identical for every block size
    under a single-threaded BLAS; the default blocked path is faster and
    agrees to rounding. compensated enables Kahan summation for col_sums,
    for very tall matrices where plain accumulation drifts.
    """
    omega = np.asarray(omega, dtype=np.float64)
    if omega.ndim != 2:
        raise StreamFormatError("omega must be 2-d")
    n, l = omega.shape
    if stream.n_cols != n:
        raise StreamFormatError(
            f"stream has {stream.n_cols} columns but omega has {n} rows"
        )
    if block_rows is None:
        block_rows = l

    g_parts: list[np.ndarray] = []
    h = np.zeros((n, l))
    col_sums = np.zeros(n)
    comp = np.zeros(n) if compensated else None
    rows_seen = 0

    for block in stream.blocks(block_rows):
        vals = block.values
        _check_block(vals, n, block.first_row_index)
        if fixed_order:
            gb = np.empty((vals.shape[0], l))
            for r in range(vals.shape[0]):
                row = vals[r]
                grow = row @ omega
                gb[r] = grow
                h += row[:, None] * grow[None, :]
                if comp is None:
                    col_sums += row
                else:
                    y = row - comp
                    t = col_sums + y
                    comp = (t - col_sums) - y
                    col_sums = t
        else:
            gb = vals @ omega
            h += vals.T @ gb
            if comp is None:
                col_sums += vals.sum(axis=0)
            else:
                y = vals.sum(axis=0) - comp
                t = col_sums + y
                comp = (t - col_sums) - y
                col_sums = t
        g_parts.append(gb)
        rows_seen += vals.shape[0]

    g = np.vstack(g_parts) if g_parts else np.zeros((0, l))
    return SketchState(g=g, h=h, col_sums=col_sums, rows_seen=rows_seen)


def center_correct(state: SketchState, omega: np.ndarray) -> SketchState:
    """Rewrite the sketch as if the matrix had been column-centered.

    With mu = col_sums / m the corrected accumulators are

        G_c = G - 1 (mu^T Omega)
        H_c = H - mu (1^T G)

    which equals the sketch of A - 1 mu^T exactly in exact arithmetic:
    expanding (A - 1 mu^T)^T (G - 1 mu^T Omega), the two cross terms
    m mu (mu^T Omega) cancel, leaving H minus mu times the column sums of
    the uncorrected G. col_sums of the returned state are zero, matching
    a stream that really was centered.
    """
    if state.rows_seen == 0:
        raise EmptyStreamError("cannot center a sketch of zero rows")
    omega = np.asarray(omega, dtype=np.float64)
    mu = state.col_sums / state.rows_seen
    g_c = state.g - np.outer(np.ones(state.rows_seen), mu @ omega)
    h_c = state.h - np.outer(mu, state.g.sum(axis=0))
    return replace(state, g=g_c, h=h_c, col_sums=np.zeros_like(state.col_sums))


def normalize_rows(block):
    """Shift each row to zero mean, then scale it to unit Euclidean norm.

    Accepts a RowBlock or a bare 2-d array and returns the same kind.
    A constant row becomes the zero row rather than an error; zero rows
    are harmless to the sketch and real data does contain flat rows.
    """
    bare = not isinstance(block, RowBlock)
    vals = np.asarray(block if bare else block.values, dtype=np.float64)
    centered = vals - vals.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    out = centered / safe
    return out if bare else RowBlock(block.first_row_index, out)


class NormalizedRowStream(RowStream):
    """View of a stream with normalize_rows applied to every block.

    Wrapping the stream (rather than flagging the sketch) means multi-pass
    algorithms see normalized data on every pass for free.
    """

    def __init__(self, wrapped: RowStream):
        self._wrapped = wrapped

    @property
    def n_rows(self):
        return self._wrapped.n_rows

    @property
    def n_cols(self) -> int:
        return self._wrapped.n_cols

    @property
    def resettable(self) -> bool:
        return self._wrapped.resettable

    def blocks(self, block_rows: int):
        for block in self._wrapped.blocks(block_rows):
            yield normalize_rows(block)
