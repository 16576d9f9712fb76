"""Synthetic test matrices with prescribed singular spectra.

A matrix is built as U diag(sigma) V^T with Haar-ish orthonormal factors
drawn from seeded Gaussian substreams. Every row the package ever sees is
produced by the same per-row product (one gemv per row, BLAS pinned to a
single thread), so the materialized matrix, the streaming view, and a file
written block by block are bitwise identical regardless of block sizes or
the machine's thread settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from threadpoolctl import threadpool_limits

from .algorithms import TruncatedSvd
from .errors import ConfigError, ScaleError
from .linalg import (
    STREAM_FACTOR_U,
    STREAM_FACTOR_V,
    gaussian_matrix,
    qr_unpivoted,
    sign_align,
)
from .streams import RowBlock, RowStream

# largest element count the dense SVD oracle will materialize
SCALE_LIMIT = 10_000_000

_NAMED_KINDS = ("type1", "type2", "type3", "type4", "type5")


@dataclass(frozen=True)
class SpectrumSpec:
    """Recipe for the singular-value sequence.

    Named kinds:
      type1  fast drop over the first 20 values (1 down to 1e-4), then a
             near-flat 1e-4 / (i - 20)^0.1 tail
      type2  i^-2
      type3  i^-3
      type4  exp(-i / 7)
      type5  10^(-i / 10)
    "custom" takes an explicit nonincreasing positive sequence and is only
    defined up to its length.
    """

    kind: str
    values: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind == "custom":
            if not self.values:
                raise ConfigError("custom spectrum needs at least one value")
            vals = tuple(float(v) for v in self.values)
            if any(v <= 0 for v in vals):
                raise ConfigError("custom spectrum values must be positive")
            if any(b > a for a, b in zip(vals, vals[1:])):
                raise ConfigError("custom spectrum values must be nonincreasing")
            object.__setattr__(self, "values", vals)
        elif self.kind in _NAMED_KINDS:
            if self.values is not None:
                raise ConfigError(f"spectrum kind {self.kind!r} takes no value list")
        else:
            raise ConfigError(
                f"unknown spectrum kind {self.kind!r}; expected one of "
                f"{', '.join(_NAMED_KINDS)} or custom"
            )

    @classmethod
    def parse(cls, text: str) -> "SpectrumSpec":
        """Parse "type3" or "custom:5,4,3,2,1" (CLI syntax, case-blind)."""
        text = text.strip().lower()
        if text.startswith("custom:"):
            body = text[len("custom:"):]
            try:
                vals = tuple(float(p) for p in body.split(",") if p.strip())
            except ValueError as exc:
                raise ConfigError(f"bad custom spectrum {body!r}: {exc}") from exc
            return cls("custom", vals)
        return cls(text)


def spectrum_value(spec: SpectrumSpec, i: int) -> float:
    """Singular value number i (1-based) of the given spectrum."""
    if i < 1:
        raise ConfigError(f"spectrum index is 1-based, got {i}")
    if spec.kind == "type1":
        if i <= 20:
            return 10.0 ** (-4.0 * (i - 1) / 19.0)
        return 1e-4 / (i - 20) ** 0.1
    if spec.kind == "type2":
        return float(i) ** -2.0
    if spec.kind == "type3":
        return float(i) ** -3.0
    if spec.kind == "type4":
        return math.exp(-i / 7.0)
    if spec.kind == "type5":
        return 10.0 ** (-i / 10.0)
    if i > len(spec.values):
        raise ConfigError(
            f"custom spectrum has {len(spec.values)} values, index {i} is out of range"
        )
    return spec.values[i - 1]


def sigma_array(spec: SpectrumSpec, r: int) -> np.ndarray:
    return np.array([spectrum_value(spec, i) for i in range(1, r + 1)])


@dataclass(frozen=True)
class SyntheticMatrix:
    """U diag(sigma) V^T held in factored form (w = diag(sigma) V^T)."""

    rows: int
    cols: int
    rank: int
    seed: int
    spec: SpectrumSpec
    sigma: np.ndarray
    u: np.ndarray
    w: np.ndarray

    def row_block(self, start: int, stop: int) -> np.ndarray:
        """Rows start..stop-1, one gemv per row under a single BLAS thread
        so the bytes never depend on block boundaries or thread count."""
        out = np.empty((stop - start, self.cols))
        with threadpool_limits(limits=1):
            for i in range(start, stop):
                out[i - start] = self.u[i] @ self.w
        return out

    def materialize(self) -> np.ndarray:
        return self.row_block(0, self.rows)


def synth_matrix(
    rows: int,
    cols: int,
    spec: SpectrumSpec,
    seed: int = 0,
    rank: Optional[int] = None,
) -> SyntheticMatrix:
    if rows < 1 or cols < 1:
        raise ConfigError(f"matrix shape must be positive, got {rows} x {cols}")
    limit = min(rows, cols)
    if rank is None:
        # a custom spectrum is only defined up to its own length
        rank = limit if spec.values is None else min(len(spec.values), limit)
    if not 1 <= rank <= limit:
        raise ConfigError(f"rank must be in [1, {limit}], got {rank}")
    sigma = sigma_array(spec, rank)
    with threadpool_limits(limits=1):
        u = qr_unpivoted(gaussian_matrix(rows, rank, seed, stream=STREAM_FACTOR_U)).q
        v = qr_unpivoted(gaussian_matrix(cols, rank, seed, stream=STREAM_FACTOR_V)).q
        w = sigma[:, None] * v.T
    return SyntheticMatrix(
        rows=rows, cols=cols, rank=rank, seed=seed, spec=spec,
        sigma=sigma, u=u, w=w,
    )


class SyntheticRowStream(RowStream):
    """Resettable stream over a SyntheticMatrix, row products on demand."""

    def __init__(self, matrix: SyntheticMatrix):
        self.matrix = matrix

    @property
    def n_rows(self) -> Optional[int]:
        return self.matrix.rows

    @property
    def n_cols(self) -> int:
        return self.matrix.cols

    @property
    def resettable(self) -> bool:
        return True

    def blocks(self, block_rows: int):
        if block_rows < 1:
            raise ConfigError(f"block_rows must be >= 1, got {block_rows}")
        m = self.matrix.rows
        for start in range(0, m, block_rows):
            stop = min(start + block_rows, m)
            yield RowBlock(start, self.matrix.row_block(start, stop))


def synth_stream(matrix: SyntheticMatrix) -> SyntheticRowStream:
    return SyntheticRowStream(matrix)


def _materialize(data: Union[np.ndarray, SyntheticMatrix, RowStream]) -> np.ndarray:
    if isinstance(data, np.ndarray):
        return np.asarray(data, dtype=np.float64)
    if isinstance(data, SyntheticMatrix):
        if data.rows * data.cols > SCALE_LIMIT:
            raise ScaleError(
                f"{data.rows} x {data.cols} exceeds the dense oracle limit of "
                f"{SCALE_LIMIT} elements; supply reference values instead"
            )
        return data.materialize()
    if data.n_rows is not None and data.n_rows * data.n_cols > SCALE_LIMIT:
        raise ScaleError(
            f"{data.n_rows} x {data.n_cols} exceeds the dense oracle limit of "
            f"{SCALE_LIMIT} elements; supply reference values instead"
        )
    parts = [blk.values for blk in data.blocks(4096)]
    if not parts:
        raise ConfigError("cannot take the SVD of an empty stream")
    a = np.vstack(parts)
    if a.size > SCALE_LIMIT:
        raise ScaleError(
            f"{a.shape[0]} x {a.shape[1]} exceeds the dense oracle limit of "
            f"{SCALE_LIMIT} elements; supply reference values instead"
        )
    return a


def exact_truncated_svd(
    data: Union[np.ndarray, SyntheticMatrix, RowStream],
    k: int,
    center: bool = False,
) -> TruncatedSvd:
    """Dense rank-k SVD used as the accuracy oracle.

    Materializes the input, so it refuses anything past SCALE_LIMIT
    elements rather than quietly eating memory.
    """
    a = _materialize(data)
    m, n = a.shape
    if not 1 <= k <= min(m, n):
        raise ConfigError(f"k must be in [1, {min(m, n)}], got {k}")
    mean = None
    if center:
        mean = a.mean(axis=0)
        a = a - mean
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    u, v = sign_align(u[:, :k], vt[:k].T)
    return TruncatedSvd(u=u, s=s[:k].copy(), v=v, mean=mean, passes=None,
                        retained_floats=None)
