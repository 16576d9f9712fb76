"""Randomized truncated-SVD / PCA drivers over row streams.

Four ways to the same factorization, differing in how many passes they
spend and how they use them:

single_pass_pca     one pass: sketch G, H, then rebuild Q, B from the
                    sketch alone and take the small SVD of B.
basic_rand_svd      two passes: orthonormalize A Omega, then form
                    B = Q^T A against the data directly.
power_refine        two passes: the first sketch only supplies
                    Omega' = orth(H) = orth(A^T A Omega); the second pass
                    sketches with Omega', sharpening slow-decay spectra.
legacy_single_pass  one pass, the older co-sketch approach kept as a
                    comparison baseline; substantially less accurate on
                    slowly decaying spectra.

All of them honor the same PcaConfig, draw their random matrices from the
same seeded substreams, and emit results with a fixed component sign
convention, so their outputs are directly comparable.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import (
    CapabilityError,
    ConditioningWarning,
    ConfigError,
    EmptyStreamError,
)
from .linalg import (
    STREAM_COSKETCH,
    STREAM_SKETCH,
    dense_svd,
    gaussian_matrix,
    qr_unpivoted,
    sign_align,
)
from .qb import QbFactor, blocked_qb
from .sketch import center_correct, sketch_pass
from .streams import ArrayRowStream, PassCounter, RowStream

MatrixOrStream = Union[np.ndarray, RowStream]


@dataclass(frozen=True)
class PcaConfig:
    """Shared knobs for every algorithm.

    The sketch width l is derived, not set: the smallest multiple of
    block_size that is at least k + oversample. Extra columns from the
    round-up only improve accuracy.
    """

    k: int
    oversample: int = 10
    block_size: int = 10
    power: int = 0
    seed: int = 0
    center: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"target rank k must be >= 1, got {self.k}")
        if self.oversample < 0:
            raise ConfigError(f"oversample must be >= 0, got {self.oversample}")
        if self.block_size < 1:
            raise ConfigError(f"block_size must be >= 1, got {self.block_size}")
        if self.power not in (0, 1):
            raise ConfigError(f"power must be 0 or 1, got {self.power}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")

    @property
    def l(self) -> int:
        want = self.k + self.oversample
        return self.block_size * math.ceil(want / self.block_size)

    @property
    def n_blocks(self) -> int:
        return self.l // self.block_size

    def validate_dims(self, n_cols: int, n_rows: Optional[int] = None) -> None:
        """Check k <= l <= min(m, n); m may be unknown before the pass."""
        limit = n_cols if n_rows is None else min(n_rows, n_cols)
        if self.k > limit:
            raise ConfigError(
                f"target rank k={self.k} exceeds min(m, n)={limit}"
            )
        if self.l > limit:
            raise ConfigError(
                f"sketch width l={self.l} (k + oversample rounded up to a "
                f"block multiple) exceeds min(m, n)={limit}; lower oversample "
                f"or block_size"
            )


@dataclass(frozen=True)
class TruncatedSvd:
    """Rank-k factorization A ~ u diag(s) v^T (of the centered A when mean
    is set). Bookkeeping fields record what the run actually did."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    mean: Optional[np.ndarray] = None
    passes: Optional[int] = None
    retained_floats: Optional[int] = None
    warnings: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return int(self.s.shape[0])


def as_row_stream(data: MatrixOrStream) -> RowStream:
    if isinstance(data, RowStream):
        return data
    return ArrayRowStream(np.asarray(data, dtype=np.float64))


def _measured_passes(stream: RowStream, fallback: int) -> int:
    if isinstance(stream, PassCounter):
        return stream.passes_completed
    return fallback


def _require_rows(rows_seen: int) -> None:
    if rows_seen == 0:
        raise EmptyStreamError("the stream yielded no rows")


def _reject_known_empty(stream: RowStream) -> None:
    if stream.n_rows == 0:
        raise EmptyStreamError("the stream has no rows")


def _finish(
    factor: QbFactor,
    cfg: PcaConfig,
    mean: Optional[np.ndarray],
    passes: int,
    retained: int,
) -> TruncatedSvd:
    small = dense_svd(factor.b)
    u = factor.q @ small.u[:, : cfg.k]
    v = small.v[:, : cfg.k]
    u, v = sign_align(u, v)
    return TruncatedSvd(
        u=u,
        s=small.s[: cfg.k].copy(),
        v=v,
        mean=mean,
        passes=passes,
        retained_floats=retained,
    )


def single_pass_pca(
    data: MatrixOrStream,
    cfg: PcaConfig,
    block_rows: Optional[int] = None,
    fixed_order: bool = False,
    on_deficiency: str = "repair",
    compensated: bool = False,
) -> TruncatedSvd:
    """Truncated SVD / PCA from exactly one traversal of the rows.

    The stream need not be resettable. Centering never costs a second
    pass: the sketch is corrected afterwards from the accumulated column
    sums. Deficient sketch blocks are repaired by default because exact
    low-rank inputs make them unavoidable; pass on_deficiency="error" to
    fail instead.
    """
    stream = as_row_stream(data)
    if cfg.power != 0:
        raise ConfigError("single_pass_pca runs at power 0; use power_refine for power 1")
    _reject_known_empty(stream)
    cfg.validate_dims(stream.n_cols, stream.n_rows)
    omega = gaussian_matrix(stream.n_cols, cfg.l, cfg.seed, stream=STREAM_SKETCH)
    state = sketch_pass(
        stream, omega, block_rows=block_rows,
        fixed_order=fixed_order, compensated=compensated,
    )
    _require_rows(state.rows_seen)
    cfg.validate_dims(stream.n_cols, state.rows_seen)
    mean = state.col_sums / state.rows_seen if cfg.center else None
    if cfg.center:
        state = center_correct(state, omega)
    factor = blocked_qb(
        state.g, state.h, omega, cfg.block_size,
        on_deficiency=on_deficiency, repair_seed=cfg.seed,
    )
    return _finish(
        factor, cfg, mean,
        passes=_measured_passes(stream, 1),
        retained=state.retained_floats + omega.size,
    )


def basic_rand_svd(
    data: MatrixOrStream,
    cfg: PcaConfig,
    block_rows: Optional[int] = None,
) -> TruncatedSvd:
    """Two-pass reference scheme: Q = orth(A Omega), then B = Q^T A.

    Mathematically equivalent to single_pass_pca (identical seeds give
    singular values agreeing to rounding); kept as the accuracy yardstick
    and for callers who can afford re-reading the data.
    """
    stream = as_row_stream(data)
    if not stream.resettable:
        raise CapabilityError("basic_rand_svd needs a resettable stream (two passes)")
    _reject_known_empty(stream)
    cfg.validate_dims(stream.n_cols, stream.n_rows)
    n = stream.n_cols
    omega = gaussian_matrix(n, cfg.l, cfg.seed, stream=STREAM_SKETCH)
    if block_rows is None:
        block_rows = cfg.l

    g_parts = []
    col_sums = np.zeros(n)
    rows_seen = 0
    for block in stream.blocks(block_rows):
        g_parts.append(block.values @ omega)
        col_sums += block.values.sum(axis=0)
        rows_seen += block.values.shape[0]
    _require_rows(rows_seen)
    cfg.validate_dims(n, rows_seen)
    g = np.vstack(g_parts)

    mean = None
    if cfg.center:
        mean = col_sums / rows_seen
        g = g - np.outer(np.ones(rows_seen), mean @ omega)
    q = qr_unpivoted(g, rank_check=False).q

    b_mat = np.zeros((cfg.l, n))
    for block in stream.blocks(block_rows):
        r0 = block.first_row_index
        b_mat += q[r0:r0 + block.values.shape[0]].T @ block.values
    if cfg.center:
        b_mat -= np.outer(q.sum(axis=0), mean)

    small = dense_svd(b_mat)
    u = q @ small.u[:, : cfg.k]
    v = small.v[:, : cfg.k]
    u, v = sign_align(u, v)
    return TruncatedSvd(
        u=u,
        s=small.s[: cfg.k].copy(),
        v=v,
        mean=mean,
        passes=_measured_passes(stream, 2),
        retained_floats=int(g.size + omega.size + b_mat.size + col_sums.size),
    )


def power_refine(
    data: MatrixOrStream,
    cfg: PcaConfig,
    block_rows: Optional[int] = None,
    fixed_order: bool = False,
    on_deficiency: str = "repair",
) -> TruncatedSvd:
    """Power-sharpened variant, two passes total.

    Pass one builds the plain sketch but keeps only H = A^T A Omega; its
    orthonormalization becomes the test matrix of a second sketch, so the
    factorization effectively samples (A A^T) A and the tail of the
    spectrum is damped by the third power. Helps exactly where one pass
    struggles: slowly decaying spectra.
    """
    stream = as_row_stream(data)
    if cfg.power != 1:
        raise ConfigError("power_refine requires power = 1 in the config")
    if not stream.resettable:
        raise CapabilityError("power_refine needs a resettable stream (two passes)")
    _reject_known_empty(stream)
    cfg.validate_dims(stream.n_cols, stream.n_rows)
    omega = gaussian_matrix(stream.n_cols, cfg.l, cfg.seed, stream=STREAM_SKETCH)
    first = sketch_pass(stream, omega, block_rows=block_rows, fixed_order=fixed_order)
    _require_rows(first.rows_seen)
    cfg.validate_dims(stream.n_cols, first.rows_seen)
    mean = first.col_sums / first.rows_seen if cfg.center else None
    if cfg.center:
        first = center_correct(first, omega)
    # rank_check off: H of exact low-rank data is legitimately deficient
    # and the deficiency resurfaces (and is handled) in the second sketch.
    omega2 = qr_unpivoted(first.h, rank_check=False).q
    second = sketch_pass(stream, omega2, block_rows=block_rows, fixed_order=fixed_order)
    if cfg.center:
        second = center_correct(second, omega2)
    factor = blocked_qb(
        second.g, second.h, omega2, cfg.block_size,
        on_deficiency=on_deficiency, repair_seed=cfg.seed,
    )
    return _finish(
        factor, cfg, mean,
        passes=_measured_passes(stream, 2),
        retained=second.retained_floats + omega2.size,
    )


def legacy_single_pass(
    data: MatrixOrStream,
    cfg: PcaConfig,
    block_rows: Optional[int] = None,
    cond_warn: float = 1e12,
) -> TruncatedSvd:
    """Older one-pass baseline built on two independent sketches.

    Collects Y = A Omega and Yt = A^T Omega_t in the same traversal, then
    recovers the small core B from the least-squares system
    (Omega_t^T Q) B = Yt^T Qt. The reconstruction quality hinges on that
    system, which is why slow-decay spectra hurt it far more than the
    sketch-based path. Needs the row count up front to draw Omega_t.
    """
    stream = as_row_stream(data)
    m = stream.n_rows
    if m is None:
        raise CapabilityError(
            "legacy_single_pass must know the row count up front to draw its "
            "left test matrix; wrap the source in a counted or sized stream"
        )
    _reject_known_empty(stream)
    cfg.validate_dims(stream.n_cols, m)
    n = stream.n_cols
    l = cfg.l
    omega = gaussian_matrix(n, l, cfg.seed, stream=STREAM_SKETCH)
    omega_t = gaussian_matrix(m, l, cfg.seed, stream=STREAM_COSKETCH)
    if block_rows is None:
        block_rows = l

    y_parts = []
    yt = np.zeros((n, l))
    col_sums = np.zeros(n)
    rows_seen = 0
    for block in stream.blocks(block_rows):
        vals = block.values
        r0 = block.first_row_index
        y_parts.append(vals @ omega)
        yt += vals.T @ omega_t[r0:r0 + vals.shape[0]]
        col_sums += vals.sum(axis=0)
        rows_seen += vals.shape[0]
    _require_rows(rows_seen)
    if rows_seen != m:
        raise CapabilityError(f"stream declared {m} rows but yielded {rows_seen}")
    y = np.vstack(y_parts)

    mean = None
    if cfg.center:
        mean = col_sums / rows_seen
        y = y - np.outer(np.ones(m), mean @ omega)
        yt = yt - np.outer(mean, omega_t.sum(axis=0))

    q = qr_unpivoted(y, rank_check=False).q
    qt = qr_unpivoted(yt, rank_check=False).q
    lhs = omega_t.T @ q
    rhs = yt.T @ qt
    core = np.linalg.lstsq(lhs, rhs, rcond=None)[0]

    notes: tuple[str, ...] = ()
    cond = float(np.linalg.cond(lhs))
    if cond > cond_warn:
        msg = (
            f"co-sketch system is ill-conditioned (cond ~ {cond:.3e}); "
            f"singular values may be inaccurate"
        )
        notes = (msg,)
        _warnings.warn(msg, ConditioningWarning, stacklevel=2)

    small = dense_svd(core)
    u = q @ small.u[:, : cfg.k]
    v = qt @ small.v[:, : cfg.k]
    u, v = sign_align(u, v)
    return TruncatedSvd(
        u=u,
        s=small.s[: cfg.k].copy(),
        v=v,
        mean=mean,
        passes=_measured_passes(stream, 1),
        retained_floats=int(y.size + yt.size + omega.size + omega_t.size + col_sums.size),
        warnings=notes,
    )


def principal_components(svd: TruncatedSvd) -> list[np.ndarray]:
    """Columns of V in order; component 1 is the leading right singular
    vector of the (centered, if applicable) data."""
    return [svd.v[:, j].copy() for j in range(svd.v.shape[1])]


def error_bound_factor(k: int, s: int) -> float:
    """Oversampling magnification sqrt(1 + k / (s - 1)) in the expected
    Frobenius error of the sketch-based factorization; undefined for s < 2."""
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if s < 2:
        raise ConfigError(f"the expectation bound needs oversampling s >= 2, got {s}")
    return math.sqrt(1.0 + k / (s - 1.0))
