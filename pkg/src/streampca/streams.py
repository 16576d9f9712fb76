"""Row-block streams: the only way large matrices enter the algorithms.

A RowStream yields consecutive, non-overlapping RowBlocks covering the
matrix top to bottom. Resettable streams can be traversed repeatedly, one
pass per blocks() call; non-resettable ones support a single traversal and
therefore only single-pass algorithms. PassCounter wraps any stream and
counts completed traversals, which is how the pass guarantees of the
algorithms are asserted rather than assumed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import CapabilityError, FormatError, StreamFormatError
from . import matfile


@dataclass(frozen=True)
class RowBlock:
    """A contiguous slab of rows; values is (block_rows x n_cols) float64."""

    first_row_index: int
    values: np.ndarray


class RowStream:
    """Interface for sources of row blocks.

    n_rows may be None for sources whose length is unknown until
    exhaustion (pipes, generators); it must be an int afterwards.
    """

    @property
    def n_rows(self) -> Optional[int]:
        raise NotImplementedError

    @property
    def n_cols(self) -> int:
        raise NotImplementedError

    @property
    def resettable(self) -> bool:
        raise NotImplementedError

    def blocks(self, block_rows: int) -> Iterator[RowBlock]:
        """Start a new pass, yielding blocks of at most block_rows rows."""
        raise NotImplementedError


class ArrayRowStream(RowStream):
    """Stream over an in-memory matrix; trivially resettable."""

    def __init__(self, a: np.ndarray):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] < 1:
            raise StreamFormatError("ArrayRowStream expects a 2-d matrix with columns")
        self._a = a

    @property
    def n_rows(self) -> int:
        return self._a.shape[0]

    @property
    def n_cols(self) -> int:
        return self._a.shape[1]

    @property
    def resettable(self) -> bool:
        return True

    def blocks(self, block_rows: int) -> Iterator[RowBlock]:
        if block_rows < 1:
            raise StreamFormatError("block_rows must be >= 1")
        for start in range(0, self._a.shape[0], block_rows):
            yield RowBlock(start, self._a[start:start + block_rows])


class FileRowStream(RowStream):
    """Stream over a binary matrix file, widened to float64 block by block.

    Tracks cumulative wall time spent in actual file reads (read_seconds)
    so runs can report an I/O versus compute split.
    """

    def __init__(self, path, rows=None, cols=None, dtype=None, layout=None):
        self._path = str(path)
        self._layout = layout if layout is not None else matfile.sniff_layout(
            self._path, rows, cols, dtype
        )
        self.read_seconds = 0.0
        self.bytes_read = 0

    @property
    def layout(self) -> matfile.FileLayout:
        return self._layout

    @property
    def n_rows(self) -> int:
        return self._layout.rows

    @property
    def n_cols(self) -> int:
        return self._layout.cols

    @property
    def resettable(self) -> bool:
        return True

    def blocks(self, block_rows: int) -> Iterator[RowBlock]:
        if block_rows < 1:
            raise StreamFormatError("block_rows must be >= 1")
        lay = self._layout
        with open(self._path, "rb") as fh:
            fh.seek(lay.offset)
            for start in range(0, lay.rows, block_rows):
                count = min(block_rows, lay.rows - start) * lay.cols
                t0 = time.perf_counter()
                data = np.fromfile(fh, dtype=lay.dtype, count=count)
                self.read_seconds += time.perf_counter() - t0
                self.bytes_read += data.size * lay.dtype.itemsize
                if data.size != count:
                    raise FormatError(f"{self._path}: truncated at row {start}")
                yield RowBlock(start, data.astype(np.float64).reshape(-1, lay.cols))


def file_row_stream(path, rows=None, cols=None, dtype=None) -> FileRowStream:
    """Open a matrix file as a resettable RowStream.

    Self-describing files need no arguments; headerless raw files need
    rows, cols and dtype. File size is validated against the layout.
    """
    return FileRowStream(path, rows=rows, cols=cols, dtype=dtype)


class GeneratorRowStream(RowStream):
    """One-shot stream over a Python iterable of 2-d arrays.

    Not resettable, and n_rows is unknown until the single pass finishes.
    Exists mostly so capability checks in the multi-pass algorithms have
    something real to reject, and to model pipe-like sources.
    """

    def __init__(self, iterable, n_cols: int):
        self._it = iter(iterable)
        self._n_cols = int(n_cols)
        self._n_rows: Optional[int] = None
        self._consumed = False

    @property
    def n_rows(self) -> Optional[int]:
        return self._n_rows

    @property
    def n_cols(self) -> int:
        return self._n_cols

    @property
    def resettable(self) -> bool:
        return False

    def blocks(self, block_rows: int) -> Iterator[RowBlock]:
        if self._consumed:
            raise CapabilityError("this stream supports a single pass only")
        self._consumed = True
        seen = 0
        for chunk in self._it:
            vals = np.asarray(chunk, dtype=np.float64)
            if vals.ndim != 2 or vals.shape[1] != self._n_cols:
                raise StreamFormatError(
                    f"generator yielded shape {vals.shape}, expected (*, {self._n_cols})"
                )
            for start in range(0, vals.shape[0], block_rows):
                part = vals[start:start + block_rows]
                yield RowBlock(seen, part)
                seen += part.shape[0]
        self._n_rows = seen


class PassCounter(RowStream):
    """Wraps a stream and counts completed passes and rows read.

    passes_completed increments only when a traversal covers every row;
    an abandoned traversal leaves pass_in_progress set, so partial reads
    are detectable.
    """

    def __init__(self, wrapped: RowStream):
        self.wrapped = wrapped
        self.passes_completed = 0
        self.rows_read = 0
        self.pass_in_progress = False

    @property
    def n_rows(self) -> Optional[int]:
        return self.wrapped.n_rows

    @property
    def n_cols(self) -> int:
        return self.wrapped.n_cols

    @property
    def resettable(self) -> bool:
        return self.wrapped.resettable

    def blocks(self, block_rows: int) -> Iterator[RowBlock]:
        self.pass_in_progress = True
        rows_this_pass = 0
        for block in self.wrapped.blocks(block_rows):
            rows_this_pass += block.values.shape[0]
            self.rows_read += block.values.shape[0]
            yield block
        # the wrapped stream may only learn its length on exhaustion
        total = self.wrapped.n_rows
        if total is None or rows_this_pass == total:
            self.passes_completed += 1
            self.pass_in_progress = False
