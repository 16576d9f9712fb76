"""Accuracy metrics for comparing a computed factorization to a reference."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algorithms import TruncatedSvd
from .errors import DimensionError


@dataclass(frozen=True)
class MetricsReport:
    k: int
    max_singval_abs_err: float
    per_component_correlation: tuple[float, ...]
    frobenius_residual_rel: Optional[float] = None
    wall_times: dict[str, float] = field(default_factory=dict)
    passes: Optional[int] = None
    retained_floats: Optional[int] = None

    @property
    def first_component_correlation(self) -> Optional[float]:
        if not self.per_component_correlation:
            return None
        return self.per_component_correlation[0]

    @property
    def min_component_correlation(self) -> Optional[float]:
        if not self.per_component_correlation:
            return None
        return min(self.per_component_correlation)


def _correlation(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation with the sign factored out.

    Both factorizations follow the same component sign convention, but a
    component whose largest entry sits near a tie can still come out
    flipped; the subspace is the same either way, so report magnitude.
    """
    if np.array_equal(x, y):
        return 1.0
    xc = x - x.mean()
    yc = y - y.mean()
    nx = np.linalg.norm(xc)
    ny = np.linalg.norm(yc)
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return min(float(abs(xc @ yc) / (nx * ny)), 1.0)


def compare(
    result: TruncatedSvd,
    reference: TruncatedSvd,
    a: Optional[np.ndarray] = None,
    wall_times: Optional[dict[str, float]] = None,
) -> MetricsReport:
    """Measure result against reference (same k, same column space).

    If the raw matrix a is given, also reports the relative Frobenius
    reconstruction residual; the result's own mean is subtracted first so
    centered runs are judged against what they actually factored.
    """
    if result.k != reference.k:
        raise DimensionError(
            f"rank mismatch: result has k={result.k}, reference k={reference.k}"
        )
    if result.v.shape[0] != reference.v.shape[0]:
        raise DimensionError(
            f"column-count mismatch: {result.v.shape[0]} vs {reference.v.shape[0]}"
        )
    max_err = float(np.max(np.abs(result.s - reference.s)))
    corrs = tuple(
        _correlation(result.v[:, j], reference.v[:, j]) for j in range(result.k)
    )
    resid = None
    if a is not None:
        a = np.asarray(a, dtype=np.float64)
        target = a if result.mean is None else a - result.mean
        recon = (result.u * result.s) @ result.v.T
        denom = np.linalg.norm(target)
        resid = float(np.linalg.norm(target - recon) / denom) if denom > 0 else 0.0
    return MetricsReport(
        k=result.k,
        max_singval_abs_err=max_err,
        per_component_correlation=corrs,
        frobenius_residual_rel=resid,
        wall_times=dict(wall_times or {}),
        passes=result.passes,
        retained_floats=result.retained_floats,
    )


def compare_to_sigma(
    result: TruncatedSvd,
    sigma: np.ndarray,
    wall_times: Optional[dict[str, float]] = None,
) -> MetricsReport:
    """Comparison against bare reference singular values (e.g. a truth CSV
    carried over from generation). No vectors, so no correlations."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape[0] < result.k:
        raise DimensionError(
            f"reference has {sigma.shape[0]} singular values, result needs "
            f"{result.k}"
        )
    max_err = float(np.max(np.abs(result.s - sigma[: result.k])))
    return MetricsReport(
        k=result.k,
        max_singval_abs_err=max_err,
        per_component_correlation=(),
        frobenius_residual_rel=None,
        wall_times=dict(wall_times or {}),
        passes=result.passes,
        retained_floats=result.retained_floats,
    )


CSV_HEADER = (
    "algorithm,seed,k,max_singval_abs_err,first_component_corr,"
    "min_component_corr,frobenius_residual_rel,passes,retained_floats"
)


def _g(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.17g}"


def csv_row(algorithm: str, seed: int, report: MetricsReport) -> str:
    """One stable CSV line per run. Deliberately excludes wall times so a
    re-run with identical inputs produces identical bytes."""
    return ",".join(
        [
            algorithm,
            str(seed),
            str(report.k),
            _g(report.max_singval_abs_err),
            _g(report.first_component_correlation),
            _g(report.min_component_correlation),
            _g(report.frobenius_residual_rel),
            "" if report.passes is None else str(report.passes),
            "" if report.retained_floats is None else str(report.retained_floats),
        ]
    )


def format_report(report: MetricsReport) -> str:
    lines = [
        f"max singular-value error : {report.max_singval_abs_err:.6e}",
        f"component correlations   : first {report.first_component_correlation:.6f}, "
        f"min {report.min_component_correlation:.6f}",
    ]
    if report.frobenius_residual_rel is not None:
        lines.append(f"relative Frobenius resid : {report.frobenius_residual_rel:.6e}")
    if report.passes is not None:
        lines.append(f"passes over the data     : {report.passes}")
    if report.retained_floats is not None:
        lines.append(f"retained floats          : {report.retained_floats}")
    for name, secs in sorted(report.wall_times.items()):
        lines.append(f"time {name:<19} : {secs:.3f} s")
    return "\n".join(lines)
