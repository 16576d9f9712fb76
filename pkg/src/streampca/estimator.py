"""Scikit-learn style front end for the streaming PCA drivers.

SinglePassPCA mirrors sklearn.decomposition.PCA closely enough to drop
into pipelines (get_params / set_params / clone / fit / transform), while
accepting either an in-memory array or any RowStream, so the same
estimator object works on data that never fits in memory.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .algorithms import PcaConfig, as_row_stream, power_refine, single_pass_pca
from .errors import DataError, DimensionError
from .sketch import NormalizedRowStream
from .streams import RowStream


def check_matrix(x, name: str = "X") -> np.ndarray:
    """Validate a dense 2-d float matrix; small local stand-in for
    sklearn's check_array without its version-to-version kwarg churn."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got ndim={arr.ndim}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    return arr


class SinglePassPCA(BaseEstimator, TransformerMixin):
    """PCA fitted from a bounded-memory pass over the rows.

    Parameters follow the underlying drivers: power=0 reads the data once,
    power=1 reads it twice (and therefore needs an array or a resettable
    stream) in exchange for better accuracy on slowly decaying spectra.
    With center=True (the default, matching PCA semantics) the column
    means are removed inside the pass at no extra traversal. normalize=True
    additionally maps every row to zero mean and unit norm before fitting,
    which is a common preprocessing step for cohort-scale row data.

    Attributes after fit: components_ (n_components x n_features),
    singular_values_, explained_variance_, mean_, n_features_in_,
    n_samples_, n_passes_, retained_floats_.
    """

    def __init__(
        self,
        n_components: int = 2,
        oversample: int = 10,
        block_size: int = 10,
        power: int = 0,
        center: bool = True,
        normalize: bool = False,
        seed: int = 0,
    ):
        self.n_components = n_components
        self.oversample = oversample
        self.block_size = block_size
        self.power = power
        self.center = center
        self.normalize = normalize
        self.seed = seed

    def _config(self) -> PcaConfig:
        return PcaConfig(
            k=self.n_components,
            oversample=self.oversample,
            block_size=self.block_size,
            power=self.power,
            seed=self.seed,
            center=self.center,
        )

    def fit(self, X: Union[np.ndarray, RowStream], y=None) -> "SinglePassPCA":
        cfg = self._config()
        stream = as_row_stream(X if isinstance(X, RowStream) else check_matrix(X))
        if self.normalize:
            stream = NormalizedRowStream(stream)
        driver = power_refine if cfg.power == 1 else single_pass_pca
        res = driver(stream, cfg)
        n = res.v.shape[0]
        self.components_ = res.v.T.copy()
        self.singular_values_ = res.s.copy()
        self.mean_ = np.zeros(n) if res.mean is None else res.mean.copy()
        self.n_features_in_ = n
        self.n_samples_ = int(res.u.shape[0])
        self.explained_variance_ = res.s ** 2 / max(self.n_samples_ - 1, 1)
        self.n_passes_ = res.passes
        self.retained_floats_ = res.retained_floats
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "components_")
        arr = check_matrix(X)
        if arr.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"X has {arr.shape[1]} features, estimator was fitted with "
                f"{self.n_features_in_}"
            )
        return (arr - self.mean_) @ self.components_.T

    def inverse_transform(self, X) -> np.ndarray:
        check_is_fitted(self, "components_")
        arr = np.asarray(X, dtype=np.float64)
        return arr @ self.components_ + self.mean_
