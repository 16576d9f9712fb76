"""Out-of-core randomized PCA / truncated SVD over row-streamed matrices.

The package computes a rank-k truncated SVD (optionally of the column-
centered matrix, i.e. PCA) while reading the input as a sequence of row
blocks. The main driver, :func:`single_pass_pca`, touches every row
exactly once and keeps O((m + n) * l) floats, so matrices that do not fit
in memory can be processed from disk or from a generator.

Quick start::

    import numpy as np
    from streampca import PcaConfig, single_pass_pca

    a = np.random.default_rng(0).standard_normal((10_000, 300))
    result = single_pass_pca(a, PcaConfig(k=10, seed=1, center=True))
    result.s           # leading singular values
    result.v           # right singular vectors, rows = components

Scikit-learn style front end::

    from streampca import SinglePassPCA
    z = SinglePassPCA(n_components=10).fit_transform(a)
"""

from .errors import (
    CapabilityError,
    ConditioningWarning,
    ConfigError,
    DataError,
    DimensionError,
    EmptyStreamError,
    FormatError,
    RankDeficiencyError,
    ScaleError,
    SingularMatrixError,
    StreamFormatError,
    StreamPcaError,
)
from .streams import (
    ArrayRowStream,
    FileRowStream,
    GeneratorRowStream,
    PassCounter,
    RowBlock,
    RowStream,
    file_row_stream,
)
from .matfile import (
    read_matrix,
    read_sigma_csv,
    sniff_layout,
    write_matrix,
    write_sigma_csv,
)
from .sketch import (
    NormalizedRowStream,
    SketchState,
    center_correct,
    normalize_rows,
    sketch_pass,
)
from .qb import QbFactor, blocked_qb
from .algorithms import (
    PcaConfig,
    TruncatedSvd,
    as_row_stream,
    basic_rand_svd,
    error_bound_factor,
    legacy_single_pass,
    power_refine,
    principal_components,
    single_pass_pca,
)
from .synthetic import (
    SpectrumSpec,
    SyntheticMatrix,
    SyntheticRowStream,
    exact_truncated_svd,
    sigma_array,
    spectrum_value,
    synth_matrix,
    synth_stream,
)
from .metrics import (
    CSV_HEADER,
    MetricsReport,
    compare,
    compare_to_sigma,
    csv_row,
    format_report,
)
from .estimator import SinglePassPCA, check_matrix

__version__ = "0.1.0"

__all__ = [
    "ArrayRowStream",
    "CSV_HEADER",
    "CapabilityError",
    "ConditioningWarning",
    "ConfigError",
    "DataError",
    "DimensionError",
    "EmptyStreamError",
    "FileRowStream",
    "FormatError",
    "GeneratorRowStream",
    "MetricsReport",
    "NormalizedRowStream",
    "PassCounter",
    "PcaConfig",
    "QbFactor",
    "RankDeficiencyError",
    "RowBlock",
    "RowStream",
    "ScaleError",
    "SingularMatrixError",
    "SinglePassPCA",
    "SketchState",
    "SpectrumSpec",
    "StreamFormatError",
    "StreamPcaError",
    "SyntheticMatrix",
    "SyntheticRowStream",
    "TruncatedSvd",
    "as_row_stream",
    "basic_rand_svd",
    "blocked_qb",
    "center_correct",
    "check_matrix",
    "compare",
    "compare_to_sigma",
    "csv_row",
    "error_bound_factor",
    "exact_truncated_svd",
    "file_row_stream",
    "format_report",
    "legacy_single_pass",
    "normalize_rows",
    "power_refine",
    "principal_components",
    "read_matrix",
    "read_sigma_csv",
    "sigma_array",
    "single_pass_pca",
    "sketch_pass",
    "sniff_layout",
    "spectrum_value",
    "synth_matrix",
    "synth_stream",
    "write_matrix",
    "write_sigma_csv",
    "__version__",
]
