"""Mixed-frequency forecasting with MIDAS regressions and LSTM networks."""

__version__ = "0.1.0"

from .alignment import (  # noqa: E402
    AlignedDesign,
    HorizonSpec,
    LagSpec,
    TensorBatch,
    design_to_tensor,
    frequency_align,
    sample_align,
)
from .errors import (  # noqa: E402
    AlignmentError,
    ConfigError,
    ConvergenceError,
    DegenerateComparisonError,
    DivergenceError,
    DomainError,
    MflstmError,
    MultipleMismatchError,
    NumericalError,
    SelectionError,
    ShapeError,
    SingularDesignError,
)
from .evaluation import (  # noqa: E402
    EvaluationReport,
    ForecastRecord,
    annualize,
    cumsfe,
    dm_test,
    evaluate,
    relative_mse,
    relative_rmsfe,
    rmsfe,
)
from .lstm import LstmNetwork, TrainConfig, forward, gradient_check, train  # noqa: E402
from .midas import almon_weights, ar1_fit, midas_fit, predict, umidas_fit  # noqa: E402
from .selection import HyperGrid, grid_search, lasso_fit, lasso_path, lasso_select  # noqa: E402
from .series import MixedFrequencyDataset, Series, growth_rate, read_dataset, write_dataset  # noqa: E402
from .simulation import DgpConfig, McExperiment, gen_dgp, rolling_forecast, run_monte_carlo  # noqa: E402

__all__ = [
    "__version__",
    "AlignedDesign",
    "HorizonSpec",
    "LagSpec",
    "TensorBatch",
    "design_to_tensor",
    "frequency_align",
    "sample_align",
    "AlignmentError",
    "ConfigError",
    "ConvergenceError",
    "DegenerateComparisonError",
    "DivergenceError",
    "DomainError",
    "MflstmError",
    "MultipleMismatchError",
    "NumericalError",
    "SelectionError",
    "ShapeError",
    "SingularDesignError",
    "EvaluationReport",
    "ForecastRecord",
    "annualize",
    "cumsfe",
    "dm_test",
    "evaluate",
    "relative_mse",
    "relative_rmsfe",
    "rmsfe",
    "LstmNetwork",
    "TrainConfig",
    "forward",
    "gradient_check",
    "train",
    "almon_weights",
    "ar1_fit",
    "midas_fit",
    "predict",
    "umidas_fit",
    "HyperGrid",
    "grid_search",
    "lasso_fit",
    "lasso_path",
    "lasso_select",
    "MixedFrequencyDataset",
    "Series",
    "growth_rate",
    "read_dataset",
    "write_dataset",
    "DgpConfig",
    "McExperiment",
    "gen_dgp",
    "rolling_forecast",
    "run_monte_carlo",
]
