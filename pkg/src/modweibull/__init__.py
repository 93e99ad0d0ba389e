"""Modified Weibull reliability models: fit, combine, forecast."""
from .dataset import (
    AssetRecord,
    ConditionRating,
    FailureTable,
    HealthIndexConfig,
    SplitTable,
    Status,
    build_failure_table,
    health_index,
    parse_dataset,
    split_table,
)
from .ensemble import JointModel, ScoredModel, SelectionPolicy, combine, joint_cdf, score, select
from .estimation import FitResult, ShiftGrid, expand_candidates, fit_all, fit_lse, fit_mle, solve_mle_beta
from .forecast import (
    ForecastReport,
    Horizon,
    PopulationAsset,
    PopulationSnapshot,
    asset_probability,
    consequence,
    monte_carlo_consequence,
    population_forecast,
    progress_health,
)
from .models import Axis, ModelForm, WeibullModel, cdf, pdf, sample
from .synthgen import SynthSpec, generate_exact_table, generate_population

__version__ = "0.1.0"
