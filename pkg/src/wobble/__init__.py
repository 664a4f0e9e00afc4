"""wobble: black-box local-overfitting measurement and backdoor detection.

Quantifies how unstable a classifier's decision surface is around individual
test points by sampling Gaussian perturbation clouds and summarizing the
spread of the resulting top-1 predictions, then applies variance-equality
tests over those per-point measures to detect implanted backdoor triggers.
"""

__version__ = "0.1.0"

from .io import Dataset, TriggerSpec, load_dataset, load_tensor, load_trigger, save_tensor
from .measure import (
    MeasureConfig,
    WobblinessDistribution,
    class_histogram,
    measure_points,
    wobbliness_entropy,
    wobbliness_variance,
)
from .oracle import OracleSpec, classify_batch, mlp_forward, open_oracle
from .sampling import NoiseConfig, sample_cloud
from .stats import boxplot_summary, fligner_test, ks_test, levene_test, remove_outliers, roc_auc
from .detect import apply_trigger, backdoor_test, compare_distributions, run_battery

__all__ = [
    "Dataset", "TriggerSpec", "load_dataset", "load_tensor", "load_trigger", "save_tensor",
    "MeasureConfig", "WobblinessDistribution", "class_histogram", "measure_points",
    "wobbliness_entropy", "wobbliness_variance",
    "OracleSpec", "classify_batch", "mlp_forward", "open_oracle",
    "NoiseConfig", "sample_cloud",
    "boxplot_summary", "fligner_test", "ks_test", "levene_test", "remove_outliers", "roc_auc",
    "apply_trigger", "backdoor_test", "compare_distributions", "run_battery",
]
