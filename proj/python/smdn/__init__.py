"""Open-set post-processing for pre-trained classifiers.

Wraps the C++ core: temperature-scaled softmax with per-class thresholds
(SofterMax), Local Outlier Factor on penultimate features, and their
Platt-scaled joint prediction (SMDN).
"""

from ._smdn import (  # noqa: F401
    DatasetBundle,
    Error,
    LofModel,
    PlattScaler,
    PreconditionError,
    SmdnModel,
    SofterMaxModel,
    TemperatureFit,
    ValidationError,
    class_threshold,
    ece,
    evaluate,
    fit_lof,
    fit_platt,
    fit_smdn,
    fit_temperature,
    fit_thresholds,
    fixture,
    load_bundle,
    macro_f1,
    nll,
    run_cli,
    sample_known_classes,
    softermax,
    softmax,
)

__version__ = "0.1.0"
