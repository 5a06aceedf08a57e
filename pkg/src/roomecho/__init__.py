"""roomecho: MLS room impulse response measurement and acoustic room identification."""

from .classify import (
    ClassifierModel,
    ConfusionMatrix,
    DiscreteDistribution,
    PermutationResult,
    fit,
    js_divergence,
    kfold_cv,
    kl_divergence,
    permutation_test,
    predict,
    sffs,
)
from .dataset import LabeledDataset, RoomLabel, load_dataset, save_dataset, zscore_apply, zscore_fit
from .features import (
    FEATURE_NAMES,
    EnergyDecayCurve,
    FeatureVector,
    NaerParams,
    c50,
    d50,
    edc,
    extract_features,
    naer_rt,
    octave_filter,
    rt_schroeder,
    spectral_kurtosis,
    spectral_std,
    temporal_kurtosis,
    ts,
    window_rir,
)
from .filters import OCTAVE_CENTERS
from .mls import (
    MeasurementConfig,
    Mls,
    average_periods,
    deconvolve,
    excitation_duration,
    generate_mls,
)
from .signals import Recording, Rir, measure_pnr
from .synth import RoomSpec, degrade_rir, sabine_rt, simulate_measurement, synth_rir

__version__ = "0.1.0"
