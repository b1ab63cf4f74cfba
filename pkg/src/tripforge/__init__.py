"""tripforge: bike-share trip ingest, descriptive analysis, and destination / duration prediction."""
from .model import (
    AgeGroup,
    CategoryLabel,
    Gender,
    Station,
    StationPair,
    StationRegistry,
    TripRecord,
    TripTable,
    UserCategory,
    UserKind,
    age_group,
    category_label,
)
from .ingest import ColumnMap, IngestReport, load_stations, load_trips, preset, read_stations
from .features import FEATURE_NAMES, FeatureMask, FeatureVector, extract, extract_masked, feature_matrix
from .dataset import ExampleSet, LabeledExample, classification_set, negatives, positives, split
from .gbdt import GbdtConfig, GbdtModel, rank_destinations
from .lasso import LassoConfig, LassoModel
from .metrics import ClassificationReport, RegressionReport, classification_metrics, regression_metrics
from .synth import synth_corpus

__version__ = "0.1.0"
