"""Scalable categorical clustering and fraud-campaign detection for orders."""

from .agglo import Clustering, agglo_clust, cut_distance, cut_maxclust, linkage
from .detect import Verdict, label_propagation
from .distance import DistanceParams, distance_matrix, hamming, unit_weights
from .metrics import MetricsReport, cfr, cfr_subset, clr, detection_metrics, impurity, performance_score
from .recagglo import RecAggloParams, goodness_check, rec_agglo
from .sample import SampleParams, count_distance_computations, sample_clust
from .schema import (
    AttributeCategory,
    AttributeSchema,
    Dataset,
    Label,
    Record,
    default_schema,
    load_csv,
    merge,
    write_csv,
)
from .synthgen import GeneratorConfig, generate
from .weights import cardinality_weights, label_weights, simpson_index

__version__ = "0.1.0"
