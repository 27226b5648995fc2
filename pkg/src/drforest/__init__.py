"""Distance-based random forest regression for manifold-valued responses."""
from .backscoring import Backscorer, BackscorerConfig, backscore, fit_backscorer, gaussian_gram
from .core import DrfError, Dataset, load_matrix_csv, validate_distance_matrix, write_matrix_csv
from .distance_prediction import predict_distances
from .distances import euclidean_distances, isomap_distances, knn_neighbors
from .embedding import MdsModel, double_center, fit_mds, oos_embed, oos_kernel_row
from .forest import Forest, ForestConfig, affinity, best_split, fit_forest, node_dispersion, split_gain
from .metrics import emse, error_vectors_projection, match_rate
from .pipeline import (
    PipelineConfig,
    PipelineModel,
    fit,
    knn_predict,
    krf_predict,
    load_model,
    predict,
    predict_batch,
    rf_mean_predict,
    save_model,
)
from .simulate import gen_swiss_roll, radial_error

__version__ = "0.1.0"
