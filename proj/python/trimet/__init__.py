"""Mahalanobis metric learning with triplet mining."""

try:
    from ._trimet import (
        Dataset,
        factorize_metric,
        generate_synthetic,
        hierarchical_train,
        knn_classify,
        load_csv,
        mahalanobis_distance_sq,
        mine,
        psd_project,
        solve,
        stratified_split,
    )
except ImportError:
    # In-tree builds leave the extension next to the build directory rather
    # than inside the package; pick it up from sys.path.
    from _trimet import (
        Dataset,
        factorize_metric,
        generate_synthetic,
        hierarchical_train,
        knn_classify,
        load_csv,
        mahalanobis_distance_sq,
        mine,
        psd_project,
        solve,
        stratified_split,
    )

__all__ = [
    "Dataset",
    "factorize_metric",
    "generate_synthetic",
    "hierarchical_train",
    "knn_classify",
    "load_csv",
    "mahalanobis_distance_sq",
    "mine",
    "psd_project",
    "solve",
    "stratified_split",
]
