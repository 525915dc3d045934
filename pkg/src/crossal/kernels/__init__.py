"""Hot numeric kernels, dispatched to numba or numpy.

Both backends expose ``window_features``, ``nearest_centroid``,
``build_tree``, ``tree_predict`` and ``forest_predict``. ``BACKEND`` names the
active one; see :mod:`crossal._accel` for the env flag.
"""
from .._accel import USE_NUMBA
from .constants import FEATURE_NAMES, N_FEATURES

if USE_NUMBA:
    from ._numba import build_tree, forest_predict, nearest_centroid, tree_predict, window_features

    BACKEND = "numba"
else:
    from ._numpy import build_tree, forest_predict, nearest_centroid, tree_predict, window_features

    BACKEND = "numpy"

__all__ = [
    "BACKEND",
    "FEATURE_NAMES",
    "N_FEATURES",
    "build_tree",
    "forest_predict",
    "nearest_centroid",
    "tree_predict",
    "window_features",
]
