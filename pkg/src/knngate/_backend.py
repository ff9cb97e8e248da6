"""Pick the k-NN scan implementation at import time.

The compiled kernel is used when it was built; set ``KNNGATE_PURE=1`` to
force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
knn_scan = _pykernels.knn_scan

if os.environ.get("KNNGATE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None
    else:
        knn_scan = _ckernels.knn_scan
        BACKEND = "cython"
else:
    _ckernels = None
