"""Select the kernel backend: compiled extension if built, numpy otherwise."""
try:
    from . import _ckernels as impl
    BACKEND = "cython"
except ImportError:  # extension not built
    from . import _pykernels as impl
    BACKEND = "python"

window_medians = impl.window_medians
loo_window_medians = impl.loo_window_medians
