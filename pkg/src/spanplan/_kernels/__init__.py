"""Search-kernel backends.

The compiled extension is preferred when the build produced it; the pure
Python module is a drop-in fallback with identical semantics.
"""
from . import pure

try:
    from . import _speedups as compiled

    HAVE_COMPILED = True
except ImportError:  # extension not built
    compiled = None
    HAVE_COMPILED = False

DEFAULT_BACKEND = "compiled" if HAVE_COMPILED else "pure"


def get_backend(name: str = "auto"):
    """Resolve a backend module by name: auto, pure, or compiled."""
    if name == "auto":
        return compiled if HAVE_COMPILED else pure
    if name == "pure":
        return pure
    if name == "compiled":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available in this install")
        return compiled
    raise ValueError(f"unknown kernel backend {name!r}")
