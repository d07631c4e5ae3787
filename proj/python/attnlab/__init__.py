"""Attention variants, cost model, benchmarks, and analysis helpers."""

try:
    from ._attnlab import *  # noqa: F401,F403
    from . import _attnlab as _impl
except ImportError:  # module placed next to the package instead of inside it
    from _attnlab import *  # noqa: F401,F403
    import _attnlab as _impl

__doc__ = _impl.__doc__
__all__ = [name for name in dir(_impl) if not name.startswith("_")]
