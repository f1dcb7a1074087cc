"""Hot-loop kernels with a compiled core and a pure-numpy fallback.

The compiled extension is preferred when importable; setting the environment
variable PTYCHOKIT_NO_EXTENSION to a non-empty value forces the fallback.
Both backends produce bitwise identical results (same frame order, same
arithmetic), so solver output does not depend on which one loaded.
"""

from __future__ import annotations

import os

from . import _fallback

if os.environ.get("PTYCHOKIT_NO_EXTENSION"):
    _impl = _fallback
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _fallback

gather = _impl.gather
scatter = _impl.scatter
substitute_amplitude = _impl.substitute_amplitude


def backend_name() -> str:
    """Name of the active backend, either "native" or "fallback"."""
    return "native" if _impl.__name__.endswith("_native") else "fallback"
