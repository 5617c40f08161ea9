"""Kernel backend selection.

The compiled ``_core`` extension is preferred when importable; the numpy
fallback in ``_pykernels`` is used otherwise. Set ``CAPDISK_BACKEND`` to
``python`` or ``cython`` to force a choice (forcing ``cython`` raises if
the extension is missing). Both backends are bit-compatible.
"""

import os

from capdisk import _pykernels

_FORCED = os.environ.get("CAPDISK_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = _pykernels
elif _FORCED == "cython":
    from capdisk import _core as _impl
else:
    try:
        from capdisk import _core as _impl
    except ImportError:
        _impl = _pykernels

philox4x64 = _impl.philox4x64
pair_geometry = _impl.pair_geometry


def active_backend() -> str:
    """Name of the kernel backend in use ('cython' or 'python')."""
    return _impl.BACKEND_NAME


def available_backends():
    """All importable kernel modules, for tests and benchmarks."""
    mods = [_pykernels]
    try:
        from capdisk import _core
        mods.append(_core)
    except ImportError:
        pass
    return mods
