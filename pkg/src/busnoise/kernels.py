"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise the
pure-Python ``_fallback``.  Setting ``BUSNOISE_PURE_PYTHON=1`` forces the
fallback.  Both expose ``run_frames``, ``decode_fired``, ``decode_packed``
and ``BACKEND``.
"""

from __future__ import annotations

import os

from . import _fallback

_core = None
if os.environ.get("BUSNOISE_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _core  # type: ignore[attr-defined,no-redef]
    except ImportError:
        _core = None

backend = _core if _core is not None else _fallback
BACKEND: str = backend.BACKEND


def get(name: str | None = None):
    """Return a backend module by name (``"cython"``/``"python"``), default the active one."""
    if name is None:
        return backend
    if name == "python":
        return _fallback
    if name == "cython":
        if _core is None:
            raise ImportError("compiled core is not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")


def available() -> list[str]:
    return ["python"] + (["cython"] if _core is not None else [])
