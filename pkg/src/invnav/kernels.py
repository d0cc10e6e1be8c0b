"""Kernel backend selection.

The compiled extension is used when it imported cleanly; otherwise the numpy
fallback serves the same functions. ``use_backend`` switches explicitly, which
the tests and the benchmark rely on.
"""

from __future__ import annotations

from types import ModuleType

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS: dict[str, ModuleType] = {"python": _fallback}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

_active: ModuleType = _compiled if _compiled is not None else _fallback


def backend_name() -> str:
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def use_backend(name: str) -> None:
    global _active
    try:
        _active = BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def get(name: str | None = None) -> ModuleType:
    return _active if name is None else BACKENDS[name]


def planner_radii(*args, **kwargs):
    return _active.planner_radii(*args, **kwargs)


def raycast(*args, **kwargs):
    return _active.raycast(*args, **kwargs)


def advance(*args, **kwargs):
    return _active.advance(*args, **kwargs)


def seg_threshold(*args, **kwargs):
    return _active.seg_threshold(*args, **kwargs)
