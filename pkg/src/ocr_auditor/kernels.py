"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``OCR_AUDITOR_PURE_PYTHON`` is set to a non-empty value, the numpy
fallback in :mod:`ocr_auditor._pykernels` is used. Both expose the same
three functions and produce identical outputs.
"""
from __future__ import annotations

import contextlib
import os
from types import ModuleType

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

_active: ModuleType
if os.environ.get("OCR_AUDITOR_PURE_PYTHON") or _ckernels is None:
    _active = _pykernels
else:
    _active = _ckernels


def backend_name() -> str:
    return "cython" if _active is _ckernels else "python"


def set_backend(name: str) -> None:
    global _active
    try:
        _active = BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}") from None


@contextlib.contextmanager
def using(name: str):
    """Temporarily switch backend (used by tests and the benchmark)."""
    previous = backend_name()
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def label_components(fg: np.ndarray, connectivity: int = 8) -> tuple[np.ndarray, int]:
    return _active.label_components(np.ascontiguousarray(fg, dtype=np.uint8), connectivity)


def component_boxes(labels: np.ndarray, n: int) -> np.ndarray:
    return _active.component_boxes(np.ascontiguousarray(labels, dtype=np.int32), n)


def box_histograms(image: np.ndarray, labels: np.ndarray, y0: int, y1: int, x0: int, x1: int):
    return _active.box_histograms(
        np.ascontiguousarray(image, dtype=np.uint8),
        np.ascontiguousarray(labels, dtype=np.uint8),
        y0, y1, x0, x1,
    )
