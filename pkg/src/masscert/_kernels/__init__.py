"""Kernel backend selection: compiled extension when built, numpy fallback.

Set MASSCERT_PURE=1 to force the Python backend (used by the benchmark
and by tests that cross-check the two implementations).
"""

from __future__ import annotations

import os

from . import pykernels

if os.environ.get("MASSCERT_PURE"):
    _impl = pykernels
else:
    try:
        from . import ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = pykernels

BACKEND: str = _impl.BACKEND

totient_sieve = _impl.totient_sieve
smallest_prime_factors = _impl.smallest_prime_factors
coprime_mask = _impl.coprime_mask
dyadic_box_ranges = _impl.dyadic_box_ranges


def get_backend() -> str:
    return BACKEND


def compiled_available() -> bool:
    try:
        from . import ckernels  # noqa: F401
    except ImportError:
        return False
    return True
