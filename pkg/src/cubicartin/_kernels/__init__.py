"""Kernel backend selection.

The compiled Cython backend is used when available; set CUBICARTIN_PURE=1
to force the pure numpy fallback.  Both backends expose the same functions
with the same semantics (see fallback.py for the reference definitions).
"""

import os

if os.environ.get("CUBICARTIN_PURE"):
    from . import fallback as impl
else:
    try:
        from . import core as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import fallback as impl

BACKEND = impl.BACKEND
SKIP_SENTINEL = impl.SKIP_SENTINEL
char_grid = impl.char_grid
mc_block = impl.mc_block
types_block = impl.types_block
lambda_from_spf = impl.lambda_from_spf
telescope_sums = impl.telescope_sums

__all__ = [
    "BACKEND",
    "SKIP_SENTINEL",
    "char_grid",
    "mc_block",
    "types_block",
    "lambda_from_spf",
    "telescope_sums",
]
