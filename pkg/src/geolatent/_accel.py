"""Kernel backend selection.

Hot numeric loops live in ``_kernels_numba`` (njit) with equivalent pure-numpy
implementations in ``_kernels_numpy``. The numba path is the default; set
``GEOLATENT_DISABLE_NUMBA=1`` (or the standard ``NUMBA_DISABLE_JIT=1``) before
import to force the numpy fallback. ``benchmarks/bench_kernels.py`` compares
the two paths.
"""

import os


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "off")


NUMBA_DISABLED = _flag("GEOLATENT_DISABLE_NUMBA") or _flag("NUMBA_DISABLE_JIT")

if not NUMBA_DISABLED:
    try:
        import numba  # noqa: F401

        USING_NUMBA = True
    except ImportError:
        USING_NUMBA = False
else:
    USING_NUMBA = False


def thread_cap() -> int | None:
    """Parallelism cap from GEOLATENT_THREADS, or None when unset."""
    raw = os.environ.get("GEOLATENT_THREADS", "").strip()
    if not raw:
        return None
    cap = int(raw)
    if cap < 1:
        raise ValueError(f"GEOLATENT_THREADS must be >= 1, got {cap}")
    return cap


if USING_NUMBA:
    _cap = thread_cap()
    if _cap is not None:
        import numba

        numba.set_num_threads(min(_cap, numba.config.NUMBA_NUM_THREADS))
