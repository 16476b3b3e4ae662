"""Dispatch to the active kernel backend (numba njit or pure numpy)."""

from . import _accel
from . import _kernels_numpy

if _accel.USING_NUMBA:
    from . import _kernels_numba as _impl
else:
    _impl = _kernels_numpy

BACKEND = "numba" if _accel.USING_NUMBA else "numpy"

ml_eval = _impl.ml_eval
ml_restrict = _impl.ml_restrict
ffd_eval = _impl.ffd_eval
signed_volume = _impl.signed_volume
inside_mesh = _impl.inside_mesh
chamfer = _impl.chamfer
sq_dists = _impl.sq_dists
