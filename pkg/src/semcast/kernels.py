"""Select the compiled kernels when available, else the numpy fallback.

Set ``SEMCAST_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SEMCAST_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

eval_constraints = _impl.eval_constraints
solve_qp = _impl.solve_qp

QP_OK = _kernels_py.QP_OK
QP_INFEASIBLE = _kernels_py.QP_INFEASIBLE
QP_MAXITER = _kernels_py.QP_MAXITER
QP_NOT_SPD = _kernels_py.QP_NOT_SPD
