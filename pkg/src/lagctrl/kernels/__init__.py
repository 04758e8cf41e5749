"""Hot-loop kernels: compiled Cython core with a pure numpy fallback.

Importing this package picks the compiled extension when it is built and
silently falls back to the numpy implementation otherwise.  Set
``LAGCTRL_FORCE_PYTHON=1`` to force the fallback (used by the equivalence
tests and the backend benchmark).
"""

import os

from ._numpy import STATUS_CFL, STATUS_NONFINITE, STATUS_OK, STATUS_VACUUM

if os.environ.get("LAGCTRL_FORCE_PYTHON", "") == "1":
    from ._numpy import advect_rk4, linear_run, nonlinear_run

    BACKEND = "python"
else:
    try:
        from ._core import advect_rk4, linear_run, nonlinear_run

        BACKEND = "compiled"
    except ImportError:
        from ._numpy import advect_rk4, linear_run, nonlinear_run

        BACKEND = "python"

__all__ = [
    "BACKEND",
    "STATUS_CFL",
    "STATUS_NONFINITE",
    "STATUS_OK",
    "STATUS_VACUUM",
    "advect_rk4",
    "linear_run",
    "nonlinear_run",
]
