"""Pick the trajectory kernel: compiled if available, numpy otherwise.

Set ``C4SIM_PURE_PYTHON=1`` to force the numpy kernel.
"""

from __future__ import annotations

import os

from c4sim.sim import _traj_py

python_kernel = _traj_py.run_shots

compiled_kernel = None
if os.environ.get("C4SIM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from c4sim.sim import _traj  # type: ignore[attr-defined]

        compiled_kernel = _traj.run_shots
    except ImportError:  # extension not built
        compiled_kernel = None

run_shots = compiled_kernel or python_kernel
KERNEL_NAME = "cython" if compiled_kernel is not None else "numpy"
