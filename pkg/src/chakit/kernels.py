"""Kernel selection: compiled extension if available, pure Python otherwise.

`IMPLEMENTATION` reports which one is active; `benchmarks/bench_kernels.py`
compares the two on synthetic graphs.
"""

try:
    from . import _graphcore as _impl  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on build environment
    from . import _graphcore_py as _impl

IMPLEMENTATION = _impl.IMPLEMENTATION

reach = _impl.reach
ex_step = _impl.ex_step
eu_fixpoint = _impl.eu_fixpoint
eg_fixpoint = _impl.eg_fixpoint
attractor = _impl.attractor


def force_python():
    """Swap in the pure-Python kernels (used by tests and benchmarks)."""
    from . import _graphcore_py
    _rebind(_graphcore_py)


def force_compiled():
    from . import _graphcore
    _rebind(_graphcore)


def _rebind(module):
    global IMPLEMENTATION, reach, ex_step, eu_fixpoint, eg_fixpoint, attractor
    IMPLEMENTATION = module.IMPLEMENTATION
    reach = module.reach
    ex_step = module.ex_step
    eu_fixpoint = module.eu_fixpoint
    eg_fixpoint = module.eg_fixpoint
    attractor = module.attractor
