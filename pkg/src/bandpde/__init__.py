"""Variational PDEs on closed surfaces and curves, solved on a thin
Cartesian narrowband with projected gradients and a ghost-node closure.

Submodules load lazily so the command line driver can configure thread
pools before the numerical stack is imported.
"""
import importlib

_SUBMODULES = ("errors", "geometry", "narrowband", "closure", "discretize",
               "quadrature", "solve", "modelstrip", "experiments", "cli")

__all__ = list(_SUBMODULES)
__version__ = "0.1.0"


def __getattr__(name):
    if name in _SUBMODULES:
        module = importlib.import_module("." + name, __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
