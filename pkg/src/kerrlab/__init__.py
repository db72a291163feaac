"""kerrlab: numerical laboratory for subextremal Kerr wave estimates."""

from .geometry import BlackHoleParams, Chart, CoordPoint, new_params

__version__ = "0.1.0"

__all__ = ["BlackHoleParams", "Chart", "CoordPoint", "new_params", "__version__"]
