"""Figure rendering for abrsim CSV traces."""

from .acr import plot_acr
from .csvio import ACR_COLUMNS, PORT_COLUMNS, MissingColumn, PlotSpec, read_acr, read_port
from .neff import plot_neff

__all__ = [
    "ACR_COLUMNS",
    "PORT_COLUMNS",
    "MissingColumn",
    "PlotSpec",
    "plot_acr",
    "plot_neff",
    "read_acr",
    "read_port",
]

__version__ = "0.1.0"
