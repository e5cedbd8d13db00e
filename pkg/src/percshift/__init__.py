"""Continuum-percolation diagnostics for sampled point clouds."""

__version__ = "0.1.0"

from .pointcloud import CloudFormatError, CloudPair, PointCloud, load_cloud, save_cloud
from .metric import DistanceSpectrum, PointMap, apply_map, distance_spectrum
from .percolation import (
    PercolationCurve,
    ThresholdEstimate,
    critical_epsilon,
    critical_threshold,
    curve_on_grid,
    mst_longest_edge,
    percolate,
)
from .generators import GeneratorSpec, analytic_h2, generate
from .analysis import (
    InvarianceReport,
    ScalingFit,
    ShiftReport,
    fit_scaling,
    h2_corrected_prediction,
    invariance_check,
    percolation_shift,
)
from .toposloss import ExpansionTrace, TopoLossResult, expand_demo, loss_direction, topo_loss
