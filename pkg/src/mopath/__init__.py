"""Multi-objective global path planning on raster terrain maps."""

from .cost_model import (
    CostConfig,
    CostWeights,
    NormalizationConstants,
    compute_norms,
    edge_cost,
    load_cost_config,
)
from .evaluator import PathMetrics, evaluate
from .planner import PlanRequest, RawPath, plan
from .raster_map import GridGeometry, MapLayer, MapStack, assemble_stack, load_layer, load_stack

__all__ = [
    "CostConfig", "CostWeights", "NormalizationConstants", "compute_norms", "edge_cost",
    "load_cost_config", "PathMetrics", "evaluate", "PlanRequest", "RawPath", "plan",
    "GridGeometry", "MapLayer", "MapStack", "assemble_stack", "load_layer", "load_stack",
]
