"""Exact order-picking time distributions for return routing."""

from .inversion import DistributionGrid, GridKind, InversionParams, grid, invert_cdf, invert_density, quantile
from .lst import (
    kplus_pmf,
    mean_from_lst,
    mean_travel_random_closed,
    order_lst,
    order_lst_random_closed,
    pick_lst,
    psi_aisle,
    second_moment_from_lst,
)
from .model import (
    ClassSpec,
    Layout,
    OrderModel,
    PickTimeModel,
    PiecewiseLinearCdf,
    StorageProfile,
    WarehouseConfig,
    WarehouseGeometry,
    build_class_based_profile,
    build_random_profile,
)
from .montecarlo import SimulationReport, simulate

__all__ = [
    "ClassSpec",
    "DistributionGrid",
    "GridKind",
    "InversionParams",
    "Layout",
    "OrderModel",
    "PickTimeModel",
    "PiecewiseLinearCdf",
    "SimulationReport",
    "StorageProfile",
    "WarehouseConfig",
    "WarehouseGeometry",
    "build_class_based_profile",
    "build_random_profile",
    "grid",
    "invert_cdf",
    "invert_density",
    "kplus_pmf",
    "mean_from_lst",
    "mean_travel_random_closed",
    "order_lst",
    "order_lst_random_closed",
    "pick_lst",
    "psi_aisle",
    "quantile",
    "second_moment_from_lst",
    "simulate",
]
