from .dofs import DofMap, OrderPair, dof_layout
from .element import (
    CellContext,
    LocalOperators,
    build_grad_projection,
    build_l2_projection_of_vh,
    build_projector_nabla,
    interpolate,
    local_element,
    local_load,
    local_stiffness,
    prepare_cell,
    stabilization_ratio,
)

__all__ = [
    "CellContext",
    "DofMap",
    "LocalOperators",
    "OrderPair",
    "build_grad_projection",
    "build_l2_projection_of_vh",
    "build_projector_nabla",
    "dof_layout",
    "interpolate",
    "local_element",
    "local_load",
    "local_stiffness",
    "prepare_cell",
    "stabilization_ratio",
]
