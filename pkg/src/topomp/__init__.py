"""Message passing over hypergraphs, simplicial, cellular and combinatorial
complexes: domains, neighborhood matrices, lifting maps, a four-step
message-passing engine with reverse-mode autodiff, and a reference layer
catalog."""

__version__ = "0.1.0"

from .complex import (
    CC,
    CCC,
    HG,
    SC,
    Cell,
    CellId,
    CellSpec,
    Complex,
    DomainKind,
    FeatureStore,
    ValidationError,
    boundary_cells,
    build_complex,
    close_downward,
    flip_orientation,
    permute,
    skeleton,
)
from .neighborhoods import (
    NeighborhoodMatrix,
    adjacency_down,
    adjacency_up,
    betti,
    coboundary,
    degree,
    down_laplacian,
    hodge_laplacian,
    incidence,
    incidence_between,
    normalize,
)
from .lifting import clique_lift, cycle_lift, group_lift, hyperedge_augment
