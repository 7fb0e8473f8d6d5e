"""Default settings shared by the mesh generators, the solver and the study driver."""

import math

# Polynomial orders
MAX_K = 4
MAX_EDGE_RULE_K = 6

# Quadrature degree offsets (added to 2k)
OPERATOR_QUAD_OFFSET = 0  # consistency integrals: 2k
LOAD_QUAD_OFFSET = 2  # load vectors: 2k + 2
ERROR_QUAD_OFFSET = 4  # error norms: 2k + 4
CORNER_REFINE_LEVELS = 4

# Stabilization: internal moments are weighted by pi * j_{0,1}^2, the lowest
# Dirichlet eigenvalue of a disk of unit area.
MOMENT_STAB_WEIGHT = math.pi * 2.404825557695773**2

# Geometric tolerances
NODE_MATCH_TOL = 1e-12  # relative to the mesh size h
WELD_TOL = 1e-10  # relative to the domain size
AREA_TILING_TOL = 1e-10
DEGENERATE_AREA_RATIO = 1e-12  # relative to the domain area
SLIVER_AREA_RATIO = 1e-3  # relative to the nominal cell area

# Hexagonal family
HEX_COLUMNS_PER_UNIT = 1  # columns per unit length at level 0
MIN_CELLS = 4

# Voronoi family
VORONOI_BASE_SEEDS = 4  # n_seeds(level) = 4**level * VORONOI_BASE_SEEDS
VORONOI_LLOYD_ITERS = 50
DEFAULT_SEED = 1

# Regularity thresholds
DEFAULT_GAMMA0 = 0.05
DEFAULT_GAMMA1 = 0.05
MAX_QUASI_UNIFORMITY = 4.0
VORONOI_MIN_EDGE_RATIO = 2.0 * DEFAULT_GAMMA1  # shorter Voronoi edges are collapsed

# Linear solver
DEFAULT_SOLVER = "auto"
DEFAULT_SOLVER_TOL = 1e-12
DIRECT_SOLVER_LIMIT = 200_000  # free unknowns above which "auto" switches to CG
CG_MAX_ITER_FACTOR = 10  # maxiter = factor * n_free
MAX_REFINEMENT_STEPS = 10  # iterative refinement of the direct solve

# Study defaults
DEFAULT_LEVELS = 4
MIN_LEVELS = 3
RATE_WINDOW = 3
SUBDOMAIN_RADIUS = 0.25

CSV_HEADER = "level,h,ndof,e1_global,e1_inner,e1_outer,runtime_s"

# Exit codes
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MESH = 3
EXIT_SOLVER = 4

# Plot colours
GLOBAL_COLOR = "#1f4fbf"
INNER_COLOR = "#f2b600"
OUTER_COLOR = "#ff7f0e"
REFERENCE_COLOR = "#555555"

MESH_PNG_SIZE = 800
MESH_EDGE_COLOR = (30, 30, 30)
MESH_FILL_COLOR = (235, 242, 255)
MESH_BACKGROUND = (255, 255, 255)
