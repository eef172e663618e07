"""Global constants for lattice-spectra."""

# Report format
REPORT_FORMAT_VERSION = 1
REPORT_PROJECT_NAME = "lattice-spectra"
SIGNIFICANT_DIGITS = 12

# Symbol engine
DEFAULT_GRID = 256
DEFAULT_TOL = 1e-6
SEED_POINTS_LIMIT = 2**16  # Band search seed grid is capped at this many torus points
DEFAULT_MAX_BOXES = 2**16  # Branch-and-bound box cap per level
MAX_REFINEMENT_LEVELS = 60
HERMITIAN_CHECK_TOL = 1e-12
CURVE_CHUNK_POINTS = 2**15  # Torus points evaluated per batch

# Eigen solvers
JACOBI_MAX_SWEEPS = 60
JACOBI_OFFDIAG_TOL = 1e-14  # Relative to the Frobenius norm
ROOT_MAX_ITERATIONS = 2000
ROOT_RESIDUAL_TOL = 1e-13  # Relative to the polynomial scale

# Determinant test
ZERO_DET_TOL = 1e-11  # |det| at or below this (relative) counts as a zero

# Operator algebra
DEFAULT_SAMPLE_RADIUS = 8
KERNEL_SPOT_SAMPLES = 3  # Extra shells checked beyond the declared radius

# Limit operators
DEFAULT_LIMIT_TOL = 1e-9
DEFAULT_STABILITY_RUN = 8
RAY_MAX_SAMPLES = 64  # Ray sample m = 2**k for k < RAY_MAX_SAMPLES
SO_CHECK_TOL = 1e-6
SO_CHECK_EXPONENTS = range(40, 48)  # Increments are checked at cells 2**k·d
LIMIT_KEY_DECIMALS = 12

# Finite sections
DEFAULT_MAX_WINDOW_ROWS = 4000
DEFAULT_R_SCHEDULE = (50, 100, 200)

# Graph
DEFAULT_DISTANCE_CAP = 10_000

# Builtin graphs
BUILTIN_GRAPHS = ("cayley", "zigzag", "honeycomb")
