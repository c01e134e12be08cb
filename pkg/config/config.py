LIB_VERSION = "0.1.0"

# Validation
VALIDATION_SAMPLES = 256
SYMMETRY_TOL = 1e-12
MU_FD_TOL = 1e-6
MU_FD_STEP = 1e-6

# Fields
TAIL_SHELL_FRACTION = 0.1
TAIL_CONTINUITY_TOL = 0.1
POSITIVITY_FLOOR = 1e-300
ROUNDOFF_NEGATIVE = 1e-12

# Operator
PV_SPLIT_CELLS = 2
GAUSS_ORDER = 16
TAIL_GAUSS_ORDER = 64
TAIL_REACH = 1e3
PERIODIC_IMAGES = 64
DEFAULT_PAD_FACTOR = 2

# Eigensolver
EIGEN_TOL = 1e-10
EIGEN_MAX_ITER = 10000
EIGEN_STAGNATION = 200
DENSE_CAP = 1024

# Evolution
DT_SAFETY = 0.4
BLOWUP_FACTOR = 10.0
STEADY_MAX_STEPS = 200000
STEADY_DT = 0.5

# Front analysis
DEFAULT_LEVEL = 0.5
FRONT_LEVELS = (0.25, 0.5, 0.75)
MIN_FIT_POINTS = 8
PROBE_MARGIN = 0.2

# Verification
TAIL_SLOPE_TOL = 0.05
LEMMA_SLOPE_SLACK = 0.1
LEMMA_PROBES = 64
LEMMA_RADIUS = 1e3
LEMMA_DOUBLING_TOL = 0.02
SANDWICH_TOL = 1e-8
HEAT_STABILITY = 0.2
EPS_BISECT_RANGE = (0.01, 0.5)
