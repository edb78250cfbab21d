TOL_RESIDUAL = 1e-8  # max p-harmonic residual at free vertices
TOL_ENERGY = 1e-12  # relative energy decrease per sweep counted as stalled
BISECTION_TOL = 1e-12  # width of the bracket in a scalar node solve
MAX_SWEEPS = 100_000  # relaxation sweeps before giving up
RELAXATION = 1.0  # over-relaxation factor, 1.0 is plain Gauss-Seidel
CYCLE_LAW_TOL = 1e-8  # absolute, per fundamental cycle
NODE_LAW_TOL = 1e-8  # relative to the strength of the flow
BRACKET_SLACK = 1e-9  # relative amount a lower bound may exceed the upper
MAX_VERTICES = 8_000_000  # lattice memory budget in vertices
NETWORK_CACHE = 2  # networks whose lookup tables stay in memory
QUAD_POINTS = 12  # Gauss-Legendre points per face axis
REFINEMENT_RADIUS = 4.0  # faces with |x|_q below this get 4x panels
FACE_CHUNK = 250_000  # quadrature evaluations per vectorized block
MC_SAMPLES = 1_000_000  # Monte Carlo samples for the ball volume
MC_SHARD = 100_000  # samples per Monte Carlo shard
SEED = 0  # default seed for Monte Carlo and random suites
CSV_DIGITS = 17  # significant digits, enough for a bit-exact float
LOG_LEVEL = "WARNING"  # default level for the command line
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
