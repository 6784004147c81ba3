"""
bellbound configuration file
"""

VERSION = "0.1.0"

# Tolerances
FEASIBILITY_TOL = 1e-9
REPORTING_TOL = 1e-6
PSD_TOL = 1e-10
NONNEGATIVE_TOL = 1e-12
VIOLATION_TOL = 1e-8

# Desk-scale caps
STRATEGY_CAP = 10 ** 7
STATE_DIM_CAP = 256
COPIED_DIM_CAP = 4096

# Linear programming
LP_BACKEND = "simplex"  # "simplex" or "highs"
SIMPLEX_MAX_ITERATIONS = 200000

# Alternating searches (seesaw, tensor positivity, covering norm)
RESTARTS = 32
ITERATION_CAP = 200
SWEEP_THRESHOLD = 1e-10

# Dilation candidates used by the source operator bound
DILATION_CANDIDATES = ["product", "expansion", "solve", "trace-norm"]
TRACE_NORM_ITERATIONS = 30

# Logging
LOG_DIR = "logs"
LOG_TO_FILE = False
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
