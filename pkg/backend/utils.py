import hashlib
import json
import logging
import math

import numpy as np

VERSION = "0.1.0"
PROG = "levyhedge"

# Quadrature
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-11
QUAD_LIMIT = 500

# Fourier-cosine expansion
COS_TERMS = 2 ** 10
COS_TERMS_MAX = 2 ** 15
COS_TRUNCATION = 10.0
COS_TAIL_TOLERANCE = 1e-6
COS_JUMP_TAIL_TOLERANCE = 1e-10
CHEBYSHEV_DEGREE = 256

# Monte Carlo
MC_PATHS = 100_000
MC_MAX_PATHS = 1_600_000
FD_RELATIVE_STEP = 1e-4
FD_ABSOLUTE_STEP = 1e-6

# Simulation
FINE_GRID = 2 ** 14
REFINE_FRACTION = 0.05
REFINE_SHARE = 0.25
REFINE_MIN_GAP = 1e-6
JUMP_RATE_BUDGET = 1e3
SAMPLER_CELLS = 4096
ORACLE_REFINEMENT = 16
ORACLE_TOLERANCE = 1e-3

# Strategy surfaces
SURFACE_TIMES = 96
SURFACE_PRICES = 512
SURFACE_WIDTH = 12.0
SURFACE_CHECKS = 100
MATURITY_GUARD = 1e-6

# Small-jump classification
BG_TOLERANCE = 0.05
BG_ANNULI = tuple(range(4, 21))
TABLE1_SLACK = 0.05
TAIL_SPOT_CHECKS = 20

# Metrics
BOOTSTRAP_RESAMPLES = 200
BMO_RESAMPLES = 20
NEIGHBORS = 50
MIN_PATHS = 10_000
MIN_RATE_SAMPLES = 1_000
MIN_TAIL_SAMPLES = 100_000
METRIC_GRID = 32
MOMENT_ORDERS = (-2, -1, 1, 2, 3, 4, 6)

# Experiments
N_VALUES = [8, 16, 32, 64, 128, 256]
PATHS_PER_N = 4000
PATH_CHUNK = 250

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INCONSISTENT = 2
EXIT_NUMERICAL = 3


def setup_logging(verbosity=0):
    """Configure the root logger from a -v count"""
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def config_hash(text):
    """sha256 of the raw configuration document"""
    if isinstance(text, str):
        text = text.encode("utf-8")
    return hashlib.sha256(text).hexdigest()


def provenance_line(digest):
    return "# {} {} config-sha256={}".format(PROG, VERSION, digest)


def write_csv(frame, filename, digest):
    """pandas CSV preceded by the provenance comment line"""
    with open(filename, "w", encoding="utf-8", newline="") as f:
        f.write(provenance_line(digest) + "\n")
        frame.to_csv(f, index=False, lineterminator="\n")


def _finite_or_none(value):
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite_or_none(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(v) for v in value]
    return value


def write_json(document, filename, digest):
    """JSON with a provenance object, non-finite floats written as null"""
    document = dict(document)
    document["provenance"] = {"version": VERSION, "config_hash": digest}
    with open(filename, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps(_finite_or_none(document), indent=2, allow_nan=False) + "\n")
