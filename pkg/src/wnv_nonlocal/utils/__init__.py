"""
Utility functions.
"""

from .generate_grid import generate_grid
from .parallel import schedule_runs
from .roots import bisect_predicate, bisect_sign
from .sample_params import sample_params
