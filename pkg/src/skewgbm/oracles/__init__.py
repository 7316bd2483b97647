"""Independent numerical solutions used to cross-check the closed forms."""

from .fd import FdConfig, FdResult, fd_solve
from .mc import McConfig, McResult, mc_estimate, simulate_path
