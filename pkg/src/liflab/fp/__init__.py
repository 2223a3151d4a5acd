from .grid import LogisticGrid, build_logistic_grid, logistic_inverse, logistic_map, metric
from .solver import (
    DensityState,
    FiringSeries,
    SolveResult,
    SolverConfig,
    assemble_sg_system,
    cdf_on_grid,
    firing_rate_quadrature,
    interp_density,
    solve_discharge_fp,
    solve_hard_wall_fp,
    step_semi_implicit,
    thomas_solve,
    total_mass,
)
