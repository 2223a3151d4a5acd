from .paths import (
    CoupledEnsemble,
    CoupledSample,
    PathEnsemble,
    PathRecord,
    Terminal,
    drift_shift_from_rate,
    run_coupled_ensemble,
    run_ensemble,
    simulate_coupled_first_jumps,
    simulate_discharge,
    simulate_hard_wall,
    simulate_killed_discharge,
    simulate_killed_hard_wall,
)
from .stats import (
    EmpiricalCdf,
    empirical_cdf,
    empirical_firing_rate,
    empirical_full_cdf,
    empirical_jump_time_density,
    empirical_sub_cdf,
    empirical_survival,
    mean_jump_count,
)
