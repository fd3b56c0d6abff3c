"""cartelsim: simulator and numerical toolkit for an adaptive trust game.

Agents simultaneously donate to K chosen rewarders and sell a strategy
value w; above a critical rewarder-update rate the population settles
into fluctuating cartel-like states.  The package bundles the
agent-based engine, a linear-stability solver for the critical rate,
a mean-field master-equation integrator, and spectral/power-law
analysis of the recorded observables.
"""

from ._mc import state_from_entropy
from .analysis import (Spectrum, choose_tail_kmin, default_fit_bands, loglog_slope,
                       powerlaw_tail_exponent, psd, variance_of_series)
from .core import (Population, apply_noise, donator_payoff, donator_update,
                   rewarder_payoff, rewarder_update)
from .engine import (DegreeHistogram, RunResult, SimParams, SweepRow, TimeSeries,
                     cell_entropy, init_population, run, step, sweep)
from .master import (DistributionGrid, MasterTrajectory, gamma_term, integrate,
                     master_rhs, mean_w, perturbed_ones_grid, single_column_grid,
                     threshold_table, uniform_grid, xi_term)
from .stability import (CriticalPoint, LinearOperator, build_linearized_matrix,
                        find_critical_a, leading_eigenvalue, stability_indicator)

__version__ = "0.1.0"

__all__ = [
    "CriticalPoint", "DegreeHistogram", "DistributionGrid", "LinearOperator",
    "MasterTrajectory", "Population", "RunResult", "SimParams", "Spectrum",
    "SweepRow", "TimeSeries", "apply_noise", "build_linearized_matrix",
    "cell_entropy", "choose_tail_kmin", "default_fit_bands", "donator_payoff",
    "donator_update", "find_critical_a", "gamma_term", "init_population",
    "integrate", "leading_eigenvalue", "loglog_slope", "master_rhs", "mean_w",
    "perturbed_ones_grid", "powerlaw_tail_exponent", "psd", "rewarder_payoff",
    "rewarder_update", "run", "single_column_grid", "stability_indicator",
    "state_from_entropy", "step", "sweep", "threshold_table", "uniform_grid",
    "variance_of_series", "xi_term",
]
