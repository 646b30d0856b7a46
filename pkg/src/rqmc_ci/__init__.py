"""Non-asymptotic confidence intervals for randomized quasi-Monte Carlo."""

from .allocation import (AllocationResult, VarianceModel, allocate, bennett_half_width_of_n,
                         guidance_bound, optimal_n_continuous, optimal_n_discrete, width_ratio)
from .intervals import (BetParams, CapitalTrace, Interval, RunningMoments, bennett_ci, clt_ci,
                        hbci, hedged_capital, hoeffding_ci, maurer_pontil_ci, prpl_eb_ci)
from .normal import phi, phi_inv
from .oracle_variance import var_indicator_third, var_smooth_exact, var_stratified_numeric
from .rqmc import (PointSet, ReplicateSample, ScrambleState, SobolGenerator, generate_sobol,
                   replicate_estimates, scramble, scrambled_sobol)
from .student_t import t_quantile

__version__ = "0.1.0"
