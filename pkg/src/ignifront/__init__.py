"""Ignition reaction-diffusion fronts in 1D random media.

Simulation and analysis toolkit for front propagation under
``u_t = u_xx + g(x) f0(u)`` with an ignition nonlinearity and a stationary
ergodic reaction rate: deterministic spreading-rate estimation from hitting
times, transition-front diagnostics, and the shift-normalized construction
of the random traveling wave.
"""

from .reaction import (
    IgnitionNonlinearity,
    MediumRealization,
    ReactionField,
    eval_f0,
    homogeneous_medium,
    make_nonlinearity,
    sample_medium,
    shift_medium,
)
from .solver import GridConfig, Snapshot, Trajectory, evolve, make_bump, make_step, step
from .profiles import (
    BumpSubsolution,
    EnvelopeEstimate,
    HomogeneousWave,
    SupersolutionSpec,
    build_bump,
    estimate_envelope,
    exp_supersolution_params,
    tw_speed_shoot,
    verify_supersolution,
)
from .fronts import front_stats, hitting_times, level_positions, track_interface
from .spreading import (
    HittingMatrix,
    SpeedEstimate,
    build_hitting_matrix,
    estimate_speed,
    spreading_theorem_check,
    verify_near_subadditivity,
)
from .wavelimit import (
    NormalizedRun,
    WaveLimitRecord,
    construct_wave,
    normalize_shift,
    passage_profiles,
    translation_check,
)

__version__ = "0.1.0"
