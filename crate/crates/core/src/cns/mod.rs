//! Nonlinear barotropic solver in perturbation form with monitors and
//! reference experiments.

pub mod decay;
pub mod effective;
pub mod incompressible;
pub mod integrator;
pub mod local_scheme;
pub mod low_mach;
pub mod monitors;
pub mod params;
pub mod rescale;
pub mod rhs;
pub mod run;
pub mod state;

pub use integrator::{cns_step, cns_step_with, linear_propagate, Propagator, PropagatorCache, StepOutcome, REJECTION_RATIO};
pub use params::{CnsParams, PressureLaw};
pub use rhs::{lame_apply, nonlinear_rhs, RhsEval};
pub use state::{read_trajectory, write_atomic, write_trajectory, CnsState, SnapshotMeta};
pub use monitors::{decay_alpha, decay_data_size, initial_size, MonitorOptions, MonitorSample, Monitors, DECAY_EPSILON};
pub use run::{cns_run, output_times, CnsRun, RunOptions, StopReason, MAX_HALVINGS};
pub use effective::effective_velocity;
pub use incompressible::{incompressible_run, incompressible_step, IncompressibleOptions, IncompressibleRun};
pub use local_scheme::{local_iteration_scheme, LocalSchemeOptions, LocalSchemeReport, LocalSchemeSolution};
pub use decay::{convolution_bound, convolution_self_test, decay_run, gap_rate, gap_time, ConvolutionBound, DecayOptions, DecayReport};
pub use low_mach::{data_norm_exponent, low_mach_data_size, low_mach_experiment, LowMachConfig, LowMachFamily, LowMachReport, LowMachRow, WELL_PREPARED_AMPLITUDE};
pub use rescale::{dyadic_exponent, rescale_state};
