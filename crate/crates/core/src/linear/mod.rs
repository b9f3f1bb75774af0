//! Linear models: heat, transport, Lamé, and the linearized compressible
//! system at the level of single modes and radial profiles.

pub mod decay_profile;
pub mod heat;
pub mod lame;
pub mod modes;
pub mod phi;
pub mod transport;

pub use decay_profile::{japanese_bracket, linear_decay_profile, DecayCurves, RadialData, RadialProfile};
pub use heat::{heat_block_constant, heat_solve, HeatSolution, RegularityReport};
pub use lame::{lame_diagnostics, lame_solve, LameCoefficients, LameDiagnostics, LameOptions, LameSolution, VariableLame};
pub use modes::{
    admissible_rate, expm2, general_mode_matrix, lyapunov, lyapunov_decay_check, lyapunov_derivative,
    lyapunov_dissipation, mode_matrix, mode_propagate, mode_spectrum, LyapunovReport, LyapunovState, ModeMatrix,
    ModeSpectrum, Regime, LYAPUNOV_EQUIVALENCE, LYAPUNOV_RATE,
};
pub use transport::{transport_solve, TransportOptions, TransportReport, TransportSolution, Velocity};
