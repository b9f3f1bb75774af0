//! Flow maps, coordinate changes and the Lagrangian fixed-point solver.

pub mod algebra;
pub mod coords;
pub mod flow;
pub mod rhs;
pub mod solve;

pub use algebra::{jacobian_adjugate, Mat};
pub use coords::{change_coords, div_identity_defect, inverse_points, piola_defect, CoordChange, PointEvaluator};
pub use flow::{flow_bounds, flow_map, flow_stability, FlowBounds, FlowMap, FlowOptions, FlowSnapshot};
pub use rhs::{lagrangian_rhs_terms, LagrangianTerms};
pub use solve::{ep_norm, lagrangian_fixed_point_solve, LagState, LagrangianOptions, LagrangianReport, MASS_TOLERANCE};
