//! Kidney-exchange clearing under uncertainty.
//!
//! * [`instance`]: compatibility graphs, JSON I/O, generation, cycles.
//! * [`milp`]: a small mixed-integer programming layer with a built-in
//!   simplex / branch-and-bound engine.
//! * [`matchopt`]: deterministic PICEF and PI-TSP clearing.
//! * [`robust_weight`]: clearing under budgeted edge-weight uncertainty.
//! * [`robust_exist`]: clearing under the Γ-failures edge existence model.
//! * [`fairness`]: weighted prioritization of highly-sensitized patients.
//! * [`experiments`]: realization sampling and policy comparison.

pub mod experiments;
pub mod fairness;
pub mod instance;
pub mod matchopt;
pub mod milp;
pub mod robust_exist;
pub mod robust_weight;

pub use instance::{CompatibilityGraph, Cycle, Edge, VertexRef};
pub use matchopt::{FormulationConfig, Matching};
