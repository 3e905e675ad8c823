//! Configuration checking, VHDL generation and simulation for parametric
//! massively parallel SIMD systems-on-chip (mppSoC).
//!
//! The pipeline mirrors the design flow of the generator:
//!
//! 1. [`config`] reads a machine description,
//! 2. [`rules`] checks it,
//! 3. [`rewrite`] turns the VHDL template library into a configured
//!    instance,
//! 4. [`sim`] runs data-parallel programs on a model of the configured
//!    machine, using the [`topology`] and [`mpnoc`] network models.

pub mod config;
mod kv;
pub mod mpnoc;
pub mod rewrite;
pub mod rules;
pub mod sim;
pub mod topology;

pub use config::{
    derive_geometry, parse_config, MemoryGeometry, MpNocKind, MppSoCConfig, Neighborhood,
};
pub use mpnoc::{build_network, MpNocMode, MpNocNetwork, RoutingResult};
pub use rewrite::{generate, plan_actions, GenReport, TemplateSource};
pub use rules::{validate, RuleId, ValidationReport};
pub use sim::{reduce_sum, CostModel, ReductionReport, SimMachine, SimProgram, SimReport};
pub use topology::{build_topology, Direction, PeId, TopologyGraph};
