//! Conflict-free STDMA link scheduling under the physical (SINR) interference
//! model.
//!
//! The communication graph's links become vertices of a complete, directed,
//! weighted line graph whose weights encode pairwise interference relative to
//! the SINR threshold. [`scheduler_lgls`] colors that graph greedily with an
//! admission test that guarantees every slot is SINR-feasible;
//! [`scheduler_baseline`] provides a first-fit SINR greedy and an exhaustive
//! optimum for comparison, and [`harness`] runs randomized experiments.

pub mod error;
pub mod harness;
pub mod line_graph;
pub mod radio_model;
pub mod scheduler_baseline;
pub mod scheduler_lgls;
pub mod topology;

pub use error::{Error, Result};
pub use line_graph::{build_line_graph, expand_loads, LineGraph, LoadMap};
pub use radio_model::{sinr_feasible, LinkGeometry, Point, RadioParams, SinrReport};
pub use scheduler_baseline::{gp_schedule, optimal_schedule, GpOrdering};
pub use scheduler_lgls::{
    lgls_schedule, lgls_schedule_with, theorem1_holds, verify_schedule, Algorithm, LglsOptions,
    Schedule,
};
pub use topology::{build_comm_graph, generate_topology, CommGraph, Link, Node};
