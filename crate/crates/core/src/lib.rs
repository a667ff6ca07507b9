//! Vulnerability analysis of power grids by bilevel attacker-defender
//! network interdiction.
//!
//! The attacker removes up to a budget of branches; the operator answers with
//! a load-shedding-minimizing optimal power flow, either the DC approximation
//! or a linearized AC model. The single-level duality reformulation is solved
//! with an in-crate simplex and branch-and-bound, critical attack vectors are
//! enumerated with exclusion cuts, and the resulting lists are compared across
//! formulations and scored across load cases.

pub mod analysis;
pub mod cli;
pub mod grid;
pub mod interdiction;
pub mod lp;
pub mod milp;
pub mod opf;
