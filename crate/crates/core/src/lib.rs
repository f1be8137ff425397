//! Forward-search planner for PDDL+ over a discretized time line.
//!
//! Continuous processes are integrated with a fixed time step, events fire as
//! soon as they apply, and a search over the resulting finite transition system
//! looks for plans. See [`load`] and [`search::Planner`] for the entry points.

pub mod attach;
pub mod bench;
pub mod cli;
pub mod corpus;
pub mod expr;
pub mod ground;
pub mod pddl;
pub mod ptree;
pub mod search;
pub mod state;

use thiserror::Error;

use ground::{GroundError, GroundOptions, GroundedProblem};
use pddl::ParseError;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("domain: {0}")]
    Domain(ParseError),
    #[error("problem: {0}")]
    Problem(ParseError),
    #[error(transparent)]
    Ground(#[from] GroundError),
}

/// Parses and grounds a domain/problem pair with the operators in `opts.registry`.
pub fn load(domain: &str, problem: &str, opts: &GroundOptions) -> Result<GroundedProblem, LoadError> {
    let tokens = pddl::tokenize(domain).map_err(LoadError::Domain)?;
    let d = pddl::parse_domain_with(&tokens, &opts.registry).map_err(LoadError::Domain)?;
    let tokens = pddl::tokenize(problem).map_err(LoadError::Problem)?;
    let p = pddl::parse_problem_with(&tokens, &d, &opts.registry).map_err(LoadError::Problem)?;
    Ok(ground::ground(&d, &p, opts)?)
}
