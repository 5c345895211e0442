use thiserror::Error;

use crate::model::{Agent, House};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("instances need at least 3 agents, got {0}")]
    TooFewAgents(usize),

    #[error("unknown house index {0}")]
    UnknownHouse(usize),

    #[error("unknown agent index {0}")]
    UnknownAgent(usize),

    #[error("{what} is not a permutation of 0..{n}")]
    NotAPermutation { what: &'static str, n: usize },

    #[error("expected {expected} entries, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("duplicate identifier {0:?}")]
    DuplicateName(String),

    #[error("agent {0} appears more than once in the cycle")]
    RepeatedAgent(Agent),

    #[error("a cycle needs at least 2 agents, got {0}")]
    CycleTooShort(usize),

    #[error("{op} is limited to n <= {limit}, got n = {n}")]
    TooLarge {
        op: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("check budget exceeded: {needed} checks needed, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("the dominance precondition does not hold")]
    NotDominating,

    #[error("profile is not {0}")]
    WrongDomain(&'static str),

    #[error("invalid improvement witness: {0}")]
    InvalidWitness(&'static str),

    #[error("preference is already {0}")]
    AlreadyInDomain(&'static str),

    #[error("no single-peaked preference satisfies the constraints")]
    Unsatisfiable,

    #[error("explicit preference list for agent {0} is empty")]
    EmptyDomain(Agent),

    #[error("designated roles must be three distinct agents below {0}")]
    InvalidRoles(usize),

    #[error("house {0} has no owner in the allocation")]
    Unassigned(House),

    #[error("internal check failed: {0}")]
    CheckFailed(String),
}
