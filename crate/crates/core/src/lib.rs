//! Parameterized deadlock-freedom and safety proofs for component systems on
//! ring and pipeline topologies, using trap invariants and 1-invariants
//! decided over finite words.

pub mod cli;
pub mod invgen;
pub mod logic;
pub mod petri;
pub mod syntax;
pub mod ws1s_solver;
