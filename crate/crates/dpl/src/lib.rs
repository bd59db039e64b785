//! Model checking, definability experiments and proof checking for a
//! dynamic probability logic over finite Markov processes.

pub mod formula;
pub mod process;
pub mod semantics;
pub mod stochastic;
pub mod definability;
pub mod proofs;
