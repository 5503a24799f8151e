//! Reference implementations kept deliberately naive: quadratic pair counts,
//! adaptive quadrature, an eager graph over every node of the approval tree
//! and a brute-force closed test. They share no code with the production
//! crates and exist only to be compared against them.

pub mod auc;
pub mod closed;
pub mod eager;
pub mod normal;
