//! Computable pieces of the growth theory of closed Reeb orbits on cotangent
//! bundles: Sullivan models and loop-space Betti numbers, growth-rate
//! estimators, Maslov-type indices, homogeneous Hamiltonian flows, discrete
//! loop functionals and the broken-geodesic cell complex.

pub mod betti;
pub mod exact;
pub mod gromov;
pub mod growth;
pub mod hamflow;
pub mod loopmodel;
pub mod loops;
pub mod maslov;
pub mod qdga;
