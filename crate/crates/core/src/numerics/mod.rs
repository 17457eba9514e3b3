//! Self-contained numerical kernels: quadrature, ODE integration, root
//! finding and sparse linear algebra.

pub mod ode;
pub mod quadrature;
pub mod roots;
pub mod sparse;
