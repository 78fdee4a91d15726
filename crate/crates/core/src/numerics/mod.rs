//! Small numerical building blocks shared by the physics modules.

pub mod fit;
pub mod interp;
pub mod ode;
pub mod quadrature;
