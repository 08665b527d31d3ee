//! Nitsche finite element discretization of Tresca frictional contact in planar linear
//! elasticity, with a residual a posteriori estimator and adaptive refinement.

pub mod mesh;
pub mod sparse;
pub mod space;
pub mod elasticity;
pub mod contact;
pub mod estimator;
pub mod adapt;
