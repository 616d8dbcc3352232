//! Numerical verification of generalized m-quasi-Einstein structures.
//!
//! The crate builds model structures on spheres, Euclidean space and
//! hyperbolic space, evaluates every curvature quantity through truncated
//! Taylor jets, and checks pointwise identities and integral formulae for
//! `Ric + ∇²f − (1/m) df⊗df = λ g`.

pub mod geometry;
pub mod jets;
pub mod models;
pub mod qem;
pub mod identities;
pub mod quadrature;
