pub mod config;
pub mod expr;
pub mod geometry;
pub mod monotone;
pub mod ode;
pub mod orbits;
pub mod pipeline;
pub mod quad;
pub mod report;
pub mod roots;
pub mod switching;

/// A point of the plane.
pub type Point = [f64; 2];
