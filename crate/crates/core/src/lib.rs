//! Overshoot and Gerber–Shiu functionals of spectrally negative Lévy processes.
//!
//! The library evaluates fluctuation identities written in terms of the
//! scale functions `W^(q)` and `Z^(q)`, and ships a path simulator that serves
//! as an independent check of every identity.

pub mod cli;
pub mod config;
pub mod error;
pub mod expr;
pub mod generator;
pub mod gerber_shiu;
pub mod levy_model;
pub mod montecarlo;
pub mod numerics;
pub mod reflected_refracted;
pub mod scale;

pub use error::{Error, Result};
