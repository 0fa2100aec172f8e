//! Stochastic spatial producer-consumer model: two types on a
//! `d`-dimensional torus, each site consuming the resources produced by its
//! neighbours, together with its mean-field limit, graphical
//! representations, comparison processes and a Monte Carlo harness.

pub mod dynamics;
pub mod error;
pub mod graphical;
pub mod harness;
pub mod io;
pub mod lattice;
pub mod meanfield;
pub mod rng;
pub mod special;

pub use dynamics::{
    coupled_simulate_domination, coupled_simulate_ordered, flip_probability, reduce_params,
    simulate, step, ModelParams, ProducerConsumer, SimClock, SpinRule, Trajectory,
};
pub use error::{Error, Result};
pub use lattice::{Configuration, Lattice, LatticeSpec, Site, Type};
