//! Phasor-domain simulator and analysis toolkit for the dual synchronous
//! generator (DSG): a grid-forming converter controlled as an inertial
//! current source, with a reactive-power-activated braking loop for
//! transient stability.
//!
//! Modules, bottom-up:
//!
//! - [`circuit`]: converter/infinite-bus and converter/load phasor algebra.
//! - [`control`]: synchronization, braking, current-magnitude and secondary loops.
//! - [`stability`]: power-angle curves, revised power, equilibria, pole-slip detection.
//! - [`sim`]: fixed-step RK4 engine with timed events.
//! - [`config`], [`csv`], [`chart`]: scenario files, trajectory export, SVG charts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod circuit;
pub mod config;
pub mod control;
pub mod csv;
pub mod error;
pub mod scenarios;
pub mod sim;
pub mod stability;

pub use error::{DsgError, Result};
