//! Inexact proximal-point penalty method for non-convex optimization with
//! non-convex functional constraints.

pub mod adapapg;
pub mod cli;
pub mod data_io;
pub mod error;
pub mod ippp;
pub mod model;
pub mod problems;
pub mod stationarity;

pub use error::{Error, Result};
