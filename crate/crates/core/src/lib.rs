//! Exact construction of the regular-orbit representations `delta_{beta,theta}`
//! of `Sp_2n(Z/p^r)` and machine checks of their finite-level properties.

pub mod error;
pub mod exactnum;
pub mod ringkit;
pub mod sympcore;

pub use error::{Error, Result};
pub mod regular_orbit;
pub mod repbuild;
pub mod heiswel;
pub mod whittaker;
pub mod cli;
