//! Desk-scale multiphysics finite element framework.
//!
//! The crate is organized in three layers:
//!
//! - abstract numerical helpers: [`mesh`], [`fem`], [`linalg`], [`timeint`],
//!   [`nonlinear`];
//! - multiphysics coupling: [`coupling`];
//! - file-driven user interface: [`params`], [`io`], and the runnable
//!   [`tutorials`].

pub mod coupling;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod nonlinear;
pub mod params;
pub mod timeint;
pub mod tutorials;
