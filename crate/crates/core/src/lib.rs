//! Inverse problem of the calculus of variations for systems of
//! second-order ODEs: geometric invariants, the differential-ideal
//! procedure over the eigen-coframe of the Jacobi endomorphism, and a
//! numeric Helmholtz-condition oracle.

#![allow(clippy::needless_range_loop)]

pub mod symexpr;
pub mod geometry;
pub mod linalg;
pub mod eigen;
pub mod taucalc;
pub mod forms;
pub mod classify;
pub mod io;
pub mod verify;
pub mod cli;
