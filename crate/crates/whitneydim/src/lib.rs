//! Whitney decompositions, exact distance fields, and fractal dimension
//! estimators for compact sets represented as finite unions of rational
//! boxes in the unit cube.
//!
//! The crate is organized around one pipeline:
//!
//! 1. build or load a set ([`setgen`]),
//! 2. decompose its complement into Whitney cubes ([`whitney`]) or sample an
//!    exact distance field on a dyadic grid ([`field`]),
//! 3. estimate dimensions from cube/box counts ([`dimension`]),
//! 4. extract boundary geometry of `r`-neighborhoods ([`boundary`]),
//! 5. run quantitative law checks tying all of the above together
//!    ([`verify`], [`report`]).
//!
//! Everything that decides a yes/no question (cube selection, containment,
//! packing separation) is computed in exact integer or rational arithmetic;
//! floating point appears only in reported values and fitted slopes.

pub mod algebraic;
pub mod boundary;
pub mod dimension;
pub mod error;
pub mod field;
pub mod geom;
pub mod rational;
pub mod report;
pub mod setgen;
pub mod verify;
pub mod whitney;

pub use error::{Error, Result};
pub use geom::{Ball, BoxSet, DyadicCube};
