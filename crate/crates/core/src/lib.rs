//! Geometry of an Alexander-horned-sphere style labyrinth in the unit ball.

pub mod complex;
pub mod index;
pub mod query;
pub mod scaffold;
pub mod verify;
pub mod mesh;
pub mod cmc;
pub mod io;
pub mod error;
pub mod geom;

pub use error::{Error, Result};
