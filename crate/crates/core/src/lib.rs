//! Verified-style logic circuits in Conway's Game of Life.

pub mod life;
pub mod io;
pub mod symbolic;
pub mod circuit;
pub mod values;
pub mod floodfill;
pub mod mega;
pub mod checks;
