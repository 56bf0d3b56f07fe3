//! Solution concepts for the stage game.

mod correlated;
mod dominance;
mod grid_search;
mod logit;
mod stackelberg;

pub use correlated::*;
pub use dominance::*;
pub use grid_search::*;
pub use logit::*;
pub use stackelberg::*;
