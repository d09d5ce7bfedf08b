//! Matrix-valued rational functions in partial-fraction form, their local
//! Laurent expansions, and the tuple-level operations built on them:
//! the split into regular and singular parts and the residue pairing.

mod laurent;
mod rational;
mod tuple;

pub use laurent::{LaurentSeries, Point, binom};
pub use rational::{Pole, RationalMatrix};
pub use tuple::{
    LocalTuple, PoleConfig, check_equivariance, origin_pole, pair, probe_points, require_equivariant, singular_part,
    split, split_tuple,
};

/// Poles closer than this are identified (or rejected as colliding).
pub const POLE_EPS: f64 = 1e-12;
/// Highest supported pole order.
pub const MAX_POLE_ORDER: usize = 8;
