//! Statistics of extracted sets: box counts, hitting probabilities, the
//! Minkowski-content measure, radial content functionals and energy integrals.

mod boxcount;
mod content;
mod energy;
mod hitting;

pub use boxcount::{
    box_count, box_count_cells, dyadic_scales, BoxCountResult, COARSEST_SCALE, DROPPED_FINE_SCALES, FINEST_SPACINGS,
    MIN_FIT_COUNT,
};
pub use content::{content_functional, minkowski_density, minkowski_measure, richardson, Profile, RadiusField};
pub use energy::{coarsen, energy_integral};
pub use hitting::{
    hitting_exponent, one_point_probability, two_point_probability, OnePointRow, RadiusOutcome, TwoPointResult,
};
