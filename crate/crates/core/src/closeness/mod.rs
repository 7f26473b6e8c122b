//! Grid-exact `(ε, δ)`-closeness, segmentation and regret certificates.
//!
//! Quantities are exact over the grid; over the continuum the grid `δ*` is a
//! lower bound.

mod certificate;
mod grid;
mod measure;
mod segment;

pub use certificate::{
    compute_kbar, cumulative_capped, range_bound, regret_bound_certificate, tv_regret_reference,
    BoundCertificate, ErrorProfile,
};
pub use grid::{Grid, GridFunction};
pub use measure::{
    closeness_from_sufficient, exhaustive_t_grid, is_close, min_delta, quasi_stationarity_delta,
    sublevel_inclusion_holds, ClosenessParams, SufficientCondition,
};
pub use segment::{
    path_variation, segment_greedy_lipschitz, segment_greedy_strongly_convex, sup_norm_matrix,
    tv_to_j_bound, tv_to_sqrt_len_bound, SegmentConstants, Segmentation,
};
