//! Numerical tolerances shared across the crate.

/// Orthonormality and subspace-membership residuals.
pub const MEMBERSHIP: f64 = 1e-10;

/// Relative tolerance for sampled property checks on measures.
pub const PROPERTY_REL: f64 = 1e-9;

/// Half-width of the band around zero in which an NSP deficit is reported as
/// `boundary` instead of a strict verdict.
pub const STRICTNESS: f64 = 1e-9;

/// Slack allowed on a perturbed-NSP violation certificate.
pub const VIOLATION_SLACK: f64 = 1e-12;

/// Band on ERC margins inside which Monte Carlo trials are counted as boundary.
pub const MC_BOUNDARY_BAND: f64 = 1e-6;

/// Feasibility slack on solver outputs.
pub const FEASIBILITY: f64 = 1e-9;

/// Shrink factor applied to the noisy constraint radius.
pub const NOISY_SHRINK: f64 = 1e-9;

/// Magnitude below which an entry is treated as an exact zero by descent.
pub const KINK: f64 = 1e-12;

/// Smallest singular value (relative to the largest) accepted as full rank.
pub const RANK_REL: f64 = 1e-12;

/// Largest support family enumerated exhaustively.
pub const SUPPORT_CAP: u64 = 100_000;

/// Log-spaced scale grid used for non-homogeneous measures.
pub const SCALE_MIN: f64 = 1e-6;
pub const SCALE_MAX: f64 = 1e6;
pub const SCALE_POINTS: usize = 61;

/// Perturbation radii `‖n‖ < d‖z‖` are searched on the closed ball of radius
/// `d‖z‖(1 − OPEN_BALL_SHRINK)`.
pub const OPEN_BALL_SHRINK: f64 = 1e-9;

/// Relative slack on region-map excesses `F(ax+by) − F(x) − F(y)`.
pub const REGION_REL: f64 = 1e-12;
