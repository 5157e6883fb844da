//! Log-likelihood weights and tie handling shared by objectives and decoders.

/// Relative magnitude below which a log-likelihood sum counts as an exact tie.
///
/// Sums of the same weights accumulated in different orders differ by a few
/// ulps; anything within this fraction of the total absolute weight is zero.
pub const TIE_RELATIVE_TOLERANCE: f64 = 1e-9;

/// `ln((1 - p) / p)`, the weight of one answer from a worker with error
/// probability `p`. Infinite for `p = 0`.
pub fn log_odds_weight(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

/// Returns `score`, or exactly zero when it is indistinguishable from zero
/// relative to `scale` (the sum of absolute contributions).
pub fn settle(score: f64, scale: f64) -> f64 {
    if score.abs() <= TIE_RELATIVE_TOLERANCE * scale {
        0.0
    } else {
        score
    }
}
