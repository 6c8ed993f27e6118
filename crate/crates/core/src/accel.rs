//! Aitken Δ² acceleration for slowly converging sequences.

/// One Aitken Δ² step on three consecutive terms.
///
/// Returns `None` when the second difference is below `1e-14` of the
/// sequence scale; the caller should fall back to the last term.
pub fn aitken(s0: f64, s1: f64, s2: f64) -> Option<f64> {
    let den = s2 - 2.0 * s1 + s0;
    let scale = libm::fmax(libm::fmax(libm::fabs(s0), libm::fabs(s1)), libm::fabs(s2));
    if !(libm::fabs(den) > 1e-14 * scale) {
        return None;
    }
    let d = s2 - s1;
    let v = s2 - d * d / den;
    v.is_finite().then_some(v)
}

/// Extrapolated limit of the last three terms, or the last term.
pub fn tail_limit(seq: &[f64]) -> Option<f64> {
    match seq {
        [] => None,
        [.., a, b, c] => Some(aitken(*a, *b, *c).unwrap_or(*c)),
        [.., last] => Some(*last),
    }
}
