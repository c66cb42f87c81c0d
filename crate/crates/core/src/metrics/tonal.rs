use crate::scalar::Scalar;

use super::MetricsError;

/// Radii of the fifths, minor-thirds and major-thirds circles.
pub const RADII: [f64; 3] = [1.0, 1.0, 0.5];

/// Six-dimensional tonal-space point of a pitch-class profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TonalCentroid<T = f64>(pub [T; 6]);

impl<T: Scalar> TonalCentroid<T> {
    pub fn distance(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|&a| a * a).sum::<T>().sqrt()
    }
}

/// Projects an L1-normalized profile onto the three circles (angles
/// `7π/6`, `3π/2`, `2π/3` per semitone).
pub fn tonal_centroid<T: Scalar>(pcp: &[T; 12]) -> Result<TonalCentroid<T>, MetricsError> {
    if pcp.iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return Err(MetricsError::BadProfile);
    }
    let total: T = pcp.iter().copied().sum();
    if total <= T::zero() {
        return Err(MetricsError::EmptyProfile);
    }
    let pi = T::PI();
    let steps = [
        pi * T::of(7.0) / T::of(6.0),
        pi * T::of(3.0) / T::of(2.0),
        pi * T::of(2.0) / T::of(3.0),
    ];
    let mut out = [T::zero(); 6];
    for (l, &c) in pcp.iter().enumerate() {
        if c == T::zero() {
            continue;
        }
        let w = c / total;
        for (k, (&step, &r)) in steps.iter().zip(&RADII).enumerate() {
            let angle = T::of(l as f64) * step;
            out[2 * k] += w * T::of(r) * angle.sin();
            out[2 * k + 1] += w * T::of(r) * angle.cos();
        }
    }
    Ok(TonalCentroid(out))
}

/// Distance between the centroids of two profiles.
pub fn tonal_distance(a: &[f64; 12], b: &[f64; 12]) -> Result<f64, MetricsError> {
    Ok(tonal_centroid(a)?.distance(&tonal_centroid(b)?))
}
