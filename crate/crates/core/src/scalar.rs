use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type used for times (seconds) and scores.
pub trait Scalar:
    Float
    + FromPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    /// Converts a count into this scalar type.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + Serialize
        + DeserializeOwned
        + 'static
{
}

/// Min-max normalizes `values` into `[0, 1]`. A constant (or empty) input
/// maps to all zeros.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn min_max<T: Scalar>(values: &[T]) -> Vec<T> {
    let (lo, hi) = values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    if values.is_empty() || !(span > T::zero()) {
        return vec![T::zero(); values.len()];
    }
    values.iter().map(|&v| (v - lo) / span).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_max_degenerate_is_zero() {
        assert_eq!(min_max(&[2.0f64, 2.0, 2.0]), vec![0.0; 3]);
        assert!(min_max::<f32>(&[]).is_empty());
    }

    #[test]
    fn min_max_spans_unit_interval() {
        assert_eq!(min_max(&[0.0f32, 3.0, 1.5]), vec![0.0, 1.0, 0.5]);
    }
}
