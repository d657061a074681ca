//! Small dense-vector helpers used across the solvers.

use crate::scalar::Scalar;

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

pub fn dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<F>()
        .sqrt()
}

pub fn all_finite<F: Scalar>(a: &[F]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// `out = a + s * b`
pub fn add_scaled<F: Scalar>(a: &[F], s: F, b: &[F], out: &mut [F]) {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), out.len());
    for i in 0..a.len() {
        out[i] = a[i] + s * b[i];
    }
}
