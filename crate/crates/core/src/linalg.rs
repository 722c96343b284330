//! Small dense-vector helpers over `&[f64]`.

pub type StateVector = Vec<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `b - a`
pub fn sub(b: &[f64], a: &[f64]) -> StateVector {
    b.iter().zip(a).map(|(y, x)| y - x).collect()
}

/// `x + u * v`
pub fn along(x: &[f64], v: &[f64], u: f64) -> StateVector {
    x.iter().zip(v).map(|(xi, vi)| xi + u * vi).collect()
}
