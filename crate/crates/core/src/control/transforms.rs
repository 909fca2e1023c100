//! Amplitude-invariant Clarke and Park transforms.

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;
const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// abc → αβ. Zero-sequence content is discarded.
#[inline]
pub fn clarke(a: f64, b: f64, c: f64) -> (f64, f64) {
    let alpha = (2.0 / 3.0) * (a - 0.5 * b - 0.5 * c);
    let beta = INV_SQRT3 * (b - c);
    (alpha, beta)
}

/// αβ → abc, producing a zero-sum triple.
#[inline]
pub fn inverse_clarke(alpha: f64, beta: f64) -> (f64, f64, f64) {
    let a = alpha;
    let b = -0.5 * alpha + SQRT3_2 * beta;
    let c = -0.5 * alpha - SQRT3_2 * beta;
    (a, b, c)
}

/// αβ → dq for a frame rotated by `theta`.
#[inline]
pub fn park(alpha: f64, beta: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (alpha * c + beta * s, -alpha * s + beta * c)
}

#[inline]
pub fn inverse_park(d: f64, q: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (d * c - q * s, d * s + q * c)
}
