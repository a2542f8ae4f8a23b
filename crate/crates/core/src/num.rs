//! Small deterministic numeric primitives.

/// Integer power by binary exponentiation. Multiplication order is fixed, so
/// results are reproducible across runs and identical in the parallel and
/// sequential builds. Sign is preserved for odd exponents; `ipow(0.0, 0) = 1`.
pub(crate) fn ipow(x: f64, mut n: u32) -> f64 {
    let mut base = x;
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        n >>= 1;
        if n > 0 {
            base *= base;
        }
    }
    acc
}

/// ln(n!) by direct summation of ln(k). Exact for n <= 1 and accurate to a
/// few ulps for the index ranges that occur in feature expansions.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    let mut acc = 0.0;
    for k in 2..=n.max(1) {
        acc += (k as f64).ln();
    }
    acc
}
