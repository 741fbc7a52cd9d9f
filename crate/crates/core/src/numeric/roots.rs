//! Safeguarded Newton iteration for monotone scalar equations.

/// Solves `f(x) = 0` for a nonincreasing `f` on `[lo, inf)` with
/// `f(lo) >= 0`, using Newton steps from `df` and bisection whenever a step
/// leaves the current bracket.
pub fn solve_decreasing<F, D>(f: F, df: D, lo: f64, guess: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let mut lo = lo;
    let mut hi = guess.max(lo + 1.0);
    let mut grow = 0;
    while f(hi) > 0.0 {
        lo = hi;
        hi = 2.0 * hi + 1.0;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return hi;
        }
    }
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = df(x);
        let mut next = if slope < 0.0 && slope.is_finite() { x - fx / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            return next;
        }
        x = next;
    }
    x
}
