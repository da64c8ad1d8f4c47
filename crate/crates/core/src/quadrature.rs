//! Breakpoint-aware composite Simpson quadrature.
//!
//! The interval is split at every breakpoint that falls strictly inside it,
//! and each piece is integrated with composite Simpson at a step no larger
//! than `min(1e-3 * max(1, hi - lo), 1e-2)`. Piece endpoints are evaluated one ulp
//! inside the piece so that a jump located exactly at a breakpoint never
//! leaks into the neighbouring piece.

/// Relative step cap: step <= STEP_FRACTION * max(1, interval length).
pub const STEP_FRACTION: f64 = 1e-3;

/// Absolute step cap, which only binds on intervals longer than 10.
pub const MAX_STEP: f64 = 1e-2;

/// Integrates `f` over `[lo, hi]`, splitting at `breakpoints` (sorted,
/// in the same coordinate as `lo`/`hi`).
pub fn integrate<F>(mut f: F, lo: f64, hi: f64, breakpoints: &[f64]) -> f64
where
    F: FnMut(f64) -> f64,
{
    if hi <= lo {
        return 0.0;
    }
    let max_step = (STEP_FRACTION * (hi - lo).max(1.0)).min(MAX_STEP);
    let start = breakpoints.partition_point(|&b| b <= lo);
    let mut total = 0.0;
    let mut a = lo;
    for &b in breakpoints[start..].iter().take_while(|&&b| b < hi) {
        total += simpson_piece(&mut f, a, b, max_step);
        a = b;
    }
    total + simpson_piece(&mut f, a, hi, max_step)
}

fn simpson_piece<F>(f: &mut F, a: f64, b: f64, max_step: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let len = b - a;
    if len <= 0.0 {
        return 0.0;
    }
    let mut m = (len / max_step).ceil() as usize;
    m = m.max(2);
    if m % 2 == 1 {
        m += 1;
    }
    let h = len / m as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..m {
        let v = f(a + h * i as f64);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    let ends = f(a.next_up().min(b)) + f(b.next_down().max(a));
    h / 3.0 * (ends + 4.0 * odd + 2.0 * even)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_of_degree_three_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, &[]);
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn step_function_with_declared_breakpoint() {
        let f = |x: f64| if x < 1.0 { 0.3 } else { 0.8 };
        let v = integrate(f, 0.25, 2.5, &[1.0]);
        assert!((v - (0.3 * 0.75 + 0.8 * 1.5)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn breakpoints_outside_the_interval_are_ignored() {
        let v = integrate(|_| 2.0, 1.0, 3.0, &[0.5, 1.0, 3.0, 7.0]);
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|_| 1.0, 2.0, 2.0, &[]), 0.0);
    }
}
