//! Bracketing root finders for monotone scalar functions.

/// Solves `f(x) = target` for increasing or decreasing `f` on `[lo, hi]`.
///
/// The answer is clamped to the bracket when `target` lies outside the
/// range of `f` on it.
pub fn invert_monotone<F>(f: F, target: f64, lo: f64, hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == target {
        return lo;
    }
    if f_hi == target {
        return hi;
    }
    let increasing = f_hi >= f_lo;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let below = f(m) < target;
        if below == increasing {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Bisects a sign change of `g` on `[lo, hi]`, given `g(lo)` and `g(hi)` of
/// opposite signs. Returns the final bracket.
pub fn bisect_sign_change<G>(g: G, lo: f64, hi: f64, g_lo: f64, tol: f64) -> (f64, f64)
where
    G: Fn(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let lo_negative = g_lo < 0.0;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm == 0.0 {
            return (m, m);
        }
        if (gm < 0.0) == lo_negative {
            a = m;
        } else {
            b = m;
        }
    }
    (a, b)
}
