//! Bracketed scalar root finding.

/// Bisection on a sign-changing bracket; stops when the bracket width is
/// below `xtol` or after 200 halvings.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Newton's method kept inside a bracket: falls back to bisection whenever
/// the Newton step leaves the current bracket. `fd` returns `(f, f')`.
pub fn safeguarded_newton<F: FnMut(f64) -> (f64, f64)>(
    mut fd: F,
    mut a: f64,
    mut b: f64,
    x0: f64,
    xtol: f64,
) -> Option<f64> {
    let (fa, _) = fd(a);
    let (fb, _) = fd(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if (fa > 0.0) == (fb > 0.0) {
        return None;
    }
    let a_positive = fa > 0.0;
    let mut x = if x0 > a.min(b) && x0 < a.max(b) { x0 } else { 0.5 * (a + b) };
    for _ in 0..200 {
        let (fx, dfx) = fd(x);
        if fx == 0.0 {
            return Some(x);
        }
        if (fx > 0.0) == a_positive {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let (lo, hi) = (a.min(b), a.max(b));
        let next = if dfx != 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= xtol || (hi - lo) <= xtol {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}
