//! Scalar root finding and extremum search.

use crate::scalar::Scalar;

/// Bisection on `[a, b]` where `f(a)` and `f(b)` have opposite signs (or one
/// vanishes). Stops when the bracket is narrower than `tol`. Returns `None`
/// if the input is not a bracket.
pub fn bisect<T: Scalar, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> Option<T> {
    let (mut a, mut b) = (a, b);
    let (mut fa, fb) = (f(a), f(b));
    if fa == T::zero() {
        return Some(a);
    }
    if fb == T::zero() {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || (fa > T::zero()) == (fb > T::zero()) {
        return None;
    }
    for _ in 0..400 {
        let m = a + (b - a) / T::lit(2.0);
        if (b - a).abs() <= tol || m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == T::zero() {
            return Some(m);
        }
        if (fm > T::zero()) == (fa > T::zero()) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(a + (b - a) / T::lit(2.0))
}

/// Bisection followed by Newton polishing with derivative `df`; the Newton
/// iterate is kept only if it stays inside the final bracket.
pub fn bisect_newton<T: Scalar, F: Fn(T) -> T, D: Fn(T) -> T>(
    f: F,
    df: D,
    a: T,
    b: T,
    tol: T,
) -> Option<T> {
    let mut x = bisect(&f, a, b, tol)?;
    let (lo, hi) = (a.min(b), a.max(b));
    for _ in 0..3 {
        let d = df(x);
        if d == T::zero() || !d.is_finite() {
            break;
        }
        let xn = x - f(x) / d;
        if !(xn >= lo && xn <= hi) || f(xn).abs() > f(x).abs() {
            break;
        }
        x = xn;
    }
    Some(x)
}

/// Locates all sign changes of `f` on a uniform grid of `n` intervals over
/// `[a, b]` and refines each by bisection.
pub fn all_roots<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, n: usize, tol: T) -> Vec<T> {
    let mut out = Vec::new();
    let h = (b - a) / T::of_usize(n);
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 1..=n {
        let x1 = if i == n { b } else { a + h * T::of_usize(i) };
        let f1 = f(x1);
        if f0 == T::zero() {
            if out.last() != Some(&x0) {
                out.push(x0);
            }
        } else if f1 != T::zero()
            && (f0 > T::zero()) != (f1 > T::zero())
            && f0.is_finite()
            && f1.is_finite()
        {
            if let Some(r) = bisect(&f, x0, x1, tol) {
                out.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == T::zero() && out.last() != Some(&x0) {
        out.push(x0);
    }
    out
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    let g = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / T::lit(2.0)
}
