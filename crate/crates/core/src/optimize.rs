//! One-dimensional minimization (Brent) and root polishing.

use crate::error::{Error, Result};

const GOLDEN: f64 = 1.618_033_988_749_895;
const CGOLD: f64 = 0.381_966_011_250_105;

/// Finds `a < b < c` (or reversed) with `f(b) <= f(a)` and `f(b) <= f(c)`,
/// walking downhill from `x0` with geometrically growing steps.
pub fn bracket_minimum<F: Fn(f64) -> f64>(f: &F, x0: f64, step: f64, max_iter: usize) -> Option<(f64, f64, f64)> {
    let (mut a, mut b) = (x0, x0 + step);
    let (mut fa, mut fb) = (f(a), f(b));
    if fb > fa {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = b + GOLDEN * (b - a);
    let mut fc = f(c);
    for _ in 0..max_iter {
        if fb <= fc {
            return Some((a, b, c));
        }
        a = b;
        b = c;
        fb = fc;
        c = b + GOLDEN * (b - a);
        fc = f(c);
        if !c.is_finite() {
            return None;
        }
    }
    None
}

/// Brent's minimizer on a bracketing triple `(a, b, c)`.
///
/// Stops when the bracket shrinks below `tol·(1 + |x|)`. Returns the
/// minimizer and the function value there.
pub fn brent_minimize<F: Fn(f64) -> f64>(
    f: &F,
    bracket: (f64, f64, f64),
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let (ax, bx, cx) = bracket;
    let mut a = ax.min(cx);
    let mut b = ax.max(cx);
    let (mut x, mut w, mut v) = (bx, bx, bx);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = tol * (1.0 + x.abs());
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Ok((x, fx));
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Err(Error::Optimizer { iterations: max_iter, best: x })
}

/// Refines a stationary point of a smooth objective by bisection on its
/// derivative `score`, starting from an approximate location `x0`.
///
/// The sign change is searched in `x0 ± h·2^k`. Falls back to `x0` when no
/// sign change is found (flat score).
pub fn polish_root<G: Fn(f64) -> f64>(score: &G, x0: f64, h: f64) -> f64 {
    let s0 = score(x0);
    if s0 == 0.0 {
        return x0;
    }
    let mut step = h;
    let (mut lo, mut hi) = (x0, x0);
    let mut found = false;
    for _ in 0..40 {
        let probe = if s0 > 0.0 { x0 + step } else { x0 - step };
        if score(probe).signum() != s0.signum() {
            if s0 > 0.0 {
                hi = probe;
            } else {
                lo = probe;
            }
            found = true;
            break;
        }
        step *= 2.0;
    }
    if !found {
        return x0;
    }
    // score(lo) > 0 > score(hi) orientation for a maximum of the objective
    let s_lo_positive = score(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let sm = score(mid);
        if sm == 0.0 {
            return mid;
        }
        if (sm > 0.0) == s_lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum() {
        let f = |x: f64| (x - 2.5) * (x - 2.5) + 1.0;
        let br = bracket_minimum(&f, 0.0, 1.0, 50).unwrap();
        let (x, fx) = brent_minimize(&f, br, 1e-10, 200).unwrap();
        assert!((x - 2.5).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bracket_downhill_to_the_left() {
        let f = |x: f64| (x + 30.0).powi(2);
        let (a, b, c) = bracket_minimum(&f, 0.0, 0.5, 100).unwrap();
        assert!(f(b) <= f(a) && f(b) <= f(c));
        assert!((a.min(c)..=a.max(c)).contains(&-30.0));
    }

    #[test]
    fn unbounded_below_fails_to_bracket() {
        let f = |x: f64| -x;
        assert!(bracket_minimum(&f, 0.0, 1.0, 30).is_none());
    }

    #[test]
    fn polish_hits_machine_precision() {
        // score of -(x - 1/3)^2 / 2
        let score = |x: f64| 1.0 / 3.0 - x;
        let r = polish_root(&score, 0.3333, 1e-3);
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
    }
}
