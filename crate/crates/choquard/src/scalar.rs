//! Bracketed scalar root finding shared by the landscape and fiber modules.

/// Bisection on a bracketing interval, optionally polished by Newton steps.
///
/// `f` must change sign across `[lo, hi]`.  Bisection runs until the interval
/// is below `xtol` relative to its midpoint, then up to 8 Newton iterations
/// refine the root when a derivative is supplied; Newton steps falling
/// outside the current bracket are discarded (the bisection result stands).
pub fn bisect_newton(
    mut lo: f64,
    mut hi: f64,
    f: impl Fn(f64) -> f64,
    df: Option<&dyn Fn(f64) -> f64>,
    xtol: f64,
) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol * mid.abs().max(1e-300) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    if let Some(df) = df {
        for _ in 0..8 {
            let fx = f(x);
            let dfx = df(x);
            if dfx == 0.0 {
                break;
            }
            let next = x - fx / dfx;
            if !(lo..=hi).contains(&next) {
                break;
            }
            if (next - x).abs() <= 0.25 * xtol * x.abs().max(1e-300) {
                x = next;
                break;
            }
            x = next;
        }
    }
    Some(x)
}

/// Expands `hi` geometrically until `f` changes sign relative to `f(lo)`,
/// returning the bracket. Gives up after `max_doublings`.
pub fn grow_bracket_up(
    lo: f64,
    mut hi: f64,
    f: impl Fn(f64) -> f64,
    max_doublings: u32,
) -> Option<(f64, f64)> {
    let slo = f(lo).signum();
    for _ in 0..max_doublings {
        if f(hi).signum() != slo {
            return Some((lo, hi));
        }
        hi *= 2.0;
    }
    None
}

/// Shrinks `lo` geometrically toward zero until `f` changes sign relative to
/// `f(hi)`.
pub fn grow_bracket_down(
    mut lo: f64,
    hi: f64,
    f: impl Fn(f64) -> f64,
    max_halvings: u32,
) -> Option<(f64, f64)> {
    let shi = f(hi).signum();
    for _ in 0..max_halvings {
        if f(lo).signum() != shi {
            return Some((lo, hi));
        }
        lo *= 0.5;
    }
    None
}
