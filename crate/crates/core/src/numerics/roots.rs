use super::NumericsError;

/// A sign-changing scalar equation on a closed bracket.
#[derive(Debug, Clone)]
pub struct RootProblem<F> {
    pub objective: F,
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the argument.
    pub tol: f64,
}

impl<F: Fn(f64) -> f64> RootProblem<F> {
    pub fn new(objective: F, lo: f64, hi: f64, tol: f64) -> Self {
        Self { objective, lo, hi, tol }
    }
}

/// Bisection. Returns the midpoint of a final bracket no wider than `tol`
/// (or an exact zero hit on the way).
pub fn find_root_bracketed<F: Fn(f64) -> f64>(problem: &RootProblem<F>) -> Result<f64, NumericsError> {
    let RootProblem { objective: f, lo, hi, tol } = problem;
    let (mut lo, mut hi) = (*lo, *hi);
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }
    if !(*tol > 0.0) {
        return Err(NumericsError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(NumericsError::BracketInvalid { lo, hi, f_lo, f_hi });
    }
    // 2000 halvings exhaust any f64 bracket
    for _ in 0..2000 {
        if hi - lo <= *tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + 0.5 * (hi - lo))
}

/// Golden-section search for the minimum of a convex function on `[lo, hi]`.
///
/// Returns `(argmin, min_value)`; the endpoints are compared at the end so a
/// boundary minimum is reported exactly.
pub fn minimize_convex_1d<F: Fn(f64) -> f64>(
    objective: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<(f64, f64), NumericsError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(NumericsError::InvalidInterval { lo, hi });
    }
    if !(tol > 0.0) {
        return Err(NumericsError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = objective(c);
    let mut fd = objective(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
        if c >= d {
            break;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, objective(mid));
    for x in [lo, hi] {
        let fx = objective(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}
