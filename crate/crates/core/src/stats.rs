//! Chi-square tail quantiles.

use statrs::function::gamma::{gamma_ur, ln_gamma};

/// Survival function `P(χ²_dof > x)`.
pub fn chi2_sf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0)
}

fn chi2_pdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = dof as f64 / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Threshold `λ` with `P(χ²_dof > λ) = alpha`.
///
/// Brackets the root, then alternates safeguarded Newton steps with
/// bisection until the tail probability is within `1e-10` of `alpha`.
///
/// # Panics
/// If `alpha` is outside `(0, 1)` or `dof == 0`.
pub fn chi2_threshold(alpha: f64, dof: usize) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    assert!(dof > 0, "dof must be positive");
    let mut lo = 0.0;
    let mut hi = dof as f64 + 10.0;
    while chi2_sf(hi, dof) > alpha {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let err = chi2_sf(x, dof) - alpha;
        if err.abs() < 1e-10 * alpha.min(1.0) {
            break;
        }
        if err > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // d/dx sf = −pdf
        let pdf = chi2_pdf(x, dof);
        let newton = if pdf > 0.0 { x + err / pdf } else { f64::NAN };
        x = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    x
}
