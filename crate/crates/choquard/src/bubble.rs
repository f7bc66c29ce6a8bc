//! The extremal profile family for the critical terms: the standard
//! radial bubble, its rescaling that attains the convolution-Sobolev
//! quotient, and a compactly supported cutoff variant for test fields.

use crate::field::RadialField;
use crate::grid::RadialGrid;
use std::sync::Arc;

/// U_eps(r) = [N(N-2)]^{(N-2)/4} (eps / (eps^2 + r^2))^{(N-2)/2}, the
/// radial extremal of the Sobolev quotient, tagged with its exact decay
/// rate N-2 so norms include the analytic tail.
pub fn standard_bubble(grid: Arc<RadialGrid>, eps: f64) -> RadialField {
    let n = grid.n as f64;
    let amp = (n * (n - 2.0)).powf((n - 2.0) / 4.0);
    let pow = (n - 2.0) / 2.0;
    RadialField::from_fn(grid, |r| amp * (eps / (eps * eps + r * r)).powf(pow))
        .unwrap()
        .with_tail(n - 2.0)
}

/// Prefactor tau with tau^{2(2*_mu - 1)} = C^{-1} S^{(mu-N)/2}; tau U_eps
/// attains the convolution-Sobolev quotient.
pub fn tilde_prefactor(n: usize, mu: f64, c_nmu: f64, s: f64) -> f64 {
    let nf = n as f64;
    let two_star_mu = (2.0 * nf - mu) / (nf - 2.0);
    (s.powf((mu - nf) / 2.0) / c_nmu).powf(1.0 / (2.0 * (two_star_mu - 1.0)))
}

/// tau U_eps for a given prefactor.
pub fn scaled_bubble(grid: Arc<RadialGrid>, eps: f64, tau: f64) -> RadialField {
    let mut u = standard_bubble(grid, eps);
    for v in u.values.iter_mut() {
        *v *= tau;
    }
    u
}

/// U_eps multiplied by a C^2 quintic cutoff: 1 on [0, r_on], 0 beyond
/// r_off. The result is compactly supported, so no tail is declared.
pub fn cutoff_bubble(grid: Arc<RadialGrid>, eps: f64, r_on: f64, r_off: f64) -> RadialField {
    assert!(0.0 < r_on && r_on < r_off);
    let n = grid.n as f64;
    let amp = (n * (n - 2.0)).powf((n - 2.0) / 4.0);
    let pow = (n - 2.0) / 2.0;
    RadialField::from_fn(grid, |r| {
        let eta = if r <= r_on {
            1.0
        } else if r >= r_off {
            0.0
        } else {
            let s = (r - r_on) / (r_off - r_on);
            1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        };
        eta * amp * (eps / (eps * eps + r * r)).powf(pow)
    })
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_relative_eq;

    #[test]
    fn sobolev_quotient_is_dilation_invariant() {
        let grid = Arc::new(build_grid(3, 2048, 240.0, 3.0).unwrap());
        let two_star = 6.0;
        let quotient = |eps: f64| {
            let u = standard_bubble(grid.clone(), eps);
            u.kinetic() / u.lp_norm_pow(two_star).powf(2.0 / two_star)
        };
        let q1 = quotient(1.0);
        for eps in [0.5, 2.0] {
            assert_relative_eq!(quotient(eps), q1, max_relative = 1e-3);
        }
    }

    #[test]
    fn bubble_kinetic_equals_critical_norm_power() {
        // the extremal solves -Lap U = U^{2N/(N-2)-1}, so its squared
        // gradient norm equals the integral of U^{2N/(N-2)}
        for n in [3usize, 4] {
            let grid = Arc::new(build_grid(n, 2048, 240.0, 3.0).unwrap());
            let u = standard_bubble(grid, 1.0);
            let two_star = 2.0 * n as f64 / (n as f64 - 2.0);
            assert_relative_eq!(u.kinetic(), u.lp_norm_pow(two_star), max_relative = 1e-4);
        }
    }

    #[test]
    fn cutoff_matches_bubble_inside_and_vanishes_outside() {
        let grid = Arc::new(build_grid(3, 1024, 20.0, 2.0).unwrap());
        let full = standard_bubble(grid.clone(), 0.5);
        let cut = cutoff_bubble(grid.clone(), 0.5, 4.0, 8.0);
        for (i, &r) in grid.nodes.iter().enumerate() {
            if r <= 4.0 {
                assert_relative_eq!(cut.values[i], full.values[i], max_relative = 1e-14);
            } else if r >= 8.0 {
                assert_eq!(cut.values[i], 0.0);
            } else {
                assert!(cut.values[i] >= 0.0 && cut.values[i] <= full.values[i]);
            }
        }
    }

    #[test]
    fn scaled_bubble_scales_linearly() {
        let grid = Arc::new(build_grid(4, 512, 30.0, 2.0).unwrap());
        let u = standard_bubble(grid.clone(), 1.5);
        let w = scaled_bubble(grid, 1.5, 0.25);
        assert_relative_eq!(w.kinetic(), 0.0625 * u.kinetic(), max_relative = 1e-13);
    }
}
