//! Radial discretization of functions on R^N: a power-graded node set,
//! a product quadrature rule exact on cubics against the r^{N-1} dr
//! measure, and piecewise-linear stiffness coefficients for the Dirichlet
//! energy.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Rule for one radial cell: the cubic through the nodes at `idx`
/// integrated over [lo, hi] against r^{N-1} dr gives the weights `wts`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellRule {
    pub lo: f64,
    pub hi: f64,
    pub idx: [usize; 4],
    pub wts: [f64; 4],
}

/// Radial grid with graded nodes r_i = R_max (i/M)^stretch, i = 1..M.
///
/// `weights` approximate integration against r^{N-1} dr on [0, R_max]
/// (the surface area of the unit sphere is kept as a separate factor);
/// `stiffness` holds the piecewise-linear Dirichlet-energy coefficients
/// c_i = (integral of r^{N-1} over cell i) / h_i^2 for the M-1 interior
/// cells, followed by one closure coefficient for a ghost cell of the
/// last mesh width beyond R_max on which fields are taken to vanish.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub surface: f64,
    pub r_max: f64,
    pub stretch: f64,
    pub stiffness: Vec<f64>,
    pub cells: Vec<CellRule>,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("dimension must be at least 3, got {0}")]
    DimensionTooSmall(usize),
    #[error("need at least 64 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("domain radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("mesh grading exponent must be finite and at least 1, got {0}")]
    BadStretch(f64),
    #[error("quadrature weight {index} is not positive ({value:.3e})")]
    NonpositiveWeight { index: usize, value: f64 },
    #[error("fields live on different discretizations")]
    GridMismatch,
}

/// Surface area of the unit sphere S^{N-1}.
pub fn sphere_surface(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0)
}

/// Moment of r^k over [a, b], computed as (b - a) * sum a^j b^(k-j) / (k+1)
/// so that nearby endpoints never cancel.
fn moment(k: usize, a: f64, b: f64) -> f64 {
    let mut sum = 0.0;
    for j in 0..=k {
        sum += a.powi(j as i32) * b.powi((k - j) as i32);
    }
    (b - a) * sum / (k + 1) as f64
}

/// Moment of (r - a)^j r^{n-1} over [a, b], by the binomial expansion of
/// r^{n-1} = ((r-a) + a)^{n-1} whose terms are all nonnegative, so nearby
/// endpoints never cancel.
fn shifted_moment(n: usize, j: usize, a: f64, b: f64) -> f64 {
    let h = b - a;
    let mut binom = 1.0;
    let mut sum = 0.0;
    for k in 0..n {
        sum += binom * a.powi((n - 1 - k) as i32) * h.powi((j + k + 1) as i32)
            / (j + k + 1) as f64;
        binom *= (n - 1 - k) as f64 / (k + 1) as f64;
    }
    sum
}

/// Weights of the cubic through four nodes integrated over [a, b] against
/// the r^{n-1} dr measure. Each Lagrange numerator is expanded in the
/// shifted variable t = r - a, where its elementary-symmetric coefficients
/// stay of the order of the local mesh width and the moments are
/// cancellation-free; the unshifted expansion loses all precision when
/// the cell is far from the origin.
fn cubic_panel(n: usize, x: [f64; 4], a: f64, b: f64) -> [f64; 4] {
    let mu: Vec<f64> = (0..4).map(|j| shifted_moment(n, j, a, b)).collect();
    let mut w = [0.0; 4];
    for j in 0..4 {
        let mut roots = [0.0; 3];
        let mut denom = 1.0;
        let mut k = 0;
        for (i, &xi) in x.iter().enumerate() {
            if i != j {
                roots[k] = xi - a;
                denom *= x[j] - xi;
                k += 1;
            }
        }
        let e1 = roots[0] + roots[1] + roots[2];
        let e2 = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2];
        let e3 = roots[0] * roots[1] * roots[2];
        w[j] = (mu[3] - e1 * mu[2] + e2 * mu[1] - e3 * mu[0]) / denom;
    }
    w
}

/// Builds the graded radial grid with quadrature exact on cubics per
/// cell and the piecewise-linear stiffness coefficients.
///
/// Cell layout: a leading cell [0, r_1] closed by the cubic through the
/// first four nodes, then one cell per mesh interval using the cubic
/// through its own endpoints and the two nodes to their right (the last
/// intervals fall back to the final four nodes). Extrapolating nodes must
/// sit on the right, where the r^{N-1} measure makes their own cells'
/// positive contributions dominate; a stencil reaching left would hand
/// its negative outer weight to a node whose own cells carry far less
/// measure near the origin. Positivity of every assembled weight is
/// asserted.
pub fn build_grid(n: usize, m: usize, r_max: f64, stretch: f64) -> Result<RadialGrid, GridError> {
    if n < 3 {
        return Err(GridError::DimensionTooSmall(n));
    }
    if m < 64 {
        return Err(GridError::TooFewNodes(m));
    }
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(GridError::BadRadius(r_max));
    }
    if !(stretch.is_finite() && stretch >= 1.0) {
        return Err(GridError::BadStretch(stretch));
    }

    let nodes: Vec<f64> = (1..=m)
        .map(|i| r_max * (i as f64 / m as f64).powf(stretch))
        .collect();

    let mut cells = Vec::with_capacity(m);
    cells.push(CellRule {
        lo: 0.0,
        hi: nodes[0],
        idx: [0, 1, 2, 3],
        wts: cubic_panel(n, [nodes[0], nodes[1], nodes[2], nodes[3]], 0.0, nodes[0]),
    });
    for i in 0..m - 1 {
        let first = if i + 3 < m { i } else { m - 4 };
        let idx = [first, first + 1, first + 2, first + 3];
        let x = [
            nodes[idx[0]],
            nodes[idx[1]],
            nodes[idx[2]],
            nodes[idx[3]],
        ];
        cells.push(CellRule {
            lo: nodes[i],
            hi: nodes[i + 1],
            idx,
            wts: cubic_panel(n, x, nodes[i], nodes[i + 1]),
        });
    }

    let mut weights = vec![0.0; m];
    for cell in &cells {
        for k in 0..4 {
            weights[cell.idx[k]] += cell.wts[k];
        }
    }
    for (i, &w) in weights.iter().enumerate() {
        if !(w > 0.0) {
            return Err(GridError::NonpositiveWeight { index: i, value: w });
        }
    }

    let mut stiffness = Vec::with_capacity(m);
    for i in 0..m - 1 {
        let h = nodes[i + 1] - nodes[i];
        stiffness.push(moment(n - 1, nodes[i], nodes[i + 1]) / (h * h));
    }
    let h_last = nodes[m - 1] - nodes[m - 2];
    stiffness.push(moment(n - 1, r_max, r_max + h_last) / (h_last * h_last));

    Ok(RadialGrid {
        n,
        nodes,
        weights,
        surface: sphere_surface(n),
        r_max,
        stretch,
        stiffness,
        cells,
    })
}

impl RadialGrid {
    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    /// True when the other grid is the same discretization (same node
    /// family), which is what field operations require.
    pub fn same_discretization(&self, other: &RadialGrid) -> bool {
        self.n == other.n
            && self.nodes.len() == other.nodes.len()
            && self.r_max == other.r_max
            && self.stretch == other.stretch
    }

    /// Integral of f over R^N restricted to the ball of radius R_max,
    /// from samples at the nodes.
    pub fn integrate_samples(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.weights.len());
        let mut s = 0.0;
        for (w, v) in self.weights.iter().zip(f) {
            s += w * v;
        }
        self.surface * s
    }

    /// L^2(R^N) inner product of two sample vectors on the grid part.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..f.len() {
            s += self.weights[i] * f[i] * g[i];
        }
        self.surface * s
    }

    /// Dirichlet energy of the piecewise-linear interpolant of the
    /// samples, with the ghost-cell closure beyond R_max. The flat
    /// extension over [0, r_1] carries no gradient.
    pub fn dirichlet_energy(&self, f: &[f64]) -> f64 {
        let m = f.len();
        let mut s = 0.0;
        for i in 0..m - 1 {
            let d = f[i + 1] - f[i];
            s += self.stiffness[i] * d * d;
        }
        s += self.stiffness[m - 1] * f[m - 1] * f[m - 1];
        self.surface * s
    }

    /// Applies the stiffness operator A with (A f, g) = dirichlet form,
    /// returning surface-scaled nodal values (the weak Laplacian against
    /// the quadrature measure; divide by `surface * weights` for the
    /// strong -Laplacian at the nodes).
    pub fn apply_stiffness(&self, f: &[f64]) -> Vec<f64> {
        let m = f.len();
        let mut g = vec![0.0; m];
        for i in 0..m - 1 {
            let d = self.stiffness[i] * (f[i + 1] - f[i]);
            g[i] -= d;
            g[i + 1] += d;
        }
        g[m - 1] += self.stiffness[m - 1] * f[m - 1];
        for v in g.iter_mut() {
            *v *= self.surface;
        }
        g
    }

    /// Solves (e2 * A + M) x = rhs with A the stiffness operator and M the
    /// quadrature mass matrix, by the tridiagonal Thomas algorithm. The
    /// surface factor cancels when rhs carries it, so it is left out here.
    pub fn h1_solve(&self, rhs: &[f64], e2: f64) -> Vec<f64> {
        let m = rhs.len();
        let c: Vec<f64> = self.stiffness.iter().map(|v| v * e2).collect();
        let mut diag: Vec<f64> = self.weights.clone();
        for i in 0..m - 1 {
            diag[i] += c[i];
            diag[i + 1] += c[i];
        }
        diag[m - 1] += c[m - 1];
        let mut cp = vec![0.0; m];
        let mut dp = vec![0.0; m];
        cp[0] = -c[0] / diag[0];
        dp[0] = rhs[0] / diag[0];
        for i in 1..m {
            let denom = diag[i] + c[i - 1] * cp[i - 1];
            cp[i] = if i < m - 1 { -c[i] / denom } else { 0.0 };
            dp[i] = (rhs[i] + c[i - 1] * dp[i - 1]) / denom;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = dp[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_integral_n3_to_1e8() {
        let g = build_grid(3, 2048, 12.0, 2.0).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|&r| (-r * r).exp()).collect();
        assert_relative_eq!(
            g.integrate_samples(&f),
            PI.powf(1.5),
            max_relative = 1e-8
        );
    }

    #[test]
    fn unit_ball_volume_n4_to_1e8() {
        let g = build_grid(4, 256, 1.0, 1.0).unwrap();
        let ones = vec![1.0; g.m()];
        assert_relative_eq!(
            g.integrate_samples(&ones),
            PI * PI / 2.0,
            max_relative = 1e-8
        );
    }

    #[test]
    fn refinement_reduces_gaussian_error_at_least_4x() {
        let exact = PI.powf(1.5);
        let err = |m: usize| {
            let g = build_grid(3, m, 12.0, 2.0).unwrap();
            let f: Vec<f64> = g.nodes.iter().map(|&r| (-r * r).exp()).collect();
            (g.integrate_samples(&f) - exact).abs()
        };
        assert!(err(128) >= 4.0 * err(256));
    }

    #[test]
    fn per_cell_exactness_on_cubics() {
        for (n, stretch) in [(3usize, 2.0), (4, 2.5), (5, 1.0)] {
            let g = build_grid(n, 128, 10.0, stretch).unwrap();
            for cell in &g.cells {
                for k in 0..=3usize {
                    let exact = moment(n - 1 + k, cell.lo, cell.hi);
                    let mut got = 0.0;
                    for j in 0..4 {
                        got += cell.wts[j] * g.nodes[cell.idx[j]].powi(k as i32);
                    }
                    assert!(
                        (got - exact).abs() <= 1e-10 * exact.abs().max(1e-30),
                        "cell [{}, {}] k={} got {} want {}",
                        cell.lo,
                        cell.hi,
                        k,
                        got,
                        exact
                    );
                }
            }
        }
    }

    #[test]
    fn weights_positive_on_strongly_graded_meshes() {
        for (n, stretch) in [(3usize, 3.0), (4, 2.0), (6, 2.5)] {
            let g = build_grid(n, 1024, 50.0, stretch).unwrap();
            assert!(g.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn dirichlet_energy_of_gaussian() {
        // |grad e^{-r^2/2}|_2^2 over R^3 = int r^2 e^{-r^2} dV = (3/2) pi^{3/2}
        let g = build_grid(3, 4096, 14.0, 2.0).unwrap();
        let f: Vec<f64> = g.nodes.iter().map(|&r| (-0.5 * r * r).exp()).collect();
        assert_relative_eq!(
            g.dirichlet_energy(&f),
            1.5 * PI.powf(1.5),
            max_relative = 1e-5
        );
    }

    #[test]
    fn energy_zero_only_for_zero_field() {
        let g = build_grid(3, 64, 5.0, 1.0).unwrap();
        let zero = vec![0.0; g.m()];
        assert_eq!(g.dirichlet_energy(&zero), 0.0);
        // a nonzero constant pays at the ghost cell, so it is not in the kernel
        let ones = vec![1.0; g.m()];
        assert!(g.dirichlet_energy(&ones) > 0.0);
    }

    #[test]
    fn h1_solve_inverts_operator() {
        let g = build_grid(3, 128, 8.0, 2.0).unwrap();
        let x: Vec<f64> = g.nodes.iter().map(|&r| (-r).exp()).collect();
        // rhs = (e2 A + M) x without surface factor
        let e2 = 0.7;
        let ax = g.apply_stiffness(&x);
        let rhs: Vec<f64> = (0..g.m())
            .map(|i| e2 * ax[i] / g.surface + g.weights[i] * x[i])
            .collect();
        let y = g.h1_solve(&rhs, e2);
        for i in 0..g.m() {
            assert_relative_eq!(y[i], x[i], max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            build_grid(2, 128, 5.0, 1.0),
            Err(GridError::DimensionTooSmall(2))
        ));
        assert!(matches!(
            build_grid(3, 32, 5.0, 1.0),
            Err(GridError::TooFewNodes(32))
        ));
        assert!(build_grid(3, 128, f64::NAN, 1.0).is_err());
        assert!(build_grid(3, 128, 5.0, 0.5).is_err());
    }
}
