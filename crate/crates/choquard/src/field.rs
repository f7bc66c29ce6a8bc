//! Radial fields: samples of u(r) on a shared grid, norms with optional
//! algebraic tail corrections, the L^2-invariant dilation, and the
//! decreasing rearrangement.

use crate::grid::{GridError, RadialGrid};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

/// Radial function known by its node samples. `tail_exponent = Some(s)`
/// declares the decay f(r) ~ f(R_max) (R_max/r)^s beyond the domain, and
/// norm operations then add the analytic tail integral; integrals whose
/// tail diverges report infinity rather than a silently truncated value.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub tail_exponent: Option<f64>,
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("field has {got} samples but the grid has {want} nodes")]
    LengthMismatch { got: usize, want: usize },
    #[error("field contains a non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("dilation parameter {0} exceeds the representable window |s| <= 20")]
    DilationOutOfRange(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Dilation result: the resampled field together with the fraction of
/// squared mass pushed beyond R_max and lost to the zero extension.
#[derive(Debug, Clone)]
pub struct Dilated {
    pub field: RadialField,
    pub lost_mass_fraction: f64,
}

impl Dilated {
    /// True when more than 1% of the mass left the representable window.
    pub fn clipped(&self) -> bool {
        self.lost_mass_fraction > 0.01
    }
}

/// Serialized form of a field; the grid is rebuilt from its parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldCheckpoint {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "R_max")]
    pub r_max: f64,
    pub stretch: f64,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.m() {
            return Err(FieldError::LengthMismatch {
                got: values.len(),
                want: grid.m(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(RadialField {
            grid,
            values,
            tail_exponent: None,
        })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self, FieldError> {
        let values: Vec<f64> = grid.nodes.iter().map(|&r| f(r)).collect();
        RadialField::new(grid, values)
    }

    pub fn with_tail(mut self, exponent: f64) -> Self {
        self.tail_exponent = Some(exponent);
        self
    }

    fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Squared L^2 norm, grid part plus tail when declared. Divergent
    /// tails (2s <= N) report infinity.
    pub fn mass(&self) -> f64 {
        let grid_part = self.grid.dot(&self.values, &self.values);
        match self.tail_exponent {
            None => grid_part,
            Some(s) => {
                let n = self.grid.n as f64;
                if 2.0 * s <= n {
                    return f64::INFINITY;
                }
                let f = self.last();
                grid_part
                    + self.grid.surface * f * f * self.grid.r_max.powf(n) / (2.0 * s - n)
            }
        }
    }

    /// Squared gradient norm. With a declared tail the ghost-cell closure
    /// is replaced by the analytic tail energy; without one, fields are
    /// closed by u = 0 one mesh width beyond R_max.
    pub fn kinetic(&self) -> f64 {
        match self.tail_exponent {
            None => self.grid.dirichlet_energy(&self.values),
            Some(s) => {
                let n = self.grid.n as f64;
                let m = self.values.len();
                let mut sum = 0.0;
                for i in 0..m - 1 {
                    let d = self.values[i + 1] - self.values[i];
                    sum += self.grid.stiffness[i] * d * d;
                }
                let grid_part = self.grid.surface * sum;
                if 2.0 * s + 2.0 <= n {
                    return f64::INFINITY;
                }
                let f = self.last();
                grid_part
                    + self.grid.surface * s * s * f * f * self.grid.r_max.powf(n - 2.0)
                        / (2.0 * s + 2.0 - n)
            }
        }
    }

    /// Integral of |f|^m over R^N, with tail correction when declared.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let samples: Vec<f64> = self.values.iter().map(|v| v.abs().powf(p)).collect();
        let grid_part = self.grid.integrate_samples(&samples);
        match self.tail_exponent {
            None => grid_part,
            Some(s) => {
                let n = self.grid.n as f64;
                if p * s <= n {
                    return f64::INFINITY;
                }
                let f = self.last().abs();
                grid_part + self.grid.surface * f.powf(p) * self.grid.r_max.powf(n) / (p * s - n)
            }
        }
    }

    /// Plain integral of f over the ball of radius R_max (no tail).
    pub fn integrate(&self) -> f64 {
        self.grid.integrate_samples(&self.values)
    }

    /// Rescales to the exact squared mass `target_sq` on the grid part.
    pub fn renormalize_mass(&mut self, target_sq: f64) {
        let m = self.grid.dot(&self.values, &self.values);
        let c = (target_sq / m).sqrt();
        for v in self.values.iter_mut() {
            *v *= c;
        }
    }

    /// L^2-invariant dilation (s * u)(r) = e^{Ns/2} u(e^s r), resampled
    /// by monotone cubic interpolation with zero extension beyond R_max.
    pub fn dilate(&self, s: f64) -> Result<Dilated, FieldError> {
        if !(s.is_finite() && s.abs() <= 20.0) {
            return Err(FieldError::DilationOutOfRange(s));
        }
        let interp = Pchip::even_radial(&self.grid.nodes, &self.values);
        let n = self.grid.n as f64;
        let amp = (n * s / 2.0).exp();
        let es = s.exp();
        let values: Vec<f64> = self
            .grid
            .nodes
            .iter()
            .map(|&r| {
                let x = es * r;
                if x > self.grid.r_max {
                    0.0
                } else {
                    amp * interp.eval(x)
                }
            })
            .collect();
        let lost_mass_fraction = if s >= 0.0 {
            0.0
        } else {
            let total = self.grid.dot(&self.values, &self.values);
            let cut = es * self.grid.r_max;
            let mut outside = 0.0;
            for (i, &r) in self.grid.nodes.iter().enumerate() {
                if r > cut {
                    outside += self.grid.weights[i] * self.values[i] * self.values[i];
                }
            }
            self.grid.surface * outside / total
        };
        let mut field = RadialField::new(self.grid.clone(), values)?;
        field.tail_exponent = self.tail_exponent;
        Ok(Dilated {
            field,
            lost_mass_fraction,
        })
    }

    /// Radially non-increasing field equimeasurable with |f| at cell
    /// resolution: sorted cell values are reassigned to cells ordered by
    /// radius, split by quadrature measure, taking per-cell root-mean-
    /// square values so the squared mass is conserved exactly.
    pub fn rearrange_decreasing(&self) -> RadialField {
        let w = &self.grid.weights;
        let m = self.values.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            self.values[b]
                .abs()
                .partial_cmp(&self.values[a].abs())
                .unwrap()
        });
        let mut out = vec![0.0; m];
        let mut k = 0usize;
        let mut chunk_left = w[order[0]];
        for i in 0..m {
            let mut need = w[i];
            let mut sq_sum = 0.0;
            while need > 0.0 && k < m {
                let v = self.values[order[k]].abs();
                let take = need.min(chunk_left);
                sq_sum += take * v * v;
                need -= take;
                chunk_left -= take;
                if chunk_left <= 0.0 {
                    k += 1;
                    if k < m {
                        chunk_left = w[order[k]];
                    }
                }
            }
            out[i] = (sq_sum / w[i]).sqrt();
        }
        RadialField {
            grid: self.grid.clone(),
            values: out,
            tail_exponent: self.tail_exponent,
        }
    }

    /// Resamples onto another grid of the same dimension by monotone
    /// cubic interpolation, zero beyond this field's domain.
    pub fn resample_to(&self, grid: Arc<RadialGrid>) -> Result<RadialField, FieldError> {
        if grid.n != self.grid.n {
            return Err(FieldError::Grid(GridError::GridMismatch));
        }
        let interp = Pchip::even_radial(&self.grid.nodes, &self.values);
        let values: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&r| {
                if r > self.grid.r_max {
                    0.0
                } else {
                    interp.eval(r)
                }
            })
            .collect();
        let mut out = RadialField::new(grid, values)?;
        out.tail_exponent = self.tail_exponent;
        Ok(out)
    }

    pub fn checkpoint(&self) -> FieldCheckpoint {
        FieldCheckpoint {
            n: self.grid.n,
            m: self.grid.m(),
            r_max: self.grid.r_max,
            stretch: self.grid.stretch,
            values: self.values.clone(),
        }
    }

    pub fn from_checkpoint(cp: &FieldCheckpoint) -> Result<RadialField, FieldError> {
        let grid = Arc::new(crate::grid::build_grid(cp.n, cp.m, cp.r_max, cp.stretch)?);
        RadialField::new(grid, cp.values.clone())
    }
}

/// Shape-preserving cubic Hermite interpolant (Fritsch-Carlson slopes),
/// extended evenly to r = 0 so radial profiles stay flat at the origin.
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn even_radial(nodes: &[f64], values: &[f64]) -> Pchip {
        let mut x = Vec::with_capacity(nodes.len() + 1);
        let mut y = Vec::with_capacity(nodes.len() + 1);
        x.push(0.0);
        y.push(values[0]);
        x.extend_from_slice(nodes);
        y.extend_from_slice(values);
        let d = Pchip::slopes(&x, &y);
        Pchip { x, y, d }
    }

    fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if del[i - 1] * del[i] <= 0.0 {
                d[i] = 0.0;
            } else {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
            }
        }
        // one-sided endpoint slopes, clipped to keep monotonicity
        d[0] = Pchip::endpoint(h[0], h[1], del[0], del[1]);
        d[n - 1] = Pchip::endpoint(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        d
    }

    fn endpoint(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
        let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
        if d * del0 <= 0.0 {
            0.0
        } else if del0 * del1 < 0.0 && d.abs() > 3.0 * del0.abs() {
            3.0 * del0
        } else {
            d
        }
    }

    pub fn eval(&self, xq: f64) -> f64 {
        let n = self.x.len();
        if xq <= self.x[0] {
            return self.y[0];
        }
        if xq >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.x[mid] <= xq {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h = self.x[lo + 1] - self.x[lo];
        let t = (xq - self.x[lo]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[lo] + h10 * h * self.d[lo] + h01 * self.y[lo + 1] + h11 * h * self.d[lo + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn gaussian_field(m: usize, r_max: f64) -> RadialField {
        let grid = Arc::new(build_grid(3, m, r_max, 2.0).unwrap());
        RadialField::from_fn(grid, |r| (-0.5 * r * r).exp()).unwrap()
    }

    #[test]
    fn gaussian_mass_n3() {
        let f = gaussian_field(2048, 14.0);
        assert_relative_eq!(f.mass(), PI.powf(1.5), max_relative = 1e-8);
    }

    #[test]
    fn integrate_is_linear() {
        let grid = Arc::new(build_grid(3, 256, 10.0, 2.0).unwrap());
        let f = RadialField::from_fn(grid.clone(), |r| (-r * r).exp()).unwrap();
        let g = RadialField::from_fn(grid.clone(), |r| 1.0 / (1.0 + r * r)).unwrap();
        let combo = RadialField::from_fn(grid, |r| {
            2.5 * (-r * r).exp() - 0.75 / (1.0 + r * r)
        })
        .unwrap();
        assert_relative_eq!(
            combo.integrate(),
            2.5 * f.integrate() - 0.75 * g.integrate(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn tail_correction_recovers_algebraic_mass() {
        // f = (1 + r^2)^{-2} in N=3 decays like r^{-4}; the grid is cut
        // deliberately short so the tail term carries real weight.
        let grid = Arc::new(build_grid(3, 512, 6.0, 2.0).unwrap());
        let f = RadialField::from_fn(grid, |r| 1.0 / (1.0 + r * r).powi(2))
            .unwrap()
            .with_tail(4.0);
        // |f|_2^2 = 4 pi int r^2 (1+r^2)^{-4} dr = pi^2 / 8
        assert_relative_eq!(f.mass(), PI * PI / 8.0, max_relative = 1e-4);
    }

    #[test]
    fn divergent_tail_reports_infinity() {
        let grid = Arc::new(build_grid(3, 128, 6.0, 2.0).unwrap());
        let f = RadialField::from_fn(grid, |r| 1.0 / (1.0 + r)).unwrap().with_tail(1.0);
        assert!(f.mass().is_infinite());
    }

    #[test]
    fn dilate_zero_is_identity() {
        let f = gaussian_field(512, 12.0);
        let g = f.dilate(0.0).unwrap();
        assert_eq!(g.lost_mass_fraction, 0.0);
        for (a, b) in f.values.iter().zip(&g.field.values) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn dilate_preserves_mass_and_scales_kinetic() {
        let grid = Arc::new(build_grid(3, 2048, 40.0, 2.0).unwrap());
        let f = RadialField::from_fn(grid, |r| (-r * r).exp()).unwrap();
        for s in [-2.0, -1.0, 0.5, 2.0] {
            let g = f.dilate(s).unwrap();
            assert!(!g.clipped());
            assert_relative_eq!(g.field.mass(), f.mass(), max_relative = 1e-6);
            assert_relative_eq!(
                g.field.kinetic(),
                (2.0 * s).exp() * f.kinetic(),
                max_relative = 1e-4
            );
        }
    }

    #[test]
    fn dilate_round_trip_small_error() {
        let f = gaussian_field(1024, 16.0);
        let back = f.dilate(1.0).unwrap().field.dilate(-1.0).unwrap().field;
        let mut diff = 0.0;
        for i in 0..f.values.len() {
            let d = back.values[i] - f.values[i];
            diff += f.grid.weights[i] * d * d;
        }
        assert!((f.grid.surface * diff).sqrt() <= 1e-5 * f.mass().sqrt());
    }

    #[test]
    fn dilate_flags_escaping_mass() {
        let grid = Arc::new(build_grid(3, 512, 10.0, 2.0).unwrap());
        let f = RadialField::from_fn(grid, |r| (-0.1 * r * r).exp()).unwrap();
        let g = f.dilate(-3.0).unwrap();
        assert!(g.clipped());
    }

    #[test]
    fn rejects_extreme_dilation() {
        let f = gaussian_field(128, 10.0);
        assert!(matches!(
            f.dilate(25.0),
            Err(FieldError::DilationOutOfRange(_))
        ));
    }

    #[test]
    fn rearrange_fixes_decreasing_fields_and_preserves_mass() {
        let grid = Arc::new(build_grid(3, 512, 10.0, 2.0).unwrap());
        let dec = RadialField::from_fn(grid.clone(), |r| (-r).exp()).unwrap();
        let r = dec.rearrange_decreasing();
        for (a, b) in dec.values.iter().zip(&r.values) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        let wavy = RadialField::from_fn(grid, |r| (-0.3 * r * r).exp() * (1.0 + 0.5 * (3.0 * r).sin()))
            .unwrap();
        let rw = wavy.rearrange_decreasing();
        assert_relative_eq!(rw.mass(), wavy.mass(), max_relative = 1e-10);
        for i in 0..rw.values.len() - 1 {
            assert!(rw.values[i] >= rw.values[i + 1] - 1e-14);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let f = gaussian_field(128, 10.0);
        let cp = f.checkpoint();
        let text = serde_json::to_string(&cp).unwrap();
        assert!(text.contains("\"N\":3") && text.contains("\"R_max\":10.0"));
        let back = RadialField::from_checkpoint(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.values, f.values);
        assert!(back.grid.same_discretization(&f.grid));
    }

    #[test]
    fn rejects_non_finite_samples() {
        let grid = Arc::new(build_grid(3, 64, 5.0, 1.0).unwrap());
        let mut vals = vec![1.0; 64];
        vals[10] = f64::NAN;
        assert!(matches!(
            RadialField::new(grid, vals),
            Err(FieldError::NonFinite(10))
        ));
    }
}
