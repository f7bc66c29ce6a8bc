//! The nonlocal operator f -> I_mu * f and the bilinear energy
//! D(f, g) = int (I_mu * f) g for radial functions.
//!
//! The radial reduction replaces |x - y|^{-mu} by its spherical mean
//! G(r, s), so the convolution becomes a one-dimensional integral
//! operator against the r^{N-1} dr measure. Two realizations coexist:
//!
//! * mu = N-2 exactly: G(r, s) = max(r, s)^{2-N} (Newton's theorem), and
//!   the operator is applied in O(M) by prefix sums; no matrix is stored.
//! * otherwise: a dense M x M matrix of spherical means, with every cell
//!   pair within a band of the diagonal re-integrated by local product
//!   quadrature, because G has a kink (and for mu >= N-1 an integrable
//!   singularity) on the diagonal that naive sampling misses.

use crate::field::RadialField;
use crate::grid::{GridError, RadialGrid};
use once_cell::sync::Lazy;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("mu must lie in (0, N) = (0, {n}), got {mu}")]
    MuOutOfRange { mu: f64, n: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("kernel cache i/o: {0}")]
    Cache(#[from] std::io::Error),
}

/// Number of cells on each side of the diagonal whose pair integrals are
/// recomputed by local product quadrature. Must cover every cell pair
/// that shares stencil nodes with the diagonal, hence at least 3.
const NEAR_BAND: usize = 4;

enum KernelStorage {
    /// max(r_i, r_j)^{2-N} entries applied by prefix sums.
    Shell { r_pow: Vec<f64> },
    /// Row-major spherical means, already diagonal-corrected and
    /// symmetrized; weights are applied during multiplication.
    Dense { gbar: Vec<f64> },
}

/// Radial realization of f -> I_mu * f on a fixed grid. The full matrix
/// entry (including the Riesz normalization and quadrature weight) is
/// K_ij = A_Nmu |S^{N-1}| G(r_i, r_j) w_j, so that the convolution is the
/// plain matrix-vector product; energies divide A_Nmu back out when the
/// bare pairing is wanted.
pub struct RieszKernel {
    pub grid: Arc<RadialGrid>,
    pub mu: f64,
    pub a_nmu: f64,
    /// True when the spherical mean diverges on the diagonal (mu >= N-1);
    /// entries there are defined by cell integrals, not point values.
    pub diagonal_singular: bool,
    storage: KernelStorage,
}

/// Spherical mean of |x-y|^{-mu} over directions, N = 3 closed form.
fn angular_mean_n3(mu: f64, r: f64, s: f64) -> f64 {
    let d = (r - s).abs();
    if mu == 2.0 {
        ((r + s) / d).ln() / (2.0 * r * s)
    } else {
        ((r + s).powf(2.0 - mu) - d.powf(2.0 - mu)) / (2.0 * r * s * (2.0 - mu))
    }
}

static GAUSS_CACHE: Lazy<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre recurrence.
fn gauss_legendre(order: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    if let Some(rule) = GAUSS_CACHE.lock().unwrap().get(&order) {
        return rule.clone();
    }
    let n = order as f64;
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for k in 0..order {
        let mut x = (PI * (k as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 1..order {
                let jf = j as f64;
                let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    let rule = Arc::new((nodes, weights));
    GAUSS_CACHE.lock().unwrap().insert(order, rule.clone());
    rule
}

/// Integrates `f` over [a, b] with an `order`-point Gauss rule.
fn gauss_segment(a: f64, b: f64, order: usize, f: &mut impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Spherical mean for general N: Gauss quadrature of the cos(theta)
/// integral with weight (1 - t^2)^{(N-3)/2}, evaluated in the theta
/// parametrization t = cos(theta) where the integrand is analytic, so
/// the rule converges spectrally. Panels are geometrically refined
/// toward theta = 0 where the integrand peaks for r close to s, and the
/// order is doubled until the value settles below 1e-10 relative.
fn angular_mean_gauss(n: usize, mu: f64, r: f64, s: f64) -> f64 {
    let nf = n as f64;
    let d2 = (r - s) * (r - s);
    let rs2 = 2.0 * r * s;
    // peak half-width in theta; beyond it the integrand is tame
    let theta_star = (d2 / (r * s)).sqrt();
    let mut cuts = vec![PI, PI / 2.0];
    if theta_star < 0.5 {
        let floor = (0.05 * theta_star).max(1e-9);
        let mut edge = PI / 2.0;
        for _ in 0..12 {
            edge *= 0.2;
            if edge <= floor {
                break;
            }
            cuts.push(edge);
        }
    }
    cuts.push(0.0);
    cuts.reverse();

    // d^2 + 2 r s (1 - cos) = d^2 + 4 r s sin^2(theta/2), which stays
    // accurate where 1 - cos(theta) would cancel to zero
    let mut integrand = |theta: f64| {
        let sh = (0.5 * theta).sin();
        (d2 + 2.0 * rs2 * sh * sh).powf(-mu / 2.0) * theta.sin().powf(nf - 2.0)
    };
    let mut order = 24;
    let mut last = f64::NAN;
    loop {
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            total += gauss_segment(pair[0], pair[1], order, &mut integrand);
        }
        let done = (total - last).abs() <= 1e-10 * total.abs() || order >= 384;
        last = total;
        if done {
            break;
        }
        order *= 2;
    }
    let ratio = crate::grid::sphere_surface(n - 1) / crate::grid::sphere_surface(n);
    ratio * last
}

fn spherical_mean(n: usize, mu: f64, r: f64, s: f64) -> f64 {
    if n == 3 {
        angular_mean_n3(mu, r, s)
    } else {
        angular_mean_gauss(n, mu, r, s)
    }
}

/// Integral of phi(s) G(r, s) s^{N-1} ds over [lo, hi], split at the
/// diagonal point s = r when it lies inside, each side integrated on
/// panels geometrically graded toward the split so the kink (or the
/// integrable singularity) never meets a quadrature node head-on.
fn inner_integral(
    n: usize,
    mu: f64,
    r: f64,
    lo: f64,
    hi: f64,
    phi: &dyn Fn(f64) -> f64,
) -> f64 {
    let nf = n as f64;
    let mut eval = |s: f64| phi(s) * spherical_mean(n, mu, r, s) * s.powf(nf - 1.0);
    let cut = r.clamp(lo, hi);
    let mut total = 0.0;
    for (a, b, sing_at_b) in [(lo, cut, true), (cut, hi, false)] {
        let len = b - a;
        if len <= 0.0 {
            continue;
        }
        // distances from the singular end: len * ratio^k
        let ratio: f64 = 0.15;
        let mut d = len;
        for k in 0..8 {
            let d_next = if k == 7 { 0.0 } else { len * ratio.powi(k + 1) };
            let (pa, pb) = if sing_at_b {
                (b - d, b - d_next)
            } else {
                (a + d_next, a + d)
            };
            total += gauss_segment(pa, pb, 4, &mut eval);
            d = d_next;
        }
    }
    total
}

/// Accurate integral of hat_k(r) hat_l(s) G(r, s) m(r) m(s) over the
/// cell pair A x B for the four endpoint hat combinations, returned as
/// block[ka][lb] with index 0 = left endpoint, 1 = right endpoint.
fn pair_block(n: usize, mu: f64, a: (f64, f64), b: (f64, f64)) -> [[f64; 2]; 2] {
    let nf = n as f64;
    let (alo, ahi) = a;
    let (blo, bhi) = b;
    let ha = ahi - alo;
    let hb = bhi - blo;
    let mut block = [[0.0; 2]; 2];
    for ka in 0..2 {
        for lb in 0..2 {
            let hat_b = move |s: f64| {
                if lb == 0 {
                    (bhi - s) / hb
                } else {
                    (s - blo) / hb
                }
            };
            let mut outer = |r: f64| {
                let hat_a = if ka == 0 { (ahi - r) / ha } else { (r - alo) / ha };
                hat_a * r.powf(nf - 1.0) * inner_integral(n, mu, r, blo, bhi, &hat_b)
            };
            block[ka][lb] = gauss_segment(alo, ahi, 8, &mut outer);
        }
    }
    block
}

/// Builds the dense spherical-mean matrix with near-diagonal cell pairs
/// re-integrated against piecewise-linear interpolants.
fn build_dense_gbar(grid: &RadialGrid, mu: f64) -> Vec<f64> {
    let m = grid.m();
    let n = grid.n;
    let singular = mu >= n as f64 - 1.0;
    let mut gbar = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let g = if i == j && singular {
                0.0
            } else {
                spherical_mean(n, mu, grid.nodes[i], grid.nodes[j])
            };
            gbar[i * m + j] = g;
            gbar[j * m + i] = g;
        }
    }

    // Replace the product-rule contribution of every near-diagonal cell
    // pair with the locally exact integral. cells[0] is the leading
    // cell [0, r_1]; its measure is negligible and it is left alone.
    let ncells = grid.cells.len();
    let mut corr: HashMap<(usize, usize), f64> = HashMap::new();
    for a in 1..ncells {
        let cell_a = &grid.cells[a];
        for b in a..(a + NEAR_BAND + 1).min(ncells) {
            let cell_b = &grid.cells[b];
            // subtract what the assembled weights contributed here
            for (ka, &ia) in cell_a.idx.iter().enumerate() {
                for (lb, &jb) in cell_b.idx.iter().enumerate() {
                    let naive = cell_a.wts[ka] * cell_b.wts[lb] * gbar[ia * m + jb];
                    *corr.entry((ia, jb)).or_insert(0.0) -= naive;
                    if a != b {
                        *corr.entry((jb, ia)).or_insert(0.0) -= naive;
                    }
                }
            }
            // add the exact pair integral against endpoint hats
            let block = pair_block(n, mu, (cell_a.lo, cell_a.hi), (cell_b.lo, cell_b.hi));
            let ia0 = a - 1; // interval cell k spans [nodes[k-1], nodes[k]]
            let ib0 = b - 1;
            for ka in 0..2 {
                for lb in 0..2 {
                    let (i, j) = (ia0 + ka, ib0 + lb);
                    let val = if a == b {
                        0.5 * (block[ka][lb] + block[lb][ka])
                    } else {
                        block[ka][lb]
                    };
                    *corr.entry((i, j)).or_insert(0.0) += val;
                    if a != b {
                        *corr.entry((j, i)).or_insert(0.0) += val;
                    }
                }
            }
        }
    }
    for (&(i, j), &c) in corr.iter() {
        gbar[i * m + j] += c / (grid.weights[i] * grid.weights[j]);
    }

    // exact symmetry, then clamp roundoff-negative entries to zero
    for i in 0..m {
        for j in i + 1..m {
            let s = 0.5 * (gbar[i * m + j] + gbar[j * m + i]);
            gbar[i * m + j] = s;
            gbar[j * m + i] = s;
        }
    }
    for i in 0..m {
        let row_max = (0..m).fold(0.0f64, |acc, j| acc.max(gbar[i * m + j].abs()));
        for j in 0..m {
            let g = gbar[i * m + j];
            if g < 0.0 {
                assert!(
                    g >= -1e-10 * row_max,
                    "kernel entry ({i},{j}) = {g:.3e} is negative beyond roundoff"
                );
                gbar[i * m + j] = 0.0;
            }
        }
    }
    gbar
}

/// Builds the radial Riesz kernel. For mu = N-2 (within 1e-12) the exact
/// shell form is used and no matrix is stored.
pub fn build_kernel(
    grid: Arc<RadialGrid>,
    mu: f64,
    a_nmu: f64,
) -> Result<RieszKernel, KernelError> {
    let n = grid.n;
    if !(mu.is_finite() && mu > 0.0 && mu < n as f64) {
        return Err(KernelError::MuOutOfRange { mu, n });
    }
    let diagonal_singular = mu >= n as f64 - 1.0;
    let storage = if (mu - (n as f64 - 2.0)).abs() <= 1e-12 {
        KernelStorage::Shell {
            r_pow: grid.nodes.iter().map(|&r| r.powi(2 - n as i32)).collect(),
        }
    } else {
        KernelStorage::Dense {
            gbar: build_dense_gbar(&grid, mu),
        }
    };
    Ok(RieszKernel {
        grid,
        mu,
        a_nmu,
        diagonal_singular,
        storage,
    })
}

/// As [`build_kernel`], with the dense matrix cached on disk keyed by
/// (N, M, R_max, stretch, mu). A stale or unreadable cache entry is
/// rebuilt and overwritten, never trusted.
pub fn build_kernel_cached(
    grid: Arc<RadialGrid>,
    mu: f64,
    a_nmu: f64,
    cache_dir: &Path,
) -> Result<RieszKernel, KernelError> {
    let n = grid.n;
    if !(mu.is_finite() && mu > 0.0 && mu < n as f64) {
        return Err(KernelError::MuOutOfRange { mu, n });
    }
    if (mu - (n as f64 - 2.0)).abs() <= 1e-12 {
        return build_kernel(grid, mu, a_nmu);
    }
    let path = cache_path(cache_dir, &grid, mu);
    if let Some(gbar) = read_cache(&path, &grid, mu) {
        return Ok(RieszKernel {
            diagonal_singular: mu >= n as f64 - 1.0,
            storage: KernelStorage::Dense { gbar },
            grid,
            mu,
            a_nmu,
        });
    }
    let kernel = build_kernel(grid, mu, a_nmu)?;
    if let KernelStorage::Dense { gbar } = &kernel.storage {
        write_cache(&path, &kernel.grid, mu, gbar)?;
    }
    Ok(kernel)
}

fn cache_path(dir: &Path, grid: &RadialGrid, mu: f64) -> PathBuf {
    let key = format!(
        "N={},M={},R_max={:.17e},stretch={:.17e},mu={:.17e}",
        grid.n,
        grid.m(),
        grid.r_max,
        grid.stretch,
        mu
    );
    let digest = Sha256::digest(key.as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    dir.join(format!("riesz-{hex}.bin"))
}

#[derive(serde::Serialize, serde::Deserialize, PartialEq)]
struct CacheHeader {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "R_max")]
    r_max: f64,
    stretch: f64,
    mu: f64,
}

fn read_cache(path: &Path, grid: &RadialGrid, mu: f64) -> Option<Vec<f64>> {
    let mut file = std::fs::File::open(path).ok()?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).ok()?;
    let newline = bytes.iter().position(|&b| b == b'\n')?;
    let header: CacheHeader = serde_json::from_slice(&bytes[..newline]).ok()?;
    let want = CacheHeader {
        n: grid.n,
        m: grid.m(),
        r_max: grid.r_max,
        stretch: grid.stretch,
        mu,
    };
    if header != want {
        return None;
    }
    let body = &bytes[newline + 1..];
    let m = grid.m();
    if body.len() != m * m * 8 {
        return None;
    }
    let mut gbar = Vec::with_capacity(m * m);
    for chunk in body.chunks_exact(8) {
        gbar.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Some(gbar)
}

fn write_cache(path: &Path, grid: &RadialGrid, mu: f64, gbar: &[f64]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let header = CacheHeader {
        n: grid.n,
        m: grid.m(),
        r_max: grid.r_max,
        stretch: grid.stretch,
        mu,
    };
    let tmp = path.with_extension("tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        serde_json::to_writer(&mut file, &header)?;
        file.write_all(b"\n")?;
        for &g in gbar {
            file.write_all(&g.to_le_bytes())?;
        }
    }
    std::fs::rename(&tmp, path)
}

impl RieszKernel {
    /// Full matrix entry K_ij with normalization and quadrature weight:
    /// (I_mu * f)(r_i) = sum_j K_ij f_j.
    pub fn matrix_entry(&self, i: usize, j: usize) -> f64 {
        self.a_nmu * self.grid.surface * self.gbar(i, j) * self.grid.weights[j]
    }

    /// Effective spherical-mean entry G(r_i, r_j) (diagonal-corrected in
    /// dense mode).
    pub fn gbar(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            KernelStorage::Shell { r_pow } => r_pow[i.max(j)],
            KernelStorage::Dense { gbar } => gbar[i * self.grid.m() + j],
        }
    }

    pub fn is_shell(&self) -> bool {
        matches!(self.storage, KernelStorage::Shell { .. })
    }

    /// Potential samples without the Riesz normalization:
    /// phi_i = |S^{N-1}| sum_j w_j G(r_i, r_j) f_j.
    pub fn bare_potential(&self, f: &[f64]) -> Vec<f64> {
        let m = self.grid.m();
        debug_assert_eq!(f.len(), m);
        let w = &self.grid.weights;
        let mut phi = vec![0.0; m];
        match &self.storage {
            KernelStorage::Shell { r_pow } => {
                // inner mass up to r_i, then the outer tail of w f r^{2-N}
                let mut inner = 0.0;
                let mut prefix = vec![0.0; m];
                for i in 0..m {
                    inner += w[i] * f[i];
                    prefix[i] = inner;
                }
                let mut outer = 0.0;
                for i in (0..m).rev() {
                    phi[i] = r_pow[i] * prefix[i] + outer;
                    outer += w[i] * f[i] * r_pow[i];
                }
            }
            KernelStorage::Dense { gbar } => {
                let wf: Vec<f64> = (0..m).map(|j| w[j] * f[j]).collect();
                for i in 0..m {
                    let row = &gbar[i * m..(i + 1) * m];
                    let mut s = 0.0;
                    for j in 0..m {
                        s += row[j] * wf[j];
                    }
                    phi[i] = s;
                }
            }
        }
        for v in phi.iter_mut() {
            *v *= self.grid.surface;
        }
        phi
    }

    /// The convolution I_mu * f sampled at the nodes.
    pub fn apply_riesz(&self, f: &RadialField) -> Result<RadialField, KernelError> {
        if !f.grid.same_discretization(&self.grid) {
            return Err(KernelError::Grid(GridError::GridMismatch));
        }
        let mut phi = self.bare_potential(&f.values);
        for v in phi.iter_mut() {
            *v *= self.a_nmu;
        }
        Ok(RadialField::new(self.grid.clone(), phi).expect("potential of finite samples"))
    }

    /// Bare double integral int int f(x) |x-y|^{-mu} g(y) dx dy, the
    /// pairing all sharp constants refer to.
    pub fn bare_pair_energy(&self, f: &RadialField, g: &RadialField) -> Result<f64, KernelError> {
        if !f.grid.same_discretization(&self.grid) || !g.grid.same_discretization(&self.grid) {
            return Err(KernelError::Grid(GridError::GridMismatch));
        }
        let phi = self.bare_potential(&g.values);
        Ok(self.grid.dot(&f.values, &phi))
    }

    /// D(f, g) = int (I_mu * f) g, the normalized pairing.
    pub fn pair_energy(&self, f: &RadialField, g: &RadialField) -> Result<f64, KernelError> {
        Ok(self.a_nmu * self.bare_pair_energy(f, g)?)
    }

    /// Ratio of the bare pairing of |f|, |g| to its sharp upper bound
    /// C(N,mu) |f|_t |g|_t with t = 2N/(2N-mu). Asserts the inequality up
    /// to 1e-3 discretization slack and returns the ratio.
    pub fn verify_hls(&self, f: &RadialField, g: &RadialField, c_nmu: f64) -> f64 {
        let absf = RadialField {
            grid: f.grid.clone(),
            values: f.values.iter().map(|v| v.abs()).collect(),
            tail_exponent: f.tail_exponent,
        };
        let absg = RadialField {
            grid: g.grid.clone(),
            values: g.values.iter().map(|v| v.abs()).collect(),
            tail_exponent: g.tail_exponent,
        };
        let t = 2.0 * self.grid.n as f64 / (2.0 * self.grid.n as f64 - self.mu);
        let d = self.bare_pair_energy(&absf, &absg).expect("same grid");
        let norms = absf.lp_norm_pow(t).powf(1.0 / t) * absg.lp_norm_pow(t).powf(1.0 / t);
        let ratio = d / (c_nmu * norms);
        assert!(
            ratio <= 1.0 + 1e-3,
            "sharp convolution bound violated: ratio = {ratio}"
        );
        ratio
    }
}
