//! The variational objects of the coupled system: the constrained energy
//! J, the Pohozaev functional P, the dilation fiber map t -> J(t * (u,v))
//! with its critical points and branch labels, Lagrange multipliers,
//! Euler-Lagrange residuals, and the scalar single-field functional.
//!
//! All pairings here are the bare double integrals
//! D(f, g) = int int f(x) |x-y|^{-mu} g(y); the sharp constants S_HL,
//! C(N,mu) and the Gagliardo-Nirenberg family refer to exactly this
//! normalization, so energies, thresholds and levels stay mutually
//! consistent without Riesz prefactors appearing anywhere.

use crate::field::RadialField;
use crate::kernel::RieszKernel;
use crate::params::{DerivedExponents, MassClass, ProblemParams};
use crate::scalar::bisect_newton;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("energy term {term} is not finite")]
    NonFiniteTerm { term: &'static str },
    #[error("field {which} is identically zero; the quantity is undefined")]
    ZeroField { which: &'static str },
    #[error("no critical interaction term (beta = 0); the fiber map has no maximum")]
    NoCriticalTerm,
    #[error("fiber slope overflowed before a sign change was bracketed")]
    FiberBracket,
    #[error(transparent)]
    Param(#[from] crate::params::ParamError),
    #[error(transparent)]
    Kernel(#[from] crate::kernel::KernelError),
}

/// The three integral quantities every functional is assembled from,
/// plus the field masses. alpha is the total kinetic energy, beta the
/// self-interaction of the critical powers, delta the coupling pairing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub masses: (f64, f64),
}

impl EnergyBreakdown {
    /// J = alpha/2 - beta/(2 * 2*_mu) - nu * delta.
    pub fn j(&self, nu: f64, exps: &DerivedExponents) -> f64 {
        0.5 * self.alpha - self.beta / (2.0 * exps.two_star_mu) - nu * self.delta
    }

    /// P = alpha - beta - nu (gamma_p + gamma_q) delta.
    pub fn p(&self, nu: f64, exps: &DerivedExponents) -> f64 {
        self.alpha - self.beta - nu * exps.gamma_sum() * self.delta
    }

    /// P normalized by the kinetic scale, the solver's stopping measure.
    pub fn p_residual(&self, nu: f64, exps: &DerivedExponents) -> f64 {
        self.p(nu, exps) / self.alpha.max(1e-30)
    }
}

/// Branch label of a fiber critical point by the sign of the second
/// derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchKind {
    Plus,
    Minus,
    Degenerate,
}

/// Critical points of the fiber map, in increasing t.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberReport {
    pub roots: Vec<f64>,
    pub kinds: Vec<BranchKind>,
    pub values: Vec<f64>,
}

pub(crate) fn abs_pow(values: &[f64], p: f64) -> Vec<f64> {
    values.iter().map(|&v| v.abs().powf(p)).collect()
}

/// |u|^{p-2} u evaluated safely for p possibly below 2.
pub(crate) fn signed_pow(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.abs().powf(p - 1.0) * v.signum()
    }
}

/// Evaluates the energy terms of a pair of fields against one kernel.
pub fn breakdown(
    params: &ProblemParams,
    kernel: &RieszKernel,
    u: &RadialField,
    v: &RadialField,
) -> Result<EnergyBreakdown, EnergyError> {
    let exps = params.validate()?;
    let grid = &kernel.grid;
    if !u.grid.same_discretization(grid) || !v.grid.same_discretization(grid) {
        return Err(EnergyError::Kernel(crate::kernel::KernelError::Grid(
            crate::grid::GridError::GridMismatch,
        )));
    }
    let alpha = u.kinetic() + v.kinetic();
    let up = abs_pow(&u.values, exps.two_star_mu);
    let vp = abs_pow(&v.values, exps.two_star_mu);
    let phi_u = kernel.bare_potential(&up);
    let phi_v = kernel.bare_potential(&vp);
    let beta = grid.dot(&up, &phi_u) + grid.dot(&vp, &phi_v);
    let ucoup = abs_pow(&u.values, params.p);
    let vcoup = abs_pow(&v.values, params.q);
    let delta = grid.dot(&ucoup, &kernel.bare_potential(&vcoup));
    let masses = (u.mass(), v.mass());
    let bd = EnergyBreakdown {
        alpha,
        beta,
        delta,
        masses,
    };
    for (value, term) in [
        (alpha, "alpha"),
        (beta, "beta"),
        (delta, "delta"),
        (masses.0, "mass of u"),
        (masses.1, "mass of v"),
    ] {
        if !value.is_finite() {
            return Err(EnergyError::NonFiniteTerm { term });
        }
    }
    Ok(bd)
}

/// J and its term breakdown.
pub fn energy(
    params: &ProblemParams,
    kernel: &RieszKernel,
    u: &RadialField,
    v: &RadialField,
) -> Result<(f64, EnergyBreakdown), EnergyError> {
    let exps = params.validate()?;
    let bd = breakdown(params, kernel, u, v)?;
    Ok((bd.j(params.nu, &exps), bd))
}

/// The Pohozaev functional P.
pub fn pohozaev(
    params: &ProblemParams,
    kernel: &RieszKernel,
    u: &RadialField,
    v: &RadialField,
) -> Result<f64, EnergyError> {
    let exps = params.validate()?;
    let bd = breakdown(params, kernel, u, v)?;
    Ok(bd.p(params.nu, &exps))
}

/// The fiber map Psi(t) = J(t * (u, v)) and its first two t-derivatives,
/// evaluated in closed exponential form from the breakdown. No field is
/// resampled: the dilation acts on (alpha, beta, delta) exactly.
pub fn fiber(
    bd: &EnergyBreakdown,
    params: &ProblemParams,
    t: f64,
) -> Result<(f64, f64, f64), EnergyError> {
    let exps = params.validate()?;
    Ok(fiber_terms(bd, params.nu, &exps, t))
}

pub(crate) fn fiber_terms(
    bd: &EnergyBreakdown,
    nu: f64,
    exps: &DerivedExponents,
    t: f64,
) -> (f64, f64, f64) {
    let e = exps.double_two_star();
    let gs = exps.gamma_sum();
    let (ka, kb, kd) = ((2.0 * t).exp(), (e * t).exp(), (gs * t).exp());
    let psi = 0.5 * ka * bd.alpha - kb * bd.beta / e - nu * kd * bd.delta;
    let dpsi = ka * bd.alpha - kb * bd.beta - nu * gs * kd * bd.delta;
    let ddpsi = 2.0 * ka * bd.alpha - e * kb * bd.beta - nu * gs * gs * kd * bd.delta;
    (psi, dpsi, ddpsi)
}

const DEGENERACY_BAND: f64 = 1e-10;

/// Marches from `start` in direction `dir` with doubling steps until the
/// sign of `g` flips, returning the bracketing interval in increasing
/// order.
fn march_to_sign_change(start: f64, dir: f64, g: &impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    let g0 = g(start);
    // a start sitting exactly on the root needs no bracket, and its sign
    // (+0.0 vs -0.0) carries no direction information
    if g0 == 0.0 {
        return Some((start, start));
    }
    let s0 = g0.signum();
    let mut step = 0.25;
    let mut prev = start;
    for _ in 0..120 {
        let next = prev + dir * step;
        let gn = g(next);
        if gn.is_nan() {
            return None;
        }
        if gn.signum() != s0 {
            return Some(if dir > 0.0 { (prev, next) } else { (next, prev) });
        }
        prev = next;
        step *= 2.0;
    }
    None
}

/// Finds every critical point of the fiber map by bracketing the zeros
/// of g(t) = e^{-2t} Psi'(t) = alpha - beta e^{(2 2*_mu - 2)t}
/// - nu gs delta e^{(gs - 2)t}, whose derivative changes sign at most
/// once, then polishing with bisection plus Newton to 1e-13 in t.
///
/// The returned report may be empty (no critical point exists, e.g. the
/// critical mass class with alpha <= 2 nu delta) and callers must treat
/// that as a landscape diagnostic, never fabricate a root.
pub fn fiber_critical_points(
    bd: &EnergyBreakdown,
    params: &ProblemParams,
) -> Result<FiberReport, EnergyError> {
    let exps = params.validate()?;
    let nu = params.nu;
    if !(bd.alpha > 0.0) {
        return Err(EnergyError::ZeroField { which: "(u, v)" });
    }
    if bd.beta <= 0.0 {
        return Err(EnergyError::NoCriticalTerm);
    }
    if !bd.beta.is_finite() || !bd.delta.is_finite() || !bd.alpha.is_finite() {
        return Err(EnergyError::NonFiniteTerm {
            term: "fiber pairings",
        });
    }
    let e = exps.double_two_star();
    let gs = exps.gamma_sum();
    let (alpha, beta, delta) = (bd.alpha, bd.beta, bd.delta);

    let mut roots: Vec<f64> = Vec::new();
    let mut degenerate_at: Option<f64> = None;

    if nu == 0.0 || delta == 0.0 {
        // decoupled scalar fiber: e^{(2 2*_mu - 2) t} = alpha / beta
        roots.push((alpha / beta).ln() / (e - 2.0));
    } else {
        let g = |t: f64| {
            alpha - beta * ((e - 2.0) * t).exp() - nu * gs * delta * ((gs - 2.0) * t).exp()
        };
        let dg = |t: f64| {
            -beta * (e - 2.0) * ((e - 2.0) * t).exp()
                - nu * gs * (gs - 2.0) * delta * ((gs - 2.0) * t).exp()
        };
        // c1 < 0 makes g rise to a single interior maximum, otherwise
        // g is strictly decreasing
        let c1 = nu * gs * (gs - 2.0) * delta;
        let xtol = 1e-13;
        if c1 >= 0.0 {
            let g_lower_limit = if (gs - 2.0).abs() <= crate::params::MASS_CLASS_BAND {
                alpha - nu * gs * delta
            } else if gs > 2.0 {
                alpha
            } else {
                // gs < 2 with nu < 0: the coupling term blows up
                f64::INFINITY
            };
            if g_lower_limit > 0.0 {
                let dir = if g(0.0) > 0.0 { 1.0 } else { -1.0 };
                let (lo, hi) =
                    march_to_sign_change(0.0, dir, &g).ok_or(EnergyError::FiberBracket)?;
                roots.push(
                    bisect_newton(lo, hi, &g, Some(&dg), xtol)
                        .ok_or(EnergyError::FiberBracket)?,
                );
            }
        } else {
            // interior maximum of g at t_hat
            let t_hat = ((-c1) / (beta * (e - 2.0))).ln() / (e - gs);
            let g_max = g(t_hat);
            if g_max.abs() <= DEGENERACY_BAND * alpha {
                degenerate_at = Some(t_hat);
            } else if g_max > 0.0 {
                if gs < 2.0 {
                    // nu > 0 subcritical: g -> -inf on both sides
                    let (llo, lhi) = march_to_sign_change(t_hat, -1.0, &g)
                        .ok_or(EnergyError::FiberBracket)?;
                    roots.push(
                        bisect_newton(llo, lhi, &g, Some(&dg), xtol)
                            .ok_or(EnergyError::FiberBracket)?,
                    );
                } // nu < 0 supercritical: g -> alpha > 0 on the left, no root there
                let (rlo, rhi) =
                    march_to_sign_change(t_hat, 1.0, &g).ok_or(EnergyError::FiberBracket)?;
                roots.push(
                    bisect_newton(rlo, rhi, &g, Some(&dg), xtol)
                        .ok_or(EnergyError::FiberBracket)?,
                );
            }
        }
    }

    let mut report = FiberReport {
        roots: Vec::new(),
        kinds: Vec::new(),
        values: Vec::new(),
    };
    for t in roots {
        let (psi, _, ddpsi) = fiber_terms(bd, nu, &exps, t);
        let kind = if ddpsi.abs() <= DEGENERACY_BAND * alpha {
            BranchKind::Degenerate
        } else if ddpsi > 0.0 {
            BranchKind::Plus
        } else {
            BranchKind::Minus
        };
        report.roots.push(t);
        report.kinds.push(kind);
        report.values.push(psi);
    }
    if let Some(t) = degenerate_at {
        let (psi, _, _) = fiber_terms(bd, nu, &exps, t);
        report.roots.push(t);
        report.kinds.push(BranchKind::Degenerate);
        report.values.push(psi);
    }
    Ok(report)
}

/// Weak-form gradients of J with respect to the node values of u and v;
/// the directional derivative of J along (h_u, h_v) is the plain dot
/// product of these vectors with the perturbation samples.
pub fn energy_gradients(
    params: &ProblemParams,
    kernel: &RieszKernel,
    u: &RadialField,
    v: &RadialField,
) -> Result<(Vec<f64>, Vec<f64>), EnergyError> {
    let exps = params.validate()?;
    let grid = &kernel.grid;
    let m = grid.m();
    let ts = exps.two_star_mu;
    let phi_u = kernel.bare_potential(&abs_pow(&u.values, ts));
    let phi_v = kernel.bare_potential(&abs_pow(&v.values, ts));
    let phi_up = kernel.bare_potential(&abs_pow(&u.values, params.p));
    let phi_vq = kernel.bare_potential(&abs_pow(&v.values, params.q));
    let mut grad_u = grid.apply_stiffness(&u.values);
    let mut grad_v = grid.apply_stiffness(&v.values);
    for i in 0..m {
        let wi = grid.surface * grid.weights[i];
        grad_u[i] -= wi
            * (phi_u[i] * signed_pow(u.values[i], ts)
                + params.nu * params.p * phi_vq[i] * signed_pow(u.values[i], params.p));
        grad_v[i] -= wi
            * (phi_v[i] * signed_pow(v.values[i], ts)
                + params.nu * params.q * phi_up[i] * signed_pow(v.values[i], params.q));
    }
    Ok((grad_u, grad_v))
}

/// Lagrange multipliers and relative Euler-Lagrange residuals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ElReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub res1: f64,
    pub res2: f64,
}

/// Computes the multipliers from the constraint pairings,
/// lambda1 = a^{-2} [ -|grad u|^2 + D(|u|^{2*_mu}, |u|^{2*_mu})
/// + nu p D(|v|^q, |u|^p) ], and the relative L2 residuals of the strong
/// equations -Lap u + lambda1 u = (critical term) + (coupling term).
/// The residual is normalized by the sum of the term norms, so 1e-4
/// means the equation balances to four digits against its own scale.
pub fn el_residual_and_multipliers(
    params: &ProblemParams,
    kernel: &RieszKernel,
    u: &RadialField,
    v: &RadialField,
) -> Result<ElReport, EnergyError> {
    let exps = params.validate()?;
    let grid = &kernel.grid;
    let m = grid.m();
    let ts = exps.two_star_mu;
    let mass_u = u.mass();
    let mass_v = v.mass();
    if mass_u <= 0.0 {
        return Err(EnergyError::ZeroField { which: "u" });
    }
    if mass_v <= 0.0 {
        return Err(EnergyError::ZeroField { which: "v" });
    }

    let up_crit = abs_pow(&u.values, ts);
    let vp_crit = abs_pow(&v.values, ts);
    let up = abs_pow(&u.values, params.p);
    let vq = abs_pow(&v.values, params.q);
    let phi_u_crit = kernel.bare_potential(&up_crit);
    let phi_v_crit = kernel.bare_potential(&vp_crit);
    let phi_up = kernel.bare_potential(&up);
    let phi_vq = kernel.bare_potential(&vq);

    let beta_u = grid.dot(&up_crit, &phi_u_crit);
    let beta_v = grid.dot(&vp_crit, &phi_v_crit);
    let delta = grid.dot(&up, &phi_vq);
    let lambda1 = (-u.kinetic() + beta_u + params.nu * params.p * delta) / mass_u;
    let lambda2 = (-v.kinetic() + beta_v + params.nu * params.q * delta) / mass_v;

    let residual = |f: &RadialField,
                    lambda: f64,
                    phi_crit: &[f64],
                    phi_other: &[f64],
                    exponent: f64,
                    coupling: f64| {
        let weak = grid.apply_stiffness(&f.values);
        let mut norms = [0.0f64; 4];
        let mut num = 0.0;
        // the last node's row carries the artificial Dirichlet closure
        for i in 0..m - 1 {
            let w = grid.weights[i];
            let lap = weak[i] / (grid.surface * w);
            let linear = lambda * f.values[i];
            let crit = phi_crit[i] * signed_pow(f.values[i], ts);
            let coup = params.nu * coupling * phi_other[i] * signed_pow(f.values[i], exponent);
            let res = lap + linear - crit - coup;
            num += w * res * res;
            for (acc, term) in norms.iter_mut().zip([lap, linear, crit, coup]) {
                *acc += w * term * term;
            }
        }
        let den: f64 = norms.iter().map(|n| n.sqrt()).sum();
        num.sqrt() / den.max(1e-300)
    };
    let res1 = residual(u, lambda1, &phi_u_crit, &phi_vq, params.p, params.p);
    let res2 = residual(v, lambda2, &phi_v_crit, &phi_up, params.q, params.q);
    Ok(ElReport {
        lambda1,
        lambda2,
        res1,
        res2,
    })
}

/// Maximum over the dilation fiber of the scalar critical functional,
/// in closed form: ((2*_mu - 1)/(2 2*_mu)) (alpha^{2*_mu}/beta)^{1/(2*_mu - 1)}.
pub fn scalar_fiber_max(alpha: f64, beta: f64, two_star_mu: f64) -> f64 {
    (two_star_mu - 1.0) / (2.0 * two_star_mu)
        * (alpha.powf(two_star_mu) / beta).powf(1.0 / (two_star_mu - 1.0))
}

/// The single-field critical functional K(u) = |grad u|^2/2
/// - D(|u|^{2*_mu}, |u|^{2*_mu})/(2 2*_mu) and its fiber maximum.
pub fn scalar_k_and_fiber_max(
    n: u32,
    mu: f64,
    kernel: &RieszKernel,
    u: &RadialField,
) -> Result<(f64, f64), EnergyError> {
    let ts = (2.0 * n as f64 - mu) / (n as f64 - 2.0);
    let alpha = u.kinetic();
    if !(alpha > 0.0) {
        return Err(EnergyError::ZeroField { which: "u" });
    }
    let up = abs_pow(&u.values, ts);
    let beta = kernel.grid.dot(&up, &kernel.bare_potential(&up));
    if beta <= 0.0 {
        return Err(EnergyError::NoCriticalTerm);
    }
    let k = 0.5 * alpha - beta / (2.0 * ts);
    Ok((k, scalar_fiber_max(alpha, beta, ts)))
}

/// True when the mass class admits the two-branch landscape used by the
/// subcritical solver.
pub fn is_two_branch(exps: &DerivedExponents) -> bool {
    exps.mass_class == MassClass::Subcritical
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubble;
    use crate::constants;
    use crate::grid::build_grid;
    use crate::kernel::build_kernel;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn setup(p: f64, q: f64, nu: f64) -> (ProblemParams, RieszKernel) {
        let params = ProblemParams {
            n: 3,
            mu: 1.0,
            p,
            q,
            nu,
            a: 1.0,
            b: 1.0,
        };
        let grid = Arc::new(build_grid(3, 256, 20.0, 2.0).unwrap());
        let kernel = build_kernel(grid, 1.0, 0.25 / std::f64::consts::PI).unwrap();
        (params, kernel)
    }

    fn normalized_pair(
        kernel: &RieszKernel,
        params: &ProblemParams,
        rng: &mut StdRng,
    ) -> (RadialField, RadialField) {
        let grid = &kernel.grid;
        let mut random_field = |rng: &mut StdRng| {
            let width: f64 = rng.gen_range(0.6..2.5);
            let bump: f64 = rng.gen_range(0.0..0.4);
            let mut f = RadialField::from_fn(grid.clone(), move |r| {
                (-r * r / (2.0 * width * width)).exp() * (1.0 + bump * (1.3 * r).cos())
            })
            .unwrap();
            f.renormalize_mass(1.0);
            f
        };
        let mut u = random_field(rng);
        let mut v = random_field(rng);
        u.renormalize_mass(params.a * params.a);
        v.renormalize_mass(params.b * params.b);
        (u, v)
    }

    #[test]
    fn zero_fields_have_zero_energy() {
        let (params, kernel) = setup(2.0, 2.0, 1.0);
        let zero = RadialField::new(kernel.grid.clone(), vec![0.0; kernel.grid.m()]).unwrap();
        let (j, bd) = energy(&params, &kernel, &zero, &zero).unwrap();
        assert_eq!(j, 0.0);
        assert_eq!((bd.alpha, bd.beta, bd.delta), (0.0, 0.0, 0.0));
    }

    #[test]
    fn energy_reconstructs_from_breakdown_terms() {
        let mut rng = StdRng::seed_from_u64(2);
        let (params, kernel) = setup(2.0, 2.2, 0.7);
        let exps = params.validate().unwrap();
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (j, bd) = energy(&params, &kernel, &u, &v).unwrap();
        let manual = 0.5 * bd.alpha - bd.beta / (2.0 * exps.two_star_mu) - params.nu * bd.delta;
        assert_relative_eq!(j, manual, max_relative = 1e-12);
        let p = pohozaev(&params, &kernel, &u, &v).unwrap();
        let manual_p = bd.alpha - bd.beta - params.nu * exps.gamma_sum() * bd.delta;
        assert_relative_eq!(p, manual_p, max_relative = 1e-12);
        assert!(bd.alpha > 0.0 && bd.beta > 0.0 && bd.delta > 0.0);
    }

    #[test]
    fn decoupled_energy_splits_into_scalar_parts() {
        let mut rng = StdRng::seed_from_u64(3);
        let (mut params, kernel) = setup(2.0, 2.0, 0.0);
        params.nu = 0.0;
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (j, _) = energy(&params, &kernel, &u, &v).unwrap();
        let (ku, _) = scalar_k_and_fiber_max(3, 1.0, &kernel, &u).unwrap();
        let (kv, _) = scalar_k_and_fiber_max(3, 1.0, &kernel, &v).unwrap();
        assert_relative_eq!(j, ku + kv, max_relative = 1e-12);
    }

    #[test]
    fn energy_decreases_in_coupling_strength() {
        let mut rng = StdRng::seed_from_u64(4);
        let (params, kernel) = setup(2.0, 2.0, 0.3);
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let mut last = f64::INFINITY;
        for nu in [0.0, 0.5, 1.0, 2.0] {
            let p = ProblemParams { nu, ..params };
            let (j, _) = energy(&p, &kernel, &u, &v).unwrap();
            assert!(j < last);
            last = j;
        }
    }

    #[test]
    fn pohozaev_equals_fiber_slope_at_origin() {
        let mut rng = StdRng::seed_from_u64(5);
        let (params, kernel) = setup(2.1, 2.0, 0.8);
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
        let p = pohozaev(&params, &kernel, &u, &v).unwrap();
        let (psi0, dpsi0, _) = fiber(&bd, &params, 0.0).unwrap();
        assert_relative_eq!(dpsi0, p, max_relative = 1e-12);
        assert_relative_eq!(psi0, bd.j(params.nu, &params.validate().unwrap()));
    }

    #[test]
    fn fiber_derivatives_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(6);
        let (params, kernel) = setup(2.0, 2.3, 1.1);
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
        let h = 1e-5;
        for t in [-0.7, 0.0, 0.4] {
            let (_, dpsi, ddpsi) = fiber(&bd, &params, t).unwrap();
            let (pp, dp_p, _) = fiber(&bd, &params, t + h).unwrap();
            let (pm, dp_m, _) = fiber(&bd, &params, t - h).unwrap();
            assert_relative_eq!(dpsi, (pp - pm) / (2.0 * h), max_relative = 1e-8);
            assert_relative_eq!(ddpsi, (dp_p - dp_m) / (2.0 * h), max_relative = 1e-8);
        }
    }

    #[test]
    fn fiber_matches_direct_dilation_energy() {
        let mut rng = StdRng::seed_from_u64(7);
        let (params, kernel) = setup(2.0, 2.0, 0.9);
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
        for t in [-1.0, -0.3, 0.2, 0.6, 1.0] {
            let (psi, _, _) = fiber(&bd, &params, t).unwrap();
            let ut = u.dilate(t).unwrap();
            let vt = v.dilate(t).unwrap();
            let (direct, _) = energy(&params, &kernel, &ut.field, &vt.field).unwrap();
            assert!(
                (psi - direct).abs() <= 1e-3 * (1.0 + psi.abs()),
                "fiber {psi} vs direct {direct} at t={t}"
            );
        }
    }

    #[test]
    fn subcritical_fiber_has_ordered_branch_pair() {
        let mut rng = StdRng::seed_from_u64(8);
        // gamma_p + gamma_q = 1 < 2, nu below the frozen threshold 1.4356
        let (params, kernel) = setup(2.0, 2.0, 0.7);
        for _ in 0..20 {
            let (u, v) = normalized_pair(&kernel, &params, &mut rng);
            let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
            let report = fiber_critical_points(&bd, &params).unwrap();
            assert_eq!(report.roots.len(), 2, "expected two branches");
            assert!(report.roots[0] < report.roots[1]);
            assert_eq!(report.kinds, vec![BranchKind::Plus, BranchKind::Minus]);
            assert!(report.values[0] < 0.0, "local minimum level {}", report.values[0]);
            assert!(report.values[1] > report.values[0]);
            for &t in &report.roots {
                let (_, dpsi, _) = fiber(&bd, &params, t).unwrap();
                assert!(dpsi.abs() <= 1e-9 * bd.alpha);
            }
        }
    }

    #[test]
    fn supercritical_fiber_has_unique_maximum_with_sign_rule() {
        let mut rng = StdRng::seed_from_u64(9);
        let (params, kernel) = setup(2.4, 2.4, 1.0);
        assert_eq!(
            params.validate().unwrap().mass_class,
            MassClass::Supercritical
        );
        let exps = params.validate().unwrap();
        let mut saw_negative_p = false;
        for _ in 0..20 {
            let (u, v) = normalized_pair(&kernel, &params, &mut rng);
            let (_, bd0) = energy(&params, &kernel, &u, &v).unwrap();
            // the dilated pair stays on the constraint; transforming the
            // breakdown in closed form concentrates it until P < 0
            let concentrated = EnergyBreakdown {
                alpha: bd0.alpha * (2.0f64 * 2.0).exp(),
                beta: bd0.beta * (exps.double_two_star() * 2.0).exp(),
                delta: bd0.delta * (exps.gamma_sum() * 2.0).exp(),
                masses: bd0.masses,
            };
            for bd in [bd0, concentrated] {
                let p = bd.p(params.nu, &exps);
                let report = fiber_critical_points(&bd, &params).unwrap();
                assert_eq!(report.roots.len(), 1);
                assert_eq!(report.kinds[0], BranchKind::Minus);
                assert!(report.values[0] > 0.0);
                if p < 0.0 {
                    saw_negative_p = true;
                    assert!(report.roots[0] < 0.0, "t root must share the sign of P");
                } else {
                    assert!(report.roots[0] >= 0.0);
                }
            }
        }
        assert!(saw_negative_p, "trial set never exercised the sign rule");
    }

    #[test]
    fn critical_fiber_root_exists_iff_kinetic_dominates() {
        let mut rng = StdRng::seed_from_u64(10);
        let (params, kernel) = setup(7.0 / 3.0, 7.0 / 3.0, 0.05);
        assert_eq!(params.validate().unwrap().mass_class, MassClass::Critical);
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
        assert!(bd.alpha > 2.0 * params.nu * bd.delta);
        let report = fiber_critical_points(&bd, &params).unwrap();
        assert_eq!(report.roots.len(), 1);
        assert_eq!(report.kinds[0], BranchKind::Minus);
        assert!(report.values[0] > 0.0);

        let big = ProblemParams {
            nu: 2.0 * bd.alpha / (2.0 * bd.delta),
            ..params
        };
        let empty = fiber_critical_points(&bd, &big).unwrap();
        assert!(empty.roots.is_empty());
    }

    #[test]
    fn negative_coupling_keeps_a_unique_maximum() {
        let mut rng = StdRng::seed_from_u64(11);
        for (p, q) in [(2.0, 2.0), (2.4, 2.4)] {
            let (params, kernel) = setup(p, q, -0.5);
            let (u, v) = normalized_pair(&kernel, &params, &mut rng);
            let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
            let report = fiber_critical_points(&bd, &params).unwrap();
            assert_eq!(report.roots.len(), 1, "nu<0 fiber at p=q={p}");
            assert_eq!(report.kinds[0], BranchKind::Minus);
            let (_, dpsi, _) = fiber(&bd, &params, report.roots[0]).unwrap();
            assert!(dpsi.abs() <= 1e-9 * bd.alpha);
        }
    }

    #[test]
    fn decoupled_fiber_falls_back_to_scalar_root() {
        let mut rng = StdRng::seed_from_u64(12);
        let (params, kernel) = setup(2.0, 2.0, 0.0);
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
        let report = fiber_critical_points(&bd, &params).unwrap();
        let expected = (bd.alpha / bd.beta).ln() / (params.validate().unwrap().double_two_star() - 2.0);
        assert_eq!(report.roots.len(), 1);
        assert_relative_eq!(report.roots[0], expected, max_relative = 1e-12);
        assert_eq!(report.kinds[0], BranchKind::Minus);
    }

    #[test]
    fn missing_critical_term_is_rejected() {
        let (params, _) = setup(2.0, 2.0, 1.0);
        let bd = EnergyBreakdown {
            alpha: 1.0,
            beta: 0.0,
            delta: 0.5,
            masses: (1.0, 1.0),
        };
        assert!(matches!(
            fiber_critical_points(&bd, &params),
            Err(EnergyError::NoCriticalTerm)
        ));
    }

    #[test]
    fn tuned_breakdown_reports_degenerate_tangency() {
        let (params, _) = setup(2.0, 2.0, 1.0);
        let exps = params.validate().unwrap();
        let e = exps.double_two_star();
        let gs = exps.gamma_sum();
        let (beta, delta) = (0.8, 0.6);
        let c1 = params.nu * gs * (gs - 2.0) * delta;
        let t_hat = ((-c1) / (beta * (e - 2.0))).ln() / (e - gs);
        // choose alpha so the maximum of g sits exactly at zero
        let alpha =
            beta * ((e - 2.0) * t_hat).exp() + params.nu * gs * delta * ((gs - 2.0) * t_hat).exp();
        let bd = EnergyBreakdown {
            alpha,
            beta,
            delta,
            masses: (1.0, 1.0),
        };
        let report = fiber_critical_points(&bd, &params).unwrap();
        assert_eq!(report.kinds, vec![BranchKind::Degenerate]);
        assert_relative_eq!(report.roots[0], t_hat, max_relative = 1e-10);
    }

    #[test]
    fn branch_kinds_survive_small_field_noise() {
        let mut rng = StdRng::seed_from_u64(13);
        let (params, kernel) = setup(2.0, 2.0, 0.7);
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
        let base = fiber_critical_points(&bd, &params).unwrap();
        let mut noisy_u = u.clone();
        for val in noisy_u.values.iter_mut() {
            *val *= 1.0 + 1e-8 * rng.gen_range(-1.0..1.0);
        }
        let (_, bd2) = energy(&params, &kernel, &noisy_u, &v).unwrap();
        let perturbed = fiber_critical_points(&bd2, &params).unwrap();
        assert_eq!(base.kinds, perturbed.kinds);
    }

    #[test]
    fn gradient_matches_energy_finite_differences() {
        let mut rng = StdRng::seed_from_u64(14);
        let (params, kernel) = setup(2.0, 2.2, 0.9);
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (gu, gv) = energy_gradients(&params, &kernel, &u, &v).unwrap();
        let m = kernel.grid.m();
        for trial in 0..5 {
            let h: Vec<f64> = (0..m)
                .map(|i| {
                    let r = kernel.grid.nodes[i];
                    (-0.5 * r * r).exp() * ((trial as f64 + 1.0) * r).sin()
                })
                .collect();
            let predicted: f64 = (0..m).map(|i| gu[i] * h[i] + gv[i] * h[i]).sum();
            let eps = 1e-6;
            let shift = |sign: f64| {
                let up = RadialField::new(
                    kernel.grid.clone(),
                    (0..m).map(|i| u.values[i] + sign * eps * h[i]).collect(),
                )
                .unwrap();
                let vp = RadialField::new(
                    kernel.grid.clone(),
                    (0..m).map(|i| v.values[i] + sign * eps * h[i]).collect(),
                )
                .unwrap();
                energy(&params, &kernel, &up, &vp).unwrap().0
            };
            let observed = (shift(1.0) - shift(-1.0)) / (2.0 * eps);
            assert_relative_eq!(predicted, observed, max_relative = 1e-5);
        }
    }

    #[test]
    fn multiplier_identity_ties_masses_to_coupling() {
        let mut rng = StdRng::seed_from_u64(15);
        let (params, kernel) = setup(2.0, 2.1, 1.2);
        let exps = params.validate().unwrap();
        let (u, v) = normalized_pair(&kernel, &params, &mut rng);
        let (_, bd) = energy(&params, &kernel, &u, &v).unwrap();
        let el = el_residual_and_multipliers(&params, &kernel, &u, &v).unwrap();
        let lhs = bd.masses.0 * el.lambda1 + bd.masses.1 * el.lambda2;
        let p = bd.p(params.nu, &exps);
        let rhs = -p + params.nu * (params.p + params.q - exps.gamma_sum()) * bd.delta;
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
        assert!(el.res1 > 0.0 && el.res1.is_finite());
        assert!(el.res2 > 0.0 && el.res2.is_finite());
    }

    #[test]
    fn zero_field_multiplier_is_rejected() {
        let (params, kernel) = setup(2.0, 2.0, 1.0);
        let zero = RadialField::new(kernel.grid.clone(), vec![0.0; kernel.grid.m()]).unwrap();
        let g = RadialField::from_fn(kernel.grid.clone(), |r| (-r * r).exp()).unwrap();
        assert!(matches!(
            el_residual_and_multipliers(&params, &kernel, &zero, &g),
            Err(EnergyError::ZeroField { which: "u" })
        ));
    }

    #[test]
    fn scalar_fiber_max_agrees_with_numeric_scan() {
        let mut rng = StdRng::seed_from_u64(16);
        let (params, kernel) = setup(2.0, 2.0, 0.0);
        let (u, _) = normalized_pair(&kernel, &params, &mut rng);
        let (_, closed) = scalar_k_and_fiber_max(3, 1.0, &kernel, &u).unwrap();
        let ts = 5.0;
        let alpha = u.kinetic();
        let up = abs_pow(&u.values, ts);
        let beta = kernel.grid.dot(&up, &kernel.bare_potential(&up));
        let psi = |t: f64| 0.5 * (2.0 * t).exp() * alpha - ((2.0 * ts) * t).exp() * beta / (2.0 * ts);
        let mut best = f64::NEG_INFINITY;
        let mut t = -2.0;
        while t <= 4.0 {
            best = best.max(psi(t));
            t += 1e-4;
        }
        assert_relative_eq!(closed, best, max_relative = 1e-7);
        assert!(closed >= best);
    }

    #[test]
    fn scalar_fiber_max_is_amplitude_invariant() {
        let mut rng = StdRng::seed_from_u64(17);
        let (params, kernel) = setup(2.0, 2.0, 0.0);
        let (u, _) = normalized_pair(&kernel, &params, &mut rng);
        let (_, base) = scalar_k_and_fiber_max(3, 1.0, &kernel, &u).unwrap();
        let doubled = RadialField::new(
            kernel.grid.clone(),
            u.values.iter().map(|v| 2.0 * v).collect(),
        )
        .unwrap();
        let (k2, scaled) = scalar_k_and_fiber_max(3, 1.0, &kernel, &doubled).unwrap();
        assert_relative_eq!(base, scaled, max_relative = 1e-12);
        let (k1, _) = scalar_k_and_fiber_max(3, 1.0, &kernel, &u).unwrap();
        assert!(k2 != k1);
    }

    #[test]
    fn truncated_bubble_fiber_max_approaches_sharp_level() {
        let grid = Arc::new(build_grid(3, 1024, 240.0, 3.0).unwrap());
        let kernel = build_kernel(grid.clone(), 1.0, 0.25 / std::f64::consts::PI).unwrap();
        let c_nmu = constants::hls_constant(3, 1.0).unwrap();
        let (_, _, bubble_level) = constants::sharp_constants(3, 1.0).unwrap();
        let s = constants::sobolev_constant(3);
        let tau = bubble::tilde_prefactor(3, 1.0, c_nmu, s);
        let eta = bubble::cutoff_bubble(grid.clone(), 0.05, 40.0, 80.0);
        let eta_tilde = RadialField::new(
            grid.clone(),
            eta.values.iter().map(|v| tau * v).collect(),
        )
        .unwrap();
        let (_, fiber_max) = scalar_k_and_fiber_max(3, 1.0, &kernel, &eta_tilde).unwrap();
        assert!(
            fiber_max >= 0.98 * bubble_level && fiber_max <= 1.05 * bubble_level,
            "fiber max {fiber_max} vs sharp level {bubble_level}"
        );
    }
}
