//! Locally optimal two-fidelity recovery at fixed data.
//!
//! The estimate is `Q f0^tau` with the data-dependent weight that minimizes the
//! Chebyshev bound. When `ker L0` lies in `ker P1` or in `ker L1` the bound is
//! provably attained, and the estimate is certified as the optimal one.

use serde::Serialize;

use crate::chebyshev::{center, ChebyshevReport, SdpPencil};
use crate::error::{OrexError, Result};
use crate::model::{
    lift_with, sigma_to_tau, validate_with, KernelCase, MultiFidelityProblem, Observation, Tolerances,
};
use crate::numerics::{nullspace_basis, pseudo_inverse, Vector};
use crate::oracle::{sampled_half_diameter, SampleBudget};

#[derive(Debug, Clone)]
pub struct LocalReport {
    pub estimate: Vector,
    /// Weight on `||P1 (f0 - f1)||^2` in the original regularizer.
    pub tau_y: f64,
    /// The same weight on the compound space.
    pub sigma_star: f64,
    pub c0: f64,
    pub c1: f64,
    pub radius: f64,
    pub certified: bool,
    pub kernel_case: KernelCase,
    pub cheb: ChebyshevReport,
}

/// Local SDP in the original variables on `ker L0 x ker L1`.
#[derive(Debug, Clone)]
pub struct LocalSdp {
    pub u0: Vector,
    pub u1: Vector,
    /// Multipliers `(c, d)` of this pencil are `(c0, c1)`.
    pub pencil: SdpPencil,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusBound {
    pub upper: f64,
    pub lower: f64,
    /// Half the distance between the witness images, when both witnesses are feasible.
    pub witness: Option<f64>,
    pub sampled: f64,
}

pub fn local_recover(p: &MultiFidelityProblem, obs: &Observation) -> Result<LocalReport> {
    local_recover_with(p, obs, Tolerances::default())
}

pub fn local_recover_with(p: &MultiFidelityProblem, obs: &Observation, tol: Tolerances) -> Result<LocalReport> {
    obs.check(p)?;
    let v = validate_with(p, &tol)?;
    if !v.ok {
        return Err(OrexError::ModelDegeneracy(v.detail));
    }
    let ops = lift_with(p, tol)?;
    let cheb = center(&ops, &obs.stacked())?;
    let (eps0, eps1) = (p.k0.radius, p.k1.radius);
    let sigma = cheb.tau_star;
    let lam = cheb.point.lambda_tau;
    Ok(LocalReport {
        estimate: cheb.center.clone(),
        tau_y: sigma_to_tau(sigma, eps0, eps1),
        sigma_star: sigma,
        c0: lam * (1.0 - sigma) / (eps0 * eps0),
        c1: lam * sigma / (eps1 * eps1),
        radius: cheb.radius_sq_upper.max(0.0).sqrt(),
        certified: v.kernel_case != KernelCase::None && cheb.exact,
        kernel_case: v.kernel_case,
        cheb,
    })
}

pub fn assemble_local_sdp(p: &MultiFidelityProblem, obs: &Observation) -> Result<LocalSdp> {
    assemble_local_sdp_with(p, obs, &Tolerances::default())
}

pub fn assemble_local_sdp_with(p: &MultiFidelityProblem, obs: &Observation, tol: &Tolerances) -> Result<LocalSdp> {
    obs.check(p)?;
    let lmi = crate::global::assemble_kernel_lmi_with(p, tol)?;
    let x0 = pseudo_inverse(&p.lambda0, tol.rank)? * &obs.y0;
    let x1 = pseudo_inverse(&p.lambda1, tol.rank)? * &obs.y1;
    let (p0, p1) = (&p.k0.operator, &p.k1.operator);
    let u0 = p0 * &x0;
    let u1 = p1 * (&x0 - &x1);
    let (h0, h1) = (&lmi.h0, &lmi.h1);
    let (k0, k1) = (h0.ncols(), h1.ncols());
    let mut g_c = Vector::zeros(k0 + k1);
    g_c.rows_mut(0, k0).copy_from(&((p0 * h0).transpose() * &u0));
    let mut g_d = Vector::zeros(k0 + k1);
    g_d.rows_mut(0, k0).copy_from(&((p1 * h0).transpose() * &u1));
    g_d.rows_mut(k0, k1).copy_from(&(-((p1 * h1).transpose() * &u1)));
    let pencil = SdpPencil {
        w_c: p.k0.radius.powi(2) - u0.norm_squared(),
        w_d: p.k1.radius.powi(2) - u1.norm_squared(),
        a_c: lmi.a,
        a_d: lmi.b,
        a_q: lmi.c,
        g_c,
        g_d,
    };
    Ok(LocalSdp { u0, u1, pencil })
}

/// Chebyshev upper bound against the witness pair and a sampled half-diameter.
pub fn local_radius_bound(p: &MultiFidelityProblem, obs: &Observation, budget: &SampleBudget) -> Result<RadiusBound> {
    let report = local_recover(p, obs)?;
    let ops = lift_with(p, Tolerances::default())?;
    let y = obs.stacked();
    let tol = ops.tol.cert;
    let (wp, wm) = &report.cheb.witnesses;
    let feasible = |w: &Vector| {
        (&ops.r * w).norm_squared() <= 1.0 + tol && (&ops.s * w).norm_squared() <= 1.0 + tol
    };
    let witness = (feasible(wp) && feasible(wm)).then(|| 0.5 * (&ops.q_tilde * (wp - wm)).norm());
    let sampled = if ops.kernel_dim() <= 12 { sampled_half_diameter(&ops, &y, budget)? } else { 0.0 };
    Ok(RadiusBound { upper: report.radius, lower: witness.unwrap_or(0.0).max(sampled), witness, sampled })
}

/// Kernel-basis orthogonality residuals at `tau` for both model pieces,
/// relative to the norms involved: `<P0 f0, P0 h0>` and `<P1 (f0 - f1), P1 (h0 - h1)>`
/// for every kernel direction `(h0, h1)`.
pub fn orthogonality_residuals(p: &MultiFidelityProblem, obs: &Observation, tau: f64) -> Result<(f64, f64)> {
    let (f0, f1) = p.regularize(obs, tau)?;
    let tol = Tolerances::default().rank;
    let h0 = nullspace_basis(&p.lambda0, tol)?;
    let h1 = nullspace_basis(&p.lambda1, tol)?;
    let (p0, p1) = (&p.k0.operator, &p.k1.operator);
    let a = p0 * &f0;
    let b = p1 * (&f0 - &f1);
    let mut r0 = 0.0f64;
    let mut r1 = 0.0f64;
    for j in 0..h0.ncols() {
        let d = p0 * h0.column(j);
        r0 = r0.max(a.dot(&d).abs() / (a.norm() * d.norm()).max(1e-300));
        let e = p1 * h0.column(j);
        r1 = r1.max(b.dot(&e).abs() / (b.norm() * e.norm()).max(1e-300));
    }
    for j in 0..h1.ncols() {
        let e = p1 * h1.column(j);
        r1 = r1.max(b.dot(&e).abs() / (b.norm() * e.norm()).max(1e-300));
    }
    Ok((r0, r1))
}
