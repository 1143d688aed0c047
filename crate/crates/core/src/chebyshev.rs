//! Chebyshev center and radius of `Qt({f : ||R f|| <= 1, ||S f|| <= 1, L f = y})`.
//!
//! The squared radius is bounded by `min_tau ||Qt h^tau||^2`; the bound is
//! attained, with witnesses `f^tau +- h^tau`, when `<R f, R h> = 0` or
//! `<S f, S h> = 0` at the minimizer.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{OrexError, Result};
use crate::model::CompoundOperators;
use crate::numerics::{least_squares, min_eig_sym, nullspace_basis, FactoredPencil, Matrix, Vector};
use crate::regpath::{RegPath, RegPoint};

/// Points in the initial scan of `||Qt h^tau||^2`.
const SCAN_POINTS: usize = 65;
const NEWTON_MAX_ITER: usize = 200;
const GOLDEN_TOL: f64 = 1e-8;

/// How `tau*` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMethod {
    /// Safeguarded Newton on `F(tau) = 0`.
    Newton,
    /// Golden-section search on `||Qt h^tau||^2` (no sign change of `F`).
    GoldenSection,
    /// Minimizer at an end of the admissible interval.
    Endpoint,
    /// Every `tau` gives the same bound (no kernel freedom, or a flat path).
    Trivial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauSearch {
    pub tau: f64,
    pub method: TauMethod,
    /// Newton reached `|F| <= tol` (always true for the other methods).
    pub converged: bool,
    /// Local minima of the scan whose values differ from the optimum by more than tolerance.
    pub candidates: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ChebyshevReport {
    pub center: Vector,
    pub radius_sq_upper: f64,
    pub tau_star: f64,
    /// `<R f, R h>` at `tau*`.
    pub ortho_residual_r: f64,
    /// `<S f, S h>` at `tau*`.
    pub ortho_residual_s: f64,
    pub exact: bool,
    pub witnesses: (Vector, Vector),
    pub point: RegPoint,
    pub search: TauSearch,
}

/// Minimize `||Qt h^tau||^2` over the admissible `tau` interval.
pub fn solve_tau_star(ops: &CompoundOperators, y: &Vector) -> Result<TauSearch> {
    let path = RegPath::new(ops, y)?;
    solve_on_path(&path)
}

fn phi(path: &RegPath, tau: f64) -> Result<f64> {
    Ok(path.point(tau)?.qh2)
}

fn golden(path: &RegPath, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = phi(path, c)?;
    let mut fd = phi(path, d)?;
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi(path, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi(path, d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Newton on `F` inside a bracket with `F(a) < 0 < F(b)`, bisecting whenever a step leaves it.
fn safeguarded_newton(path: &RegPath, mut a: f64, mut b: f64) -> Result<(f64, bool)> {
    let mut tau = 0.5 * (a + b);
    for _ in 0..NEWTON_MAX_ITER {
        let p = path.point(tau)?;
        let scale = p.rf2 + p.rh2 + p.sf2 + p.sh2;
        if p.f_val.abs() <= 1e-9 * scale.max(1e-300) {
            return Ok((tau, true));
        }
        if p.f_val < 0.0 {
            a = tau;
        } else {
            b = tau;
        }
        if b - a <= 4.0 * f64::EPSILON * b.max(1e-300) {
            return Ok((tau, true));
        }
        let step = path
            .derivatives_at(&p)
            .ok()
            .and_then(|d| d.f_prime)
            .filter(|fp| *fp > 0.0 && fp.is_finite())
            .map(|fp| tau - p.f_val / fp);
        tau = match step {
            Some(t) if t > a && t < b => t,
            _ => 0.5 * (a + b),
        };
    }
    Ok((tau, false))
}

fn solve_on_path(path: &RegPath) -> Result<TauSearch> {
    let (lo, hi) = path.domain();
    if path.ops().kernel_dim() == 0 {
        let tau = 0.5f64.clamp(lo, hi);
        path.point(tau)?;
        return Ok(TauSearch { tau, method: TauMethod::Trivial, converged: true, candidates: vec![] });
    }
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let pts: Vec<RegPoint> = grid.iter().map(|&t| path.point(t)).collect::<Result<_>>()?;
    let vals: Vec<f64> = pts.iter().map(|p| p.qh2).collect();
    let imin = (0..SCAN_POINTS).min_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let vmax = vals.iter().cloned().fold(0.0, f64::max);
    let flat_tol = 1e-9 * vmax.max(1e-300);
    let inner = &vals[1..SCAN_POINTS - 1];
    let spread = inner.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - inner.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread <= 1e-10 * vmax {
        // Flat bound: take the best-conditioned weight, away from both ends.
        let tau = grid[SCAN_POINTS / 2];
        return Ok(TauSearch { tau, method: TauMethod::Trivial, converged: true, candidates: vec![] });
    }

    let left = imin.saturating_sub(1);
    let right = (imin + 1).min(SCAN_POINTS - 1);
    let mut method = TauMethod::Newton;
    let mut converged = true;
    // Bracket on which F goes from negative to positive around the grid minimum.
    let bracket = if imin > left && pts[left].f_val < 0.0 && pts[imin].f_val >= 0.0 {
        Some((grid[left], grid[imin]))
    } else if right > imin && pts[imin].f_val < 0.0 && pts[right].f_val >= 0.0 {
        Some((grid[imin], grid[right]))
    } else {
        None
    };
    let mut tau = match bracket {
        Some((a, b)) => {
            let (t, ok) = safeguarded_newton(path, a, b)?;
            converged = ok;
            t
        }
        None if vals[imin] <= flat_tol => grid[imin],
        None => {
            method = TauMethod::GoldenSection;
            golden(path, grid[left], grid[right], GOLDEN_TOL)?
        }
    };
    // The ends of the interval compete with the interior result.
    let mut best = phi(path, tau)?;
    for &end in &[lo, hi] {
        let v = vals[if end == lo { 0 } else { SCAN_POINTS - 1 }];
        if v < best - flat_tol {
            best = v;
            tau = end;
            method = TauMethod::Endpoint;
            converged = true;
        }
    }
    if method == TauMethod::GoldenSection && (tau - lo).abs() < GOLDEN_TOL {
        tau = lo;
        method = TauMethod::Endpoint;
    } else if method == TauMethod::GoldenSection && (hi - tau).abs() < GOLDEN_TOL {
        tau = hi;
        method = TauMethod::Endpoint;
    }
    if method == TauMethod::GoldenSection {
        // Golden-section without a sign change may still have landed on a root.
        converged = true;
    }
    if method == TauMethod::Endpoint {
        let (t, v) = approach_clipped_end(path, tau, best);
        tau = t;
        best = v;
    }
    let tol = 1e-7 * best.max(flat_tol);
    let candidates = (0..SCAN_POINTS)
        .filter(|&i| {
            let l = if i > 0 { vals[i - 1] } else { f64::INFINITY };
            let r = if i + 1 < SCAN_POINTS { vals[i + 1] } else { f64::INFINITY };
            vals[i] <= l && vals[i] <= r && vals[i] > best + tol && (grid[i] - tau).abs() > 2.0 * (hi - lo) / (SCAN_POINTS - 1) as f64
        })
        .map(|i| grid[i])
        .collect();
    Ok(TauSearch { tau, method, converged, candidates })
}

/// Move a minimizer sitting at a clipped end of `[0, 1]` closer to the
/// singular endpoint, as long as the bound does not increase.
fn approach_clipped_end(path: &RegPath, tau: f64, value: f64) -> (f64, f64) {
    let (lo, hi) = path.domain();
    let offsets = [1e-9, 1e-12];
    let targets: Vec<f64> = if tau == lo && lo > 0.0 {
        offsets.to_vec()
    } else if tau == hi && hi < 1.0 {
        offsets.iter().map(|o| 1.0 - o).collect()
    } else {
        return (tau, value);
    };
    let (mut tau, mut value) = (tau, value);
    for t in targets {
        match path.point(t) {
            Ok(p) if p.qh2 <= value * (1.0 + 1e-9) + 1e-300 => {
                tau = t;
                value = p.qh2;
            }
            _ => break,
        }
    }
    (tau, value)
}

/// Candidate center, upper bound, and exactness certificate.
pub fn center(ops: &CompoundOperators, y: &Vector) -> Result<ChebyshevReport> {
    let path = RegPath::new(ops, y)?;
    let search = solve_on_path(&path)?;
    let point = path.point(search.tau)?;
    Ok(report_from_point(ops, point, search))
}

fn report_from_point(ops: &CompoundOperators, point: RegPoint, search: TauSearch) -> ChebyshevReport {
    let f = &point.f_tau;
    let h = &point.h_tau;
    let (rf, rh) = (&ops.r * f, &ops.r * h);
    let (sf, sh) = (&ops.s * f, &ops.s * h);
    let ortho_r = rf.dot(&rh);
    let ortho_s = sf.dot(&sh);
    let tol = ops.tol.cert;
    let ortho_ok = ortho_r.abs() <= tol * rf.norm() * rh.norm() || ortho_s.abs() <= tol * sf.norm() * sh.norm();
    let w_plus = f + h;
    let w_minus = f - h;
    let feasible = |w: &Vector| {
        (&ops.r * w).norm_squared() <= 1.0 + tol && (&ops.s * w).norm_squared() <= 1.0 + tol
    };
    let exact = ortho_ok && feasible(&w_plus) && feasible(&w_minus);
    ChebyshevReport {
        center: &ops.q_tilde * f,
        radius_sq_upper: point.qh2,
        tau_star: point.tau,
        ortho_residual_r: ortho_r,
        ortho_residual_s: ortho_s,
        exact,
        witnesses: (w_plus, w_minus),
        point,
        search,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneEllipsoid {
    pub center: Vector,
    pub radius_sq: f64,
    /// The `||T .||`-minimal data-consistent point.
    pub f_hat: Vector,
}

/// Chebyshev center of `Qt({f : ||T f|| <= 1, L f = y})`.
pub fn one_ellipsoid_center(t: &Matrix, lambda: &Matrix, y: &Vector, q_tilde: &Matrix) -> Result<OneEllipsoid> {
    let d = t.ncols();
    if lambda.ncols() != d || q_tilde.ncols() != d || y.len() != lambda.nrows() {
        return Err(OrexError::InvalidInput("operator dimensions disagree".into()));
    }
    let tol = crate::numerics::DEFAULT_RANK_TOL;
    let n = nullspace_basis(lambda, tol)?;
    let x0 = crate::numerics::min_norm_solve(lambda, y)?;
    let tn = t * &n;
    let (f_hat, lam) = if n.ncols() == 0 {
        (x0, 0.0)
    } else {
        let z = least_squares(&tn, &(-(t * &x0)), tol).map_err(|_| {
            OrexError::ModelDegeneracy("ker(T) ∩ ker(Lambda) is nontrivial".into())
        })?;
        let pencil = FactoredPencil::new(&(q_tilde * &n), &tn, tol)?;
        (&x0 + &n * z, pencil.value)
    };
    let t2 = (t * &f_hat).norm_squared();
    if t2 > 1.0 + 1e-9 {
        return Err(OrexError::InconsistentData(format!(
            "the data slice misses the ellipsoid (||T f|| ^2 = {t2:.6e})"
        )));
    }
    Ok(OneEllipsoid { center: q_tilde * &f_hat, radius_sq: lam * (1.0 - t2).max(0.0), f_hat })
}

/// Data of a two-parameter SDP
/// `min c w_c + d w_d + b  s.t.  c A_c + d A_d >= A_q,  [[c A_c + d A_d, g], [g^T, b]] >= 0`
/// with `g = c g_c + d g_d` and `c, d >= 0`.
#[derive(Debug, Clone)]
pub struct SdpPencil {
    pub a_c: Matrix,
    pub a_d: Matrix,
    pub a_q: Matrix,
    pub g_c: Vector,
    pub g_d: Vector,
    pub w_c: f64,
    pub w_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpGridResult {
    pub value: f64,
    pub c: f64,
    pub d: f64,
}

impl SdpPencil {
    /// Objective at `(c, d)` with `b` at its Schur-complement minimum, or `None` if infeasible.
    pub fn objective(&self, c: f64, d: f64, eig_tol: f64) -> Option<f64> {
        let k = &self.a_c * c + &self.a_d * d;
        let scale = k.amax().max(self.a_q.amax()).max(1e-300);
        if min_eig_sym(&(&k - &self.a_q)).ok()? < -eig_tol * scale {
            return None;
        }
        let g = &self.g_c * c + &self.g_d * d;
        let eig = SymmetricEigen::new((&k + k.transpose()) * 0.5);
        let mu_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let mut b = 0.0;
        let mut outside = 0.0;
        for (i, &mu) in eig.eigenvalues.iter().enumerate() {
            let proj = eig.eigenvectors.column(i).dot(&g);
            if mu > 1e-12 * mu_max {
                b += proj * proj / mu;
            } else {
                outside += proj * proj;
            }
        }
        if outside > 1e-18 * g.norm_squared().max(1e-300) && outside > 1e-24 {
            return None;
        }
        Some(c * self.w_c + d * self.w_d + b)
    }

    /// Best value along the ray `(c, d) = s (1 - t, t)`: a log-spaced grid in `s`
    /// locates the feasibility boundary of the first LMI, refined twice
    /// between the last infeasible and first feasible grid values.
    fn ray_best(&self, t: f64, eig_tol: f64) -> Option<SdpGridResult> {
        const N: usize = 60;
        let k = &self.a_c * (1.0 - t) + &self.a_d * t;
        let (k_max, q_max) = (k.amax(), self.a_q.amax());
        if k_max <= 0.0 {
            return None;
        }
        let centre = if q_max > 0.0 { (q_max / k_max).log10() } else { 0.0 };
        let (log_s_lo, log_s_hi) = (centre - 4.0, centre + 8.0);
        let feasible = |s: f64| {
            min_eig_sym(&(&k * s - &self.a_q)).map_or(false, |e| e >= -eig_tol * (s * k_max + q_max))
        };
        let (mut lo, mut hi) = (log_s_lo, log_s_hi);
        let mut first = None;
        for _ in 0..3 {
            let grid: Vec<f64> = (0..N).map(|i| lo + (hi - lo) * i as f64 / (N - 1) as f64).collect();
            let i = grid.iter().position(|&ls| feasible(10f64.powf(ls)))?;
            first = Some(grid[i]);
            if i == 0 {
                break;
            }
            lo = grid[i - 1];
            hi = grid[i];
        }
        let s = 10f64.powf(first?);
        let (c, d) = (s * (1.0 - t), s * t);
        let value = self.objective(c, d, eig_tol.max(1e-12) * 10.0)?;
        // The objective is linear in s; a negative slope means it is unbounded below.
        let far = 10f64.powf(log_s_hi);
        let far_value = self.objective(far * (1.0 - t), far * t, eig_tol.max(1e-12) * 10.0)?;
        Some(if far_value < value { SdpGridResult { value: far_value, c: far * (1.0 - t), d: far * t } } else { SdpGridResult { value, c, d } })
    }

    /// Grid search over rays `(c, d) = s (1 - t, t)`: 60 values of `t`, each
    /// with a refining log grid in `s` over `[1e-4, 1e8]` times the ray's
    /// scale, followed by two ten-fold zooms in `t` around the best ray.
    pub fn solve_grid(&self, eig_tol: f64) -> Result<SdpGridResult> {
        const N: usize = 60;
        let mut best: Option<SdpGridResult> = self.objective(0.0, 0.0, eig_tol).map(|v| SdpGridResult { value: v, c: 0.0, d: 0.0 });
        let (mut t_lo, mut t_hi) = (0.0, 1.0);
        for _ in 0..3 {
            let mut round_best: Option<(f64, SdpGridResult)> = None;
            for j in 0..N {
                let t = t_lo + (t_hi - t_lo) * j as f64 / (N - 1) as f64;
                if let Some(r) = self.ray_best(t, eig_tol) {
                    if round_best.map_or(true, |(_, b)| r.value < b.value) {
                        round_best = Some((t, r));
                    }
                }
            }
            let Some((t, r)) = round_best else { break };
            if best.map_or(true, |b| r.value < b.value) {
                best = Some(r);
            }
            let step = (t_hi - t_lo) / (N - 1) as f64;
            t_lo = (t - step).max(0.0);
            t_hi = (t + step).min(1.0);
        }
        let b = best.ok_or_else(|| {
            OrexError::InconsistentData("the semidefinite program is infeasible on the whole grid".into())
        })?;
        if b.value < -1e-9 {
            return Err(OrexError::InconsistentData(format!(
                "the semidefinite program is unbounded below (grid value {:.3e})",
                b.value
            )));
        }
        Ok(b)
    }
}

/// The semidefinite program whose optimum equals `min_tau ||Qt h^tau||^2`.
pub fn sdp_pencil(ops: &CompoundOperators, y: &Vector) -> Result<SdpPencil> {
    let x0 = ops.particular_solution(y)?;
    let rx = &ops.r * &x0;
    let sx = &ops.s * &x0;
    Ok(SdpPencil {
        a_c: ops.rn.transpose() * &ops.rn,
        a_d: ops.sn.transpose() * &ops.sn,
        a_q: ops.qn.transpose() * &ops.qn,
        g_c: ops.rn.transpose() * &rx,
        g_d: ops.sn.transpose() * &sx,
        w_c: 1.0 - rx.norm_squared(),
        w_d: 1.0 - sx.norm_squared(),
    })
}

/// Grid-solved value of the semidefinite program, used as a cross-check.
pub fn sdp_value(ops: &CompoundOperators, y: &Vector) -> Result<f64> {
    Ok(sdp_pencil(ops, y)?.solve_grid(ops.tol.eig)?.value)
}

#[derive(Debug, Clone)]
pub struct ConsistentEstimate {
    /// `f^tau_bar`, balancing `||R f||` and `||S f||`.
    pub f: Vector,
    pub tau_bar: f64,
    /// `Qt f`.
    pub estimate: Vector,
    /// Twice the Chebyshev bound, a guaranteed local worst-case error of `estimate`.
    pub lwce_factor2_bound: f64,
}

/// Regularizer minimizing `max(||R f||, ||S f||)` subject to `L f = y`.
pub fn consistent_estimate(ops: &CompoundOperators, y: &Vector) -> Result<ConsistentEstimate> {
    let path = RegPath::new(ops, y)?;
    let (lo, hi) = path.domain();
    let slope = |tau: f64| -> Result<f64> {
        let f = path.regularizer(tau)?;
        Ok((&ops.s * &f).norm_squared() - (&ops.r * &f).norm_squared())
    };
    let tau_bar = if slope(lo)? <= 0.0 {
        lo
    } else if slope(hi)? >= 0.0 {
        hi
    } else {
        let (mut a, mut b) = (lo, hi);
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            if slope(m)? > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let f = path.regularizer(tau_bar)?;
    let search = solve_on_path(&path)?;
    let bound = path.point(search.tau)?.qh2;
    Ok(ConsistentEstimate {
        estimate: &ops.q_tilde * &f,
        f,
        tau_bar,
        lwce_factor2_bound: 2.0 * bound.sqrt(),
    })
}
