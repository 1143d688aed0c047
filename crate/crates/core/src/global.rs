//! Globally optimal two-fidelity recovery.
//!
//! The optimal worst-case error over all data is `sqrt(min c0 eps0^2 + c1 eps1^2)`
//! over `c0, c1 >= 0` with `c0 ||P0 f0||^2 + c1 ||P1 (f0 - f1)||^2 >= ||Q f0||^2`
//! on `ker L0 x ker L1`, and the optimal map is `y -> Q f0^tau` for the
//! constrained regularizer with `tau = c1 / (c0 + c1)`.
//!
//! Two mixing weights appear and are kept apart by name: `sigma_compound`
//! mixes `||R f||^2` and `||S f||^2` on the compound space, while `tau_sharp`
//! mixes `||P0 f0||^2` and `||P1 (f0 - f1)||^2`.

use serde::Serialize;

use crate::error::{OrexError, Result};
use crate::model::{lift_with, validate_with, CompoundOperators, MultiFidelityProblem, Tolerances};
use crate::numerics::{block_diag, min_eig_sym, nullspace_basis, Matrix, Vector};
use crate::regpath::{leading_eigenvalue, RegPath};

const SIGMA_EDGE: f64 = 1e-9;
const PRESCAN: usize = 201;
const GOLDEN_TOL: f64 = 1e-10;

/// Quadratic forms of the constraint `c0 A + c1 B >= C` on `ker L0 x ker L1`.
#[derive(Debug, Clone)]
pub struct KernelLmi {
    /// From `||P0 f0||^2`.
    pub a: Matrix,
    /// From `||P1 (f0 - f1)||^2`.
    pub b: Matrix,
    /// From `||Q f0||^2`.
    pub c: Matrix,
    /// Orthonormal bases of `ker L0` and `ker L1`.
    pub h0: Matrix,
    pub h1: Matrix,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalSolution {
    pub c0: f64,
    pub c1: f64,
    /// `c1 / (c0 + c1)`, the weight on `||P1 (f0 - f1)||^2`.
    pub tau_sharp: f64,
    /// `c1 eps1^2 / (c0 eps0^2 + c1 eps1^2)`, the weight on `||S f||^2`.
    pub sigma_compound: f64,
    pub gwce_sq: f64,
    /// `z x (m0 + m1)` matrix of the optimal linear map.
    #[serde(skip)]
    pub map_matrix: Matrix,
    /// Smallest eigenvalue of `c0 A + c1 B - C` at the returned pair.
    pub lmi_min_eig: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalRecovery {
    pub estimate: Vector,
    /// Global worst-case error of the map.
    pub bound: f64,
}

pub fn assemble_kernel_lmi(p: &MultiFidelityProblem) -> Result<KernelLmi> {
    assemble_kernel_lmi_with(p, &Tolerances::default())
}

pub fn assemble_kernel_lmi_with(p: &MultiFidelityProblem, tol: &Tolerances) -> Result<KernelLmi> {
    let v = validate_with(p, tol)?;
    if !v.ok {
        return Err(OrexError::ModelDegeneracy(v.detail));
    }
    let h0 = nullspace_basis(&p.lambda0, tol.rank)?;
    let h1 = nullspace_basis(&p.lambda1, tol.rank)?;
    let (k0, k1) = (h0.ncols(), h1.ncols());
    let p0h0 = &p.k0.operator * &h0;
    let p1h0 = &p.k1.operator * &h0;
    let p1h1 = &p.k1.operator * &h1;
    let qh0 = &p.q * &h0;
    let a = block_diag(&(p0h0.transpose() * &p0h0), &Matrix::zeros(k1, k1));
    let c = block_diag(&(qh0.transpose() * &qh0), &Matrix::zeros(k1, k1));
    let mut b = Matrix::zeros(k0 + k1, k0 + k1);
    b.view_mut((0, 0), (k0, k0)).copy_from(&(p1h0.transpose() * &p1h0));
    b.view_mut((0, k0), (k0, k1)).copy_from(&(-(p1h0.transpose() * &p1h1)));
    b.view_mut((k0, 0), (k1, k0)).copy_from(&(-(p1h1.transpose() * &p1h0)));
    b.view_mut((k0, k0), (k1, k1)).copy_from(&(p1h1.transpose() * &p1h1));
    Ok(KernelLmi { a, b, c, h0, h1 })
}

fn golden(s: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (s(x1), s(x2));
    while b - a > GOLDEN_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = s(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = s(x2);
        }
    }
    0.5 * (a + b)
}

/// Minimize `lambda(sigma)` over the compound mixing weight: a 201-point scan
/// picks the bracket, golden-section refines it. Weights where the pencil is
/// numerically singular count as infinite.
fn minimize_sigma(ops: &CompoundOperators) -> Result<(f64, f64)> {
    let s = |sigma: f64| match leading_eigenvalue(ops, sigma) {
        Ok(v) => v,
        Err(OrexError::EndpointDegenerate(_)) => f64::INFINITY,
        Err(_) => f64::NAN,
    };
    let grid: Vec<f64> = (0..PRESCAN)
        .map(|i| SIGMA_EDGE + (1.0 - 2.0 * SIGMA_EDGE) * i as f64 / (PRESCAN - 1) as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&g| s(g)).collect();
    let i = (0..PRESCAN).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    if !vals[i].is_finite() {
        return Err(OrexError::ModelDegeneracy("no compound weight gives a finite eigenvalue".into()));
    }
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(PRESCAN - 1)];
    let sigma = golden(&s, lo, hi);
    let v = s(sigma);
    Ok(if vals[i] < v { (grid[i], vals[i]) } else { (sigma, v) })
}

pub fn solve_global(p: &MultiFidelityProblem) -> Result<GlobalSolution> {
    solve_global_with(p, Tolerances::default())
}

pub fn solve_global_with(p: &MultiFidelityProblem, tol: Tolerances) -> Result<GlobalSolution> {
    let lmi = assemble_kernel_lmi_with(p, &tol)?;
    let ops = lift_with(p, tol)?;
    let (eps0, eps1) = (p.k0.radius, p.k1.radius);
    let (sigma, s) = if ops.kernel_dim() == 0 || ops.qn.amax() == 0.0 {
        (0.5, 0.0)
    } else {
        minimize_sigma(&ops)?
    };
    let (c0, c1, tau_sharp) = if s == 0.0 {
        (0.0, 0.0, 0.5)
    } else {
        let c0 = s * (1.0 - sigma) / (eps0 * eps0);
        let c1 = s * sigma / (eps1 * eps1);
        (c0, c1, c1 / (c0 + c1))
    };
    let lmi_min_eig = min_eig_sym(&(&lmi.a * c0 + &lmi.b * c1 - &lmi.c))?;
    if lmi_min_eig < -1e-8 * lmi.c.amax().max(1.0) {
        return Err(OrexError::ModelDegeneracy(format!(
            "the optimal multipliers fail the kernel LMI (min eigenvalue {lmi_min_eig:.3e})"
        )));
    }
    let map_matrix = materialize_map(&ops, sigma)?;
    Ok(GlobalSolution { c0, c1, tau_sharp, sigma_compound: sigma, gwce_sq: s, map_matrix, lmi_min_eig })
}

/// Columns are `Qt f^sigma` for the canonical data vectors.
fn materialize_map(ops: &CompoundOperators, sigma: f64) -> Result<Matrix> {
    let m = ops.lambda.nrows();
    let mut map = Matrix::zeros(ops.q_tilde.nrows(), m);
    for j in 0..m {
        let mut e = Vector::zeros(m);
        e[j] = 1.0;
        let f = RegPath::new_unchecked(ops, &e)?.regularizer(sigma)?;
        map.set_column(j, &(&ops.q_tilde * f));
    }
    Ok(map)
}

/// Apply the optimal map to data `y = [y0; y1]` through the regularizer.
pub fn global_recover(sol: &GlobalSolution, ops: &CompoundOperators, y: &Vector) -> Result<GlobalRecovery> {
    let f = RegPath::new(ops, y)?.regularizer(sol.sigma_compound)?;
    Ok(GlobalRecovery { estimate: &ops.q_tilde * f, bound: sol.gwce_sq.max(0.0).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::one_ellipsoid_center;
    use crate::model::{lift, Hyperellipsoid, Observation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn instance(seed: u64, n: usize) -> MultiFidelityProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m0 = rng.random_range(1..n);
        let m1 = rng.random_range(1..n);
        MultiFidelityProblem::new(
            Hyperellipsoid::new(random(&mut rng, n, n), rng.random_range(0.5..1.5)).unwrap(),
            Hyperellipsoid::new(random(&mut rng, n, n), rng.random_range(0.2..1.0)).unwrap(),
            random(&mut rng, m0, n),
            random(&mut rng, m1, n),
            random(&mut rng, 2, n),
        )
        .unwrap()
    }

    #[test]
    fn fully_observed_high_fidelity() {
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = MultiFidelityProblem::new(
            Hyperellipsoid::new(random(&mut rng, n, n), 1.0).unwrap(),
            Hyperellipsoid::new(Matrix::identity(n, n), 1.0).unwrap(),
            random(&mut rng, n, n),
            Matrix::zeros(0, n),
            Matrix::identity(n, n),
        )
        .unwrap();
        let lmi = assemble_kernel_lmi(&p).unwrap();
        assert_eq!(lmi.a.nrows(), n);
        assert_eq!(lmi.c.amax(), 0.0);
        let sol = solve_global(&p).unwrap();
        assert_eq!(sol.gwce_sq, 0.0);
    }

    #[test]
    fn lmi_quadratic_form_identity() {
        let p = instance(2, 4);
        let lmi = assemble_kernel_lmi(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..20 {
            let z = Vector::from_fn(lmi.a.nrows(), |_, _| rng.random_range(-1.0..1.0));
            let (k0, k1) = (lmi.h0.ncols(), lmi.h1.ncols());
            let f0 = &lmi.h0 * z.rows(0, k0);
            let f1 = &lmi.h1 * z.rows(k0, k1);
            let (c0, c1) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            let direct = c0 * (&p.k0.operator * &f0).norm_squared()
                + c1 * (&p.k1.operator * (&f0 - &f1)).norm_squared()
                - (&p.q * &f0).norm_squared();
            let form = z.dot(&((&lmi.a * c0 + &lmi.b * c1 - &lmi.c) * &z));
            assert!((direct - form).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn zero_low_fidelity_operator() {
        // With L1 invertible and P1 = 0 the problem is the single ellipsoid ||P0 f0|| <= eps0.
        let n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = MultiFidelityProblem::new(
            Hyperellipsoid::new(random(&mut rng, n, n), 0.7).unwrap(),
            Hyperellipsoid::new(Matrix::zeros(n, n), 1.0).unwrap(),
            random(&mut rng, 2, n),
            Matrix::identity(n, n),
            random(&mut rng, 2, n),
        )
        .unwrap();
        let lmi = assemble_kernel_lmi(&p).unwrap();
        assert_eq!(lmi.b.amax(), 0.0);
        let sol = solve_global(&p).unwrap();
        let one = one_ellipsoid_center(&(&p.k0.operator / 0.7), &p.lambda0, &Vector::zeros(2), &p.q).unwrap();
        assert!((sol.gwce_sq - one.radius_sq).abs() < 1e-7 * one.radius_sq);
    }

    #[test]
    fn grid_never_beats_the_optimum() {
        for seed in 0..5 {
            let p = instance(10 + seed, 4);
            let sol = solve_global(&p).unwrap();
            let lmi = assemble_kernel_lmi(&p).unwrap();
            let (e0, e1) = (p.k0.radius.powi(2), p.k1.radius.powi(2));
            let mut best = f64::INFINITY;
            for i in 0..80 {
                for j in 0..80 {
                    let c0 = 10f64.powf(-3.0 + 6.0 * i as f64 / 79.0);
                    let c1 = 10f64.powf(-3.0 + 6.0 * j as f64 / 79.0);
                    if min_eig_sym(&(&lmi.a * c0 + &lmi.b * c1 - &lmi.c)).unwrap() >= 0.0 {
                        let v = c0 * e0 + c1 * e1;
                        assert!(v >= sol.gwce_sq - 1e-8);
                        best = best.min(v);
                    }
                }
            }
            assert!(best <= sol.gwce_sq * 1.1, "seed {seed}: grid {best} vs {}", sol.gwce_sq);
            assert!(sol.lmi_min_eig >= -1e-8);
        }
    }

    #[test]
    fn map_matches_regularizer_and_original_weights() {
        for seed in 0..5 {
            let p = instance(30 + seed, 5);
            let sol = solve_global(&p).unwrap();
            let ops = lift(&p).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f0 = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let f1 = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let obs = Observation::from_objects(&p, &f0, &f1);
            let y = obs.stacked();
            let rec = global_recover(&sol, &ops, &y).unwrap();
            assert!((&rec.estimate - &sol.map_matrix * &y).norm() < 1e-9 * (1.0 + rec.estimate.norm()));
            let (g0, _) = p.regularize(&obs, sol.tau_sharp).unwrap();
            assert!((&p.q * g0 - &rec.estimate).norm() < 1e-9 * (1.0 + rec.estimate.norm()));
        }
    }

    #[test]
    fn linear_and_zero_preserving() {
        let p = instance(40, 4);
        let sol = solve_global(&p).unwrap();
        let ops = lift(&p).unwrap();
        let y0 = Vector::zeros(ops.lambda.nrows());
        assert!(global_recover(&sol, &ops, &y0).unwrap().estimate.norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut data = || {
            let f = Vector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
            &ops.lambda * f
        };
        let (a, b) = (data(), data());
        let ea = global_recover(&sol, &ops, &a).unwrap().estimate;
        let eb = global_recover(&sol, &ops, &b).unwrap().estimate;
        let eab = global_recover(&sol, &ops, &(&a + &b)).unwrap().estimate;
        assert!((eab - ea - eb).norm() < 1e-9);
    }

    #[test]
    fn huge_low_fidelity_radius_reduces_to_single_fidelity() {
        let p = instance(50, 5).with_eps1(1e6).unwrap();
        let sol = solve_global(&p).unwrap();
        let ops = lift(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..5 {
            let f0 = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let f1 = Vector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let obs = Observation::from_objects(&p, &f0, &f1);
            let est = global_recover(&sol, &ops, &obs.stacked()).unwrap().estimate;
            let single = one_ellipsoid_center(&p.k0.operator, &p.lambda0, &obs.y0, &p.q).unwrap();
            assert!((est - &single.center).norm() <= 1e-3 * (1.0 + single.center.norm()));
        }
    }
}
