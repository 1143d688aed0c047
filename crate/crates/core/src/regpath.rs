//! The regularization path on compound operators.
//!
//! For `tau` in `[0, 1]` the constrained regularizer is
//! `f^tau = argmin (1-tau) ||R f||^2 + tau ||S f||^2  s.t.  L f = y`,
//! `lambda(tau)` is the leading eigenvalue of `Qt_N^* Qt_N` relative to
//! `(1-tau) R_N^* R_N + tau S_N^* S_N` on `N = ker L`, and `h^tau` is the matching
//! eigenvector scaled so that `||Qt h||^2 = lambda (1 - G(tau))`.

use crate::error::{OrexError, Result};
use crate::model::CompoundOperators;
use crate::numerics::{least_squares, vstack, FactoredPencil, Matrix, Vector};

/// Offset used when an endpoint of `[0, 1]` is singular.
pub const TAU_CLIP: f64 = 1e-6;
/// Step of the central differences used as a fallback.
pub const FD_STEP: f64 = 1e-6;
/// Slack allowed on `G(tau) <= 1` before the data are declared inconsistent.
const G_SLACK: f64 = 1e-9;

/// Everything known about the path at one value of `tau`.
#[derive(Debug, Clone)]
pub struct RegPoint {
    pub tau: f64,
    pub f_tau: Vector,
    pub lambda_tau: f64,
    pub h_tau: Vector,
    /// `G(tau) = (1-tau) ||R f||^2 + tau ||S f||^2`.
    pub g_val: f64,
    /// `H(tau) = 1 / lambda(tau)`.
    pub h_val: f64,
    /// `F(tau) = (||R f||^2 + ||R h||^2) - (||S f||^2 + ||S h||^2)`.
    pub f_val: f64,
    pub rf2: f64,
    pub sf2: f64,
    pub rh2: f64,
    pub sh2: f64,
    /// `||Qt h||^2`, the candidate squared radius.
    pub qh2: f64,
    /// Leading eigenvalue numerically repeated.
    pub degenerate: bool,
    /// Kernel coordinates of the eigenvector, normalized by `||T v|| = 1`.
    pub v: Vector,
    /// `sqrt(max(1 - G, 0))`, so that `h = scale * N v`.
    pub scale: f64,
}

impl RegPoint {
    /// `<R f, R h>`.
    pub fn ortho_r(&self, ops: &CompoundOperators) -> f64 {
        (&ops.r * &self.f_tau).dot(&(&ops.r * &self.h_tau))
    }

    /// `<S f, S h>`.
    pub fn ortho_s(&self, ops: &CompoundOperators) -> f64 {
        (&ops.s * &self.f_tau).dot(&(&ops.s * &self.h_tau))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub g_prime: f64,
    pub h_prime: f64,
    /// `F'(tau)`; `None` only when no finite value could be formed.
    pub f_prime: Option<f64>,
    /// `F'` came from finite differences rather than the closed form.
    pub f_prime_approximate: bool,
    /// `d ||Qt h||^2 / d tau`.
    pub phi_prime: f64,
}

/// Path evaluator for fixed operators and data.
#[derive(Debug, Clone)]
pub struct RegPath<'a> {
    ops: &'a CompoundOperators,
    x0: Vector,
    rx0: Vector,
    sx0: Vector,
    lo: f64,
    hi: f64,
}

fn full_rank(m: &Matrix, tol: f64) -> bool {
    let k = m.ncols();
    if k == 0 {
        return true;
    }
    if m.nrows() < k {
        return false;
    }
    let sv = crate::numerics::singular_values(m);
    sv[0] > 0.0 && sv[k - 1] > tol * sv[0]
}

/// Search range of `tau`: an endpoint is included when its weighting operator
/// is nonsingular on the kernel, and clipped by [`TAU_CLIP`] otherwise.
/// Points strictly between a singular endpoint and the clip remain evaluable.
pub fn tau_domain(ops: &CompoundOperators) -> (f64, f64) {
    let lo = if full_rank(&ops.rn, ops.tol.rank) { 0.0 } else { TAU_CLIP };
    let hi = if full_rank(&ops.sn, ops.tol.rank) { 1.0 } else { 1.0 - TAU_CLIP };
    (lo, hi)
}

impl<'a> RegPath<'a> {
    pub fn new(ops: &'a CompoundOperators, y: &Vector) -> Result<Self> {
        let x0 = ops.particular_solution(y)?;
        let rx0 = &ops.r * &x0;
        let sx0 = &ops.s * &x0;
        let (lo, hi) = tau_domain(ops);
        Ok(Self { ops, x0, rx0, sx0, lo, hi })
    }

    /// Path for arbitrary `y`, using `L^+ y` without checking `y` against the range of `L`.
    ///
    /// The resulting regularizer is the linear map `y -> f^tau` extended to all data.
    pub fn new_unchecked(ops: &'a CompoundOperators, y: &Vector) -> Result<Self> {
        if y.len() != ops.lambda.nrows() {
            return Err(OrexError::InvalidInput(format!(
                "data has length {}, expected {}",
                y.len(),
                ops.lambda.nrows()
            )));
        }
        crate::numerics::ensure_finite_vec(y, "data")?;
        let x0 = &ops.lambda_pinv * y;
        let rx0 = &ops.r * &x0;
        let sx0 = &ops.s * &x0;
        let (lo, hi) = tau_domain(ops);
        Ok(Self { ops, x0, rx0, sx0, lo, hi })
    }

    pub fn ops(&self) -> &CompoundOperators {
        self.ops
    }

    /// `L^+ y`.
    pub fn particular(&self) -> &Vector {
        &self.x0
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn check_tau(&self, tau: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(OrexError::InvalidInput(format!("tau = {tau} is outside [0, 1]")));
        }
        if (tau == 0.0 && self.lo > 0.0) || (tau == 1.0 && self.hi < 1.0) {
            return Err(OrexError::EndpointDegenerate(tau));
        }
        Ok(())
    }

    fn weighting(&self, tau: f64) -> Matrix {
        vstack(&(&self.ops.rn * (1.0 - tau).sqrt()), &(&self.ops.sn * tau.sqrt()))
    }

    /// `f^tau` together with its kernel coordinates.
    fn regularizer_parts(&self, tau: f64) -> Result<(Vector, Vector)> {
        self.check_tau(tau)?;
        let k = self.ops.kernel_dim();
        if k == 0 {
            return Ok((self.x0.clone(), Vector::zeros(0)));
        }
        let t = self.weighting(tau);
        let mut rhs = Vector::zeros(t.nrows());
        let pr = self.rx0.len();
        rhs.rows_mut(0, pr).copy_from(&(&self.rx0 * -(1.0 - tau).sqrt()));
        rhs.rows_mut(pr, self.sx0.len()).copy_from(&(&self.sx0 * -tau.sqrt()));
        let z = least_squares(&t, &rhs, self.ops.tol.rank)
            .map_err(|_| OrexError::EndpointDegenerate(tau))?;
        Ok((&self.x0 + &self.ops.kernel_basis * &z, z))
    }

    pub fn regularizer(&self, tau: f64) -> Result<Vector> {
        Ok(self.regularizer_parts(tau)?.0)
    }

    pub fn point(&self, tau: f64) -> Result<RegPoint> {
        let ops = self.ops;
        let f = self.regularizer(tau)?;
        let rf2 = (&ops.r * &f).norm_squared();
        let sf2 = (&ops.s * &f).norm_squared();
        let g_val = (1.0 - tau) * rf2 + tau * sf2;
        if g_val > 1.0 + G_SLACK {
            return Err(OrexError::InconsistentData(format!(
                "no model-consistent object matches the data (G({tau}) = {g_val:.6e} > 1)"
            )));
        }
        let scale = (1.0 - g_val).max(0.0).sqrt();
        let n = ops.dim();
        let (lambda, v, degenerate) = if ops.kernel_dim() == 0 {
            (0.0, Vector::zeros(0), false)
        } else {
            let pencil = FactoredPencil::new(&ops.qn, &self.weighting(tau), ops.tol.rank)
                .map_err(|_| OrexError::EndpointDegenerate(tau))?;
            let degenerate = pencil.is_degenerate();
            (pencil.value, pencil.vector, degenerate)
        };
        let h = if ops.kernel_dim() == 0 {
            Vector::zeros(n)
        } else {
            &ops.kernel_basis * &v * scale
        };
        let rh2 = (&ops.r * &h).norm_squared();
        let sh2 = (&ops.s * &h).norm_squared();
        let qh2 = (&ops.q_tilde * &h).norm_squared();
        Ok(RegPoint {
            tau,
            f_tau: f,
            lambda_tau: lambda,
            h_tau: h,
            g_val,
            h_val: if lambda > 0.0 { 1.0 / lambda } else { f64::INFINITY },
            f_val: (rf2 + rh2) - (sf2 + sh2),
            rf2,
            sf2,
            rh2,
            sh2,
            qh2,
            degenerate,
            v,
            scale,
        })
    }

    /// `df^tau / dtau = N B^-1 N^* (R^* R - S^* S) f^tau` with `B` the weighting Gram matrix.
    pub fn regularizer_derivative(&self, tau: f64) -> Result<Vector> {
        let f = self.regularizer(tau)?;
        Ok(self.regularizer_derivative_at(tau, &f))
    }

    fn regularizer_derivative_at(&self, tau: f64, f: &Vector) -> Vector {
        let ops = self.ops;
        if ops.kernel_dim() == 0 {
            return Vector::zeros(ops.dim());
        }
        let rhs = ops.rn.transpose() * (&ops.r * f) - ops.sn.transpose() * (&ops.s * f);
        let pencil_free = self.gram(tau);
        let z = pencil_free.clone().cholesky().map(|c| c.solve(&rhs)).unwrap_or_else(|| {
            pencil_free.pseudo_inverse(1e-14).expect("finite matrix") * &rhs
        });
        &ops.kernel_basis * z
    }

    fn gram(&self, tau: f64) -> Matrix {
        let t = self.weighting(tau);
        t.transpose() * t
    }

    /// `G'`, `H'`, `F'` and the slope of `||Qt h||^2`.
    pub fn derivatives(&self, tau: f64) -> Result<Derivatives> {
        let p = self.point(tau)?;
        self.derivatives_at(&p)
    }

    pub fn derivatives_at(&self, p: &RegPoint) -> Result<Derivatives> {
        let ops = self.ops;
        let tau = p.tau;
        let g_prime = p.sf2 - p.rf2;
        let (h_prime, lambda_prime_over) = if ops.kernel_dim() == 0 || p.lambda_tau <= 0.0 {
            (0.0, 0.0)
        } else {
            let nv = &ops.kernel_basis * &p.v;
            let rv2 = (&ops.r * &nv).norm_squared();
            let sv2 = (&ops.s * &nv).norm_squared();
            let qv2 = (&ops.q_tilde * &nv).norm_squared();
            ((sv2 - rv2) / qv2, sv2 - rv2)
        };
        // d(lambda (1 - G))/dtau = lambda' (1 - G) - lambda G'
        let lambda_prime = -p.lambda_tau * lambda_prime_over;
        let phi_prime = lambda_prime * (1.0 - p.g_val).max(0.0) - p.lambda_tau * g_prime;

        let analytic = !p.degenerate && (p.scale > 1e-8 || ops.kernel_dim() == 0 || p.lambda_tau <= 0.0);
        let f_prime = if analytic {
            Some(self.f_prime_analytic(p, g_prime))
        } else {
            None
        };
        let (f_prime, approx) = match f_prime {
            Some(v) if v.is_finite() => (Some(v), false),
            _ => (self.f_prime_fd(tau), true),
        };
        Ok(Derivatives { g_prime, h_prime, f_prime, f_prime_approximate: approx, phi_prime })
    }

    /// `F' = 2 (alpha + beta)`, `alpha = <Rf, Rf'> - <Sf, Sf'>`, `beta` likewise for `h`,
    /// with `h'` from the bordered derivative of the eigenpair.
    fn f_prime_analytic(&self, p: &RegPoint, g_prime: f64) -> f64 {
        let ops = self.ops;
        let df = self.regularizer_derivative_at(p.tau, &p.f_tau);
        let alpha = (&ops.r * &p.f_tau).dot(&(&ops.r * &df)) - (&ops.s * &p.f_tau).dot(&(&ops.s * &df));
        if ops.kernel_dim() == 0 || p.lambda_tau <= 0.0 || p.scale == 0.0 {
            return 2.0 * alpha;
        }
        let k = ops.kernel_dim();
        let a = ops.qn.transpose() * &ops.qn;
        let b = self.gram(p.tau);
        let b_prime = ops.sn.transpose() * &ops.sn - ops.rn.transpose() * &ops.rn;
        let v = &p.v;
        let bv = &b * v;
        let vbpv = v.dot(&(&b_prime * v));
        let lam = p.lambda_tau;
        let lam_prime = -lam * vbpv;
        let mut m = Matrix::zeros(k + 1, k + 1);
        m.view_mut((0, 0), (k, k)).copy_from(&(&a - &b * lam));
        m.view_mut((0, k), (k, 1)).copy_from(&bv);
        m.view_mut((k, 0), (1, k)).copy_from(&bv.transpose());
        let mut rhs = Vector::zeros(k + 1);
        rhs.rows_mut(0, k).copy_from(&(&bv * lam_prime + &b_prime * v * lam));
        rhs[k] = -0.5 * vbpv;
        let sol = match m.lu().solve(&rhs) {
            Some(s) => s,
            None => return f64::NAN,
        };
        let v_prime = sol.rows(0, k).into_owned();
        let s = p.scale;
        let s_prime = -g_prime / (2.0 * s);
        let dh = &ops.kernel_basis * (v * s_prime + v_prime * s);
        let beta = (&ops.r * &p.h_tau).dot(&(&ops.r * &dh)) - (&ops.s * &p.h_tau).dot(&(&ops.s * &dh));
        2.0 * (alpha + beta)
    }

    fn f_prime_fd(&self, tau: f64) -> Option<f64> {
        let a = (tau - FD_STEP).max(self.lo);
        let b = (tau + FD_STEP).min(self.hi);
        if b <= a {
            return None;
        }
        let fa = self.point(a).ok()?.f_val;
        let fb = self.point(b).ok()?.f_val;
        Some((fb - fa) / (b - a))
    }
}

/// `lambda(tau)`: leading eigenvalue of `Qt_N^* Qt_N` relative to
/// `(1-tau) R_N^* R_N + tau S_N^* S_N`. Does not depend on the data.
pub fn leading_eigenvalue(ops: &CompoundOperators, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(OrexError::InvalidInput(format!("tau = {tau} is outside [0, 1]")));
    }
    if ops.kernel_dim() == 0 {
        return Ok(0.0);
    }
    let t = vstack(&(&ops.rn * (1.0 - tau).sqrt()), &(&ops.sn * tau.sqrt()));
    FactoredPencil::new(&ops.qn, &t, ops.tol.rank)
        .map(|p| p.value)
        .map_err(|_| OrexError::EndpointDegenerate(tau))
}

/// `f^tau` for data `y`.
pub fn regularizer(ops: &CompoundOperators, y: &Vector, tau: f64) -> Result<Vector> {
    RegPath::new(ops, y)?.regularizer(tau)
}

pub fn eig_point(ops: &CompoundOperators, y: &Vector, tau: f64) -> Result<RegPoint> {
    RegPath::new(ops, y)?.point(tau)
}

pub fn derivatives(ops: &CompoundOperators, y: &Vector, tau: f64) -> Result<Derivatives> {
    RegPath::new(ops, y)?.derivatives(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lift, Hyperellipsoid, MultiFidelityProblem, Observation, Tolerances};
    use crate::numerics::from_rows;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Random two-ellipsoid instance with data strictly inside the model.
    pub(crate) fn instance(seed: u64, n: usize) -> (CompoundOperators, Vector) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = MultiFidelityProblem::new(
            Hyperellipsoid::new(random(&mut rng, n, n), 1.0).unwrap(),
            Hyperellipsoid::new(random(&mut rng, n, n), 0.8).unwrap(),
            random(&mut rng, n / 2, n),
            random(&mut rng, n / 2 + 1, n),
            random(&mut rng, 2, n),
        )
        .unwrap();
        let ops = lift(&p).unwrap();
        let f0 = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let f1 = &f0 + Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut f = Vector::zeros(2 * n);
        f.rows_mut(0, n).copy_from(&f0);
        f.rows_mut(n, n).copy_from(&f1);
        let m = (&ops.r * &f).norm().max((&ops.s * &f).norm());
        let f = f / (1.5 * m);
        let obs = Observation::from_objects(&p, &f.rows(0, n).into_owned(), &f.rows(n, n).into_owned());
        (ops, obs.stacked())
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-8)
    }

    #[test]
    fn zero_data_gives_zero_regularizer() {
        let (ops, y) = instance(1, 4);
        let y0 = Vector::zeros(y.len());
        for tau in [0.1, 0.5, 0.9] {
            assert!(regularizer(&ops, &y0, tau).unwrap().norm() < 1e-14);
            let p = eig_point(&ops, &y0, tau).unwrap();
            assert!((p.qh2 - p.lambda_tau).abs() < 1e-10 * p.lambda_tau);
        }
    }

    #[test]
    fn scalar_problem_has_no_freedom() {
        let one = Matrix::identity(1, 1);
        let p = MultiFidelityProblem::new(
            Hyperellipsoid::new(one.clone(), 1.0).unwrap(),
            Hyperellipsoid::new(one.clone(), 1.0).unwrap(),
            one.clone(),
            one.clone(),
            one,
        )
        .unwrap();
        let ops = lift(&p).unwrap();
        let y = Vector::from_vec(vec![1.0, 1.0]);
        for tau in [0.0, 0.3, 1.0] {
            assert_eq!(regularizer(&ops, &y, tau).unwrap(), Vector::from_vec(vec![1.0, 1.0]));
        }
    }

    /// `min (1-tau)(1 + a^2) + tau (a - b)^2` over free second coordinates `a, b` is `a = b = 0`.
    #[test]
    fn two_dimensional_hand_solution() {
        let l = from_rows(1, 2, &[1.0, 0.0]).unwrap();
        let eye = Matrix::identity(2, 2);
        let p = MultiFidelityProblem::new(
            Hyperellipsoid::new(eye.clone(), 1.0).unwrap(),
            Hyperellipsoid::new(eye.clone(), 1.0).unwrap(),
            l.clone(),
            l,
            eye,
        )
        .unwrap();
        let ops = lift(&p).unwrap();
        let y = Vector::from_vec(vec![1.0, 1.0]);
        for tau in [0.2, 0.5, 0.8] {
            let f = regularizer(&ops, &y, tau).unwrap();
            assert!((f - Vector::from_vec(vec![1.0, 0.0, 1.0, 0.0])).norm() < 1e-12);
        }
    }

    #[test]
    fn disk_slice_point() {
        let ops = CompoundOperators::new(
            Matrix::identity(2, 2),
            Matrix::zeros(1, 2),
            from_rows(1, 2, &[1.0, 0.0]).unwrap(),
            Matrix::identity(2, 2),
            Tolerances::default(),
        )
        .unwrap();
        let p = eig_point(&ops, &Vector::from_vec(vec![0.5]), 0.0).unwrap();
        assert!((p.lambda_tau - 1.0).abs() < 1e-12);
        assert!((p.h_tau.norm_squared() - 0.75).abs() < 1e-12);
        assert!((&ops.q_tilde * &p.f_tau - Vector::from_vec(vec![0.5, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn point_invariants() {
        for seed in 0..10 {
            let (ops, y) = instance(seed, 4);
            let path = RegPath::new(&ops, &y).unwrap();
            for tau in [0.05, 0.3, 0.7, 0.95] {
                let p = path.point(tau).unwrap();
                assert!((&ops.lambda * &p.f_tau - &y).norm() < 1e-9);
                let w = (ops.r.transpose() * &ops.r) * (1.0 - tau) + (ops.s.transpose() * &ops.s) * tau;
                assert!((ops.kernel_basis.transpose() * &w * &p.f_tau).norm() < 1e-8);
                let hn = ops.kernel_basis.transpose() * &p.h_tau;
                let a = ops.qn.transpose() * &ops.qn;
                let b = path.gram(tau);
                assert!((&a * &hn - &b * &hn * p.lambda_tau).norm() < 1e-8 * (1.0 + p.lambda_tau));
                assert!((p.qh2 - p.lambda_tau * (1.0 - p.g_val)).abs() < 1e-8);
                assert!((p.qh2 - (1.0 - p.g_val) / p.h_val).abs() < 1e-8);
                // The weighted sum of the two quadratic constraints is always one.
                let weighted = (1.0 - tau) * (p.rf2 + p.rh2) + tau * (p.sf2 + p.sh2);
                assert!((weighted - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let d = FD_STEP;
        for seed in 0..8 {
            let (ops, y) = instance(100 + seed, 5);
            let path = RegPath::new(&ops, &y).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..5 {
                let tau = rng.random_range(0.05..0.95);
                let p = path.point(tau).unwrap();
                let der = path.derivatives_at(&p).unwrap();
                let (pm, pp) = (path.point(tau - d).unwrap(), path.point(tau + d).unwrap());
                assert!(rel_close(der.g_prime, (pp.g_val - pm.g_val) / (2.0 * d), 1e-4));
                assert!(rel_close(der.h_prime, (pp.h_val - pm.h_val) / (2.0 * d), 1e-4));
                assert!(rel_close(der.phi_prime, (pp.qh2 - pm.qh2) / (2.0 * d), 1e-4));
                assert!(rel_close(der.phi_prime, p.f_val / p.h_val, 1e-8));
                assert!(!der.f_prime_approximate);
                assert!(rel_close(der.f_prime.unwrap(), (pp.f_val - pm.f_val) / (2.0 * d), 1e-4));
                let df = path.regularizer_derivative(tau).unwrap();
                let fd = (pp.f_tau - pm.f_tau) / (2.0 * d);
                assert!((df - &fd).norm() <= 1e-4 * fd.norm().max(1e-8));
            }
        }
    }

    #[test]
    fn secant_sandwich() {
        let (ops, y) = instance(7, 5);
        let path = RegPath::new(&ops, &y).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        for _ in 0..50 {
            let (a, b) = (rng.random_range(0.01..0.99), rng.random_range(0.01..0.99));
            let (t, s) = if a < b { (a, b) } else { (b, a) };
            let (pt, ps) = (path.point(t).unwrap(), path.point(s).unwrap());
            let diff = ps.g_val - pt.g_val;
            assert!((s - t) * (ps.sf2 - ps.rf2) <= diff + 1e-12);
            assert!(diff <= (s - t) * (pt.sf2 - pt.rf2) + 1e-12);
        }
    }

    #[test]
    fn swap_symmetry_balances_at_half() {
        // R and S exchanged by the coordinate swap, which preserves L, Qt and y.
        let r = from_rows(1, 2, &[1.0, 0.0]).unwrap();
        let s = from_rows(1, 2, &[0.0, 1.0]).unwrap();
        let ops = CompoundOperators::new(
            r,
            s,
            from_rows(1, 2, &[1.0, 1.0]).unwrap(),
            Matrix::identity(2, 2),
            Tolerances::default(),
        )
        .unwrap();
        let p = eig_point(&ops, &Vector::from_vec(vec![0.3]), 0.5).unwrap();
        assert!(p.f_val.abs() < 1e-12);
    }

    #[test]
    fn infeasible_data_detected() {
        let (ops, y) = instance(3, 4);
        let err = eig_point(&ops, &(y * 50.0), 0.5);
        assert!(matches!(err, Err(OrexError::InconsistentData(_))));
    }

    #[test]
    fn singular_endpoint_is_reported() {
        let ops = CompoundOperators::new(
            Matrix::identity(2, 2),
            Matrix::zeros(1, 2),
            from_rows(1, 2, &[1.0, 0.0]).unwrap(),
            Matrix::identity(2, 2),
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(tau_domain(&ops), (0.0, 1.0 - TAU_CLIP));
        assert!(matches!(regularizer(&ops, &Vector::from_vec(vec![0.1]), 1.0), Err(OrexError::EndpointDegenerate(_))));
    }
}
