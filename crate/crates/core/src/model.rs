//! Two-fidelity problem data, the standing nondegeneracy assumption, and the
//! compound lift to a single unknown `f = [f0; f1]`.
//!
//! The high-fidelity object satisfies `||P0 f0|| <= eps0`, the discrepancy
//! satisfies `||P1 (f0 - f1)|| <= eps1`, and the data are `y0 = L0 f0`,
//! `y1 = L1 f1`. On the compound space this becomes `||R f|| <= 1`,
//! `||S f|| <= 1`, `L f = y` with
//!
//! ```text
//! R = [P0/eps0 | 0],  S = [P1/eps1 | -P1/eps1],  L = diag(L0, L1),  Qt = [Q | 0].
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{OrexError, Result};
use crate::numerics::{
    self, block_diag, ensure_finite, ensure_finite_vec, hstack, nullspace_basis, op_norm,
    pseudo_inverse, singular_values, vstack, Matrix, Vector,
};

/// Numerical thresholds used throughout a solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value threshold for rank and kernel decisions.
    pub rank: f64,
    /// Slack accepted when testing linear matrix inequalities.
    pub eig: f64,
    /// Tolerance for exactness certificates (orthogonality, witness feasibility).
    pub cert: f64,
    /// Kernel-inclusion threshold, scaled by operator norms.
    pub inclusion: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rank: numerics::DEFAULT_RANK_TOL, eig: 1e-9, cert: 1e-7, inclusion: 1e-9 }
    }
}

/// `{g : ||P g|| <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperellipsoid {
    pub operator: Matrix,
    pub radius: f64,
}

impl Hyperellipsoid {
    pub fn new(operator: Matrix, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(OrexError::InvalidInput(format!(
                "ellipsoid radius must be positive and finite, got {radius}"
            )));
        }
        ensure_finite(&operator, "ellipsoid operator")?;
        Ok(Self { operator, radius })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiFidelityProblem {
    pub k0: Hyperellipsoid,
    pub k1: Hyperellipsoid,
    pub lambda0: Matrix,
    pub lambda1: Matrix,
    pub q: Matrix,
}

impl MultiFidelityProblem {
    pub fn new(
        k0: Hyperellipsoid,
        k1: Hyperellipsoid,
        lambda0: Matrix,
        lambda1: Matrix,
        q: Matrix,
    ) -> Result<Self> {
        let n = k0.operator.ncols();
        if n == 0 {
            return Err(OrexError::InvalidInput("the object dimension must be positive".into()));
        }
        for (name, m) in [("P1", &k1.operator), ("Lambda0", &lambda0), ("Lambda1", &lambda1), ("Q", &q)]
        {
            if m.ncols() != n {
                return Err(OrexError::InvalidInput(format!(
                    "{name} has {} columns, expected {n}",
                    m.ncols()
                )));
            }
            ensure_finite(m, name)?;
        }
        Ok(Self { k0, k1, lambda0, lambda1, q })
    }

    /// Dimension of the object space.
    pub fn dim(&self) -> usize {
        self.k0.operator.ncols()
    }

    pub fn m0(&self) -> usize {
        self.lambda0.nrows()
    }

    pub fn m1(&self) -> usize {
        self.lambda1.nrows()
    }

    /// Same problem with a different low-fidelity radius.
    pub fn with_eps1(&self, eps1: f64) -> Result<Self> {
        let k1 = Hyperellipsoid::new(self.k1.operator.clone(), eps1)?;
        Ok(Self { k1, ..self.clone() })
    }

    /// Constrained regularizer in the original variables:
    /// `argmin (1-tau) ||P0 f0||^2 + tau ||P1 (f0 - f1)||^2  s.t.  L0 f0 = y0, L1 f1 = y1`.
    ///
    /// Solved through the KKT system, independently of the compound machinery.
    pub fn regularize(&self, obs: &Observation, tau: f64) -> Result<(Vector, Vector)> {
        obs.check(self)?;
        let n = self.dim();
        let p0 = &self.k0.operator;
        let p1 = &self.k1.operator;
        let zero = Matrix::zeros(p0.nrows(), n);
        let weighted = vstack(
            &hstack(&(p0 * (1.0 - tau).sqrt()), &zero),
            &hstack(&(p1 * tau.sqrt()), &(p1 * -tau.sqrt())),
        );
        let h = weighted.transpose() * &weighted;
        let lam = block_diag(&self.lambda0, &self.lambda1);
        let m = lam.nrows();
        let mut kkt = Matrix::zeros(2 * n + m, 2 * n + m);
        kkt.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&h);
        kkt.view_mut((0, 2 * n), (2 * n, m)).copy_from(&lam.transpose());
        kkt.view_mut((2 * n, 0), (m, 2 * n)).copy_from(&lam);
        let mut rhs = Vector::zeros(2 * n + m);
        rhs.rows_mut(2 * n, m).copy_from(&obs.stacked());
        let x = pseudo_inverse(&kkt, 1e-13)? * &rhs;
        let f0 = x.rows(0, n).into_owned();
        let f1 = x.rows(n, n).into_owned();
        numerics::check_consistent(&self.lambda0, &f0, &obs.y0)?;
        numerics::check_consistent(&self.lambda1, &f1, &obs.y1)?;
        Ok((f0, f1))
    }
}

/// Observed data `y = [y0; y1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y0: Vector,
    pub y1: Vector,
}

impl Observation {
    pub fn new(y0: Vector, y1: Vector) -> Self {
        Self { y0, y1 }
    }

    pub fn zeros(p: &MultiFidelityProblem) -> Self {
        Self { y0: Vector::zeros(p.m0()), y1: Vector::zeros(p.m1()) }
    }

    /// Exact data generated by a pair `(f0, f1)`.
    pub fn from_objects(p: &MultiFidelityProblem, f0: &Vector, f1: &Vector) -> Self {
        Self { y0: &p.lambda0 * f0, y1: &p.lambda1 * f1 }
    }

    pub fn check(&self, p: &MultiFidelityProblem) -> Result<()> {
        if self.y0.len() != p.m0() || self.y1.len() != p.m1() {
            return Err(OrexError::InvalidInput(format!(
                "data lengths ({}, {}) do not match observation counts ({}, {})",
                self.y0.len(),
                self.y1.len(),
                p.m0(),
                p.m1()
            )));
        }
        ensure_finite_vec(&self.y0, "y0")?;
        ensure_finite_vec(&self.y1, "y1")
    }

    pub fn stacked(&self) -> Vector {
        let mut y = Vector::zeros(self.y0.len() + self.y1.len());
        y.rows_mut(0, self.y0.len()).copy_from(&self.y0);
        y.rows_mut(self.y0.len(), self.y1.len()).copy_from(&self.y1);
        y
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { y0: &self.y0 * c, y1: &self.y1 * c }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { y0: &self.y0 + &other.y0, y1: &self.y1 + &other.y1 }
    }
}

/// Which kernel inclusion (if any) certifies local optimality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelCase {
    None,
    KerInP1,
    KerInLambda1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub ok: bool,
    pub kernel_case: KernelCase,
    pub detail: String,
}

pub fn validate(p: &MultiFidelityProblem) -> Result<Validation> {
    validate_with(p, &Tolerances::default())
}

/// Check the joint nondegeneracy condition
/// `[P0 f0 = 0, P1 (f0 - f1) = 0, L0 f0 = 0, L1 f1 = 0] => f0 = f1 = 0`
/// and detect the kernel inclusions `ker L0 in ker P1` / `ker L0 in ker L1`.
/// Without low-fidelity observations only the first inclusion is reported.
pub fn validate_with(p: &MultiFidelityProblem, tol: &Tolerances) -> Result<Validation> {
    let (r, s, lambda, _) = compound_blocks(p);
    let n_basis = nullspace_basis(&lambda, tol.rank)?;
    let ok = joint_nondegenerate(&r, &s, &n_basis, tol.rank);

    let n0 = nullspace_basis(&p.lambda0, tol.rank)?;
    let kernel_case = if p.m1() > 0 && inclusion_holds(&p.lambda1, &n0, tol.inclusion) {
        KernelCase::KerInLambda1
    } else if inclusion_holds(&p.k1.operator, &n0, tol.inclusion) {
        KernelCase::KerInP1
    } else {
        KernelCase::None
    };
    let detail = format!(
        "dim ker(Lambda) = {}, dim ker(Lambda0) = {}, nondegenerate = {ok}, kernel case = {kernel_case:?}",
        n_basis.ncols(),
        n0.ncols()
    );
    Ok(Validation { ok, kernel_case, detail })
}

/// The two separate conditions `ker P0 ∩ ker L0 = {0}` and `ker P1 ∩ ker L1 = {0}`.
///
/// Under either kernel inclusion they are jointly equivalent to the
/// nondegeneracy test of [`validate`].
pub fn separate_kernel_conditions(p: &MultiFidelityProblem, tol: &Tolerances) -> Result<(bool, bool)> {
    let trivial = |op: &Matrix, lam: &Matrix| -> Result<bool> {
        let n = nullspace_basis(lam, tol.rank)?;
        Ok(n.ncols() == 0 || full_column_rank(&(op * &n), tol.rank))
    };
    Ok((trivial(&p.k0.operator, &p.lambda0)?, trivial(&p.k1.operator, &p.lambda1)?))
}

fn inclusion_holds(op: &Matrix, basis: &Matrix, tol: f64) -> bool {
    if basis.ncols() == 0 || op.nrows() == 0 {
        return true;
    }
    op_norm(&(op * basis)) <= tol * op_norm(op).max(1.0)
}

fn full_column_rank(m: &Matrix, tol: f64) -> bool {
    let k = m.ncols();
    if k == 0 {
        return true;
    }
    if m.nrows() < k {
        return false;
    }
    let sv = singular_values(m);
    let smax = sv[0];
    smax > 0.0 && sv[k - 1] > tol * smax
}

fn joint_nondegenerate(r: &Matrix, s: &Matrix, n_basis: &Matrix, tol: f64) -> bool {
    if n_basis.ncols() == 0 {
        return true;
    }
    full_column_rank(&vstack(&(r * n_basis), &(s * n_basis)), tol)
}

fn compound_blocks(p: &MultiFidelityProblem) -> (Matrix, Matrix, Matrix, Matrix) {
    let n = p.dim();
    let p0 = &p.k0.operator / p.k0.radius;
    let p1 = &p.k1.operator / p.k1.radius;
    let r = hstack(&p0, &Matrix::zeros(p0.nrows(), n));
    let s = hstack(&p1, &(-&p1));
    let lambda = block_diag(&p.lambda0, &p.lambda1);
    let q_tilde = hstack(&p.q, &Matrix::zeros(p.q.nrows(), n));
    (r, s, lambda, q_tilde)
}

/// The maps `R, S, L, Qt` on a common space, with a kernel basis of `L`
/// and the pseudo-inverse of `L` precomputed.
#[derive(Debug, Clone)]
pub struct CompoundOperators {
    pub r: Matrix,
    pub s: Matrix,
    pub lambda: Matrix,
    pub q_tilde: Matrix,
    /// Orthonormal basis of `ker L`.
    pub kernel_basis: Matrix,
    pub lambda_pinv: Matrix,
    /// `R N`, `S N`, `Qt N` for the kernel basis `N`.
    pub rn: Matrix,
    pub sn: Matrix,
    pub qn: Matrix,
    /// Dimension `n` of each block when built by [`lift`].
    pub split: Option<usize>,
    pub tol: Tolerances,
}

impl CompoundOperators {
    /// Operators for a general two-ellipsoid slice `{f : ||R f|| <= 1, ||S f|| <= 1, L f = y}`.
    pub fn new(r: Matrix, s: Matrix, lambda: Matrix, q_tilde: Matrix, tol: Tolerances) -> Result<Self> {
        let d = r.ncols();
        for (name, m) in [("R", &r), ("S", &s), ("Lambda", &lambda), ("Q", &q_tilde)] {
            if m.ncols() != d {
                return Err(OrexError::InvalidInput(format!(
                    "{name} has {} columns, expected {d}",
                    m.ncols()
                )));
            }
            ensure_finite(m, name)?;
        }
        let kernel_basis = nullspace_basis(&lambda, tol.rank)?;
        if !joint_nondegenerate(&r, &s, &kernel_basis, tol.rank) {
            return Err(OrexError::ModelDegeneracy(
                "ker(R) ∩ ker(S) ∩ ker(Lambda) is nontrivial; worst-case errors are infinite".into(),
            ));
        }
        let lambda_pinv = pseudo_inverse(&lambda, tol.rank)?;
        let rn = &r * &kernel_basis;
        let sn = &s * &kernel_basis;
        let qn = &q_tilde * &kernel_basis;
        Ok(Self { r, s, lambda, q_tilde, kernel_basis, lambda_pinv, rn, sn, qn, split: None, tol })
    }

    pub fn dim(&self) -> usize {
        self.r.ncols()
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.ncols()
    }

    /// `L^+ y`, rejecting data outside the range of `L`.
    pub fn particular_solution(&self, y: &Vector) -> Result<Vector> {
        if y.len() != self.lambda.nrows() {
            return Err(OrexError::InvalidInput(format!(
                "data has length {}, expected {}",
                y.len(),
                self.lambda.nrows()
            )));
        }
        ensure_finite_vec(y, "data")?;
        let x = &self.lambda_pinv * y;
        numerics::check_consistent(&self.lambda, &x, y)?;
        Ok(x)
    }

    /// `f0` block of a compound vector (the whole vector for unsplit operators).
    pub fn high_fidelity_part(&self, f: &Vector) -> Vector {
        match self.split {
            Some(n) => f.rows(0, n).into_owned(),
            None => f.clone(),
        }
    }

    /// True when `Qt` is the identity on the whole space.
    pub fn q_is_identity(&self) -> bool {
        self.q_tilde.is_square()
            && (&self.q_tilde - Matrix::identity(self.dim(), self.dim())).amax() <= 1e-14
    }

    /// Same operators with `R` and `S` multiplied by `c`.
    pub fn scaled_model(&self, c: f64) -> Result<Self> {
        let mut out = Self::new(
            &self.r * c,
            &self.s * c,
            self.lambda.clone(),
            self.q_tilde.clone(),
            self.tol,
        )?;
        out.split = self.split;
        Ok(out)
    }
}

pub fn lift(p: &MultiFidelityProblem) -> Result<CompoundOperators> {
    lift_with(p, Tolerances::default())
}

pub fn lift_with(p: &MultiFidelityProblem, tol: Tolerances) -> Result<CompoundOperators> {
    let (r, s, lambda, q_tilde) = compound_blocks(p);
    let mut ops = CompoundOperators::new(r, s, lambda, q_tilde, tol)?;
    ops.split = Some(p.dim());
    Ok(ops)
}

/// Convert the compound mixing weight `sigma` (on `||R f||^2`, `||S f||^2`) to
/// the weight `tau` on `||P0 f0||^2`, `||P1 (f0 - f1)||^2`.
pub fn sigma_to_tau(sigma: f64, eps0: f64, eps1: f64) -> f64 {
    let c0 = (1.0 - sigma) / (eps0 * eps0);
    let c1 = sigma / (eps1 * eps1);
    c1 / (c0 + c1)
}

/// Inverse of [`sigma_to_tau`].
pub fn tau_to_sigma(tau: f64, eps0: f64, eps1: f64) -> f64 {
    let a = (1.0 - tau) * eps0 * eps0;
    let b = tau * eps1 * eps1;
    b / (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::from_rows;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(p0: Matrix, e0: f64, p1: Matrix, e1: f64, l0: Matrix, l1: Matrix, q: Matrix) -> MultiFidelityProblem {
        MultiFidelityProblem::new(
            Hyperellipsoid::new(p0, e0).unwrap(),
            Hyperellipsoid::new(p1, e1).unwrap(),
            l0,
            l1,
            q,
        )
        .unwrap()
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identical_observation_maps() {
        let l = from_rows(1, 2, &[1.0, 0.0]).unwrap();
        let p = problem(Matrix::identity(2, 2), 1.0, Matrix::identity(2, 2), 1.0, l.clone(), l, Matrix::identity(2, 2));
        let v = validate(&p).unwrap();
        assert!(v.ok);
        assert_eq!(v.kernel_case, KernelCase::KerInLambda1);
    }

    #[test]
    fn no_inclusion_without_low_fidelity_data() {
        let p = problem(
            Matrix::identity(2, 2),
            1.0,
            from_rows(1, 2, &[1.0, 0.0]).unwrap(),
            1.0,
            from_rows(1, 2, &[0.0, 1.0]).unwrap(),
            Matrix::zeros(0, 2),
            Matrix::identity(2, 2),
        );
        let v = validate(&p).unwrap();
        assert_eq!(v.kernel_case, KernelCase::None);
    }

    #[test]
    fn everything_vanishing_is_degenerate() {
        let z = Matrix::zeros(1, 1);
        let p = problem(z.clone(), 1.0, z.clone(), 1.0, z.clone(), z.clone(), Matrix::identity(1, 1));
        assert!(!validate(&p).unwrap().ok);
        assert!(matches!(lift(&p), Err(OrexError::ModelDegeneracy(_))));
    }

    #[test]
    fn nonpositive_radius_is_rejected() {
        assert!(Hyperellipsoid::new(Matrix::identity(1, 1), -1.0).is_err());
        assert!(Hyperellipsoid::new(Matrix::identity(1, 1), 0.0).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let e = Hyperellipsoid::new(Matrix::identity(2, 2), 1.0).unwrap();
        let err = MultiFidelityProblem::new(e.clone(), e, Matrix::zeros(1, 3), Matrix::zeros(1, 2), Matrix::identity(2, 2));
        assert!(matches!(err, Err(OrexError::InvalidInput(_))));
    }

    #[test]
    fn scalar_lift() {
        let one = Matrix::identity(1, 1);
        let p = problem(one.clone(), 1.0, one.clone(), 1.0, one.clone(), one.clone(), one);
        let ops = lift(&p).unwrap();
        assert_eq!(ops.r, from_rows(1, 2, &[1.0, 0.0]).unwrap());
        assert_eq!(ops.s, from_rows(1, 2, &[1.0, -1.0]).unwrap());
        assert_eq!(ops.lambda, Matrix::identity(2, 2));
        assert_eq!(ops.q_tilde, from_rows(1, 2, &[1.0, 0.0]).unwrap());
        assert_eq!(ops.kernel_dim(), 0);
    }

    #[test]
    fn doubling_eps0_halves_r_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = problem(random(&mut rng, 3, 3), 0.7, random(&mut rng, 3, 3), 0.4, random(&mut rng, 2, 3), random(&mut rng, 1, 3), random(&mut rng, 2, 3));
        let mut p2 = p.clone();
        p2.k0.radius *= 2.0;
        let (a, b) = (lift(&p).unwrap(), lift(&p2).unwrap());
        assert!((&a.r * 0.5 - &b.r).amax() < 1e-15);
        assert_eq!(a.s, b.s);
    }

    #[test]
    fn kernel_basis_is_annihilated() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = problem(random(&mut rng, 4, 4), 1.0, random(&mut rng, 4, 4), 0.5, random(&mut rng, 2, 4), random(&mut rng, 3, 4), random(&mut rng, 2, 4));
        let ops = lift(&p).unwrap();
        assert!(op_norm(&(&ops.lambda * &ops.kernel_basis)) <= 1e-10);
        let gram = ops.kernel_basis.transpose() * &ops.kernel_basis;
        assert!((gram - Matrix::identity(ops.kernel_dim(), ops.kernel_dim())).amax() < 1e-12);
    }

    #[test]
    fn compound_norms_match_original_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = problem(random(&mut rng, 3, 4), 0.3, random(&mut rng, 2, 4), 0.9, random(&mut rng, 2, 4), random(&mut rng, 2, 4), random(&mut rng, 1, 4));
        let ops = lift(&p).unwrap();
        for _ in 0..50 {
            let f0 = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let f1 = Vector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let mut f = Vector::zeros(8);
            f.rows_mut(0, 4).copy_from(&f0);
            f.rows_mut(4, 4).copy_from(&f1);
            let rf = (&ops.r * &f).norm();
            let sf = (&ops.s * &f).norm();
            assert!((rf - (&p.k0.operator * &f0).norm() / 0.3).abs() < 1e-12);
            assert!((sf - (&p.k1.operator * (&f0 - &f1)).norm() / 0.9).abs() < 1e-12);

            // Membership equivalence near the boundary, both directions.
            for scale in [0.999, 1.001] {
                let t = scale / rf.max(sf);
                let g0 = &f0 * t;
                let g1 = &f1 * t;
                let in_models = (&p.k0.operator * &g0).norm() <= 0.3
                    && (&p.k1.operator * (&g0 - &g1)).norm() <= 0.9;
                let g = &f * t;
                let in_compound = (&ops.r * &g).norm() <= 1.0 && (&ops.s * &g).norm() <= 1.0;
                assert_eq!(in_models, in_compound);
                assert_eq!(in_compound, scale < 1.0);
            }
        }
    }

    #[test]
    fn inclusion_cases_agree_with_separate_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tol = Tolerances::default();
        let mut seen = 0;
        for trial in 0..60 {
            let n = 3 + trial % 3;
            let m0 = 1 + rng.random_range(0..n);
            let l0 = random(&mut rng, m0, n);
            // Low-fidelity rows drawn from the high-fidelity ones.
            let m1 = rng.random_range(1..=m0);
            let l1 = Matrix::from_fn(m1, n, |i, j| l0[(i, j)]);
            // Randomly make P0 / P1 rank deficient to exercise both outcomes.
            let r0 = rng.random_range(1..=n);
            let r1 = rng.random_range(1..=n);
            let p0 = random(&mut rng, r0, n);
            let p1 = random(&mut rng, r1, n);
            let p = problem(p0, 1.0, p1, 1.0, l0, l1, Matrix::identity(n, n));
            let v = validate_with(&p, &tol).unwrap();
            assert_ne!(v.kernel_case, KernelCase::None);
            let (a, b) = separate_kernel_conditions(&p, &tol).unwrap();
            assert_eq!(v.ok, a && b, "trial {trial}");
            seen += 1;
        }
        assert_eq!(seen, 60);
    }

    #[test]
    fn sigma_tau_round_trip() {
        for &(s, e0, e1) in &[(0.3, 1.0, 2.0), (0.9, 0.1, 5.0), (0.5, 1.0, 1.0)] {
            let t = sigma_to_tau(s, e0, e1);
            assert!((tau_to_sigma(t, e0, e1) - s).abs() < 1e-14);
        }
        assert!((sigma_to_tau(0.25, 1.0, 1.0) - 0.25).abs() < 1e-15);
    }
}
