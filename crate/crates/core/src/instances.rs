//! Reproducible problem generators for the stylized two-fidelity settings.

use nalgebra::SymmetricEigen;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OrexError, Result};
use crate::functional::{Basis, LevelSpec, TargetSpec};
use crate::model::{Hyperellipsoid, MultiFidelityProblem, Observation};
use crate::numerics::{least_squares, min_norm_solve, nullspace_basis, Matrix, Vector, DEFAULT_RANK_TOL};

/// A two-ellipsoid problem together with data generated by a feasible pair.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: MultiFidelityProblem,
    pub obs: Observation,
}

/// A functional estimation problem in the file-level description.
#[derive(Debug, Clone)]
pub struct FunctionalInstance {
    pub levels: Vec<LevelSpec>,
    pub target: TargetSpec,
}

fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn scaled_to(v: Vector, op: &Matrix, norm: f64) -> Vector {
    let cur = (op * &v).norm();
    if cur == 0.0 {
        v
    } else {
        v * (norm / cur)
    }
}

/// High fidelity observed at `m0` random functionals, low fidelity at `m1` of
/// those same functionals. With `s_active` the data pins the low-fidelity
/// discrepancy to the boundary `||P1 (f0 - f1)|| = eps1`.
pub fn digital_twin(seed: u64, n: usize, s_active: bool) -> Result<Instance> {
    if n < 2 {
        return Err(OrexError::InvalidInput("digital twin needs n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m0 = rng.random_range(1..n);
    let m1 = rng.random_range(1..=m0);
    let lambda0 = uniform(&mut rng, m0, n);
    let mut picks = sample(&mut rng, m0, m1).into_vec();
    picks.sort_unstable();
    let lambda1 = lambda0.select_rows(&picks);
    let eps0 = rng.random_range(0.5..2.0);
    let eps1 = rng.random_range(0.05..0.5);
    let p0 = uniform(&mut rng, n, n) + Matrix::identity(n, n) * 0.5;
    let p1 = uniform(&mut rng, n, n) + Matrix::identity(n, n) * 0.5;
    let z = rng.random_range(1..=n);
    let q = uniform(&mut rng, z, n);
    let problem = MultiFidelityProblem::new(
        Hyperellipsoid::new(p0, eps0)?,
        Hyperellipsoid::new(p1, eps1)?,
        lambda0,
        lambda1,
        q,
    )?;
    let f0 = scaled_to(Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)), &problem.k0.operator, 0.5 * eps0);
    let e = if s_active {
        // Smallest ||P1 e|| with L1 e = delta, scaled onto the boundary.
        let delta = Vector::from_fn(m1, |_, _| rng.random_range(-1.0..1.0));
        let x = min_norm_solve(&problem.lambda1, &delta)?;
        let h = nullspace_basis(&problem.lambda1, DEFAULT_RANK_TOL)?;
        let e = if h.ncols() == 0 {
            x
        } else {
            let z = least_squares(&(&problem.k1.operator * &h), &(-(&problem.k1.operator * &x)), DEFAULT_RANK_TOL)?;
            &x + h * z
        };
        scaled_to(e, &problem.k1.operator, eps1)
    } else {
        scaled_to(Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)), &problem.k1.operator, 0.5 * eps1)
    };
    let f1 = &f0 - e;
    let obs = Observation::from_objects(&problem, &f0, &f1);
    Ok(Instance { problem, obs })
}

/// Dense random operators with no structural relation between the fidelities.
pub fn generic(seed: u64, n: usize) -> Result<Instance> {
    if n < 2 {
        return Err(OrexError::InvalidInput("generic instance needs n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m0 = rng.random_range(1..n);
    let m1 = rng.random_range(1..n);
    let eps0 = rng.random_range(0.5..2.0);
    let eps1 = rng.random_range(0.1..1.0);
    let z = rng.random_range(1..=n);
    let problem = MultiFidelityProblem::new(
        Hyperellipsoid::new(uniform(&mut rng, n, n), eps0)?,
        Hyperellipsoid::new(uniform(&mut rng, n, n), eps1)?,
        uniform(&mut rng, m0, n),
        uniform(&mut rng, m1, n),
        uniform(&mut rng, z, n),
    )?;
    let f0 = scaled_to(Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)), &problem.k0.operator, 0.5 * eps0);
    let e = scaled_to(Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)), &problem.k1.operator, 0.5 * eps1);
    let f1 = &f0 - e;
    let obs = Observation::from_objects(&problem, &f0, &f1);
    Ok(Instance { problem, obs })
}

/// Laplacian of a ring on `n` vertices with `chords` extra random edges.
pub fn ring_laplacian(n: usize, chords: usize, seed: u64) -> Result<Matrix> {
    if n < 3 {
        return Err(OrexError::InvalidInput("a ring needs at least 3 vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = Matrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        adj[(i, j)] = 1.0;
        adj[(j, i)] = 1.0;
    }
    for _ in 0..chords {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            adj[(i, j)] = 1.0;
            adj[(j, i)] = 1.0;
        }
    }
    let deg = Matrix::from_diagonal(&adj.column_sum());
    Ok(deg - adj)
}

/// Symmetric square root of a positive semidefinite matrix.
pub fn psd_sqrt(l: &Matrix) -> Result<Matrix> {
    if !l.is_square() || (l - l.transpose()).amax() > 1e-12 * l.amax().max(1.0) {
        return Err(OrexError::InvalidInput("the Laplacian must be square and symmetric".into()));
    }
    let eig = SymmetricEigen::new(l.clone());
    let floor = -1e-10 * eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&v| v < floor) {
        return Err(OrexError::InvalidInput("the Laplacian must be positive semidefinite".into()));
    }
    let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    Ok(&eig.eigenvectors * Matrix::from_diagonal(&root) * eig.eigenvectors.transpose())
}

fn sampling_rows(n: usize, vertices: &[usize]) -> Result<Matrix> {
    let mut m = Matrix::zeros(vertices.len(), n);
    for (r, &v) in vertices.iter().enumerate() {
        if v >= n {
            return Err(OrexError::InvalidInput(format!("vertex {v} is out of range")));
        }
        m[(r, v)] = 1.0;
    }
    Ok(m)
}

/// Graph signal model: `||L^{1/2} f0|| <= eps0`, `||f0 - f1|| <= eps1`, point
/// samples of each signal, recovery of the whole high-fidelity signal. Data
/// come from a smooth signal and a perturbation of it.
pub fn graph_signal(
    laplacian: &Matrix,
    hi_vertices: &[usize],
    lo_vertices: &[usize],
    eps0: f64,
    eps1: f64,
    seed: u64,
) -> Result<Instance> {
    let n = laplacian.nrows();
    let p0 = psd_sqrt(laplacian)?;
    let problem = MultiFidelityProblem::new(
        Hyperellipsoid::new(p0, eps0)?,
        Hyperellipsoid::new(Matrix::identity(n, n), eps1)?,
        sampling_rows(n, hi_vertices)?,
        sampling_rows(n, lo_vertices)?,
        Matrix::identity(n, n),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eig = SymmetricEigen::new(laplacian.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut f0 = Vector::zeros(n);
    for &k in order.iter().take(3.min(n)) {
        f0 += eig.eigenvectors.column(k) * rng.random_range(-1.0..1.0);
    }
    let f0 = if (&problem.k0.operator * &f0).norm() > 0.0 {
        scaled_to(f0, &problem.k0.operator, 0.5 * eps0)
    } else {
        f0
    };
    let e = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let f1 = &f0 - &e * (0.5 * eps1 / e.norm());
    let obs = Observation::from_objects(&problem, &f0, &f1);
    Ok(Instance { problem, obs })
}

/// `f0` in the unit disk with its first coordinate observed as 1/2; `f1` is
/// within distance 1 and unobserved. The image of the slice is the segment
/// `{1/2} x [-sqrt(3)/2, sqrt(3)/2]`.
pub fn disk_slice() -> Instance {
    let problem = MultiFidelityProblem::new(
        Hyperellipsoid::new(Matrix::identity(2, 2), 1.0).expect("identity is finite"),
        Hyperellipsoid::new(Matrix::identity(2, 2), 1.0).expect("identity is finite"),
        Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
        Matrix::zeros(0, 2),
        Matrix::identity(2, 2),
    )
    .expect("dimensions agree");
    let obs = Observation::new(Vector::from_vec(vec![0.5]), Vector::zeros(0));
    Instance { problem, obs }
}

/// Constants at the points 0 and 1 with `eps = 0.1`, target the value at 1/2.
pub fn constant_basis() -> FunctionalInstance {
    FunctionalInstance {
        levels: vec![LevelSpec { basis: Basis::Monomial { degree: 0 }, epsilon: 0.1, points: vec![0.0, 1.0] }],
        target: TargetSpec::Point { x: 0.5 },
    }
}

/// Polynomial high fidelity of degree `< n0` sampled at `2 n0` points, plus
/// a cheaper low-fidelity constant model at `3 n0` points.
pub fn random_functional(seed: u64, n0: usize) -> Result<FunctionalInstance> {
    if n0 == 0 {
        return Err(OrexError::InvalidInput("need at least one basis function".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random_range(0.0..1.0)).collect() };
    let hi = pts(2 * n0);
    let lo = pts(3 * n0);
    let eps0 = rng.random_range(0.01..0.2);
    let eps1 = rng.random_range(0.05..0.5);
    let x = rng.random_range(0.0..1.0);
    Ok(FunctionalInstance {
        levels: vec![
            LevelSpec { basis: Basis::Monomial { degree: n0 - 1 }, epsilon: eps0, points: hi },
            LevelSpec { basis: Basis::Monomial { degree: 0 }, epsilon: eps1, points: lo },
        ],
        target: TargetSpec::Point { x },
    })
}
