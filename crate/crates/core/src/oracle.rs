//! Brute-force sampling estimators of worst-case errors.
//!
//! Everything here produces lower bounds, to be compared against the analytic
//! upper bounds of the solvers. Samples come in chunks of [`CHUNK`], each drawn
//! from its own ChaCha stream, so results are bit-identical for a given seed and
//! a larger budget extends a smaller one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::chebyshev::consistent_estimate;
use crate::error::{OrexError, Result};
use crate::model::CompoundOperators;
use crate::numerics::{Matrix, Vector};

pub const CHUNK: usize = 256;
const SHRINK: f64 = 1.0 - 1e-10;
const FEAS_SLACK: f64 = 1e-12;
/// Points farthest from the mean entering the pairwise diameter search.
const DIAMETER_POOL: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SampleBudget {
    pub count: usize,
    pub seed: u64,
}

impl SampleBudget {
    pub fn new(count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(OrexError::InvalidInput("sample budget must be at least 1".into()));
        }
        Ok(Self { count, seed })
    }

    fn chunks(&self) -> Vec<(u64, usize)> {
        (0..self.count.div_ceil(CHUNK))
            .map(|c| (c as u64, CHUNK.min(self.count - c * CHUNK)))
            .collect()
    }

    fn rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk);
        rng
    }
}

fn gaussian(rng: &mut ChaCha8Rng, k: usize) -> Vector {
    Vector::from_fn(k, |_, _| rng.sample(StandardNormal))
}

/// Feasible interval `{t : ||M (a + t d)|| <= 1}` given `M a` and `M d`.
fn chord(ma: &Vector, md: &Vector) -> (f64, f64) {
    let qa = md.norm_squared();
    let qb = ma.dot(md);
    let qc = ma.norm_squared() - 1.0;
    if qa <= f64::MIN_POSITIVE {
        return (f64::NEG_INFINITY, f64::INFINITY);
    }
    let disc = (qb * qb - qa * qc).max(0.0).sqrt();
    // Stable roots of qa t^2 + 2 qb t + qc.
    let q = -(qb + qb.signum() * disc);
    if q == 0.0 {
        return (0.0, 0.0);
    }
    let (r1, r2) = (q / qa, qc / q);
    (r1.min(r2), r1.max(r2))
}

/// The data slice `{f : ||R f|| <= 1, ||S f|| <= 1, L f = y}` seen from a feasible anchor.
struct Slice<'a> {
    ops: &'a CompoundOperators,
    anchor: Vector,
    ra: Vector,
    sa: Vector,
    /// Columns spanning the directions along which the slice has extent.
    dirs: Matrix,
}

/// Kernel directions left free by a constraint that is tight at the anchor
/// with its gradient orthogonal to the kernel; along any other direction it is violated.
fn free_directions(n: &Matrix, m: &Matrix, ma: &Vector, tol: f64) -> Result<Matrix> {
    let mn = m * n;
    let active = ma.norm_squared() >= 1.0 - 1e-9;
    let flat = (mn.transpose() * ma).norm() <= 1e-9 * mn.norm().max(1.0);
    if !(active && flat) || mn.ncols() == 0 {
        return Ok(n.clone());
    }
    Ok(n * crate::numerics::nullspace_basis(&mn, tol)?)
}

impl<'a> Slice<'a> {
    fn new(ops: &'a CompoundOperators, y: &Vector) -> Result<Self> {
        let anchor = consistent_estimate(ops, y)?.f;
        let ra = &ops.r * &anchor;
        let sa = &ops.s * &anchor;
        let worst = ra.norm_squared().max(sa.norm_squared());
        if worst > 1.0 + 1e-9 {
            return Err(OrexError::InconsistentData(format!(
                "the data slice is empty (best max constraint {worst:.6e})"
            )));
        }
        let dirs = free_directions(&ops.kernel_basis, &ops.r, &ra, ops.tol.rank)?;
        let dirs = free_directions(&dirs, &ops.s, &sa, ops.tol.rank)?;
        Ok(Self { ops, anchor, ra, sa, dirs })
    }

    fn feasible(&self, f: &Vector) -> bool {
        (&self.ops.r * f).norm_squared() <= 1.0 + FEAS_SLACK
            && (&self.ops.s * f).norm_squared() <= 1.0 + FEAS_SLACK
    }

    /// Random kernel direction and its feasible step interval.
    fn random_chord(&self, rng: &mut ChaCha8Rng) -> (Vector, f64, f64) {
        let d = &self.dirs * gaussian(rng, self.dirs.ncols());
        let (r_lo, r_hi) = chord(&self.ra, &(&self.ops.r * &d));
        let (s_lo, s_hi) = chord(&self.sa, &(&self.ops.s * &d));
        let lo = r_lo.max(s_lo).min(0.0) * SHRINK;
        let hi = r_hi.min(s_hi).max(0.0) * SHRINK;
        (d, lo, hi)
    }

    /// Both chord endpoints, dropped if they fail verification.
    fn endpoints(&self, rng: &mut ChaCha8Rng) -> Vec<Vector> {
        let (d, lo, hi) = self.random_chord(rng);
        [lo, hi]
            .into_iter()
            .filter(|t| t.is_finite())
            .map(|t| &self.anchor + &d * t)
            .filter(|f| self.feasible(f))
            .collect()
    }

    fn interior(&self, rng: &mut ChaCha8Rng) -> Option<Vector> {
        let (d, lo, hi) = self.random_chord(rng);
        let k = self.dirs.ncols().max(1) as f64;
        let u: f64 = rng.random();
        let end = if rng.random::<bool>() { hi } else { lo };
        let f = &self.anchor + &d * (u.powf(1.0 / k) * end);
        (end.is_finite() && self.feasible(&f)).then_some(f)
    }
}

fn per_chunk<T: Send>(budget: &SampleBudget, work: impl Fn(&mut ChaCha8Rng, usize) -> T + Sync) -> Vec<T> {
    budget
        .chunks()
        .into_par_iter()
        .map(|(c, len)| work(&mut budget.rng(c), len))
        .collect()
}

/// Points of the data slice: the anchor moved a random fraction of the way to
/// the boundary along random kernel directions.
pub fn sample_feasible(ops: &CompoundOperators, y: &Vector, budget: &SampleBudget) -> Result<Vec<Vector>> {
    let slice = Slice::new(ops, y)?;
    if ops.kernel_dim() == 0 {
        return Ok(vec![slice.anchor.clone(); budget.count]);
    }
    let out: Vec<Vector> = per_chunk(budget, |rng, len| {
        (0..len).filter_map(|_| slice.interior(rng)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    if out.is_empty() {
        return Err(OrexError::InconsistentData("no feasible sample was accepted".into()));
    }
    Ok(out)
}

/// Boundary points of the data slice on random chords through the anchor.
fn boundary_points(slice: &Slice, budget: &SampleBudget) -> Vec<Vector> {
    if slice.ops.kernel_dim() == 0 {
        return vec![slice.anchor.clone()];
    }
    per_chunk(budget, |rng, len| (0..len).flat_map(|_| slice.endpoints(rng)).collect::<Vec<_>>())
        .into_iter()
        .flatten()
        .collect()
}

/// `max ||Qt f - z||` over sampled points of the data slice.
pub fn sampled_lwce(ops: &CompoundOperators, y: &Vector, z: &Vector, budget: &SampleBudget) -> Result<f64> {
    if z.len() != ops.q_tilde.nrows() {
        return Err(OrexError::InvalidInput("estimate has the wrong length".into()));
    }
    let slice = Slice::new(ops, y)?;
    let pts = boundary_points(&slice, budget);
    Ok(pts.iter().map(|f| (&ops.q_tilde * f - z).norm()).fold(0.0, f64::max))
}

/// Half of the largest sampled distance between two images `Qt f`, a lower
/// bound on the Chebyshev radius.
pub fn sampled_half_diameter(ops: &CompoundOperators, y: &Vector, budget: &SampleBudget) -> Result<f64> {
    let slice = Slice::new(ops, y)?;
    if ops.kernel_dim() == 0 {
        return Ok(0.0);
    }
    let q = &ops.q_tilde;
    let chords: Vec<f64> = per_chunk(budget, |rng, len| {
        (0..len)
            .map(|_| {
                let (d, lo, hi) = slice.random_chord(rng);
                if lo.is_finite() && hi.is_finite() {
                    0.5 * (hi - lo) * (q * &d).norm()
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    });
    let mut best = chords.into_iter().fold(0.0, f64::max);
    let images: Vec<Vector> = boundary_points(&slice, budget).iter().map(|f| q * f).collect();
    if let Some(first) = images.first() {
        let mean = images.iter().fold(Vector::zeros(first.len()), |acc, v| acc + v) / images.len() as f64;
        let mut order: Vec<(f64, usize)> = images.iter().enumerate().map(|(i, v)| ((v - &mean).norm(), i)).collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let pool: Vec<&Vector> = order.iter().take(DIAMETER_POOL).map(|&(_, i)| &images[i]).collect();
        for (i, a) in pool.iter().enumerate() {
            for b in &pool[i + 1..] {
                best = f64::max(best, 0.5 * (*a - *b).norm());
            }
        }
    }
    Ok(best)
}

/// `max ||Qt f - M L f||` over sampled `f` on the boundary of `||R f||, ||S f|| <= 1`.
pub fn sampled_gwce(map_matrix: &Matrix, ops: &CompoundOperators, budget: &SampleBudget) -> Result<f64> {
    if map_matrix.nrows() != ops.q_tilde.nrows() || map_matrix.ncols() != ops.lambda.nrows() {
        return Err(OrexError::InvalidInput("map matrix has the wrong shape".into()));
    }
    let err = &ops.q_tilde - map_matrix * &ops.lambda;
    let dim = ops.dim();
    let vals = per_chunk(budget, |rng, len| {
        (0..len)
            .map(|_| {
                let d = gaussian(rng, dim);
                let scale = (&ops.r * &d).norm().max((&ops.s * &d).norm());
                if scale > 0.0 {
                    (&err * d).norm() / scale
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    });
    Ok(vals.into_iter().fold(0.0, f64::max))
}
