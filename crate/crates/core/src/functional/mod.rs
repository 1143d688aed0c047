//! Optimal estimation of a linear functional from multi-level point data in `C(X)`.
//!
//! Level `t` carries a subspace `V_t` and a radius `eps_t`. The object `f0`
//! lies within `eps0` of `V0`, each increment `f_t - f_{t-1}` lies within
//! `eps_t` of `V_t`, and level `t` observes `f_t` at `m_t` points. The optimal
//! linear estimator `sum_t a_t . y_t` solves a weighted l1 problem; it is
//! computed here as a linear program so that solutions are vertices.

pub mod basis;

use serde::{Deserialize, Serialize};

use crate::error::{OrexError, Result};
use crate::lp::{solve_lp, LpStatus, StandardLp};
use crate::numerics::{ensure_finite, ensure_finite_vec, singular_values, Matrix, Vector};

pub use basis::Basis;

/// One level of the approximability model.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximabilityLevel {
    /// `n_t x (m_t + ... + m_T)`: values of the basis of `V_t` at the
    /// observation points of this level and all later ones.
    pub basis_eval: Matrix,
    pub epsilon: f64,
    /// Number of observations taken at this level.
    pub m: usize,
}

/// Representer `b` of the target functional on `V0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTarget {
    pub b: Vector,
}

/// Constraint blocks of the estimator LP.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    /// `M^(s)`, of size `n_s x (m_s + ... + m_T)`.
    pub m: Vec<Matrix>,
    pub b: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorWeights {
    /// All weights, level 0 first.
    pub a: Vec<f64>,
    pub level_sizes: Vec<usize>,
    /// Global worst-case error of the estimator.
    pub gwce: f64,
    /// Dual objective of the LP; equals `gwce - eps0` at optimality.
    pub dual_bound: f64,
}

impl EstimatorWeights {
    pub fn level(&self, t: usize) -> &[f64] {
        let start: usize = self.level_sizes[..t].iter().sum();
        &self.a[start..start + self.level_sizes[t]]
    }
}

/// Level description in terms of a concrete basis and points on the line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub basis: Basis,
    pub epsilon: f64,
    pub points: Vec<f64>,
}

/// Target functional on `V0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Point evaluation at `x`.
    Point { x: f64 },
    /// Normalized integral over `[lo, hi]`.
    Average { lo: f64, hi: f64 },
    /// Representer supplied directly.
    Explicit { b: Vec<f64> },
}

/// Evaluate each level's basis at its own points and all later ones.
pub fn build_levels(specs: &[LevelSpec]) -> Result<Vec<ApproximabilityLevel>> {
    (0..specs.len())
        .map(|t| {
            let pts: Vec<f64> = specs[t..].iter().flat_map(|s| s.points.iter().copied()).collect();
            Ok(ApproximabilityLevel {
                basis_eval: specs[t].basis.evaluate(&pts)?,
                epsilon: specs[t].epsilon,
                m: specs[t].points.len(),
            })
        })
        .collect()
}

pub fn build_target(level0: &Basis, spec: &TargetSpec) -> Result<FunctionalTarget> {
    let b = match spec {
        TargetSpec::Point { x } => {
            if !x.is_finite() {
                return Err(OrexError::InvalidInput("target point must be finite".into()));
            }
            level0.values_at(*x)
        }
        TargetSpec::Average { lo, hi } => level0.mean(*lo, *hi)?,
        TargetSpec::Explicit { b } => Vector::from_column_slice(b),
    };
    Ok(FunctionalTarget { b })
}

fn check_levels(levels: &[ApproximabilityLevel], target: &FunctionalTarget) -> Result<()> {
    if levels.is_empty() {
        return Err(OrexError::InvalidInput("at least one level is required".into()));
    }
    for (t, lv) in levels.iter().enumerate() {
        if !(lv.epsilon > 0.0) || !lv.epsilon.is_finite() {
            return Err(OrexError::InvalidInput(format!(
                "level {t}: epsilon must be positive and finite, got {}",
                lv.epsilon
            )));
        }
        let cols: usize = levels[t..].iter().map(|l| l.m).sum();
        if lv.basis_eval.ncols() != cols {
            return Err(OrexError::InvalidInput(format!(
                "level {t}: basis evaluations have {} columns, expected {cols}",
                lv.basis_eval.ncols()
            )));
        }
        ensure_finite(&lv.basis_eval, "basis evaluations")?;
    }
    let n0 = levels[0].basis_eval.nrows();
    if target.b.len() != n0 {
        return Err(OrexError::InvalidInput(format!(
            "target has length {}, expected dim V0 = {n0}",
            target.b.len()
        )));
    }
    ensure_finite_vec(&target.b, "target")
}

/// Build `M^(s)` and `b`, checking that `V0` is determined by the level-0 samples.
pub fn assemble(levels: &[ApproximabilityLevel], target: &FunctionalTarget) -> Result<Assembly> {
    check_levels(levels, target)?;
    let v0 = &levels[0].basis_eval;
    let (n0, m0) = (v0.nrows(), levels[0].m);
    if n0 > 0 {
        let sv = singular_values(&v0.columns(0, m0).into_owned());
        let full_rank = n0 <= m0 && sv[0] > 0.0 && sv[n0 - 1] > 1e-12 * sv[0];
        if !full_rank {
            return Err(OrexError::ModelDegeneracy(format!(
                "V0 (dim {n0}) is not determined by the {m0} level-0 samples"
            )));
        }
    }
    Ok(Assembly { m: levels.iter().map(|l| l.basis_eval.clone()).collect(), b: target.b.clone() })
}

fn level_weights(levels: &[ApproximabilityLevel]) -> Vec<f64> {
    levels
        .iter()
        .scan(0.0, |acc, l| {
            *acc += l.epsilon;
            Some(*acc)
        })
        .collect()
}

fn gwce_of(levels: &[ApproximabilityLevel], a: &[f64]) -> f64 {
    let w = level_weights(levels);
    let mut start = 0;
    let mut total = levels[0].epsilon;
    for (t, lv) in levels.iter().enumerate() {
        total += w[t] * a[start..start + lv.m].iter().map(|x| x.abs()).sum::<f64>();
        start += lv.m;
    }
    total
}

/// LP over `[a+; a-]` for the first `ncols` weights, with `rhs0` as the
/// right-hand side of the level-0 block.
fn split_lp(levels: &[ApproximabilityLevel], asm: &Assembly, ncols: usize, rhs0: &Vector) -> StandardLp {
    let offsets: Vec<usize> = levels
        .iter()
        .scan(0, |acc, l| {
            let o = *acc;
            *acc += l.m;
            Some(o)
        })
        .collect();
    let nrows: usize = asm.m.iter().map(|m| m.nrows()).sum();
    let mut a = Matrix::zeros(nrows, 2 * ncols);
    let mut rhs = vec![0.0; nrows];
    let mut r = 0;
    for (s, ms) in asm.m.iter().enumerate() {
        for j in 0..ms.nrows() {
            for c in offsets[s]..ncols {
                let v = ms[(j, c - offsets[s])];
                a[(r, c)] = v;
                a[(r, ncols + c)] = -v;
            }
            if s == 0 {
                rhs[r] = rhs0[j];
            }
            r += 1;
        }
    }
    let w = level_weights(levels);
    let mut cost = vec![0.0; 2 * ncols];
    for (t, lv) in levels.iter().enumerate() {
        for c in offsets[t]..(offsets[t] + lv.m).min(ncols) {
            cost[c] = w[t];
            cost[ncols + c] = w[t];
        }
    }
    StandardLp { cost, constraints: a, rhs }
}

fn recombine(x: &[f64], ncols: usize) -> Vec<f64> {
    (0..ncols)
        .map(|i| {
            let v = x[i] - x[ncols + i];
            if v == 0.0 {
                0.0
            } else {
                v
            }
        })
        .collect()
}

/// Minimize `sum_t (eps0 + ... + eps_t) ||a_t||_1` subject to
/// `M^(0) a = b` and `M^(s) [a_s; ...; a_T] = 0` for `s >= 1`.
pub fn estimate_weights(levels: &[ApproximabilityLevel], target: &FunctionalTarget) -> Result<EstimatorWeights> {
    let asm = assemble(levels, target)?;
    let m_total: usize = levels.iter().map(|l| l.m).sum();
    let lp = split_lp(levels, &asm, m_total, &asm.b);
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(OrexError::InfeasibleModel(format!(
            "estimator LP returned {:?} although V0 is determined by the level-0 samples",
            sol.status
        )));
    }
    let a = recombine(&sol.x, m_total);
    let dual_bound: f64 = lp.rhs.iter().zip(&sol.duals).map(|(b, y)| b * y).sum();
    Ok(EstimatorWeights {
        gwce: gwce_of(levels, &a),
        level_sizes: levels.iter().map(|l| l.m).collect(),
        a,
        dual_bound,
    })
}

/// Re-solve for `a0` alone with the other levels frozen, returning a vertex
/// with at most `dim V0` nonzero level-0 weights.
pub fn sparsify_level0(
    weights: &EstimatorWeights,
    levels: &[ApproximabilityLevel],
    target: &FunctionalTarget,
) -> Result<EstimatorWeights> {
    let asm = assemble(levels, target)?;
    let m0 = levels[0].m;
    let m_total: usize = levels.iter().map(|l| l.m).sum();
    if weights.a.len() != m_total {
        return Err(OrexError::InvalidInput(format!(
            "weights have length {}, expected {m_total}",
            weights.a.len()
        )));
    }
    let rest = Vector::from_column_slice(&weights.a[m0..]);
    let rhs0 = &asm.b - asm.m[0].columns(m0, m_total - m0) * rest;
    // Only the level-0 rows involve a0.
    let block = Assembly { m: vec![asm.m[0].columns(0, m0).into_owned()], b: rhs0.clone() };
    let lp0 = split_lp(&levels[..1], &block, m0, &rhs0);
    let sol = solve_lp(&lp0)?;
    if sol.status != LpStatus::Optimal {
        return Err(OrexError::InfeasibleModel(format!("level-0 LP returned {:?}", sol.status)));
    }
    let mut a = recombine(&sol.x, m0);
    a.extend_from_slice(&weights.a[m0..]);
    let gwce = gwce_of(levels, &a);
    Ok(EstimatorWeights { a, level_sizes: weights.level_sizes.clone(), gwce, dual_bound: weights.dual_bound })
}

/// The estimate `a . y`.
pub fn apply(weights: &EstimatorWeights, y: &[f64]) -> Result<f64> {
    if y.len() != weights.a.len() {
        return Err(OrexError::InvalidInput(format!(
            "data has length {}, expected {}",
            y.len(),
            weights.a.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(OrexError::InvalidInput("data contains non-finite entries".into()));
    }
    Ok(weights.a.iter().zip(y).map(|(a, y)| a * y).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_level(points: &[f64], eps: f64) -> LevelSpec {
        LevelSpec { basis: Basis::Monomial { degree: 0 }, epsilon: eps, points: points.to_vec() }
    }

    fn setup(specs: &[LevelSpec], target: &TargetSpec) -> (Vec<ApproximabilityLevel>, FunctionalTarget) {
        let levels = build_levels(specs).unwrap();
        let t = build_target(&specs[0].basis, target).unwrap();
        (levels, t)
    }

    #[test]
    fn assemble_constant_and_linear() {
        let (lv, t) = setup(&[constant_level(&[0.0, 1.0], 0.1)], &TargetSpec::Point { x: 0.5 });
        let asm = assemble(&lv, &t).unwrap();
        assert_eq!(asm.m[0], Matrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert_eq!(asm.b, Vector::from_vec(vec![1.0]));

        let spec = LevelSpec { basis: Basis::Monomial { degree: 1 }, epsilon: 0.1, points: vec![0.0, 1.0] };
        let (lv, t) = setup(&[spec], &TargetSpec::Point { x: 0.5 });
        let asm = assemble(&lv, &t).unwrap();
        assert_eq!(asm.m[0], Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        assert_eq!(asm.b, Vector::from_vec(vec![1.0, 0.5]));
    }

    #[test]
    fn assemble_second_level_block() {
        let specs = [constant_level(&[0.0, 1.0], 0.1), constant_level(&[0.25, 0.75], 0.2)];
        let (lv, t) = setup(&specs, &TargetSpec::Point { x: 0.5 });
        let asm = assemble(&lv, &t).unwrap();
        assert_eq!(asm.m[1], Matrix::from_row_slice(1, 2, &[1.0, 1.0]));
        assert_eq!(asm.m[0].ncols(), 4);
    }

    #[test]
    fn rank_deficient_level0_is_degenerate() {
        let spec = LevelSpec { basis: Basis::Monomial { degree: 2 }, epsilon: 0.1, points: vec![0.0, 1.0] };
        let (lv, t) = setup(&[spec], &TargetSpec::Point { x: 0.5 });
        assert!(matches!(assemble(&lv, &t), Err(OrexError::ModelDegeneracy(_))));
    }

    /// Vertices of `{a : a1 + a2 = 1}` in the split form are `(1,0)` and `(0,1)`.
    #[test]
    fn constant_basis_value() {
        let (lv, t) = setup(&[constant_level(&[0.0, 1.0], 0.1)], &TargetSpec::Point { x: 0.5 });
        let w = estimate_weights(&lv, &t).unwrap();
        let vertices = [[1.0, 0.0], [0.0, 1.0]];
        let best = vertices.iter().map(|v| v[0] + v[1]).fold(f64::INFINITY, f64::min);
        assert!((w.gwce - 0.1 * (1.0 + best)).abs() < 1e-12);
        assert!((w.gwce - 0.2).abs() < 1e-12);
        assert!((w.dual_bound - 0.1).abs() < 1e-12);
    }

    #[test]
    fn interpolation_at_a_sample() {
        let (lv, t) = setup(&[constant_level(&[0.3, 0.7, 0.9], 0.5)], &TargetSpec::Point { x: 0.3 });
        let w = estimate_weights(&lv, &t).unwrap();
        let l1: f64 = w.a.iter().map(|x| x.abs()).sum();
        assert!(l1 <= 1.0 + 1e-12);
    }

    #[test]
    fn apply_basics() {
        let w = EstimatorWeights { a: vec![0.0, 0.0], level_sizes: vec![2], gwce: 0.0, dual_bound: 0.0 };
        assert_eq!(apply(&w, &[3.0, 4.0]).unwrap(), 0.0);
        let w = EstimatorWeights { a: vec![1.0, 0.0], level_sizes: vec![2], gwce: 0.0, dual_bound: 0.0 };
        assert_eq!(apply(&w, &[3.0, 4.0]).unwrap(), 3.0);
        assert!(apply(&w, &[1.0]).is_err());
    }

    #[test]
    fn sparsify_single_constant() {
        let pts = [0.1, 0.2, 0.5, 0.7, 0.9];
        let (lv, t) = setup(&[constant_level(&pts, 0.1), constant_level(&[0.3, 0.6], 0.05)], &TargetSpec::Point { x: 0.4 });
        let w = estimate_weights(&lv, &t).unwrap();
        let s = sparsify_level0(&w, &lv, &t).unwrap();
        assert!(s.level(0).iter().filter(|v| **v != 0.0).count() <= 1);
        assert!((s.gwce - w.gwce).abs() < 1e-9);
        let again = sparsify_level0(&s, &lv, &t).unwrap();
        assert!((again.gwce - s.gwce).abs() < 1e-12);
    }

    /// Enumerate all supports of size 2 for the level-0 LP and compare.
    #[test]
    fn sparsify_against_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let pts: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
            let spec = LevelSpec { basis: Basis::Monomial { degree: 1 }, epsilon: 0.2, points: pts.clone() };
            let x = rng.random_range(0.0..1.0);
            let (lv, t) = setup(&[spec], &TargetSpec::Point { x });
            let w = estimate_weights(&lv, &t).unwrap();
            let s = sparsify_level0(&w, &lv, &t).unwrap();
            assert!(s.a.iter().filter(|v| **v != 0.0).count() <= 2);
            let mut best = f64::INFINITY;
            for i in 0..6 {
                for j in i + 1..6 {
                    let m = Matrix::from_row_slice(2, 2, &[1.0, 1.0, pts[i], pts[j]]);
                    if let Some(inv) = m.try_inverse() {
                        let a = inv * &t.b;
                        best = best.min(0.2 * (1.0 + a.abs().sum()));
                    }
                }
            }
            assert!((s.gwce - best).abs() < 1e-9 * best.max(1.0));
            assert!((w.gwce - best).abs() < 1e-9 * best.max(1.0));
        }
    }

    #[test]
    fn worthless_low_fidelity() {
        let pts = [0.0, 0.4, 1.0];
        let single = setup(&[LevelSpec { basis: Basis::Monomial { degree: 1 }, epsilon: 0.1, points: pts.to_vec() }], &TargetSpec::Point { x: 0.7 });
        let double = setup(
            &[
                LevelSpec { basis: Basis::Monomial { degree: 1 }, epsilon: 0.1, points: pts.to_vec() },
                LevelSpec { basis: Basis::Monomial { degree: 0 }, epsilon: 1e6, points: pts.to_vec() },
            ],
            &TargetSpec::Point { x: 0.7 },
        );
        let w0 = estimate_weights(&single.0, &single.1).unwrap();
        let w1 = estimate_weights(&double.0, &double.1).unwrap();
        assert!((w0.gwce - w1.gwce).abs() < 1e-8);
        assert!(w1.level(1).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn monotone_in_epsilon() {
        let specs = [constant_level(&[0.0, 0.5, 1.0], 0.1), constant_level(&[0.2, 0.8], 0.3)];
        let (lv, t) = setup(&specs, &TargetSpec::Average { lo: 0.0, hi: 1.0 });
        let base = estimate_weights(&lv, &t).unwrap().gwce;
        for k in 0..2 {
            let mut bigger = lv.clone();
            bigger[k].epsilon *= 1.5;
            assert!(estimate_weights(&bigger, &t).unwrap().gwce >= base - 1e-9);
        }
    }
}
