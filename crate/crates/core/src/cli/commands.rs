use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::schema::{DenseMatrix, ProblemFile, ProblemKind};
use super::{GenKind, Mode};
use crate::chebyshev::{consistent_estimate, TauMethod};
use crate::error::{OrexError, Result};
use crate::functional::{
    apply, assemble, build_levels, build_target, estimate_weights, sparsify_level0, EstimatorWeights,
};
use crate::global::{global_recover, solve_global_with};
use crate::instances::{self, FunctionalInstance};
use crate::local::{assemble_local_sdp_with, local_radius_bound, local_recover_with, orthogonality_residuals};
use crate::model::{lift_with, validate_with, KernelCase, Tolerances};
use crate::numerics::Vector;
use crate::oracle::{sampled_gwce, sampled_lwce, SampleBudget};

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports always serialize")
}

fn vec_of(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Serialize)]
struct EstimateReport {
    weights: Vec<f64>,
    level_sizes: Vec<usize>,
    gwce: f64,
    dual_bound: f64,
    sparsified_weights: Vec<f64>,
    sparsified_gwce: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<f64>,
}

struct Solved {
    weights: EstimatorWeights,
    sparse: EstimatorWeights,
    b: Vector,
    inst: FunctionalInstance,
    data: Option<Vec<f64>>,
}

fn solve_functional(text: &str) -> Result<Solved> {
    let (inst, data) = ProblemFile::parse(text)?.functional()?;
    let levels = build_levels(&inst.levels)?;
    let target = build_target(&inst.levels[0].basis, &inst.target)?;
    let weights = estimate_weights(&levels, &target)?;
    let sparse = sparsify_level0(&weights, &levels, &target)?;
    Ok(Solved { weights, sparse, b: target.b, inst, data })
}

pub fn estimate(text: &str, _tol: Tolerances) -> Result<String> {
    let s = solve_functional(text)?;
    let estimate = s.data.as_deref().map(|y| apply(&s.sparse, y)).transpose()?;
    Ok(to_json(&EstimateReport {
        weights: s.weights.a.clone(),
        level_sizes: s.weights.level_sizes.clone(),
        gwce: s.weights.gwce,
        dual_bound: s.weights.dual_bound,
        sparsified_weights: s.sparse.a.clone(),
        sparsified_gwce: s.sparse.gwce,
        estimate,
    }))
}

#[derive(Serialize)]
struct GlobalReport {
    mode: Mode,
    c0: f64,
    c1: f64,
    tau_sharp: f64,
    sigma_compound: f64,
    gwce_sq: f64,
    bound: f64,
    lmi_min_eig: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    map: Option<DenseMatrix>,
}

#[derive(Serialize)]
struct LocalJson {
    mode: Mode,
    estimate: Vec<f64>,
    radius: f64,
    radius_sq: f64,
    tau_y: f64,
    sigma_star: f64,
    c0: f64,
    c1: f64,
    certified: bool,
    exact: bool,
    kernel_case: KernelCase,
    ortho_residual_r: f64,
    ortho_residual_s: f64,
    method: TauMethod,
    converged: bool,
    candidates: Vec<f64>,
}

#[derive(Serialize)]
struct ConsistentJson {
    mode: Mode,
    estimate: Vec<f64>,
    tau_bar: f64,
    radius_bound: f64,
    lwce_bound: f64,
}

pub fn recover(text: &str, mode: Mode, emit_map: bool, tol: Tolerances) -> Result<String> {
    let (p, obs) = ProblemFile::parse(text)?.hilbert()?;
    let need_data = || obs.clone().ok_or_else(|| OrexError::InvalidInput(format!("schema: mode {mode:?} needs a data block").to_lowercase()));
    match mode {
        Mode::Global => {
            let sol = solve_global_with(&p, tol)?;
            let estimate = match &obs {
                Some(o) => {
                    let ops = lift_with(&p, tol)?;
                    Some(vec_of(&global_recover(&sol, &ops, &o.stacked())?.estimate))
                }
                None => None,
            };
            Ok(to_json(&GlobalReport {
                mode,
                c0: sol.c0,
                c1: sol.c1,
                tau_sharp: sol.tau_sharp,
                sigma_compound: sol.sigma_compound,
                gwce_sq: sol.gwce_sq,
                bound: sol.gwce_sq.max(0.0).sqrt(),
                lmi_min_eig: sol.lmi_min_eig,
                estimate,
                map: emit_map.then(|| DenseMatrix::from_matrix(&sol.map_matrix)),
            }))
        }
        Mode::Local => {
            let r = local_recover_with(&p, &need_data()?, tol)?;
            Ok(to_json(&LocalJson {
                mode,
                estimate: vec_of(&r.estimate),
                radius: r.radius,
                radius_sq: r.cheb.radius_sq_upper,
                tau_y: r.tau_y,
                sigma_star: r.sigma_star,
                c0: r.c0,
                c1: r.c1,
                certified: r.certified,
                exact: r.cheb.exact,
                kernel_case: r.kernel_case,
                ortho_residual_r: r.cheb.ortho_residual_r,
                ortho_residual_s: r.cheb.ortho_residual_s,
                method: r.cheb.search.method,
                converged: r.cheb.search.converged,
                candidates: r.cheb.search.candidates.clone(),
            }))
        }
        Mode::Consistent => {
            let o = need_data()?;
            let v = validate_with(&p, &tol)?;
            if !v.ok {
                return Err(OrexError::ModelDegeneracy(v.detail));
            }
            let ops = lift_with(&p, tol)?;
            let c = consistent_estimate(&ops, &o.stacked())?;
            Ok(to_json(&ConsistentJson {
                mode,
                estimate: vec_of(&c.estimate),
                tau_bar: c.tau_bar,
                radius_bound: 0.5 * c.lwce_factor2_bound,
                lwce_bound: c.lwce_factor2_bound,
            }))
        }
    }
}

/// One certificate: `passed` iff `value <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub kind: ProblemKind,
    pub seed: u64,
    pub budget: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
}

pub fn validate(text: &str, budget: usize, seed: u64, tol: Tolerances) -> Result<ValidateReport> {
    let file = ProblemFile::parse(text)?;
    let b = SampleBudget::new(budget, seed)?;
    let checks = match file.kind {
        ProblemKind::Hilbert => hilbert_checks(&file, &b, tol)?,
        ProblemKind::Functional => functional_checks(text, seed)?,
    };
    Ok(ValidateReport { kind: file.kind, seed, budget, passed: checks.iter().all(|c| c.passed), checks })
}

fn hilbert_checks(file: &ProblemFile, budget: &SampleBudget, tol: Tolerances) -> Result<Vec<Check>> {
    let (p, obs) = file.hilbert()?;
    let v = validate_with(&p, &tol)?;
    if !v.ok {
        return Err(OrexError::ModelDegeneracy(v.detail));
    }
    let ops = lift_with(&p, tol)?;
    let sol = solve_global_with(&p, tol)?;
    let bound = sol.gwce_sq.max(0.0).sqrt();
    let mut checks = vec![
        Check::at_most("global_lmi_feasible", -sol.lmi_min_eig, 1e-8 * sol.gwce_sq.max(1.0)),
        Check::at_most("global_sampled_gwce", sampled_gwce(&sol.map_matrix, &ops, budget)? - bound, 1e-7),
    ];
    let Some(obs) = obs else { return Ok(checks) };
    let y = obs.stacked();
    let local = local_recover_with(&p, &obs, tol)?;
    let pt = &local.cheb.point;
    let s = local.sigma_star;
    let kappa = (1.0 - s) * (pt.rf2 + pt.rh2) + s * (pt.sf2 + pt.sh2);
    checks.push(Check::at_most("kappa_identity", (kappa - 1.0).abs(), tol.cert));
    if v.kernel_case != KernelCase::None {
        let mut worst = 0.0f64;
        for i in 1..10 {
            let (r0, r1) = orthogonality_residuals(&p, &obs, i as f64 / 10.0)?;
            worst = worst.max(r0).max(r1);
        }
        checks.push(Check::at_most("orthogonality_on_path", worst, tol.cert));
        checks.push(Check::at_most("certified", if local.certified { 0.0 } else { 1.0 }, 0.0));
    }
    let rb = local_radius_bound(&p, &obs, budget)?;
    checks.push(Check::at_most("radius_sandwich", rb.lower - rb.upper, 1e-7));
    if local.certified {
        let gap = rb.witness.map_or(f64::INFINITY, |w| (rb.upper - w).abs());
        checks.push(Check::at_most("witness_gap", gap, tol.cert * (1.0 + rb.upper)));
    }
    checks.push(Check::at_most("local_le_global", local.radius - bound, 1e-7));
    let r2 = local.cheb.radius_sq_upper;
    let sdp = assemble_local_sdp_with(&p, &obs, &tol)?.pencil.solve_grid(tol.eig)?;
    checks.push(Check::at_most("sdp_cross_check", (sdp.value - r2).abs(), 0.01 * r2 + 1e-10));
    let cons = consistent_estimate(&ops, &y)?;
    let lw = sampled_lwce(&ops, &y, &cons.estimate, budget)?;
    checks.push(Check::at_most("consistent_factor2", lw - cons.lwce_factor2_bound, 1e-6));
    Ok(checks)
}

fn functional_checks(text: &str, seed: u64) -> Result<Vec<Check>> {
    let s = solve_functional(text)?;
    let levels = build_levels(&s.inst.levels)?;
    let target = build_target(&s.inst.levels[0].basis, &s.inst.target)?;
    let asm = assemble(&levels, &target)?;
    let mut residual = 0.0f64;
    let mut start = 0;
    for (t, m) in asm.m.iter().enumerate() {
        let a = Vector::from_column_slice(&s.weights.a[start..]);
        let rhs = if t == 0 { s.b.clone() } else { Vector::zeros(m.nrows()) };
        residual = residual.max((m * a - rhs).amax());
        start += levels[t].m;
    }
    let n0 = levels[0].basis_eval.nrows();
    let nnz = s.sparse.level(0).iter().filter(|v| **v != 0.0).count();
    let scale = 1.0 + s.weights.gwce;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = Vector::from_fn(n0, |_, _| rng.random_range(-1.0..1.0));
    let y: Vec<f64> = (asm.m[0].transpose() * &c).iter().copied().collect();
    let exact = (apply(&s.sparse, &y)? - s.b.dot(&c)).abs();
    Ok(vec![
        Check::at_most("constraint_residual", residual, 1e-9 * scale),
        Check::at_most("lp_duality_gap", (s.weights.gwce - levels[0].epsilon - s.weights.dual_bound).abs(), 1e-9 * scale),
        Check::at_most("level0_sparsity", nnz as f64, n0 as f64),
        Check::at_most("sparsified_gwce", (s.sparse.gwce - s.weights.gwce).abs(), 1e-9 * scale),
        Check::at_most("v0_exactness", exact, 1e-9 * (1.0 + c.amax())),
    ])
}

pub fn generate(kind: GenKind, seed: u64, n: usize, s_active: bool, with_data: bool) -> Result<String> {
    let file = match kind {
        GenKind::DigitalTwin => hilbert_file(instances::digital_twin(seed, n, s_active)?, with_data),
        GenKind::Generic => hilbert_file(instances::generic(seed, n)?, with_data),
        GenKind::GraphSignal => {
            let lap = instances::ring_laplacian(n, n / 3, seed)?;
            let hi: Vec<usize> = (0..n).step_by(3).collect();
            let lo: Vec<usize> = (0..n).filter(|v| v % 3 != 0).collect();
            hilbert_file(instances::graph_signal(&lap, &hi, &lo, 1.0, 0.2, seed)?, with_data)
        }
        GenKind::DiskSlice => hilbert_file(instances::disk_slice(), with_data),
        GenKind::ConstantBasis => functional_file(&instances::constant_basis(), seed, with_data),
        GenKind::RandomFunctional => functional_file(&instances::random_functional(seed, n)?, seed, with_data),
    };
    Ok(file.to_json())
}

fn hilbert_file(inst: instances::Instance, with_data: bool) -> ProblemFile {
    ProblemFile::from_hilbert(&inst.problem, with_data.then_some(&inst.obs))
}

/// Data are values of a random element of `V0` plus noise below each level's epsilon.
fn functional_file(inst: &FunctionalInstance, seed: u64, with_data: bool) -> ProblemFile {
    if !with_data {
        return ProblemFile::from_functional(inst, None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = &inst.levels[0].basis;
    let c: Vec<f64> = (0..basis.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<Vec<f64>> = inst
        .levels
        .iter()
        .map(|l| {
            l.points
                .iter()
                .map(|&x| {
                    let v: f64 = basis.values_at(x).iter().zip(&c).map(|(b, c)| b * c).sum();
                    v + l.epsilon * rng.random_range(-0.5..0.5)
                })
                .collect()
        })
        .collect();
    ProblemFile::from_functional(inst, Some(&y))
}
