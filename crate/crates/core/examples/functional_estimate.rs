//! Optimal weights for estimating a point value from two levels of polynomial data.

use orex::functional::{apply, build_levels, build_target, estimate_weights, sparsify_level0, Basis, LevelSpec, TargetSpec};

fn main() -> orex::error::Result<()> {
    let specs = vec![
        LevelSpec { basis: Basis::Monomial { degree: 2 }, epsilon: 0.05, points: vec![0.0, 0.4, 0.7, 1.0] },
        LevelSpec { basis: Basis::Monomial { degree: 0 }, epsilon: 0.3, points: vec![0.1, 0.3, 0.5, 0.9] },
    ];
    let levels = build_levels(&specs)?;
    let target = build_target(&specs[0].basis, &TargetSpec::Point { x: 0.55 })?;

    let w = estimate_weights(&levels, &target)?;
    let sparse = sparsify_level0(&w, &levels, &target)?;
    println!("gwce          {:.6}", w.gwce);
    println!("level 0       {:?}", w.level(0));
    println!("level 1       {:?}", w.level(1));
    println!("sparse gwce   {:.6}", sparse.gwce);
    println!("sparse lvl 0  {:?}", sparse.level(0));

    // f(x) = 1 + x - x^2 observed exactly at every point
    let f = |x: f64| 1.0 + x - x * x;
    let y: Vec<f64> = specs.iter().flat_map(|s| s.points.iter().map(|&x| f(x))).collect();
    println!("estimate      {:.6} (true {:.6})", apply(&w, &y)?, f(0.55));
    Ok(())
}
