//! Write a problem file, read it back and run the same reports the `orex` binary prints.

use orex::cli::schema::ProblemFile;
use orex::cli::{generate, recover, validate, GenKind, Mode};
use orex::model::Tolerances;

fn main() -> orex::error::Result<()> {
    let text = generate(GenKind::DigitalTwin, 2, 4, true, true)?;
    let file = ProblemFile::parse(&text)?;
    let (problem, obs) = file.hilbert()?;
    println!("n = {}, m0 = {}, m1 = {}, data: {}", problem.dim(), problem.m0(), problem.m1(), obs.is_some());

    let path = std::env::temp_dir().join("orex-twin.json");
    std::fs::write(&path, &text).expect("temp dir is writable");
    println!("wrote {}", path.display());

    let tol = Tolerances::default();
    println!("{}", recover(&text, Mode::Local, false, tol)?);
    let report = validate(&text, 5_000, 0, tol)?;
    for c in &report.checks {
        println!("{:<24} {:<5} {:.3e} <= {:.3e}", c.name, c.passed, c.value, c.threshold);
    }
    Ok(())
}
