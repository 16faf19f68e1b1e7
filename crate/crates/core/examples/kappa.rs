//! Agreement between two annotators.

use intentkit::evaluate::cohen_kappa;

fn labels(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

fn main() -> intentkit::Result<()> {
    let a = labels("abuse abuse advice advice abuse advice advice advice abuse advice");
    let b = labels("abuse abuse advice abuse abuse advice advice advice advice advice");
    let agree = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    println!("raw agreement {agree}/{}", a.len());
    println!("kappa {:.4}", cohen_kappa(&a, &b)?);
    println!("kappa against itself {:.4}", cohen_kappa(&a, &a)?);
    Ok(())
}
