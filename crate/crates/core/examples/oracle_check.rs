//! Cross-checks the FFT shortcuts against explicit dense matrices on small
//! grids, then shows that a corrupted transfer function is caught.

use myopic_deconv::oracle::{check_all, Fault};

fn main() -> myopic_deconv::Result<()> {
    for side in [4, 7, 8] {
        let report = check_all(11, side, 5, None)?;
        println!("side {side}: {}", if report.passed() { "all checks pass" } else { "FAILED" });
        for c in &report.checks {
            println!("  {:<50} {:.2e}", c.name, c.worst);
        }
    }
    let bad = check_all(11, 8, 1, Some(Fault::CorruptBlurDiagonal))?;
    let caught: Vec<&str> = bad.checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    println!("corrupted diagonal caught by: {}", caught.join(", "));
    Ok(())
}
