// Detection thresholds: upper quantiles of the chi-square distribution
// and the dof-mean convention.

use wavefdi::fdi::{detection_threshold, ThresholdMode};
use wavefdi::stats::{chi2_sf, chi2_threshold};

pub fn run_example() -> wavefdi::Result<Vec<(f64, usize, f64)>> {
    let mut table = Vec::new();
    println!(
        "{:>6} {:>4} {:>10} {:>12}",
        "alpha", "dof", "lambda", "tail check"
    );
    for &alpha in &[0.5, 0.1, 0.05, 0.01, 0.001] {
        for &dof in &[1, 2, 5] {
            let lambda = chi2_threshold(alpha, dof);
            println!(
                "{alpha:>6} {dof:>4} {lambda:>10.4} {:>12.3e}",
                chi2_sf(lambda, dof) - alpha
            );
            table.push((alpha, dof, lambda));
        }
    }
    println!(
        "five weights: quantile(0.01) = {:.4}, dof-mean = {}",
        detection_threshold(ThresholdMode::Quantile, 0.01, 5),
        detection_threshold(ThresholdMode::DofMean, 0.01, 5)
    );
    Ok(table)
}

#[allow(dead_code)]
fn main() -> wavefdi::Result<()> {
    run_example().map(|_| ())
}
