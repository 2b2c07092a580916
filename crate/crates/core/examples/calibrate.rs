// Fault-free Monte-Carlo calibration of the ARMAX-weight test: the
// statistic should behave like a chi-square variable with five degrees of
// freedom, and the false-alarm rate should match alpha.

use wavefdi::harness::{calibrate, CalibrationSummary, ScenarioConfig};

pub fn run_example() -> wavefdi::Result<CalibrationSummary> {
    let cfg = ScenarioConfig::from_toml_str(
        r#"
        scenario = "param-change"
        [fdi]
        alpha = 0.05
        "#,
    )?;
    let (_, summary) = calibrate(&cfg, 40)?;
    println!("{} trials, {} windows", summary.trials, summary.windows);
    println!("threshold λ = {:.4}", summary.lambda);
    println!(
        "mean t = {:.3} (5 expected), variance {:.3} (10 expected)",
        summary.mean_t, summary.var_t
    );
    println!(
        "window alarm rate = {:.3} (0.05 expected)",
        summary.window_alarm_rate
    );
    println!("healthy runs = {:.3}", summary.healthy_fraction);
    Ok(summary)
}

#[allow(dead_code)]
fn main() -> wavefdi::Result<()> {
    run_example().map(|_| ())
}
