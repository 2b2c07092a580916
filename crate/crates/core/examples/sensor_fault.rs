// The default scenario: a bias on sensor 22 from step 500. The
// per-sensor innovation test flags the run and names the sensor.

use wavefdi::harness::{execute, ScenarioConfig};

pub struct SensorFaultSummary {
    pub verdict: String,
    pub loudest_sensor: usize,
    pub innovation_magnitudes: Vec<f64>,
    pub exit_code: i32,
}

pub fn run_example() -> wavefdi::Result<SensorFaultSummary> {
    let cfg = ScenarioConfig::from_toml_str("")?;
    let run = execute(&cfg)?;
    let mags = run.estimation.innovation_magnitudes(500);
    let loudest = mags
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, _)| j + 1)
        .unwrap_or(0);

    for w in &run.windows {
        let culprit = w.best.as_ref().map(|b| b.0.as_str()).unwrap_or("-");
        println!(
            "[{:>5}, {:>5})  t = {:>10.3}  λ = {:.3}  {}  {culprit}",
            w.start, w.end, w.t, w.lambda, w.verdict
        );
    }
    println!(
        "largest mean |innovation|: sensor {loudest} ({:e})",
        mags[loudest - 1]
    );
    println!("verdict: {} (exit {})", run.verdict, run.exit_code());
    Ok(SensorFaultSummary {
        verdict: run.verdict.to_string(),
        loudest_sensor: loudest,
        innovation_magnitudes: mags,
        exit_code: run.exit_code(),
    })
}

#[allow(dead_code)]
fn main() -> wavefdi::Result<()> {
    run_example().map(|_| ())
}
