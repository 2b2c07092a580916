// Scenario files: presets, overrides, validation errors and the TOML
// round trip.

use wavefdi::harness::{ScenarioConfig, ScenarioKind};

pub fn run_example() -> wavefdi::Result<ScenarioConfig> {
    let defaults = ScenarioConfig::from_toml_str("")?;
    println!(
        "empty file: {:?}, N = {}, m = {}, K = {}",
        defaults.scenario,
        defaults.model.n,
        defaults.sensor_layout().len(),
        defaults.model.k
    );

    let cfg = ScenarioConfig::from_toml_str(
        r#"
        scenario = "param-change"
        seed = 42
        [model]
        k = 0.0505
        [fdi]
        alpha = 0.05
        isolation = "minmax"
        subsets = [[2], [2, 3]]
        "#,
    )?;
    assert_eq!(cfg.scenario, ScenarioKind::ParamChange);

    let text = cfg.to_toml_string()?;
    let again = ScenarioConfig::from_toml_str(&text)?;
    println!("round trip identical: {}", again == cfg);

    match ScenarioConfig::from_toml_str("sensors = [1, 3, 99]") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    println!("--- serialized ---\n{text}");
    Ok(cfg)
}

#[allow(dead_code)]
fn main() -> wavefdi::Result<()> {
    run_example().map(|_| ())
}
