//! Drive the runner from code: build a config, run it at three refinement
//! levels and print the convergence table.

use geoflow::runner::{convergence, run_report, RunConfig};

fn main() {
    let text = r#"{
        "name": "example-magnon",
        "flow": "hf",
        "grid": {"nx": 64, "ny": 10, "lx": 18.84955592153876, "ly": 1.1111111111111112},
        "params": {"dt": 1e-3, "order": 2},
        "initial": {"preset": "magnon", "theta": 1.0471975511965976, "k": 1.0},
        "checks": ["gauge", {"name": "exact", "levels": 3, "tolerance": 5e-3}]
    }"#;
    let cfg = RunConfig::from_json(text).expect("valid config");
    let (report, artifacts) = run_report(&cfg).expect("run");
    println!("status {:?} (exit {}), {} artifacts", report.status, report.exit_code, artifacts.len());
    for c in &report.checks {
        println!("{}: {:?} norms {:?} slopes {:?}", c.name.name(), c.status, c.norms, c.slopes);
    }
    print!("{}", convergence(&cfg, 3).expect("convergence").pretty());
}
