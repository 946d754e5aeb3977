// Disagreement probability falling with block length. Each length gets
// its own typicality windows: the encodable set lives on the integer
// count lattice, so a window that works at n = 200 strands n = 50 with
// nothing to encode. Rates are per state with 95% score intervals.

use skgen::protocol::{run_protocol, AuxSelect, ProtocolConfig};
use skgen::sourcefile::load_source_spec;
use skgen::typicality::TypicalityParams;

fn main() -> skgen::Result<()> {
    let src = load_source_spec(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/protocol_trend.toml"
    ))?;
    let windows = [
        (50usize, TypicalityParams::new(0.01, 0.012, 0.015, 0.05)?),
        (100, TypicalityParams::new(0.004, 0.005, 0.0075, 0.05)?),
        (200, TypicalityParams::new(0.001, 0.0024, 0.00245, 0.003)?),
    ];
    println!("{:>5} {:>6} {:>12} {:>22}", "n", "state", "disagree", "95% interval");
    for (n, typ) in windows {
        let cfg = ProtocolConfig {
            n,
            delta: 0.03125,
            typicality: typ,
            gamma: f64::INFINITY,
            aux: AuxSelect::Identity,
            master_seed: 5,
            trials: 2000,
            layer_b: false,
            rate_target: Some(0.0312944703642),
            key_size: None,
            states: Vec::new(),
            security: None,
            epsilon: 0.05,
        };
        let rep = run_protocol(&src, &cfg)?;
        for s in &rep.states {
            println!(
                "{:>5} {:>6} {:>12.4} [{:.4}, {:.4}]",
                n, s.state, s.disagreement_rate, s.ci_low, s.ci_high
            );
        }
    }
    Ok(())
}
