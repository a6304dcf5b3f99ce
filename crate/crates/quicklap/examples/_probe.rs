// scratch probe: ordering diagnostics (deleted before delivery)
use quicklap::experiment::{run_sweep, Algorithm, SweepConfig};
use quicklap::language::{BackendConfig, BackendKind};
use quicklap::planner::PlannerConfig;

fn main() {
    let horizon: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(12);
    let t0 = std::time::Instant::now();
    let seeds: Vec<u64> = std::env::args()
        .nth(2)
        .map(|s| s.split(',').map(|x| x.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![0]);
    let cfg = SweepConfig {
        horizons: vec![horizon],
        seeds,
        ..SweepConfig::default()
    };
    let result = run_sweep(&cfg).unwrap();
    println!("elapsed: {:?} for {} episodes", t0.elapsed(), result.episodes.len());
    for cell in &result.summary.cells {
        println!(
            "{:<6} {:<13} mean {:.4} sem {:.4} n {}",
            cell.scenario,
            cell.algorithm.name(),
            cell.mean_nmse,
            cell.sem,
            cell.n
        );
    }
    println!("\nper-utterance (scenario C):");
    for record in result.episodes.iter().filter(|e| e.key.scenario == "C") {
        if let Some(r) = &record.result {
            println!(
                "  {:<13} {:<40} init {:.4} trace {:?}",
                record.key.algorithm.name(),
                record.key.utterance,
                r.initial_nmse,
                r.nmse_trace.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
            );
        } else {
            println!("  FAILED: {:?}", record.error);
        }
    }
    println!("\nconvergence:");
    for row in &result.convergence {
        println!(
            "  k={} {:<13} {:.4} ± {:.4}",
            row.intervention_index, row.algorithm.name(), row.mean_nmse, row.sem
        );
    }

    let scenario_filter = std::env::args().nth(3).unwrap_or_else(|| "CPC3".into());
    println!("\n{scenario_filter} feature deltas:");
    for record in result
        .episodes
        .iter()
        .filter(|e| e.key.scenario == scenario_filter && e.key.algorithm == Algorithm::Quicklap)
    {
        if let Some(r) = &record.result {
            println!("  {:?}", record.key.utterance);
            for (k, (d, sig)) in r.feature_deltas.iter().zip(&r.language_signals).enumerate() {
                let dd: Vec<f64> = d.iter().map(|v| (v * 1e3).round() / 1e3).collect();
                println!(
                    "    w{} dphi {:?} gate {:?} theta {:?}",
                    k + 1,
                    dd,
                    sig.as_ref().map(|s| s.gate.clone()),
                    r.theta_trace[k].iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
                );
            }
        }
    }

    // oracle backend check (criterion 6 shape)
    let oracle_cfg = SweepConfig {
        scenarios: vec!["C".into(), "CP".into()],
        algorithms: vec![Algorithm::Phri, Algorithm::Quicklap],
        utterances: vec!["Steer clear of the cone.".into()],
        horizons: vec![horizon],
        seeds: vec![0, 1, 2],
        backend: BackendConfig {
            kind: BackendKind::Oracle,
            ..BackendConfig::default()
        },
        ..SweepConfig::default()
    };
    let oracle = run_sweep(&oracle_cfg).unwrap();
    println!("\noracle runs:");
    for record in &oracle.episodes {
        if let Some(r) = &record.result {
            println!(
                "  {:<6} {:<10} seed {} init {:.4} trace {:?}",
                record.key.scenario,
                record.key.algorithm.name(),
                record.key.master_seed,
                r.initial_nmse,
                r.nmse_trace.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
            );
        } else {
            println!("  FAILED: {:?}", record.error);
        }
    }
}
