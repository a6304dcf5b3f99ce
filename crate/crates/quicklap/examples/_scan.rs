// scratch scan: oracle convergence check (deleted before delivery)
use quicklap::experiment::{run_episode, Algorithm, EpisodeConfig};
use quicklap::language::{BackendConfig, BackendKind};
use quicklap::planner::PlannerConfig;

fn main() {
    for scenario in ["C", "CP"] {
        println!("=== {scenario} (oracle) ===");
        for seed in 0..6u64 {
            let run = |algo: Algorithm| {
                let cfg = EpisodeConfig {
                    scenario: scenario.into(),
                    algorithm: algo,
                    utterance: "Steer clear of the cone.".into(),
                    seed,
                    backend: BackendConfig { kind: BackendKind::Oracle, ..BackendConfig::default() },
                    planner: PlannerConfig { horizon: 12, ..PlannerConfig::default() },
                    ..EpisodeConfig::default()
                };
                run_episode(&cfg).unwrap()
            };
            let q = run(Algorithm::Quicklap);
            let p = run(Algorithm::Phri);
            let strict = q.nmse_trace.windows(2).all(|w| w[1] < w[0]);
            let c6 = q.nmse_trace[0] < *p.nmse_trace.last().unwrap();
            println!(
                "  seed {seed}: q trace {:?} strict_dec {} | phri final {:.4} | q@1 < p@4: {}",
                q.nmse_trace.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
                strict,
                p.final_nmse,
                c6
            );
        }
    }
}
