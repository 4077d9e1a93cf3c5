use rbc_core::adversary::{run_trials, Honest, OptimalFlip, Uncommitted};
use rbc_core::bounds::{classical_escape_oracle_f64, lemma2_default};
use rbc_core::protocol::{run_rbc2, SessionConfig};

fn sim(m: usize) -> SessionConfig {
    SessionConfig::rbc2(4, m, 4, None, 0).unwrap()
}

#[test]
fn honest_is_never_caught() {
    for m in [2, 4, 8] {
        let stats = run_trials(&Honest, &sim(m), 2_000, 5).unwrap();
        assert_eq!(stats.caught, 0);
        assert_eq!(stats.escaped_consistent, stats.trials);
    }
}

#[test]
fn flip_escape_matches_oracle() {
    for m in [2usize, 4, 8] {
        let stats = run_trials(&OptimalFlip, &sim(m), 20_000, 7).unwrap();
        let oracle = classical_escape_oracle_f64(m as u64).unwrap();
        let sigma = (oracle * (1.0 - oracle) / stats.trials as f64).sqrt();
        let rate = stats.escape_rate();
        assert!((rate - oracle).abs() <= 3.0 * sigma, "M={m}: {rate} vs {oracle}");
        assert_eq!(stats.caught + stats.escaped(), stats.trials);
        // caught only in the linking test that sees the flipped batch
        assert_eq!(stats.failures_by_region.keys().copied().collect::<Vec<_>>(), vec![3]);
        assert!(rate <= 4.0 * lemma2_default(m as u64).unwrap());
    }
}

#[test]
fn uncommitted_is_caught_more_often() {
    let flip = run_trials(&OptimalFlip, &sim(8), 20_000, 9).unwrap();
    let unc = run_trials(&Uncommitted, &sim(8), 20_000, 9).unwrap();
    let gap = unc.detection_rate() - flip.detection_rate();
    let sigma = (flip.sigma().powi(2) + unc.sigma().powi(2)).sqrt();
    assert!(gap > 3.0 * sigma, "{gap} vs {sigma}");
}

#[test]
fn trials_are_reproducible_and_clean() {
    let a = run_trials(&OptimalFlip, &sim(4), 500, 3).unwrap();
    let b = run_trials(&OptimalFlip, &sim(4), 500, 3).unwrap();
    assert_eq!(a, b);
    for seed in 0..50 {
        let mut cfg = sim(4);
        cfg.seed = seed;
        for r in [run_rbc2(&cfg, &OptimalFlip, 0).unwrap(), run_rbc2(&cfg, &Uncommitted, 1).unwrap()] {
            assert!(r.outcome.report.violations.is_empty());
        }
    }
}
