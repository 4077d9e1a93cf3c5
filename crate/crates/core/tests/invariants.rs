use proptest::prelude::*;
use rbc_core::adversary::Honest;
use rbc_core::costmodel::{meter_transcript, site1_bits_per_round, site2_bits_per_round};
use rbc_core::protocol::{run_rbc1, run_rbc2, verify_session, SessionConfig, SessionStatus, Transcript};
use rbc_core::spacetime::RegionId;

fn modulus() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![4u64, 5, 7, 8, 16, 17, 64])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn honest_rbc2_unveils_its_bit(n in modulus(), half in 1usize..5, rounds in 2u32..6, bit in 0u8..2, seed: u64) {
        let cfg = SessionConfig::rbc2(n, 2 * half, rounds, Some(rounds), seed).unwrap();
        let run = run_rbc2(&cfg, &Honest, bit).unwrap();
        prop_assert_eq!(run.outcome.status, SessionStatus::Unveiled(bit));
        prop_assert!(run.outcome.report.is_clean());
    }

    #[test]
    fn honest_rbc1_unveils_its_bit(n in modulus(), depth in 2u32..5, bit in 0u8..2, seed: u64) {
        let cfg = SessionConfig::rbc1(n, depth, Some(depth), seed).unwrap();
        let run = run_rbc1(&cfg, bit).unwrap();
        prop_assert_eq!(run.outcome.status, SessionStatus::Unveiled(bit));
    }

    #[test]
    fn text_round_trip_preserves_verdict(n in modulus(), half in 1usize..4, rounds in 2u32..5, seed: u64) {
        let cfg = SessionConfig::rbc2(n, 2 * half, rounds, Some(rounds), seed).unwrap();
        let run = run_rbc2(&cfg, &Honest, 1).unwrap();
        let text = run.transcript.to_text();
        let back = Transcript::parse(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(verify_session(&back).status(), SessionStatus::Unveiled(1));
    }

    #[test]
    fn metered_bits_match_formulas(n in modulus(), half in 1usize..6, seed: u64) {
        let m = 2 * half;
        let cfg = SessionConfig::rbc2(n, m, 4, None, seed).unwrap();
        let run = run_rbc2(&cfg, &Honest, 0).unwrap();
        let meter = meter_transcript(&run.transcript).unwrap();
        let digits = cfg.digits() as u64;
        for k in 2..=2u32 {
            prop_assert_eq!(meter.region(RegionId::p(k)).unwrap().total(), site1_bits_per_round(m as u64, digits));
            prop_assert_eq!(meter.region(RegionId::q(k)).unwrap().total(), site2_bits_per_round(m as u64, digits));
        }
        prop_assert_eq!(meter.region(RegionId::q(1)).unwrap().total() * 2, site2_bits_per_round(m as u64, digits));
    }
}
