use rbc_core::adversary::Honest;
use rbc_core::costmodel::{meter_transcript, site1_bits_per_round, site2_bits_per_round, MeterError};
use rbc_core::protocol::{
    check_account, fabricate_account, run_rbc1, run_rbc2, verify_session, verify_unveiling, AccountError, Agent,
    MsgKind, SessionConfig, SessionStatus, Transcript, UnveilVerdict,
};
use rbc_core::spacetime::{RegionId, Site};

fn rbc2(n: u64, m: usize, rounds: u32, unveil: Option<u32>, seed: u64) -> SessionConfig {
    SessionConfig::rbc2(n, m, rounds, unveil, seed).unwrap()
}

#[test]
fn honest_rbc2_unveils_after_forwarding() {
    for bit in [0, 1] {
        let cfg = rbc2(4, 4, 5, Some(5), 11);
        let run = run_rbc2(&cfg, &Honest, bit).unwrap();
        assert_eq!(run.outcome.status, SessionStatus::Unveiled(bit));
        assert!(run.outcome.report.is_clean(), "{:?}", run.outcome.report);
        let unveil = run.transcript.find(MsgKind::Unveil, RegionId(5)).unwrap();
        let event = run.outcome.report.event.unwrap();
        assert!(event.time >= unveil.emit.time + cfg.geometry.delta_x);
        assert_eq!(event.agent, Agent::bob_at(Site::Two));
    }
}

#[test]
fn honest_rbc2_unveil_at_every_region() {
    for u in 1..=6 {
        for bit in [0, 1] {
            let cfg = rbc2(16, 2, 6, Some(u), 100 + u as u64);
            let run = run_rbc2(&cfg, &Honest, bit).unwrap();
            assert_eq!(run.outcome.status, SessionStatus::Unveiled(bit), "u={u}");
            let expected_last = if u == 1 { 2 } else { u };
            assert_eq!(run.outcome.rounds_completed, expected_last, "u={u}");
        }
    }
}

#[test]
fn never_unveiled_is_sustained() {
    let run = run_rbc2(&rbc2(4, 2, 4, None, 3), &Honest, 1).unwrap();
    assert_eq!(run.outcome.status, SessionStatus::Sustained);
    assert!(run.outcome.report.is_clean());
    assert_eq!(verify_unveiling(&run.transcript), UnveilVerdict::Reject("no unveiling in transcript".into()));
}

#[test]
fn rbc1_sessions() {
    for (depth, unveil) in [(3, Some(3)), (3, Some(1)), (4, Some(2)), (3, None)] {
        for bit in [0, 1] {
            let cfg = SessionConfig::rbc1(4, depth, unveil, 9).unwrap();
            let run = run_rbc1(&cfg, bit).unwrap();
            let want = match unveil {
                Some(_) => SessionStatus::Unveiled(bit),
                None => SessionStatus::Sustained,
            };
            assert_eq!(run.outcome.status, want, "depth={depth} unveil={unveil:?}");
            assert!(run.outcome.report.is_clean());
        }
    }
}

#[test]
fn rbc1_budget_is_enforced() {
    let mut cfg = SessionConfig::rbc1(4, 3, None, 1).unwrap();
    cfg.rounds = 30;
    assert!(cfg.validate().is_err());
}

#[test]
fn runs_are_deterministic() {
    let cfg = rbc2(16, 4, 4, Some(4), 77);
    let a = run_rbc2(&cfg, &Honest, 1).unwrap().transcript.to_text();
    let b = run_rbc2(&cfg, &Honest, 1).unwrap().transcript.to_text();
    assert_eq!(a, b);
    let other = rbc2(16, 4, 4, Some(4), 78);
    assert_ne!(a, run_rbc2(&other, &Honest, 1).unwrap().transcript.to_text());
}

#[test]
fn transcript_text_round_trip() {
    let run = run_rbc2(&rbc2(4, 2, 4, Some(3), 5), &Honest, 0).unwrap();
    let text = run.transcript.to_text();
    let back = Transcript::parse(&text).unwrap();
    assert_eq!(back, run.transcript);
    assert_eq!(back.to_text(), text);
    let report = verify_session(&back);
    assert_eq!(report.status(), SessionStatus::Unveiled(0));
    assert!(!text.lines().next().unwrap().contains("bit="));
}

#[test]
fn truncated_transcript_names_a_line() {
    let text = run_rbc2(&rbc2(4, 2, 3, None, 5), &Honest, 0).unwrap().transcript.to_text();
    let cut: Vec<&str> = text.lines().collect();
    let cut = cut[..cut.len() - 3].join("\n");
    let err = Transcript::parse(&cut).unwrap_err().to_string();
    assert!(err.starts_with("line "), "{err}");
}

fn flip_payload_bit(t: &mut Transcript, kind: MsgKind, region: RegionId, bit: usize) {
    let rec = t
        .records
        .iter_mut()
        .find(|r| r.kind == kind && r.region == Some(region))
        .unwrap();
    rec.payload[bit / 8] ^= 0x80 >> (bit % 8);
}

#[test]
fn corrupted_unveiling_is_rejected() {
    let cfg = rbc2(4, 2, 4, Some(4), 21);
    let mut t = run_rbc2(&cfg, &Honest, 1).unwrap().transcript;
    // the first value of the unveiling is the root randomness of elementary 0
    flip_payload_bit(&mut t, MsgKind::Unveil, RegionId(4), 1);
    assert!(matches!(verify_unveiling(&t), UnveilVerdict::Reject(_)));
    assert!(matches!(verify_session(&t).status(), SessionStatus::Aborted(_)));
}

#[test]
fn corrupted_linking_is_caught() {
    let cfg = rbc2(4, 2, 4, None, 22);
    let mut t = run_rbc2(&cfg, &Honest, 0).unwrap().transcript;
    flip_payload_bit(&mut t, MsgKind::LinkOpen, RegionId::p(2), 0);
    let report = verify_session(&t);
    assert_eq!(report.failed_region(), Some(RegionId::p(2).0));
}

#[test]
fn late_unveiling_fails_timing() {
    let cfg = rbc2(4, 2, 4, Some(4), 23);
    let mut t = run_rbc2(&cfg, &Honest, 1).unwrap().transcript;
    let region_len = cfg.geometry.delta_t;
    let rec = t.records.iter_mut().find(|r| r.kind == MsgKind::Unveil).unwrap();
    rec.emit.time += 2 * region_len;
    rec.receive.time += 2 * region_len;
    let t = Transcript::new(t.config.clone(), t.records.clone());
    let report = verify_session(&t);
    assert!(!report.violations.is_empty() || matches!(report.unveil, Some(UnveilVerdict::Reject(_))));
    assert!(matches!(report.status(), SessionStatus::Aborted(_)));
}

#[test]
fn meter_matches_formulas_rbc2() {
    for (m, n) in [(2usize, 4u64), (4, 4), (8, 4), (4, 16)] {
        let cfg = rbc2(n, m, 6, None, 40);
        let w = cfg.digits() as u64;
        let run = run_rbc2(&cfg, &Honest, 1).unwrap();
        let meter = meter_transcript(&run.transcript).unwrap();
        // the first batch has M pairs, later ones 2M
        assert_eq!(meter.region(RegionId::q(1)).unwrap().total(), site2_bits_per_round(m as u64, w) / 2);
        for k in 2..=3 {
            assert_eq!(meter.region(RegionId::q(k)).unwrap().total(), site2_bits_per_round(m as u64, w));
        }
        for k in 2..=3 {
            assert_eq!(meter.region(RegionId::p(k)).unwrap().total(), site1_bits_per_round(m as u64, w));
        }
        assert!(meter.coordination > 0);
    }
    let run = run_rbc2(&rbc2(4, 4, 5, None, 1), &Honest, 0).unwrap();
    let meter = meter_transcript(&run.transcript).unwrap();
    assert_eq!(meter.region(RegionId::q(2)).unwrap().total(), 128);
    assert_eq!(meter.region(RegionId::p(2)).unwrap().total(), 119);
}

#[test]
fn meter_matches_formulas_rbc1() {
    let cfg = SessionConfig::rbc1(4, 4, None, 2).unwrap();
    let run = run_rbc1(&cfg, 1).unwrap();
    let meter = meter_transcript(&run.transcript).unwrap();
    for k in 1..=4u32 {
        assert_eq!(meter.region(RegionId(k)).unwrap().total(), 2 * 2u64.pow(k));
    }
}

#[test]
fn meter_rejects_tampered_size() {
    let mut t = run_rbc2(&rbc2(4, 2, 3, None, 8), &Honest, 0).unwrap().transcript;
    t.records[0].bit_size += 1;
    assert!(matches!(meter_transcript(&t), Err(MeterError::EncodingMismatch { .. })));
}

#[test]
fn deniable_accounts() {
    for kind in ["rbc2", "rbc1"] {
        for bit in [0u8, 1] {
            let run = if kind == "rbc2" {
                run_rbc2(&rbc2(16, 4, 5, None, 31), &Honest, bit).unwrap()
            } else {
                run_rbc1(&SessionConfig::rbc1(16, 3, None, 31).unwrap(), bit).unwrap()
            };
            for target in [0u8, 1] {
                let acc = fabricate_account(&run.alice, target).unwrap();
                check_account(&run.alice, &acc).unwrap();
                if target == bit && kind == "rbc1" {
                    assert_eq!(acc.levels[0][0], run.alice.tape.level_random(1, 0));
                }
                if target == bit && kind == "rbc2" {
                    let first = &acc.batches[&1];
                    assert_eq!(first[0].root, run.alice.tape.root_random(1, 0));
                }
            }
            let mut acc = fabricate_account(&run.alice, bit ^ 1).unwrap();
            acc.target = bit;
            assert!(check_account(&run.alice, &acc).is_err());
        }
    }
    let unveiled = run_rbc2(&rbc2(4, 2, 3, Some(3), 1), &Honest, 0).unwrap();
    assert_eq!(fabricate_account(&unveiled.alice, 1), Err(AccountError::NotSustained));
}
