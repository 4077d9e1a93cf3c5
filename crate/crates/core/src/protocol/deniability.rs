//! Alternative accounts after Alice stops sustaining.
//!
//! Every reply `x = n_v + r mod N` is consistent with either value of `v` for
//! a suitable `r`. Given a target bit, Alice re-derives each randomness as
//! `r' = x - n_{v'}` top down, so the digits committed one round later stay
//! consistent with the rewritten randomness. Components already opened
//! during linking are kept, so nothing disclosed is contradicted.

use super::engine::AliceView;
use super::message::{Message, MsgKind};
use super::ProtocolKind;
use crate::elementary::{commit_reply, ChallengePair, ProtocolParams};
use crate::rudich::residual_indices;
use crate::spacetime::RegionId;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AccountError {
    #[error("Alice already unveiled; there is nothing left to deny")]
    NotSustained,
    #[error("account inconsistent: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementaryAccount {
    pub bit: u8,
    pub root: u64,
    /// Randomness of the sustaining commitments, empty if never sustained.
    pub children: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlternativeAccount {
    pub target: u8,
    /// RBC2: per batch, per elementary `e = 2j + c`.
    pub batches: BTreeMap<u32, Vec<ElementaryAccount>>,
    /// RBC1: randomness per level, level 1 first.
    pub levels: Vec<Vec<u64>>,
}

fn sub_mod(x: u64, y: u64, n: u64) -> u64 {
    (x + n - y % n) % n
}

fn pairs(view: &AliceView, region: RegionId) -> Option<&[ChallengePair]> {
    match view.get(MsgKind::Challenge, region)? {
        Message::Challenge(p) => Some(p),
        _ => None,
    }
}

fn replies(view: &AliceView, region: RegionId) -> Option<&[u64]> {
    match view.get(MsgKind::Reply, region)? {
        m @ Message::Reply(_) => Some(m.values()),
        _ => None,
    }
}

fn residual(view: &AliceView, k: u32) -> Option<Vec<usize>> {
    let m = view.config.m();
    if k == 1 {
        return Some((0..m).collect());
    }
    match view.get(MsgKind::LinkQuery, RegionId::p(k))? {
        Message::LinkQuery { injection, .. } => Some(residual_indices(injection, 2 * m)),
        _ => None,
    }
}

/// `(k, e) -> disclosed child randomness` for every elementary opened during linking.
fn disclosed(view: &AliceView) -> BTreeMap<(u32, usize), Vec<u64>> {
    let mut out = BTreeMap::new();
    let w = view.config.digits();
    for &k in view.batches.keys() {
        let p = RegionId::p(k);
        let (Some(Message::LinkQuery { injection, .. }), Some(Message::SpotChoices(spots)), Some(open)) = (
            view.get(MsgKind::LinkQuery, p),
            view.get(MsgKind::SpotChoices, p),
            view.get(MsgKind::LinkOpen, p),
        ) else {
            continue;
        };
        let Some(res) = residual(view, k - 1) else { continue };
        let m = injection.len();
        let vals = open.values();
        for j in 0..m {
            let c = spots[j].index();
            out.insert((k - 1, 2 * res[j] + c), vals[j * w..(j + 1) * w].to_vec());
            out.insert((k, 2 * injection[j] + c), vals[(m + j) * w..(m + j + 1) * w].to_vec());
        }
    }
    out
}

fn rewrite_elementary(
    params: &ProtocolParams,
    bit: u8,
    root_pair: &ChallengePair,
    reply: u64,
    children: Option<(&[ChallengePair], &[u64])>,
) -> ElementaryAccount {
    let n = params.modulus();
    let root = sub_mod(reply, root_pair.n(bit), n);
    let children = children
        .map(|(cp, cr)| {
            cp.iter()
                .zip(cr)
                .enumerate()
                .map(|(d, (p, &x))| sub_mod(x, p.n(((root >> d) & 1) as u8), n))
                .collect()
        })
        .unwrap_or_default();
    ElementaryAccount { bit, root, children }
}

/// Builds an account under which every commitment Alice made encodes `target`.
pub fn fabricate_account(view: &AliceView, target: u8) -> Result<AlternativeAccount, AccountError> {
    if view.unveiled {
        return Err(AccountError::NotSustained);
    }
    let cfg = &view.config;
    let params = &cfg.params;
    let w = cfg.digits();
    let mut account = AlternativeAccount {
        target,
        batches: BTreeMap::new(),
        levels: Vec::new(),
    };
    match cfg.kind {
        ProtocolKind::Rbc2 => {
            let opened: BTreeSet<(u32, usize)> = disclosed(view).into_keys().collect();
            for (&k, batch) in &view.batches {
                let (Some(rp), Some(rr)) = (pairs(view, RegionId::p(k)), replies(view, RegionId::p(k))) else {
                    continue;
                };
                let children = pairs(view, RegionId::q(k)).zip(replies(view, RegionId::q(k)));
                let mut elems = Vec::with_capacity(2 * batch.len());
                for (j, pair) in batch.iter().enumerate() {
                    let keep = if opened.contains(&(k, 2 * j + 1)) { 1 } else { 0 };
                    let mut bits = [pair.0, pair.1];
                    bits[1 - keep] = bits[keep] ^ target;
                    for (c, &bit) in bits.iter().enumerate() {
                        let e = 2 * j + c;
                        let ch = children.map(|(cp, cr)| (&cp[e * w..(e + 1) * w], &cr[e * w..(e + 1) * w]));
                        elems.push(rewrite_elementary(params, bit, &rp[e], rr[e], ch));
                    }
                }
                account.batches.insert(k, elems);
            }
        }
        ProtocolKind::Rbc1 => {
            let n = params.modulus();
            let mut prev: Vec<u64> = Vec::new();
            for r in 1..=cfg.rounds {
                let (Some(p), Some(x)) = (pairs(view, RegionId(r)), replies(view, RegionId(r))) else {
                    break;
                };
                let level: Vec<u64> = (0..x.len())
                    .map(|i| {
                        let v = if r == 1 {
                            target
                        } else {
                            ((prev[i / w] >> (i % w)) & 1) as u8
                        };
                        sub_mod(x[i], p[i].n(v), n)
                    })
                    .collect();
                account.levels.push(level.clone());
                prev = level;
            }
        }
    }
    Ok(account)
}

/// Checks that `account` explains every recorded reply and disclosure and
/// encodes its target throughout.
pub fn check_account(view: &AliceView, account: &AlternativeAccount) -> Result<(), AccountError> {
    let cfg = &view.config;
    let params = &cfg.params;
    let w = cfg.digits();
    let bad = |s: String| Err(AccountError::Inconsistent(s));
    match cfg.kind {
        ProtocolKind::Rbc2 => {
            let disclosed = disclosed(view);
            for (&k, elems) in &account.batches {
                let (Some(rp), Some(rr)) = (pairs(view, RegionId::p(k)), replies(view, RegionId::p(k))) else {
                    return bad(format!("no commitments recorded for batch {k}"));
                };
                let children = pairs(view, RegionId::q(k)).zip(replies(view, RegionId::q(k)));
                for (e, acc) in elems.iter().enumerate() {
                    if e % 2 == 1 && (elems[e - 1].bit ^ acc.bit) != account.target {
                        return bad(format!("batch {k} pair {} does not encode the target", e / 2));
                    }
                    if acc.root >= params.modulus() || commit_reply(acc.bit, &rp[e], acc.root, params) != rr[e] {
                        return bad(format!("batch {k} elementary {e} does not match its reply"));
                    }
                    if let Some((cp, cr)) = children {
                        if acc.children.len() != w {
                            return bad(format!("batch {k} elementary {e} lacks sustaining randomness"));
                        }
                        for d in 0..w {
                            let digit = ((acc.root >> d) & 1) as u8;
                            let ok = acc.children[d] < params.modulus()
                                && commit_reply(digit, &cp[e * w + d], acc.children[d], params) == cr[e * w + d];
                            if !ok {
                                return bad(format!("batch {k} elementary {e} digit {d} does not match"));
                            }
                        }
                    }
                    // openings of a batch whose sustaining round never ran bind nothing
                    if let (Some(vals), Some(_)) = (disclosed.get(&(k, e)), children) {
                        if &acc.children != vals {
                            return bad(format!("batch {k} elementary {e} contradicts an opening"));
                        }
                    }
                }
            }
        }
        ProtocolKind::Rbc1 => {
            for (li, level) in account.levels.iter().enumerate() {
                let r = li as u32 + 1;
                let (Some(p), Some(x)) = (pairs(view, RegionId(r)), replies(view, RegionId(r))) else {
                    return bad(format!("no commitments recorded at level {r}"));
                };
                for (i, &rand) in level.iter().enumerate() {
                    let v = if r == 1 {
                        account.target
                    } else {
                        ((account.levels[li - 1][i / w] >> (i % w)) & 1) as u8
                    };
                    if rand >= params.modulus() || commit_reply(v, &p[i], rand, params) != x[i] {
                        return bad(format!("level {r} commitment {i} does not match"));
                    }
                }
            }
        }
    }
    Ok(())
}
