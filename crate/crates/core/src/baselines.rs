//! Every scheme behind one entry point: the proposed joint scheduler and the
//! comparison schemes (first-come-first-served, random, non-cooperative, and
//! plain serial TDMA).

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::Channel;
use crate::schedule::{Link, Scheme, SchemeResult, V2IGrant, V2ISelection, V2VSchedule};
use crate::v2i::{drive_v2i, select_v2i_paths, slots_to_download, Pick, StopRule, V2ITermination};
use crate::v2v::{conflict, drive_pairings, schedule_v2v};
use crate::vehicles::VehicleId;

/// Knobs shared by every scheme.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SchemeOptions {
    pub termination: V2ITermination,
    pub strict_causality: bool,
}

const RANDOM_SCHEME_STREAM: u64 = 0x5241_4e44;

pub fn run_scheme(ch: &dyn Channel, scheme: Scheme, seed: u64, opts: SchemeOptions) -> SchemeResult {
    match scheme {
        Scheme::Proposed => schedule_proposed(ch, opts),
        Scheme::Fcfs => schedule_fcfs(ch, opts),
        Scheme::Random => schedule_random(ch, seed, opts),
        Scheme::Noncoop => schedule_noncoop(ch),
        Scheme::SerialTdma => schedule_serial_tdma(ch),
    }
}

fn cooperative(scheme: Scheme, v2i: V2ISelection, v2v: V2VSchedule) -> SchemeResult {
    let unserved = v2v.unserved.clone();
    SchemeResult { scheme, v2i, v2v, unserved }
}

fn direct_only(scheme: Scheme, v2i: V2ISelection) -> SchemeResult {
    let unserved = v2i.pending.clone();
    SchemeResult { scheme, v2i, v2v: V2VSchedule::default(), unserved }
}

/// Utility-driven V2I selection followed by greedy full-duplex pairings.
pub fn schedule_proposed(ch: &dyn Channel, opts: SchemeOptions) -> SchemeResult {
    let v2i = select_v2i_paths(ch, opts.termination);
    let v2v = schedule_v2v(ch, &v2i.holders, &v2i.pending, v2i.t_v2i, opts.strict_causality);
    cooperative(Scheme::Proposed, v2i, v2v)
}

/// The RSU serves whoever entered coverage first, for as long as anyone can
/// still finish a download; the rest share over V2V.
pub fn schedule_fcfs(ch: &dyn Channel, opts: SchemeOptions) -> SchemeResult {
    let v2i = drive_v2i(ch, StopRule::Exhaust, |_, candidates, _| {
        let index = (0..candidates.len())
            .min_by_key(|&k| {
                let v = candidates[k].vehicle;
                (ch.coverage_window(v).map_or(u64::MAX, |w| w.0), v)
            })
            .expect("candidates are nonempty");
        Pick { index, chain: None }
    });
    let v2v = schedule_v2v(ch, &v2i.holders, &v2i.pending, v2i.t_v2i, opts.strict_causality);
    cooperative(Scheme::Fcfs, v2i, v2v)
}

/// Uniformly random V2I grants (same stopping rule as the proposed scheme)
/// and random V2V pairings under the same conflict rules.
pub fn schedule_random(ch: &dyn Channel, seed: u64, opts: SchemeOptions) -> SchemeResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RANDOM_SCHEME_STREAM);
    let rule = match opts.termination {
        V2ITermination::Coverage => StopRule::CoverChains,
        V2ITermination::Literal => StopRule::LastVehicle,
    };
    let v2i = drive_v2i(ch, rule, |_, candidates, _| Pick {
        index: rng.random_range(0..candidates.len()),
        chain: None,
    });
    let v2v = drive_pairings(ch, &v2i.holders, &v2i.pending, v2i.t_v2i, opts.strict_causality, |h, p| {
        random_pairing(ch, h, p, &mut rng)
    });
    cooperative(Scheme::Random, v2i, v2v)
}

fn random_pairing(
    ch: &dyn Channel,
    holders: &mut BTreeSet<VehicleId>,
    pending: &mut BTreeSet<VehicleId>,
    rng: &mut ChaCha8Rng,
) -> Vec<Link> {
    let mut sources: Vec<VehicleId> = holders.iter().copied().collect();
    sources.shuffle(rng);
    let mut committed: Vec<Link> = Vec::new();
    let pick = |from: VehicleId, pending: &BTreeSet<VehicleId>, rng: &mut ChaCha8Rng| {
        let options: Vec<VehicleId> = pending.iter().copied().filter(|&j| ch.in_range(from, j)).collect();
        (!options.is_empty()).then(|| Link::new(from, options[rng.random_range(0..options.len())]))
    };
    for i in sources {
        let Some(first) = pick(i, pending, rng) else { continue };
        if conflict(ch, first, &committed) {
            continue;
        }
        committed.push(first);
        holders.remove(&i);
        pending.remove(&first.rx);
        holders.insert(first.rx);
        if let Some(second) = pick(first.rx, pending, rng) {
            if !conflict(ch, second, &committed) {
                committed.push(second);
                holders.remove(&second.tx);
                pending.remove(&second.rx);
                holders.insert(second.rx);
            }
        }
    }
    committed
}

/// RSU-only: at every grant boundary serve the nearest vehicle that can
/// still finish. No V2V sharing.
pub fn schedule_noncoop(ch: &dyn Channel) -> SchemeResult {
    let v2i = drive_v2i(ch, StopRule::Exhaust, |t, candidates, _| {
        let index = (0..candidates.len())
            .min_by(|&a, &b| {
                let (va, vb) = (candidates[a].vehicle, candidates[b].vehicle);
                ch.rsu_distance(va, t)
                    .total_cmp(&ch.rsu_distance(vb, t))
                    .then(va.cmp(&vb))
            })
            .expect("candidates are nonempty");
        Pick { index, chain: None }
    });
    direct_only(Scheme::Noncoop, v2i)
}

/// RSU serves every vehicle in id order, waiting for each to arrive. A
/// vehicle that cannot finish inside coverage is skipped and unserved.
pub fn schedule_serial_tdma(ch: &dyn Channel) -> SchemeResult {
    let mut sel = V2ISelection::default();
    let mut t = 0;
    for v in ch.vehicle_ids() {
        let Some((start, _)) = ch.coverage_window(v) else {
            sel.pending.push(v);
            continue;
        };
        let begin = t.max(start);
        match slots_to_download(ch, v, begin) {
            Ok(m) if sel.t_v2i + m <= ch.horizon() => {
                sel.grants.push(V2IGrant { vehicle: v, start: begin, slots: m });
                sel.chains.push(None);
                sel.holders.push(v);
                sel.t_v2i += m;
                t = begin + m;
            }
            _ => sel.pending.push(v),
        }
    }
    sel.incomplete = !sel.pending.is_empty();
    direct_only(Scheme::SerialTdma, sel)
}
