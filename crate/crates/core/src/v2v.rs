//! Full-duplex concurrent V2V scheduling: rounds of conflict-free links
//! (first hops from content holders, optional relayed second hops), each
//! simulated slot by slot under mutual interference.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::channel::Channel;
use crate::schedule::{is_delivered, slots_at_rate, Link, LinkTrace, PairingTrace, V2VSchedule};
use crate::vehicles::VehicleId;

#[derive(Debug, Error, PartialEq)]
pub enum V2VError {
    #[error("link {link} has zero rate at pairing slot {slot}")]
    Starved { link: Link, slot: u64 },
    #[error("pairing needs more than the remaining {budget} slots")]
    OverBudget { budget: u64 },
}

/// Highest interference-free-rate link from `source` into `pending`, with
/// its slot count. Ties go to the lower receiver id.
pub fn best_first_hop(ch: &dyn Channel, source: VehicleId, pending: &BTreeSet<VehicleId>) -> Option<(Link, u64)> {
    let mut best: Option<(Link, f64)> = None;
    for &j in pending {
        if j == source || !ch.in_range(source, j) {
            continue;
        }
        let link = Link::new(source, j);
        let rate = ch.link_rates(&[link])[0];
        if rate > best.map_or(0.0, |b| b.1) {
            best = Some((link, rate));
        }
    }
    let (link, rate) = best?;
    slots_at_rate(ch.content_bits(), rate, ch.slot_s()).map(|m| (link, m))
}

/// Whether `candidate` cannot join `committed`: it shares a node with a
/// committed link (other than relaying onward from a first-hop receiver), or
/// some link, itself included, would fall below the SINR threshold.
pub fn conflict(ch: &dyn Channel, candidate: Link, committed: &[Link]) -> bool {
    if candidate.tx == candidate.rx {
        return true;
    }
    for l in committed {
        if l.tx == candidate.tx || l.rx == candidate.rx || l.tx == candidate.rx {
            return true;
        }
        // relaying from l.rx is allowed only when l is a first hop
        if l.rx == candidate.tx && committed.iter().any(|m| m.rx == l.tx) {
            return true;
        }
    }
    let mut all = committed.to_vec();
    all.push(candidate);
    let threshold = ch.sinr_threshold();
    ch.link_sinrs(&all).iter().any(|&s| s < threshold)
}

fn commit(link: Link, committed: &mut Vec<Link>, holders: &mut BTreeSet<VehicleId>, pending: &mut BTreeSet<VehicleId>) {
    committed.push(link);
    holders.remove(&link.tx);
    pending.remove(&link.rx);
    holders.insert(link.rx);
}

/// Build one pairing. Each holder proposes its best first hop; proposals are
/// taken in order of slot count (ties to the lower source id), each committed
/// if it does not conflict and then extended by the receiver's best second
/// hop when that does not conflict either.
///
/// Committed sources leave `holders`; receivers leave `pending` and join
/// `holders`, except relays, which are consumed by their second hop.
pub fn build_pairing(
    ch: &dyn Channel,
    holders: &mut BTreeSet<VehicleId>,
    pending: &mut BTreeSet<VehicleId>,
) -> Vec<Link> {
    let mut proposals: Vec<(u64, VehicleId, Link)> = holders
        .iter()
        .filter_map(|&i| best_first_hop(ch, i, pending).map(|(l, m)| (m, i, l)))
        .collect();
    proposals.sort();

    let mut committed = Vec::new();
    for (_, _, first) in proposals {
        if !pending.contains(&first.rx) || conflict(ch, first, &committed) {
            continue;
        }
        commit(first, &mut committed, holders, pending);
        if let Some((second, _)) = best_first_hop(ch, first.rx, pending) {
            if !conflict(ch, second, &committed) {
                commit(second, &mut committed, holders, pending);
            }
        }
    }
    committed
}

/// Simulate a pairing slot by slot. Rates are re-evaluated whenever a link
/// finishes and leaves the active set. In strict mode a relay never
/// forwards more bits than it has received so far.
pub fn run_pairing(ch: &dyn Channel, links: &[Link], strict: bool, budget: u64) -> Result<PairingTrace, V2VError> {
    let content = ch.content_bits();
    let slot_s = ch.slot_s();
    let feeder: Vec<Option<usize>> = links
        .iter()
        .map(|l| links.iter().position(|f| f.rx == l.tx))
        .collect();

    let mut delivered = vec![0.0f64; links.len()];
    let mut slots = vec![0u64; links.len()];
    let mut active: Vec<usize> = (0..links.len()).collect();
    let mut rates: Vec<f64> = Vec::new();
    let mut stale = true;
    let mut s = 0u64;

    while !active.is_empty() {
        if s >= budget {
            return Err(V2VError::OverBudget { budget });
        }
        if stale {
            let set: Vec<Link> = active.iter().map(|&k| links[k]).collect();
            rates = ch.link_rates(&set);
        }
        for (pos, &k) in active.iter().enumerate() {
            if rates[pos] <= 0.0 {
                return Err(V2VError::Starved { link: links[k], slot: s });
            }
        }
        // feeders first so relays see this slot's reception
        let order = active
            .iter()
            .enumerate()
            .filter(|(_, &k)| feeder[k].is_none())
            .chain(active.iter().enumerate().filter(|(_, &k)| feeder[k].is_some()));
        for (pos, &k) in order {
            let mut next = delivered[k] + rates[pos] * slot_s;
            if strict {
                if let Some(f) = feeder[k] {
                    next = next.min(delivered[f]);
                }
            }
            delivered[k] = next;
        }
        s += 1;
        let before = active.len();
        active.retain(|&k| {
            if is_delivered(delivered[k], content) {
                slots[k] = s;
                false
            } else {
                true
            }
        });
        stale = active.len() != before;
    }

    let trace_links: Vec<LinkTrace> = links
        .iter()
        .enumerate()
        .map(|(k, &link)| LinkTrace { link, slots: slots[k], delivered_bits: delivered[k] })
        .collect();
    Ok(PairingTrace {
        start: 0,
        duration: slots.iter().copied().max().unwrap_or(0),
        links: trace_links,
    })
}

/// Repeatedly build and run pairings until nobody is pending, no holder
/// reaches a pending vehicle, or the horizon would be exceeded.
pub(crate) fn drive_pairings<F>(
    ch: &dyn Channel,
    holders: &[VehicleId],
    pending: &[VehicleId],
    used_slots: u64,
    strict: bool,
    mut build: F,
) -> V2VSchedule
where
    F: FnMut(&mut BTreeSet<VehicleId>, &mut BTreeSet<VehicleId>) -> Vec<Link>,
{
    let mut holders: BTreeSet<VehicleId> = holders.iter().copied().collect();
    let mut pending: BTreeSet<VehicleId> = pending.iter().copied().collect();
    let mut out = V2VSchedule { strict_causality: strict, ..Default::default() };

    while !pending.is_empty() {
        let (mut h, mut p) = (holders.clone(), pending.clone());
        let links = build(&mut h, &mut p);
        if links.is_empty() {
            out.stop_reason = Some("no holder reaches a pending vehicle".into());
            break;
        }
        let budget = ch.horizon().saturating_sub(used_slots + out.t_v2v);
        match run_pairing(ch, &links, strict, budget) {
            Ok(mut pairing) => {
                pairing.start = out.t_v2v;
                out.t_v2v += pairing.duration;
                out.pairings.push(pairing);
                holders = h;
                pending = p;
            }
            Err(e) => {
                out.stop_reason = Some(e.to_string());
                break;
            }
        }
    }
    out.unserved = pending.into_iter().collect();
    out
}

/// Spread the content from `holders` to `pending` with greedy pairings.
/// `used_slots` is the V2I time already spent against the horizon.
pub fn schedule_v2v(
    ch: &dyn Channel,
    holders: &[VehicleId],
    pending: &[VehicleId],
    used_slots: u64,
    strict: bool,
) -> V2VSchedule {
    drive_pairings(ch, holders, pending, used_slots, strict, |h, p| build_pairing(ch, h, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{PhysicalChannel, SyntheticChannel};
    use crate::config::ScenarioConfig;
    use crate::radio::RateMode;
    use crate::vehicles::VehicleState;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn vid(n: u32) -> VehicleId {
        VehicleId(n)
    }

    fn set(ids: &[u32]) -> BTreeSet<VehicleId> {
        ids.iter().map(|&n| vid(n)).collect()
    }

    fn physical(vehicles: Vec<VehicleState>) -> PhysicalChannel {
        PhysicalChannel::new(ScenarioConfig::highway_default().validate().unwrap(), vehicles, RateMode::Midpoint)
    }

    /// Entry slot for a vehicle `behind` meters behind one entering at 0.
    fn behind(m: f64) -> u64 {
        (m / 0.002).round() as u64
    }

    #[test]
    fn first_hop_prefers_the_nearer() {
        let ch = physical(vec![
            VehicleState::new(1, 1, 0),
            VehicleState::new(2, 1, behind(5.0)),
            VehicleState::new(3, 1, behind(15.0)),
            VehicleState::new(4, 1, behind(60.0)),
        ]);
        let (l, _) = best_first_hop(&ch, vid(1), &set(&[2, 3, 4])).unwrap();
        assert_eq!(l.rx, vid(2));
        assert!(best_first_hop(&ch, vid(1), &set(&[4])).is_none());
    }

    #[test]
    fn equidistant_first_hop_ties_to_lower_id() {
        let ch = physical(vec![
            VehicleState::new(1, 1, 0),
            VehicleState::new(2, 1, behind(10.0)),
            VehicleState::new(3, 1, behind(20.0)),
        ]);
        let (l, _) = best_first_hop(&ch, vid(2), &set(&[1, 3])).unwrap();
        assert_eq!(l.rx, vid(1));
    }

    #[test]
    fn adjacency_conflicts() {
        let ch = physical(vec![
            VehicleState::new(1, 1, 0),
            VehicleState::new(2, 1, behind(5.0)),
            VehicleState::new(3, 3, behind(5.0)),
            VehicleState::new(4, 3, behind(10.0)),
        ]);
        let l12 = Link::new(vid(1), vid(2));
        // shared transmitter
        assert!(conflict(&ch, Link::new(vid(1), vid(3)), &[l12]));
        // shared receiver
        assert!(conflict(&ch, Link::new(vid(3), vid(2)), &[l12]));
        // sending to a committed transmitter
        assert!(conflict(&ch, Link::new(vid(3), vid(1)), &[l12]));
        // a relay hop from V2 is not an adjacency conflict; V2 → V3 is bent
        // and short, so SINR holds
        let sinrs = ch.link_sinrs(&[l12, Link::new(vid(2), vid(3))]);
        assert!(sinrs.iter().all(|&s| s >= 100.0), "{sinrs:?}");
        assert!(!conflict(&ch, Link::new(vid(2), vid(3)), &[l12]));
        // but a third hop is
        assert!(conflict(&ch, Link::new(vid(3), vid(4)), &[l12, Link::new(vid(2), vid(3))]));
    }

    #[test]
    fn far_parallel_links_coexist() {
        // two lane-1 links 19 m apart head to tail: both keep SINR above 20 dB
        let ch = physical(vec![
            VehicleState::new(1, 1, 0),
            VehicleState::new(2, 1, behind(5.0)),
            VehicleState::new(3, 5, behind(19.0)),
            VehicleState::new(4, 5, behind(24.0)),
        ]);
        let links = [Link::new(vid(1), vid(2)), Link::new(vid(3), vid(4))];
        let s = ch.link_sinrs(&links);
        assert!(s.iter().all(|&x| x > 100.0), "{s:?}");
        assert!(!conflict(&ch, links[1], &links[..1]));
    }

    #[test]
    fn interfering_links_conflict() {
        // head-on: V3 → V4 points straight at V2 from 2 m away
        let ch = physical(vec![
            VehicleState::new(1, 1, 0),
            VehicleState::new(2, 1, behind(5.0)),
            VehicleState::new(3, 1, behind(7.0)),
            VehicleState::new(4, 1, behind(3.0)),
        ]);
        assert!(conflict(&ch, Link::new(vid(3), vid(4)), &[Link::new(vid(1), vid(2))]));
    }

    #[test]
    fn coinciding_best_receivers() {
        // V1 and V3 both nearest to V2; V3's link is slower so V1 wins and V3 gets nothing
        let ch = physical(vec![
            VehicleState::new(1, 1, 0),
            VehicleState::new(2, 1, behind(4.0)),
            VehicleState::new(3, 1, behind(10.0)),
        ]);
        let mut h = set(&[1, 3]);
        let mut p = set(&[2]);
        let links = build_pairing(&ch, &mut h, &mut p);
        assert_eq!(links, vec![Link::new(vid(1), vid(2))]);
        assert!(p.is_empty());
        assert_eq!(h, set(&[2, 3]));
    }

    #[test]
    fn single_link_run_matches_closed_form() {
        let ch = physical(vec![VehicleState::new(1, 1, 0), VehicleState::new(2, 1, behind(10.0))]);
        let l = Link::new(vid(1), vid(2));
        let rate = ch.link_rates(&[l])[0];
        let p = run_pairing(&ch, &[l], false, u64::MAX).unwrap();
        assert_eq!(Some(p.duration), slots_at_rate(3e9, rate, 1e-4));
        assert_eq!(p.links[0].slots, p.duration);
    }

    #[test]
    fn survivor_speeds_up_when_neighbour_finishes() {
        // a short link and a long one whose receiver sits 10 m from the short
        // link's transmitter
        let ch = physical(vec![
            VehicleState::new(1, 1, 0),
            VehicleState::new(2, 1, behind(4.0)),
            VehicleState::new(3, 3, behind(6.0)),
            VehicleState::new(4, 3, behind(20.0)),
        ]);
        let links = [Link::new(vid(1), vid(2)), Link::new(vid(4), vid(3))];
        let both = ch.link_rates(&links);
        let alone = ch.link_rates(&links[1..]);
        assert!(alone[0] > both[1]);
        let p = run_pairing(&ch, &links, false, u64::MAX).unwrap();
        assert!(p.links[0].slots < p.links[1].slots);
        // oracle: bits at the concurrent rate, then the isolated rate
        let head = both[1] * 1e-4 * p.links[0].slots as f64;
        let rest = ((3e9 - head) / (alone[0] * 1e-4)).ceil() as u64;
        assert_eq!(p.links[1].slots, p.links[0].slots + rest);
    }

    #[test]
    fn starved_link_aborts() {
        let ch = physical(vec![VehicleState::new(1, 1, 0), VehicleState::new(2, 1, behind(60.0))]);
        let err = run_pairing(&ch, &[Link::new(vid(1), vid(2))], false, 100).unwrap_err();
        assert!(matches!(err, V2VError::Starved { .. }));
    }

    fn synthetic_line(n: u32, relay_slots: &[(u32, u32, u64)]) -> SyntheticChannel {
        let mut c = ScenarioConfig::highway_default();
        c.road.content_bits = 12.0;
        c.road.slot_s = 1.0;
        c.road.vehicle_count = n;
        let cfg = c.validate().unwrap();
        let vehicles = (1..=n).map(|i| VehicleState::new(i, 1, u64::from(i))).collect();
        let table: BTreeMap<Link, u64> = relay_slots
            .iter()
            .map(|&(a, b, m)| (Link::new(vid(a), vid(b)), m))
            .collect();
        SyntheticChannel::new(cfg, vehicles, vec![Some((0, 1000)); n as usize], vec![1; n as usize], table)
    }

    #[test]
    fn strict_causality_caps_fast_second_hop() {
        // first hop 6 slots, second hop 2 slots
        let ch = synthetic_line(3, &[(1, 2, 6), (2, 3, 2)]);
        let links = [Link::new(vid(1), vid(2)), Link::new(vid(2), vid(3))];
        let loose = run_pairing(&ch, &links, false, 100).unwrap();
        assert_eq!((loose.links[0].slots, loose.links[1].slots), (6, 2));
        let strict = run_pairing(&ch, &links, true, 100).unwrap();
        assert_eq!((strict.links[0].slots, strict.links[1].slots), (6, 6));
        assert_eq!(strict.duration, 6);
    }

    #[test]
    fn empty_pending_needs_no_pairings() {
        let ch = synthetic_line(2, &[(1, 2, 3)]);
        let s = schedule_v2v(&ch, &[vid(1), vid(2)], &[], 0, false);
        assert_eq!(s.t_v2v, 0);
        assert!(s.pairings.is_empty());
    }

    #[test]
    fn isolated_vehicle_is_unserved() {
        let ch = physical(vec![
            VehicleState::new(1, 1, 0),
            VehicleState::new(2, 1, behind(10.0)),
            VehicleState::new(3, 1, behind(60.0)),
        ]);
        let s = schedule_v2v(&ch, &[vid(1)], &[vid(2), vid(3)], 0, false);
        assert_eq!(s.unserved, vec![vid(3)]);
        assert_eq!(s.pairings.len(), 1);
    }

    #[test]
    fn horizon_stops_scheduling() {
        let ch = synthetic_line(3, &[(1, 2, 6), (2, 3, 6)]);
        let s = schedule_v2v(&ch, &[vid(1)], &[vid(2), vid(3)], 999_995, false);
        assert!(s.pairings.is_empty());
        assert_eq!(s.unserved, vec![vid(2), vid(3)]);
        assert!(s.stop_reason.is_some());
    }

    proptest! {
        #[test]
        fn pairings_shrink_pending_and_keep_sinr(seed in 0u64..2000, n in 4u32..25) {
            let mut c = ScenarioConfig::highway_default();
            c.road.vehicle_count = n;
            c.road.arrival_rate_per_s = 20.0;
            let cfg = c.validate().unwrap();
            let vehicles = crate::vehicles::spawn_vehicles(&cfg, seed);
            let ch = PhysicalChannel::new(cfg, vehicles, RateMode::Midpoint);
            let mut h = set(&[1]);
            let mut p: BTreeSet<VehicleId> = (2..=n).map(vid).collect();
            loop {
                let before = p.len();
                let links = build_pairing(&ch, &mut h, &mut p);
                if links.is_empty() {
                    break;
                }
                prop_assert!(p.len() < before);
                prop_assert!(ch.link_sinrs(&links).iter().all(|&s| s >= 100.0));
                // interference only shrinks as links finish
                for k in 0..links.len() {
                    let rest: Vec<Link> = links.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, l)| *l).collect();
                    if !rest.is_empty() {
                        prop_assert!(ch.link_sinrs(&rest).iter().all(|&s| s >= 100.0));
                    }
                }
            }
        }
    }
}
