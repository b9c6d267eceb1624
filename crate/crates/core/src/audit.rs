//! Independent constraint checker. Works from the emitted trace and the
//! channel alone; nothing here calls into the schedulers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::channel::Channel;
use crate::schedule::{is_delivered, Link, PairingTrace, SchemeResult};
use crate::vehicles::{Slot, VehicleId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    /// RSU grants only to vehicles inside its coverage.
    Coverage,
    /// Every granted slot meets the SNR threshold.
    V2iQos,
    /// At most one RSU grant per slot.
    RsuExclusive,
    /// Each grant delivers the whole content.
    V2iDelivery,
    /// A vehicle sources at most once and receives at most once.
    SourceOnce,
    /// A vehicle holds the content before it forwards it.
    Precedence,
    /// Chains are at most two hops and otherwise node-disjoint.
    HopLimit,
    /// Every V2V link meets the SINR threshold in every slot and delivers
    /// the content in exactly its reported slot count.
    V2vDelivery,
    /// Reported slot totals match an independent recount.
    SlotRecount,
    /// Served and unserved vehicles partition the population.
    ServiceAccounting,
}

impl Constraint {
    pub const ALL: [Constraint; 10] = [
        Constraint::Coverage,
        Constraint::V2iQos,
        Constraint::RsuExclusive,
        Constraint::V2iDelivery,
        Constraint::SourceOnce,
        Constraint::Precedence,
        Constraint::HopLimit,
        Constraint::V2vDelivery,
        Constraint::SlotRecount,
        Constraint::ServiceAccounting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::Coverage => "coverage",
            Constraint::V2iQos => "v2i-qos",
            Constraint::RsuExclusive => "rsu-exclusive",
            Constraint::V2iDelivery => "v2i-delivery",
            Constraint::SourceOnce => "source-once",
            Constraint::Precedence => "precedence",
            Constraint::HopLimit => "hop-limit",
            Constraint::V2vDelivery => "v2v-delivery",
            Constraint::SlotRecount => "slot-recount",
            Constraint::ServiceAccounting => "service-accounting",
        }
    }
}

/// First counterexample found for a constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub slot: Option<Slot>,
    pub link: Option<Link>,
    pub vehicle: Option<VehicleId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.detail)?;
        if let Some(s) = self.slot {
            write!(f, " (slot {s})")?;
        }
        if let Some(l) = self.link {
            write!(f, " (link {l})")?;
        }
        if let Some(v) = self.vehicle {
            write!(f, " (vehicle {v})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub checks: BTreeMap<Constraint, Option<Violation>>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.values().all(Option::is_none)
    }

    pub fn violation(&self, c: Constraint) -> Option<&Violation> {
        self.checks.get(&c).and_then(Option::as_ref)
    }

    pub fn failures(&self) -> Vec<(Constraint, &Violation)> {
        self.checks
            .iter()
            .filter_map(|(c, v)| v.as_ref().map(|v| (*c, v)))
            .collect()
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, v) in &self.checks {
            match v {
                None => writeln!(f, "{:<20} ok", c.name())?,
                Some(v) => writeln!(f, "{:<20} FAIL {v}", c.name())?,
            }
        }
        Ok(())
    }
}

fn violation(detail: impl Into<String>) -> Violation {
    Violation { slot: None, link: None, vehicle: None, detail: detail.into() }
}

pub fn audit(result: &SchemeResult, ch: &dyn Channel) -> AuditReport {
    let mut checks = BTreeMap::new();
    checks.insert(Constraint::Coverage, check_coverage(result, ch));
    checks.insert(Constraint::V2iQos, check_v2i_qos(result, ch));
    checks.insert(Constraint::RsuExclusive, check_rsu_exclusive(result));
    checks.insert(Constraint::V2iDelivery, check_v2i_delivery(result, ch));
    checks.insert(Constraint::SourceOnce, check_source_once(result));
    checks.insert(Constraint::Precedence, check_precedence(result));
    checks.insert(Constraint::HopLimit, check_hop_limit(result));
    checks.insert(Constraint::V2vDelivery, check_v2v_delivery(result, ch));
    checks.insert(Constraint::SlotRecount, check_recount(result));
    checks.insert(Constraint::ServiceAccounting, check_accounting(result, ch));
    AuditReport { checks }
}

fn check_coverage(result: &SchemeResult, ch: &dyn Channel) -> Option<Violation> {
    for g in &result.v2i.grants {
        if let Some(t) = (g.start..g.end()).find(|&t| !ch.covers(g.vehicle, t)) {
            return Some(Violation {
                slot: Some(t),
                vehicle: Some(g.vehicle),
                ..violation("grant outside RSU coverage")
            });
        }
    }
    None
}

fn check_v2i_qos(result: &SchemeResult, ch: &dyn Channel) -> Option<Violation> {
    let th = ch.sinr_threshold();
    for g in &result.v2i.grants {
        if let Some(t) = (g.start..g.end()).find(|&t| ch.v2i_snr(g.vehicle, t) < th) {
            return Some(Violation {
                slot: Some(t),
                vehicle: Some(g.vehicle),
                ..violation("V2I SNR below threshold")
            });
        }
    }
    None
}

fn check_rsu_exclusive(result: &SchemeResult) -> Option<Violation> {
    let mut grants = result.v2i.grants.clone();
    grants.sort_by_key(|g| (g.start, g.vehicle));
    grants.windows(2).find(|w| w[0].end() > w[1].start).map(|w| Violation {
        slot: Some(w[1].start),
        vehicle: Some(w[1].vehicle),
        ..violation(format!("RSU serves {} and {} in the same slot", w[0].vehicle, w[1].vehicle))
    })
}

fn check_v2i_delivery(result: &SchemeResult, ch: &dyn Channel) -> Option<Violation> {
    let content = ch.content_bits();
    let slot_s = ch.slot_s();
    for g in &result.v2i.grants {
        let bits: f64 = (g.start..g.end()).map(|t| ch.v2i_rate(g.vehicle, t) * slot_s).sum();
        if !is_delivered(bits, content) {
            return Some(Violation {
                slot: Some(g.start),
                vehicle: Some(g.vehicle),
                ..violation(format!("grant delivers {bits:.6e} of {content:.6e} bits"))
            });
        }
    }
    None
}

fn all_links(result: &SchemeResult) -> impl Iterator<Item = (&PairingTrace, Link)> {
    result
        .v2v
        .pairings
        .iter()
        .flat_map(|p| p.links.iter().map(move |l| (p, l.link)))
}

fn check_source_once(result: &SchemeResult) -> Option<Violation> {
    let mut sources = BTreeSet::new();
    let mut receivers: BTreeSet<VehicleId> = BTreeSet::new();
    for g in &result.v2i.grants {
        if !receivers.insert(g.vehicle) {
            return Some(Violation {
                vehicle: Some(g.vehicle),
                ..violation("vehicle downloads from the RSU twice")
            });
        }
    }
    for (p, l) in all_links(result) {
        if !sources.insert(l.tx) {
            return Some(Violation {
                slot: Some(p.start),
                link: Some(l),
                vehicle: Some(l.tx),
                ..violation("vehicle is a source more than once")
            });
        }
        if !receivers.insert(l.rx) {
            return Some(Violation {
                slot: Some(p.start),
                link: Some(l),
                vehicle: Some(l.rx),
                ..violation("vehicle receives the content more than once")
            });
        }
    }
    None
}

fn check_precedence(result: &SchemeResult) -> Option<Violation> {
    let mut holders: BTreeSet<VehicleId> = result.v2i.grants.iter().map(|g| g.vehicle).collect();
    let mut pairings: Vec<&PairingTrace> = result.v2v.pairings.iter().collect();
    pairings.sort_by_key(|p| p.start);
    for p in pairings {
        for l in &p.links {
            let tx = l.link.tx;
            let relayed = p
                .links
                .iter()
                .any(|f| f.link.rx == tx && holders.contains(&f.link.tx));
            if !holders.contains(&tx) && !relayed {
                return Some(Violation {
                    slot: Some(p.start),
                    link: Some(l.link),
                    vehicle: Some(tx),
                    ..violation("source forwards content it does not hold")
                });
            }
        }
        holders.extend(p.links.iter().map(|l| l.link.rx));
    }
    None
}

fn check_hop_limit(result: &SchemeResult) -> Option<Violation> {
    for p in &result.v2v.pairings {
        let mut tx_seen = BTreeSet::new();
        let mut rx_seen = BTreeSet::new();
        for l in &p.links {
            let link = l.link;
            let bad = if link.tx == link.rx {
                Some("link to itself")
            } else if !tx_seen.insert(link.tx) {
                Some("two links share a transmitter")
            } else if !rx_seen.insert(link.rx) {
                Some("two links share a receiver")
            } else {
                None
            };
            if let Some(detail) = bad {
                return Some(Violation { slot: Some(p.start), link: Some(link), ..violation(detail) });
            }
        }
        let receivers: BTreeSet<VehicleId> = p.links.iter().map(|l| l.link.rx).collect();
        for l in &p.links {
            // a relay's feeder must not itself be a relay
            let feeder = p.links.iter().find(|f| f.link.rx == l.link.tx);
            if let Some(f) = feeder {
                if receivers.contains(&f.link.tx) {
                    return Some(Violation {
                        slot: Some(p.start),
                        link: Some(l.link),
                        ..violation("chain longer than two hops")
                    });
                }
                if f.link.tx == l.link.rx {
                    return Some(Violation {
                        slot: Some(p.start),
                        link: Some(l.link),
                        ..violation("relay sends back to its own source")
                    });
                }
            }
        }
    }
    None
}

fn check_v2v_delivery(result: &SchemeResult, ch: &dyn Channel) -> Option<Violation> {
    let content = ch.content_bits();
    let slot_s = ch.slot_s();
    let th = ch.sinr_threshold();
    let strict = result.v2v.strict_causality;
    for p in &result.v2v.pairings {
        let n = p.links.len();
        let feeder: Vec<Option<usize>> = p
            .links
            .iter()
            .map(|l| p.links.iter().position(|f| f.link.rx == l.link.tx))
            .collect();
        let mut bits = vec![0.0f64; n];
        let mut cached: Option<(Vec<usize>, Vec<f64>, Vec<f64>)> = None;
        for s in 0..p.duration {
            let active: Vec<usize> = (0..n).filter(|&k| p.links[k].slots > s).collect();
            if cached.as_ref().is_none_or(|c| c.0 != active) {
                let set: Vec<Link> = active.iter().map(|&k| p.links[k].link).collect();
                let sinrs = ch.link_sinrs(&set);
                let rates = ch.link_rates(&set);
                cached = Some((active.clone(), sinrs, rates));
            }
            let (_, sinrs, rates) = cached.as_ref().expect("filled above");
            if let Some(pos) = sinrs.iter().position(|&x| x < th) {
                return Some(Violation {
                    slot: Some(p.start + s),
                    link: Some(p.links[active[pos]].link),
                    ..violation(format!("SINR {:.4e} below threshold", sinrs[pos]))
                });
            }
            for (pos, &k) in active.iter().enumerate() {
                if feeder[k].is_none() {
                    bits[k] += rates[pos] * slot_s;
                }
            }
            for (pos, &k) in active.iter().enumerate() {
                if let Some(f) = feeder[k] {
                    let mut next = bits[k] + rates[pos] * slot_s;
                    if strict {
                        next = next.min(bits[f]);
                    }
                    bits[k] = next;
                }
            }
            // the last active slot of each link must be the first that completes it
            for &k in &active {
                let last = p.links[k].slots == s + 1;
                if last != is_delivered(bits[k], content) {
                    return Some(Violation {
                        slot: Some(p.start + s),
                        link: Some(p.links[k].link),
                        ..violation(format!(
                            "link reports {} slots but holds {:.6e} bits after {}",
                            p.links[k].slots,
                            bits[k],
                            s + 1
                        ))
                    });
                }
            }
        }
        if let Some(l) = p.links.iter().find(|l| l.slots == 0 || l.slots > p.duration) {
            return Some(Violation {
                slot: Some(p.start),
                link: Some(l.link),
                ..violation(format!("link slot count {} outside pairing of {}", l.slots, p.duration))
            });
        }
    }
    None
}

fn check_recount(result: &SchemeResult) -> Option<Violation> {
    let t_v2i: u64 = result.v2i.grants.iter().map(|g| g.slots).sum();
    if t_v2i != result.v2i.t_v2i {
        return Some(violation(format!("V2I grants sum to {t_v2i}, reported {}", result.v2i.t_v2i)));
    }
    let mut clock = 0;
    for p in &result.v2v.pairings {
        if p.start != clock {
            return Some(Violation {
                slot: Some(p.start),
                ..violation(format!("pairing starts at {} instead of {clock}", p.start))
            });
        }
        let longest = p.links.iter().map(|l| l.slots).max().unwrap_or(0);
        if longest != p.duration {
            return Some(Violation {
                slot: Some(p.start),
                ..violation(format!("pairing lasts {} but its longest link needs {longest}", p.duration))
            });
        }
        clock += p.duration;
    }
    if clock != result.v2v.t_v2v {
        return Some(violation(format!("pairings sum to {clock}, reported {}", result.v2v.t_v2v)));
    }
    None
}

fn check_accounting(result: &SchemeResult, ch: &dyn Channel) -> Option<Violation> {
    let served: BTreeSet<VehicleId> = result
        .v2i
        .grants
        .iter()
        .map(|g| g.vehicle)
        .chain(all_links(result).map(|(_, l)| l.rx))
        .collect();
    let unserved: BTreeSet<VehicleId> = result.unserved.iter().copied().collect();
    for v in ch.vehicle_ids() {
        if served.contains(&v) == unserved.contains(&v) {
            return Some(Violation {
                vehicle: Some(v),
                ..violation("vehicle must be exactly one of served or unserved")
            });
        }
    }
    if served.len() + unserved.len() != ch.vehicles().len() {
        return Some(violation("served/unserved sets mention unknown vehicles"));
    }
    None
}
