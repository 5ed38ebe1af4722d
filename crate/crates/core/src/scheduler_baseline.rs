//! Reference schedulers: a first-fit SINR greedy in the style of
//! GreedyPhysical, and an exhaustive optimum for tiny instances.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::radio_model::sinr_feasible;
use crate::scheduler_lgls::{Algorithm, Schedule};
use crate::topology::CommGraph;

/// Largest link count [`optimal_schedule`] accepts.
pub const OPTIMAL_LINK_CAP: usize = 10;

/// Order in which the greedy baseline visits links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GpOrdering {
    /// Link id order.
    Input,
    /// Seeded shuffle.
    Random(u64),
    LongestLinkFirst,
    /// Descending number of other transmitters within communication range of
    /// the link's receiver.
    #[default]
    InterferenceDegree,
}

impl FromStr for GpOrdering {
    type Err = Error;

    /// Accepts `input`, `random`, `random:<seed>`, `longest-link-first` and
    /// `interference-degree`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "input" => Ok(GpOrdering::Input),
            "random" => Ok(GpOrdering::Random(0)),
            "longest-link-first" => Ok(GpOrdering::LongestLinkFirst),
            "interference-degree" => Ok(GpOrdering::InterferenceDegree),
            other => match other.strip_prefix("random:") {
                Some(seed) => seed
                    .parse()
                    .map(GpOrdering::Random)
                    .map_err(|_| Error::Config(format!("bad random ordering seed `{seed}`"))),
                None => Err(Error::Config(format!("unknown GP ordering `{other}`"))),
            },
        }
    }
}

impl fmt::Display for GpOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GpOrdering::Input => f.write_str("input"),
            GpOrdering::Random(seed) => write!(f, "random:{seed}"),
            GpOrdering::LongestLinkFirst => f.write_str("longest-link-first"),
            GpOrdering::InterferenceDegree => f.write_str("interference-degree"),
        }
    }
}

pub fn link_order(g: &CommGraph, ordering: GpOrdering) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.link_count()).collect();
    match ordering {
        GpOrdering::Input => {}
        GpOrdering::Random(seed) => order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
        GpOrdering::LongestLinkFirst => {
            order.sort_by(|&a, &b| g.links()[b].length.total_cmp(&g.links()[a].length).then(a.cmp(&b)))
        }
        GpOrdering::InterferenceDegree => {
            let params = g.params();
            let degree: Vec<usize> = g
                .links()
                .iter()
                .map(|l| {
                    let rx = g.position(l.rx);
                    g.links()
                        .iter()
                        .filter(|m| m.id != l.id && params.within_range(g.position(m.tx).distance(&rx)))
                        .count()
                })
                .collect();
            order.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));
        }
    }
    order
}

/// One open slot of the greedy baseline, with the aggregate interference at
/// each member receiver kept current.
struct SlotState {
    members: Vec<usize>,
    interference: Vec<f64>,
    busy: Vec<bool>,
}

/// First-fit greedy: each link, in the configured order, goes into the
/// lowest slot where it shares no node with the slot's links and every
/// receiver of the enlarged slot still meets the SINR threshold. A new slot
/// is opened when none fits.
pub fn gp_schedule(g: &CommGraph, ordering: GpOrdering) -> Schedule {
    let params = g.params();
    let links = g.links();
    let signal: Vec<f64> = links
        .iter()
        .map(|l| params.power_mw() / l.length.powf(params.alpha()))
        .collect();
    // received power from transmitter of `from` at receiver of `at`
    let cross = |from: usize, at: usize| {
        let d = g.position(links[from].tx).distance(&g.position(links[at].rx));
        params.power_mw() / d.powf(params.alpha())
    };

    let mut slots: Vec<SlotState> = Vec::new();
    for link in link_order(g, ordering) {
        let l = &links[link];
        let mut placed = false;
        for slot in slots.iter_mut() {
            if slot.busy[l.tx] || slot.busy[l.rx] {
                continue;
            }
            let incoming: Vec<f64> = slot.members.iter().map(|&m| cross(link, m)).collect();
            let others_ok = slot.members.iter().zip(&slot.interference).zip(&incoming).all(
                |((&m, &i), &extra)| params.meets_threshold(signal[m] / (params.noise_mw() + i + extra)),
            );
            if !others_ok {
                continue;
            }
            let own: f64 = slot.members.iter().map(|&m| cross(m, link)).sum();
            if !params.meets_threshold(signal[link] / (params.noise_mw() + own)) {
                continue;
            }
            for (i, extra) in slot.interference.iter_mut().zip(incoming) {
                *i += extra;
            }
            slot.members.push(link);
            slot.interference.push(own);
            slot.busy[l.tx] = true;
            slot.busy[l.rx] = true;
            placed = true;
            break;
        }
        if !placed {
            let mut busy = vec![false; g.nodes().len()];
            busy[l.tx] = true;
            busy[l.rx] = true;
            slots.push(SlotState {
                members: vec![link],
                interference: vec![0.0],
                busy,
            });
        }
    }
    let classes: Vec<Vec<usize>> = slots.into_iter().map(|s| s.members).collect();
    Schedule::from_classes(g.link_count(), &classes, Algorithm::Gp, None)
}

/// Minimum-length schedule by exhaustive search over set partitions.
///
/// The first link is pinned to slot 1 and new slots are only opened at the
/// end, so each partition is visited once. Branches that cannot beat the best
/// length found so far are cut, and the search stops early once it meets the
/// node-degree lower bound.
pub fn optimal_schedule(g: &CommGraph) -> Result<Schedule> {
    let e = g.link_count();
    if e > OPTIMAL_LINK_CAP {
        return Err(Error::Config(format!(
            "exhaustive search is capped at {OPTIMAL_LINK_CAP} links, graph has {e}"
        )));
    }
    let lower = g.degrees().into_iter().max().unwrap_or(0);
    let mut search = PartitionSearch {
        g,
        lower,
        best: (0..e).map(|l| vec![l]).collect(),
        blocks: Vec::new(),
    };
    if e > 0 {
        search.extend(0)?;
    }
    Ok(Schedule::from_classes(e, &search.best, Algorithm::Optimal, None))
}

struct PartitionSearch<'a> {
    g: &'a CommGraph,
    lower: usize,
    best: Vec<Vec<usize>>,
    blocks: Vec<Vec<usize>>,
}

impl PartitionSearch<'_> {
    fn done(&self) -> bool {
        self.best.len() <= self.lower
    }

    fn fits(&self, block: &[usize], link: usize) -> Result<bool> {
        let links = self.g.links();
        if block.iter().any(|&b| links[b].shares_node(&links[link])) {
            return Ok(false);
        }
        let geometry: Vec<_> = block
            .iter()
            .chain(std::iter::once(&link))
            .map(|&l| self.g.geometry(l))
            .collect();
        Ok(sinr_feasible(self.g.params(), &geometry)?.feasible)
    }

    fn extend(&mut self, link: usize) -> Result<()> {
        if link == self.g.link_count() {
            if self.blocks.len() < self.best.len() {
                self.best = self.blocks.clone();
            }
            return Ok(());
        }
        for b in 0..self.blocks.len() {
            if self.fits(&self.blocks[b], link)? {
                self.blocks[b].push(link);
                self.extend(link + 1)?;
                self.blocks[b].pop();
                if self.done() {
                    return Ok(());
                }
            }
        }
        if self.blocks.len() + 1 < self.best.len() {
            self.blocks.push(vec![link]);
            self.extend(link + 1)?;
            self.blocks.pop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio_model::RadioParams;
    use crate::scheduler_lgls::verify_schedule;
    use crate::topology::{build_comm_graph, generate_topology, Node};

    fn node(id: usize, x: f64, y: f64) -> Node {
        Node { id, x, y }
    }

    fn graph(nodes: Vec<Node>, pairs: &[(usize, usize)]) -> CommGraph {
        CommGraph::with_links(nodes, RadioParams::paper_defaults(), pairs.iter().copied()).unwrap()
    }

    /// `k` short links spaced `spacing` meters apart along the x axis.
    fn spread(k: usize, spacing: f64) -> CommGraph {
        let nodes: Vec<Node> = (0..2 * k)
            .map(|i| node(i, (i / 2) as f64 * spacing + (i % 2) as f64 * 50.0, 0.0))
            .collect();
        let pairs: Vec<_> = (0..k).map(|i| (2 * i, 2 * i + 1)).collect();
        graph(nodes, &pairs)
    }

    #[test]
    fn gp_small_cases() {
        let one = graph(vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)], &[(0, 1)]);
        assert_eq!(gp_schedule(&one, GpOrdering::default()).num_slots(), 1);

        let adjacent = graph(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0), node(2, 200.0, 0.0)],
            &[(0, 1), (1, 2)],
        );
        assert_eq!(gp_schedule(&adjacent, GpOrdering::Input).num_slots(), 2);

        let far = spread(2, 10_000.0);
        assert!(sinr_feasible(far.params(), &[far.geometry(0), far.geometry(1)])
            .unwrap()
            .feasible);
        assert_eq!(gp_schedule(&far, GpOrdering::Input).num_slots(), 1);
    }

    #[test]
    fn gp_rejects_interfering_pair() {
        // disjoint links, but the interferer sits close to the other receiver
        let g = graph(
            vec![
                node(0, 0.0, 0.0),
                node(1, 300.0, 0.0),
                node(2, 350.0, 0.0),
                node(3, 600.0, 0.0),
            ],
            &[(0, 1), (2, 3)],
        );
        assert!(!sinr_feasible(g.params(), &[g.geometry(0), g.geometry(1)])
            .unwrap()
            .feasible);
        assert_eq!(gp_schedule(&g, GpOrdering::Input).num_slots(), 2);
    }

    #[test]
    fn gp_outputs_verify_and_are_deterministic() {
        let p = RadioParams::paper_defaults();
        for seed in 0..10 {
            let g = build_comm_graph(generate_topology(60, 3000.0, seed), p).unwrap();
            for ordering in [
                GpOrdering::Input,
                GpOrdering::Random(seed),
                GpOrdering::LongestLinkFirst,
                GpOrdering::InterferenceDegree,
            ] {
                let s = gp_schedule(&g, ordering);
                assert!(verify_schedule(&g, &s).unwrap().feasible(), "{ordering}");
                assert_eq!(s, gp_schedule(&g, ordering));
            }
        }
    }

    #[test]
    fn ordering_parse() {
        for o in [
            GpOrdering::Input,
            GpOrdering::Random(42),
            GpOrdering::LongestLinkFirst,
            GpOrdering::InterferenceDegree,
        ] {
            assert_eq!(o.to_string().parse::<GpOrdering>().unwrap(), o);
        }
        assert_eq!("random".parse::<GpOrdering>().unwrap(), GpOrdering::Random(0));
        assert!("sideways".parse::<GpOrdering>().is_err());
        assert!("random:x".parse::<GpOrdering>().is_err());
    }

    #[test]
    fn orderings_are_permutations() {
        let g = build_comm_graph(generate_topology(40, 2000.0, 9), RadioParams::paper_defaults())
            .unwrap();
        for ordering in [GpOrdering::Random(1), GpOrdering::LongestLinkFirst, GpOrdering::InterferenceDegree] {
            let mut o = link_order(&g, ordering);
            o.sort_unstable();
            assert_eq!(o, (0..g.link_count()).collect::<Vec<_>>());
        }
        let o = link_order(&g, GpOrdering::LongestLinkFirst);
        assert!(o.windows(2).all(|w| g.links()[w[0]].length >= g.links()[w[1]].length));
    }

    #[test]
    fn optimal_small_cases() {
        let adjacent = graph(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)],
            &[(0, 1), (1, 0)],
        );
        assert_eq!(optimal_schedule(&adjacent).unwrap().num_slots(), 2);

        for k in 1..=5 {
            let g = spread(k, 20_000.0);
            let s = optimal_schedule(&g).unwrap();
            assert_eq!(s.num_slots(), 1, "k={k}");
        }

        let empty = build_comm_graph(vec![], RadioParams::paper_defaults()).unwrap();
        assert_eq!(optimal_schedule(&empty).unwrap().num_slots(), 0);
    }

    #[test]
    fn optimal_refuses_large_instances() {
        let g = spread(OPTIMAL_LINK_CAP + 1, 20_000.0);
        assert!(matches!(optimal_schedule(&g), Err(Error::Config(_))));
        assert!(optimal_schedule(&spread(OPTIMAL_LINK_CAP, 20_000.0)).is_ok());
    }

    /// Plain enumeration of every slot assignment, for cross-checking.
    fn brute_force_min(g: &CommGraph) -> usize {
        let e = g.link_count();
        let mut best = e;
        let mut colors = vec![0usize; e];
        loop {
            let used = colors.iter().max().map_or(0, |m| m + 1);
            if used < best {
                let ok = (0..used).all(|c| {
                    let class: Vec<usize> = (0..e).filter(|&l| colors[l] == c).collect();
                    let pairwise = class.iter().enumerate().all(|(a, &i)| {
                        class[a + 1..].iter().all(|&j| !g.links()[i].shares_node(&g.links()[j]))
                    });
                    pairwise
                        && sinr_feasible(g.params(), &class.iter().map(|&l| g.geometry(l)).collect::<Vec<_>>())
                            .unwrap()
                            .feasible
                });
                if ok {
                    best = used;
                }
            }
            // next assignment in base e
            let mut k = 0;
            loop {
                if k == e {
                    return best;
                }
                colors[k] += 1;
                if colors[k] < e {
                    break;
                }
                colors[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn optimal_matches_enumeration() {
        let p = RadioParams::paper_defaults();
        let mut checked = 0;
        for seed in 0..400u64 {
            let g = build_comm_graph(generate_topology(5, 900.0, seed), p).unwrap();
            if g.link_count() == 0 || g.link_count() > 6 {
                continue;
            }
            let s = optimal_schedule(&g).unwrap();
            assert!(verify_schedule(&g, &s).unwrap().feasible());
            assert_eq!(s.num_slots(), brute_force_min(&g), "seed {seed}");
            checked += 1;
        }
        assert!(checked > 20, "only {checked} instances");
    }
}
