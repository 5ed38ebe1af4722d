//! Greedy color-class growth over the weighted line graph, plus the schedule
//! type and the SINR verifier shared by every scheduler.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line_graph::LineGraph;
use crate::radio_model::{sinr_feasible, SinrReport};
use crate::topology::CommGraph;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lgls,
    Gp,
    Optimal,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Lgls => "lgls",
            Algorithm::Gp => "gp",
            Algorithm::Optimal => "optimal",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An exhaustive link schedule: every link gets exactly one slot in `1..=C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    colors: Vec<usize>,
    num_slots: usize,
    algorithm: Algorithm,
    seed: Option<u64>,
}

impl Schedule {
    /// Wraps a slot assignment, checking that slots are exactly `1..=C` with
    /// none left empty.
    pub fn from_colors(colors: Vec<usize>, algorithm: Algorithm, seed: Option<u64>) -> Result<Self> {
        let num_slots = colors.iter().copied().max().unwrap_or(0);
        let mut used = vec![false; num_slots + 1];
        for (link, &c) in colors.iter().enumerate() {
            if c == 0 {
                return Err(Error::Contract(format!("link {link} has slot 0; slots are 1-based")));
            }
            used[c] = true;
        }
        if let Some(gap) = (1..=num_slots).find(|&c| !used[c]) {
            return Err(Error::Contract(format!("slot {gap} is empty")));
        }
        Ok(Schedule {
            colors,
            num_slots,
            algorithm,
            seed,
        })
    }

    /// Builds a schedule from slot classes given as lists of link ids.
    pub(crate) fn from_classes(
        links: usize,
        classes: &[Vec<usize>],
        algorithm: Algorithm,
        seed: Option<u64>,
    ) -> Self {
        let mut colors = vec![0; links];
        for (slot, class) in classes.iter().enumerate() {
            for &l in class {
                colors[l] = slot + 1;
            }
        }
        Schedule::from_colors(colors, algorithm, seed).expect("classes partition the links")
    }

    /// Slot of each link, indexed by link id.
    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn slot_of(&self, link: usize) -> usize {
        self.colors[link]
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Links of every slot; entry `k` holds slot `k + 1`, in increasing link id.
    pub fn slots(&self) -> Vec<Vec<usize>> {
        let mut slots = vec![Vec::new(); self.num_slots];
        for (link, &c) in self.colors.iter().enumerate() {
            slots[c - 1].push(link);
        }
        slots
    }

    /// Writes `link_id,tx,rx,slot`, with a trailing `algo` column when
    /// `with_algo` is set. `link_ids` maps schedule entries to the id
    /// reported in the first column (physical link ids for load-expanded
    /// graphs).
    pub fn write_csv<W: Write>(
        &self,
        g: &CommGraph,
        link_ids: Option<&[usize]>,
        with_algo: bool,
        out: W,
    ) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        if with_algo {
            wtr.write_record(["link_id", "tx", "rx", "slot", "algo"])?;
        } else {
            wtr.write_record(["link_id", "tx", "rx", "slot"])?;
        }
        for (l, &slot) in g.links().iter().zip(&self.colors) {
            let id = link_ids.map_or(l.id, |ids| ids[l.id]);
            let mut row = vec![id.to_string(), l.tx.to_string(), l.rx.to_string(), slot.to_string()];
            if with_algo {
                row.push(self.algorithm.to_string());
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// How LGLS picks the vertex that opens each new color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LglsOptions {
    pub seed: u64,
    /// Open each color with the lowest-id uncolored vertex instead of a random one.
    pub deterministic: bool,
}

pub fn lgls_schedule(lg: &LineGraph, seed: u64) -> Schedule {
    lgls_schedule_with(
        lg,
        LglsOptions {
            seed,
            deterministic: false,
        },
    )
}

/// Colors the line graph one class at a time.
///
/// A class starts from one uncolored vertex, then repeatedly takes the
/// uncolored vertex with the largest total co-schedulability (both
/// directions) towards the class. The candidate joins only if every member
/// and the candidate itself keep their incoming co-schedulability sum strictly
/// above `|class| + N - 1`; the first rejection closes the class.
///
/// Per-vertex sums towards the current class are kept up to date on every
/// admission, so candidate selection is linear in the uncolored set and the
/// admission test linear in the class size. Total work is `O(e^2)`.
pub fn lgls_schedule_with(lg: &LineGraph, opts: LglsOptions) -> Schedule {
    let e = lg.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut colors = vec![0usize; e];
    let mut uncolored = UncoloredSet::new(e);

    // For uncolored y: sum over class members x of w'(x -> y) and w'(y -> x).
    let mut toward = vec![0.0f64; e];
    let mut from = vec![0.0f64; e];
    // For class member c: sum over the other members x of w'(x -> c).
    let mut member_in = vec![0.0f64; e];
    let mut class: Vec<usize> = Vec::new();
    let mut color = 0;

    while !uncolored.is_empty() {
        color += 1;
        let first = if opts.deterministic {
            uncolored.min_id()
        } else {
            uncolored.get(rng.gen_range(0..uncolored.len()))
        };
        uncolored.remove(first);
        colors[first] = color;
        class.clear();
        class.push(first);
        member_in[first] = 0.0;
        let (row, col) = (lg.w_prime_row(first), lg.w_prime_col(first));
        for &y in uncolored.as_slice() {
            toward[y] = row[y];
            from[y] = col[y];
        }

        while !uncolored.is_empty() {
            let mut best = usize::MAX;
            let mut best_score = f64::NEG_INFINITY;
            for &y in uncolored.as_slice() {
                let score = toward[y] + from[y];
                if score > best_score {
                    best = y;
                    best_score = score;
                }
            }
            let u = best;
            let size = class.len() as f64;
            let u_row = lg.w_prime_row(u);
            let members_ok = class
                .iter()
                .all(|&c| member_in[c] + u_row[c] > size + lg.noise(c) - 1.0);
            if !(members_ok && toward[u] > size + lg.noise(u) - 1.0) {
                break;
            }

            colors[u] = color;
            uncolored.remove(u);
            for &c in &class {
                member_in[c] += u_row[c];
            }
            member_in[u] = toward[u];
            class.push(u);
            let (row, col) = (lg.w_prime_row(u), lg.w_prime_col(u));
            for &y in uncolored.as_slice() {
                toward[y] += row[y];
                from[y] += col[y];
            }
        }
    }

    Schedule::from_colors(colors, Algorithm::Lgls, Some(opts.seed))
        .expect("every vertex receives a color")
}

/// Uncolored vertices kept in increasing id order, so row scans walk memory
/// sequentially and the first maximum found is the lowest id.
struct UncoloredSet {
    items: Vec<usize>,
}

impl UncoloredSet {
    fn new(n: usize) -> Self {
        UncoloredSet {
            items: (0..n).collect(),
        }
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn get(&self, k: usize) -> usize {
        self.items[k]
    }

    fn as_slice(&self) -> &[usize] {
        &self.items
    }

    fn min_id(&self) -> usize {
        self.items[0]
    }

    /// Linear in the set size, same as the scans around every call.
    fn remove(&mut self, v: usize) {
        if let Ok(k) = self.items.binary_search(&v) {
            self.items.remove(k);
        }
    }
}

/// The sufficient co-coloring condition: every vertex of `subset` receives
/// incoming co-schedulability strictly above `|subset| + N - 2` from the rest.
pub fn theorem1_holds(lg: &LineGraph, subset: &[usize]) -> bool {
    let size = subset.len() as f64;
    subset.iter().all(|&v| {
        let incoming: f64 = subset
            .iter()
            .filter(|&&x| x != v)
            .map(|&x| lg.w_prime(x, v))
            .sum();
        incoming > size + lg.noise(v) - 2.0
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotReport {
    /// 1-based slot index.
    pub slot: usize,
    pub links: Vec<usize>,
    /// Pairs of co-slotted links that share a node.
    pub node_conflicts: Vec<(usize, usize)>,
    /// `None` when a shared node puts a transmitter on top of a receiver.
    pub sinr: Option<SinrReport>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub slots: Vec<SlotReport>,
}

impl ScheduleReport {
    pub fn feasible(&self) -> bool {
        self.slots.iter().all(|s| s.feasible)
    }
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.slots {
            let verdict = if s.feasible { "ok" } else { "INFEASIBLE" };
            write!(f, "slot {} ({} links): {verdict}", s.slot, s.links.len())?;
            if let Some(r) = &s.sinr {
                write!(f, ", min margin {:.6e}", r.min_margin)?;
            }
            if !s.node_conflicts.is_empty() {
                write!(f, ", node-sharing pairs {:?}", s.node_conflicts)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Checks every slot of `s` against the SINR criterion, directly from
/// geometry. A slot also fails if two of its links share a node.
pub fn verify_schedule(g: &CommGraph, s: &Schedule) -> Result<ScheduleReport> {
    if s.colors().len() != g.link_count() {
        return Err(Error::Contract(format!(
            "schedule covers {} links but the graph has {}",
            s.colors().len(),
            g.link_count()
        )));
    }
    let mut slots = Vec::with_capacity(s.num_slots());
    for (k, links) in s.slots().into_iter().enumerate() {
        let mut node_conflicts = Vec::new();
        for (a, &i) in links.iter().enumerate() {
            for &j in &links[a + 1..] {
                if g.links()[i].shares_node(&g.links()[j]) {
                    node_conflicts.push((i, j));
                }
            }
        }
        let geometry: Vec<_> = links.iter().map(|&l| g.geometry(l)).collect();
        let sinr = match sinr_feasible(g.params(), &geometry) {
            Ok(r) => Some(r),
            Err(Error::DegenerateGeometry(_)) if !node_conflicts.is_empty() => None,
            Err(e) => return Err(e),
        };
        let feasible =
            node_conflicts.is_empty() && sinr.as_ref().is_some_and(|r| r.feasible);
        slots.push(SlotReport {
            slot: k + 1,
            links,
            node_conflicts,
            sinr,
            feasible,
        });
    }
    Ok(ScheduleReport { slots })
}
