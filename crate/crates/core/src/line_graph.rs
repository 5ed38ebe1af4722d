//! The weighted complete line graph the LGLS scheduler colors.
//!
//! Every link of the communication graph becomes a vertex. For an ordered pair
//! `(i, j)` the interference weight `w[i][j]` measures how much the transmitter
//! of `i` disturbs the receiver of `j`, relative to `j`'s own signal and
//! scaled by the SINR threshold. Adjacent links always get weight 1. The
//! co-schedulability weight is `max(0, 1 - w)` and each vertex also carries
//! the noise floor at its receiver, normalized the same way.
//!
//! The matrices are dense, row-major `e x e`, and the co-schedulability
//! matrix is also kept transposed. Memory is `O(e^2)`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::radio_model::RadioParams;
use crate::topology::{CommGraph, Link};

/// Value stored on the unused diagonal of both matrices.
const DIAGONAL: f64 = f64::NAN;

#[derive(Debug, Clone)]
pub struct LineGraph {
    links: Vec<Link>,
    w: Vec<f64>,
    w_prime: Vec<f64>,
    /// Transpose of `w_prime`, so column scans read contiguous memory.
    w_prime_t: Vec<f64>,
    noise: Vec<f64>,
}

/// Interference weight of link `i` on link `j`.
pub fn interference_weight(g: &CommGraph, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::Contract(format!(
            "interference weight of link {i} on itself is undefined"
        )));
    }
    let (li, lj) = (&g.links()[i], &g.links()[j]);
    if li.shares_node(lj) {
        return Ok(1.0);
    }
    let params = g.params();
    let cross = g.position(li.tx).distance(&g.position(lj.rx));
    if cross.is_nan() || cross <= 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "transmitter of link {i} coincides with receiver of link {j}"
        )));
    }
    Ok(params.gamma_lin() * (lj.length / cross).powf(params.alpha()))
}

pub fn co_schedulability(w: f64) -> f64 {
    (1.0 - w).max(0.0)
}

/// `N0 * gamma * d^alpha / P`: equals 1 for a link exactly at the communication range.
pub fn normalized_noise(params: &RadioParams, link: &Link) -> f64 {
    params.noise_mw() * params.gamma_lin() * link.length.powf(params.alpha()) / params.power_mw()
}

pub fn build_line_graph(g: &CommGraph) -> Result<LineGraph> {
    let e = g.link_count();
    let mut w = vec![DIAGONAL; e * e];
    if e > 0 {
        w.par_chunks_mut(e)
            .enumerate()
            .try_for_each(|(i, row)| -> Result<()> {
                for (j, slot) in row.iter_mut().enumerate() {
                    if i != j {
                        *slot = interference_weight(g, i, j)?;
                    }
                }
                Ok(())
            })?;
    }
    let w_prime: Vec<f64> = w
        .par_iter()
        .map(|&x| if x.is_nan() { DIAGONAL } else { co_schedulability(x) })
        .collect();
    let mut w_prime_t = vec![DIAGONAL; e * e];
    if e > 0 {
        w_prime_t.par_chunks_mut(e).enumerate().for_each(|(j, col)| {
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = w_prime[i * e + j];
            }
        });
    }
    let noise = g
        .links()
        .iter()
        .map(|l| normalized_noise(g.params(), l))
        .collect();
    Ok(LineGraph {
        links: g.links().to_vec(),
        w,
        w_prime,
        w_prime_t,
        noise,
    })
}

impl LineGraph {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    #[inline]
    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.links.len() + j]
    }

    #[inline]
    pub fn w_prime(&self, i: usize, j: usize) -> f64 {
        self.w_prime[i * self.links.len() + j]
    }

    /// Row `i` of the co-schedulability matrix: `w'(i -> j)` for every `j`.
    #[inline]
    pub fn w_prime_row(&self, i: usize) -> &[f64] {
        let e = self.links.len();
        &self.w_prime[i * e..(i + 1) * e]
    }

    /// Column `j` of the co-schedulability matrix: `w'(i -> j)` for every `i`.
    #[inline]
    pub fn w_prime_col(&self, j: usize) -> &[f64] {
        let e = self.links.len();
        &self.w_prime_t[j * e..(j + 1) * e]
    }

    #[inline]
    pub fn noise(&self, j: usize) -> f64 {
        self.noise[j]
    }

    /// Debug dump of every off-diagonal entry as `i,j,w,w_prime`.
    pub fn write_weights_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["i", "j", "w", "w_prime"])?;
        for i in 0..self.len() {
            for j in 0..self.len() {
                if i != j {
                    wtr.serialize((i, j, self.w(i, j), self.w_prime(i, j)))?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Integer slot demand per link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadMap {
    demands: Vec<u32>,
}

impl LoadMap {
    /// Validates that every demand is at least 1 and that the largest demand
    /// is at most `k` times the smallest.
    pub fn new(demands: Vec<u32>, k: u32) -> Result<Self> {
        if let Some(pos) = demands.iter().position(|&d| d == 0) {
            return Err(Error::Contract(format!("link {pos} has zero demand")));
        }
        if let (Some(&lo), Some(&hi)) = (demands.iter().min(), demands.iter().max()) {
            if u64::from(hi) > u64::from(lo) * u64::from(k) {
                return Err(Error::Contract(format!(
                    "demand ratio {hi}/{lo} exceeds the bound {k}"
                )));
            }
        }
        Ok(LoadMap { demands })
    }

    pub fn uniform(links: usize) -> Self {
        LoadMap {
            demands: vec![1; links],
        }
    }

    pub fn demands(&self) -> &[u32] {
        &self.demands
    }

    pub fn total(&self) -> u64 {
        self.demands.iter().map(|&d| u64::from(d)).sum()
    }
}

/// A load-expanded graph plus the physical link each replica came from.
#[derive(Debug, Clone)]
pub struct ExpandedGraph {
    pub graph: CommGraph,
    pub origin: Vec<usize>,
}

/// Replaces each link by as many parallel replicas as its demand. Replicas of
/// one physical link share both endpoints, so they interfere with weight 1
/// and are forced into distinct slots.
pub fn expand_loads(g: &CommGraph, loads: &LoadMap) -> Result<ExpandedGraph> {
    if loads.demands().len() != g.link_count() {
        return Err(Error::Contract(format!(
            "load map has {} entries for {} links",
            loads.demands().len(),
            g.link_count()
        )));
    }
    let mut origin = Vec::new();
    let mut pairs = Vec::new();
    for (l, &d) in g.links().iter().zip(loads.demands()) {
        for _ in 0..d {
            origin.push(l.id);
            pairs.push((l.tx, l.rx));
        }
    }
    let graph = CommGraph::with_links(g.nodes().to_vec(), *g.params(), pairs)?;
    Ok(ExpandedGraph { graph, origin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_comm_graph, generate_topology, Node};

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        ((a - b) / b).abs() <= tol
    }

    fn node(id: usize, x: f64, y: f64) -> Node {
        Node { id, x, y }
    }

    fn graph(nodes: Vec<Node>, pairs: &[(usize, usize)]) -> CommGraph {
        CommGraph::with_links(nodes, RadioParams::paper_defaults(), pairs.iter().copied()).unwrap()
    }

    #[test]
    fn adjacent_links_weigh_one() {
        let g = graph(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0), node(2, 200.0, 0.0)],
            &[(0, 1), (1, 2)],
        );
        assert_eq!(interference_weight(&g, 0, 1).unwrap(), 1.0);
        assert_eq!(interference_weight(&g, 1, 0).unwrap(), 1.0);
    }

    #[test]
    fn far_pair_weight() {
        let g = graph(
            vec![
                node(0, 0.0, 0.0),
                node(1, 0.0, 100.0),
                node(2, 1000.0, 0.0),
                node(3, 1000.0, 100.0),
            ],
            &[(0, 1), (2, 3)],
        );
        let w = interference_weight(&g, 0, 1).unwrap();
        assert!(rel_close(w, 0.00015498044693684537, 1e-9), "{w}");
    }

    #[test]
    fn equidistant_interferer_weighs_gamma() {
        // t_i and t_j both 100 m from r_j
        let g = graph(
            vec![
                node(0, -100.0, 0.0),
                node(1, -100.0, 300.0),
                node(2, 100.0, 0.0),
                node(3, 0.0, 0.0),
            ],
            &[(0, 1), (2, 3)],
        );
        let w = interference_weight(&g, 0, 1).unwrap();
        assert!(rel_close(w, RadioParams::paper_defaults().gamma_lin(), 1e-12));
    }

    #[test]
    fn self_weight_is_a_contract_violation() {
        let g = graph(vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)], &[(0, 1)]);
        assert!(matches!(interference_weight(&g, 0, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn co_schedulability_clamps() {
        assert_eq!(co_schedulability(1.0), 0.0);
        assert_eq!(co_schedulability(0.25), 0.75);
        assert_eq!(co_schedulability(1.3), 0.0);
        assert_eq!(co_schedulability(0.0), 1.0);
    }

    #[test]
    fn noise_examples() {
        let p = RadioParams::paper_defaults();
        let link = |length| Link {
            id: 0,
            tx: 0,
            rx: 1,
            length,
        };
        assert!(rel_close(normalized_noise(&p, &link(100.0)), 0.001258925411794168, 1e-9));
        assert!(rel_close(
            normalized_noise(&p, &link(p.communication_range())),
            1.0,
            1e-12
        ));
        assert!(normalized_noise(&p, &link(1e-6)) < 1e-20);
    }

    #[test]
    fn two_node_line_graph() {
        let g = build_comm_graph(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)],
            RadioParams::paper_defaults(),
        )
        .unwrap();
        let lg = build_line_graph(&g).unwrap();
        assert_eq!(lg.len(), 2);
        assert_eq!((lg.w(0, 1), lg.w(1, 0)), (1.0, 1.0));
        assert_eq!((lg.w_prime(0, 1), lg.w_prime(1, 0)), (0.0, 0.0));
        assert!(lg.w(0, 0).is_nan());
    }

    #[test]
    fn off_diagonal_entry_count() {
        let g = build_comm_graph(generate_topology(30, 1500.0, 1), RadioParams::paper_defaults())
            .unwrap();
        let lg = build_line_graph(&g).unwrap();
        let e = lg.len();
        let filled = (0..e)
            .flat_map(|i| (0..e).map(move |j| (i, j)))
            .filter(|&(i, j)| !lg.w(i, j).is_nan() && !lg.w_prime(i, j).is_nan())
            .count();
        assert_eq!(filled, e * (e - 1));
    }

    #[test]
    fn distant_links_almost_fully_compatible() {
        let g = graph(
            vec![
                node(0, 0.0, 0.0),
                node(1, 10.0, 0.0),
                node(2, 50_000.0, 0.0),
                node(3, 50_010.0, 0.0),
            ],
            &[(0, 1), (2, 3)],
        );
        let lg = build_line_graph(&g).unwrap();
        assert!(lg.w_prime(0, 1) > 1.0 - 1e-12);
        assert!(lg.w_prime(1, 0) > 1.0 - 1e-12);
    }

    #[test]
    fn empty_graph() {
        let g = build_comm_graph(vec![], RadioParams::paper_defaults()).unwrap();
        let lg = build_line_graph(&g).unwrap();
        assert!(lg.is_empty());
    }

    #[test]
    fn load_expansion_counts() {
        let g = build_comm_graph(generate_topology(20, 1000.0, 4), RadioParams::paper_defaults())
            .unwrap();
        let e = g.link_count();
        assert!(e > 2);

        let same = expand_loads(&g, &LoadMap::uniform(e)).unwrap();
        let pairs = |g: &CommGraph| g.links().iter().map(|l| (l.tx, l.rx)).collect::<Vec<_>>();
        assert_eq!(pairs(&same.graph), pairs(&g));

        let mut demands = vec![1; e];
        demands[1] = 3;
        let ex = expand_loads(&g, &LoadMap::new(demands, 5).unwrap()).unwrap();
        assert_eq!(ex.graph.link_count(), e + 2);
        assert_eq!(ex.origin.iter().filter(|&&o| o == 1).count(), 3);

        let demands: Vec<u32> = (0..e as u32).map(|i| 1 + i % 4).collect();
        let loads = LoadMap::new(demands, 4).unwrap();
        let ex = expand_loads(&g, &loads).unwrap();
        assert_eq!(ex.graph.link_count() as u64, loads.total());
    }

    #[test]
    fn replicas_never_compatible() {
        let g = graph(vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)], &[(0, 1)]);
        let ex = expand_loads(&g, &LoadMap::new(vec![3], 5).unwrap()).unwrap();
        let lg = build_line_graph(&ex.graph).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(lg.w_prime(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn load_map_validation() {
        assert!(LoadMap::new(vec![1, 0, 2], 5).is_err());
        assert!(LoadMap::new(vec![1, 6], 5).is_err());
        assert!(LoadMap::new(vec![2, 10], 5).is_ok());
        let g = graph(vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)], &[(0, 1)]);
        assert!(expand_loads(&g, &LoadMap::uniform(2)).is_err());
    }

    #[test]
    fn weights_csv_dump() {
        let g = build_comm_graph(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)],
            RadioParams::paper_defaults(),
        )
        .unwrap();
        let mut buf = Vec::new();
        build_line_graph(&g).unwrap().write_weights_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "i,j,w,w_prime\n0,1,1.0,0.0\n1,0,1.0,0.0\n"
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn weight_identity_and_bounds(seed in any::<u64>(), n in 2usize..40) {
                let p = RadioParams::paper_defaults();
                let g = build_comm_graph(generate_topology(n, 2000.0, seed), p).unwrap();
                let lg = build_line_graph(&g).unwrap();
                for i in 0..lg.len() {
                    let n_i = lg.noise(i);
                    prop_assert!(n_i > 0.0 && n_i <= 1.0 + 1e-8);
                    for j in 0..lg.len() {
                        if i == j { continue; }
                        let (li, lj) = (&g.links()[i], &g.links()[j]);
                        let wp = lg.w_prime(i, j);
                        prop_assert!((0.0..=1.0).contains(&wp));
                        prop_assert_eq!(wp, co_schedulability(lg.w(i, j)));
                        if li.shares_node(lj) {
                            prop_assert_eq!(lg.w(i, j), 1.0);
                        } else {
                            let cross = g.position(li.tx).distance(&g.position(lj.rx));
                            let lhs = lg.w(i, j) * cross.powf(p.alpha());
                            let rhs = p.gamma_lin() * lj.length.powf(p.alpha());
                            prop_assert!(((lhs - rhs) / rhs).abs() < 1e-10);
                        }
                    }
                }
            }

            #[test]
            fn relabeling_nodes_permutes_weights(seed in any::<u64>(), n in 2usize..25) {
                let p = RadioParams::paper_defaults();
                let nodes = generate_topology(n, 1500.0, seed);
                let g = build_comm_graph(nodes.clone(), p).unwrap();
                let lg = build_line_graph(&g).unwrap();

                // reverse the node ids
                let relabel = |id: usize| n - 1 - id;
                let mut shuffled: Vec<Node> = nodes
                    .iter()
                    .map(|m| Node { id: relabel(m.id), ..*m })
                    .collect();
                shuffled.sort_by_key(|m| m.id);
                let h = build_comm_graph(shuffled, p).unwrap();
                let lh = build_line_graph(&h).unwrap();
                prop_assert_eq!(lg.len(), lh.len());

                let map: Vec<usize> = g
                    .links()
                    .iter()
                    .map(|l| {
                        h.links()
                            .iter()
                            .position(|m| m.tx == relabel(l.tx) && m.rx == relabel(l.rx))
                            .unwrap()
                    })
                    .collect();
                for i in 0..lg.len() {
                    prop_assert_eq!(lg.noise(i), lh.noise(map[i]));
                    for j in 0..lg.len() {
                        if i != j {
                            prop_assert_eq!(lg.w(i, j), lh.w(map[i], map[j]));
                        }
                    }
                }
            }
        }
    }
}
