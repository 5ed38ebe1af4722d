//! Node placement, communication graph construction and topology CSV files.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio_model::{LinkGeometry, Point, RadioParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

impl Node {
    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// A directed link `tx -> rx` between two nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub id: usize,
    pub tx: usize,
    pub rx: usize,
    /// Cached Euclidean distance between the endpoints.
    pub length: f64,
}

impl Link {
    pub fn shares_node(&self, other: &Link) -> bool {
        self.tx == other.tx || self.tx == other.rx || self.rx == other.tx || self.rx == other.rx
    }
}

/// Places `n` nodes uniformly at random on `[0, side]^2`.
///
/// Uses ChaCha8 seeded through `seed_from_u64`, which is platform independent,
/// so a seed always reproduces the same coordinates bit for bit. A draw that
/// lands exactly on an existing node is discarded and redrawn.
pub fn generate_topology(n: usize, side: f64, seed: u64) -> Vec<Node> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes: Vec<Node> = Vec::with_capacity(n);
    while nodes.len() < n {
        let x = rng.gen_range(0.0..=side);
        let y = rng.gen_range(0.0..=side);
        if nodes.iter().any(|m| m.x == x && m.y == y) {
            continue;
        }
        nodes.push(Node {
            id: nodes.len(),
            x,
            y,
        });
    }
    nodes
}

/// Nodes, the links to be scheduled, and the radio they share.
#[derive(Debug, Clone)]
pub struct CommGraph {
    nodes: Vec<Node>,
    links: Vec<Link>,
    params: RadioParams,
}

/// Builds the directed communication graph: one link for every ordered pair of
/// distinct nodes no further apart than the communication range.
pub fn build_comm_graph(nodes: Vec<Node>, params: RadioParams) -> Result<CommGraph> {
    check_nodes(&nodes)?;
    let mut links = Vec::new();
    for a in &nodes {
        for b in &nodes {
            if a.id == b.id {
                continue;
            }
            let length = a.position().distance(&b.position());
            if params.within_range(length) {
                links.push(Link {
                    id: links.len(),
                    tx: a.id,
                    rx: b.id,
                    length,
                });
            }
        }
    }
    Ok(CommGraph {
        nodes,
        links,
        params,
    })
}

fn check_nodes(nodes: &[Node]) -> Result<()> {
    for (i, n) in nodes.iter().enumerate() {
        if n.id != i {
            return Err(Error::Contract(format!(
                "node at position {i} has id {}; ids must be contiguous from 0",
                n.id
            )));
        }
        if !(n.x.is_finite() && n.y.is_finite()) {
            return Err(Error::Contract(format!("node {i} has non-finite coordinates")));
        }
    }
    let mut sorted: Vec<&Node> = nodes.iter().collect();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    for w in sorted.windows(2) {
        if w[0].x == w[1].x && w[0].y == w[1].y {
            return Err(Error::DegenerateGeometry(format!(
                "nodes {} and {} share coordinates ({}, {})",
                w[0].id, w[1].id, w[0].x, w[0].y
            )));
        }
    }
    Ok(())
}

impl CommGraph {
    /// A graph over an explicit link list, e.g. a routing-selected subset or a
    /// load-expanded multigraph. Links are renumbered in the given order.
    /// Every link must join two distinct nodes within range.
    pub fn with_links(
        nodes: Vec<Node>,
        params: RadioParams,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<CommGraph> {
        check_nodes(&nodes)?;
        let mut links = Vec::new();
        for (tx, rx) in pairs {
            if tx >= nodes.len() || rx >= nodes.len() {
                return Err(Error::Contract(format!("link {tx}->{rx} names a missing node")));
            }
            if tx == rx {
                return Err(Error::Contract(format!("self-loop on node {tx}")));
            }
            let length = nodes[tx].position().distance(&nodes[rx].position());
            if !params.within_range(length) {
                return Err(Error::Contract(format!(
                    "link {tx}->{rx} of length {length} exceeds the communication range"
                )));
            }
            links.push(Link {
                id: links.len(),
                tx,
                rx,
                length,
            });
        }
        Ok(CommGraph {
            nodes,
            links,
            params,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn position(&self, node: usize) -> Point {
        self.nodes[node].position()
    }

    pub fn geometry(&self, link: usize) -> LinkGeometry {
        let l = &self.links[link];
        LinkGeometry::new(self.position(l.tx), self.position(l.rx))
    }

    /// In-degree plus out-degree of every node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for l in &self.links {
            deg[l.tx] += 1;
            deg[l.rx] += 1;
        }
        deg
    }

    pub fn write_links_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["link_id", "tx", "rx", "length_m"])?;
        for l in &self.links {
            wtr.serialize((l.id, l.tx, l.rx, l.length))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn write_topology<W: Write>(nodes: &[Node], w: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(["id", "x", "y"])?;
    for n in nodes {
        wtr.serialize(n)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_topology(nodes: &[Node], path: impl AsRef<Path>) -> Result<()> {
    write_topology(nodes, std::fs::File::create(path)?)
}

/// Reads a `id,x,y` topology. Rows may come in any order but the ids must be
/// exactly `0..n`; the result is sorted by id.
pub fn read_topology<R: Read>(r: R) -> Result<Vec<Node>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    if rdr.has_headers() {
        let headers = rdr.headers()?.clone();
        if headers.is_empty() {
            return Ok(Vec::new());
        }
        if headers.iter().collect::<Vec<_>>() != ["id", "x", "y"] {
            return Err(Error::parse(1, "expected header `id,x,y`"));
        }
    }
    let mut nodes: Vec<(u64, Node)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let node: Node = rec
            .deserialize(None)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        if !(node.x.is_finite() && node.y.is_finite()) {
            return Err(Error::parse(line, format!("node {} has non-finite coordinates", node.id)));
        }
        if let Some((first, _)) = nodes.iter().find(|(_, n)| n.id == node.id) {
            return Err(Error::parse(
                line,
                format!("duplicate node id {} (first seen on line {first})", node.id),
            ));
        }
        nodes.push((line, node));
    }
    nodes.sort_by_key(|(_, n)| n.id);
    for (i, (line, n)) in nodes.iter().enumerate() {
        if n.id != i {
            return Err(Error::parse(
                *line,
                format!("node ids must be contiguous from 0; missing id {i}"),
            ));
        }
    }
    Ok(nodes.into_iter().map(|(_, n)| n).collect())
}

pub fn load_topology(path: impl AsRef<Path>) -> Result<Vec<Node>> {
    read_topology(std::fs::File::open(path)?)
}
