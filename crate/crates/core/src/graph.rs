//! Chimera hardware graphs and random spin-glass instances on them.
//!
//! Qubit ids follow `((row * cols) + col) * 2L + partition * L + index`,
//! with the left partition numbered 0.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::IsingProblem;

/// Shape of a Chimera lattice plus the qubits that are unavailable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChimeraSpec {
    pub rows: usize,
    pub cols: usize,
    /// Qubits per half-cell.
    pub shore: usize,
    pub broken: BTreeSet<usize>,
}

impl ChimeraSpec {
    pub fn new(rows: usize, cols: usize, shore: usize) -> Self {
        Self {
            rows,
            cols,
            shore,
            broken: BTreeSet::new(),
        }
    }

    pub fn with_broken(mut self, broken: impl IntoIterator<Item = usize>) -> Self {
        self.broken.extend(broken);
        self
    }

    /// Total qubit slots, broken or not.
    pub fn num_slots(&self) -> usize {
        self.rows * self.cols * 2 * self.shore
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.shore == 0 {
            return Err(Error::validation(format!(
                "chimera dimensions must be positive, got {}x{}x{}",
                self.rows, self.cols, self.shore
            )));
        }
        if let Some(&bad) = self.broken.iter().find(|&&q| q >= self.num_slots()) {
            return Err(Error::validation(format!(
                "broken qubit {bad} out of range (max {})",
                self.num_slots() - 1
            )));
        }
        Ok(())
    }

    pub fn qubit_id(&self, coord: QubitCoord) -> usize {
        ((coord.row * self.cols) + coord.col) * 2 * self.shore
            + coord.partition.offset() * self.shore
            + coord.index
    }

    pub fn coord(&self, id: usize) -> QubitCoord {
        let cell = id / (2 * self.shore);
        let within = id % (2 * self.shore);
        QubitCoord {
            row: cell / self.cols,
            col: cell % self.cols,
            partition: if within < self.shore {
                Partition::Left
            } else {
                Partition::Right
            },
            index: within % self.shore,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Left,
    Right,
}

impl Partition {
    fn offset(self) -> usize {
        match self {
            Partition::Left => 0,
            Partition::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitCoord {
    pub row: usize,
    pub col: usize,
    pub partition: Partition,
    pub index: usize,
}

/// Undirected hardware graph over the id range `0..num_slots`.
///
/// Slots that are not nodes (broken qubits) have no edges.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareGraph {
    num_slots: usize,
    present: Vec<bool>,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    chimera: Option<ChimeraSpec>,
}

impl HardwareGraph {
    /// Generic graph with every slot present.
    pub fn from_edges(
        num_slots: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        Self::assemble(num_slots, vec![true; num_slots], edges, None)
    }

    fn assemble(
        num_slots: usize,
        present: Vec<bool>,
        edges: impl IntoIterator<Item = (usize, usize)>,
        chimera: Option<ChimeraSpec>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::validation(format!("self-edge on {a}")));
            }
            if a >= num_slots || b >= num_slots {
                return Err(Error::validation(format!("edge ({a}, {b}) out of range")));
            }
            if !present[a] || !present[b] {
                continue;
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); num_slots];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            num_slots,
            present,
            edges: set.into_iter().collect(),
            adjacency,
            chimera,
        })
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn num_nodes(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.present
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| p.then_some(i))
    }

    pub fn contains_node(&self, id: usize) -> bool {
        self.present.get(id).copied().unwrap_or(false)
    }

    /// Sorted `(u, v)` pairs with `u < v`; the canonical iteration order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.adjacency[id]
    }

    pub fn degree(&self, id: usize) -> usize {
        self.adjacency[id].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.num_slots && self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn chimera(&self) -> Option<&ChimeraSpec> {
        self.chimera.as_ref()
    }

    pub fn coord(&self, id: usize) -> Option<QubitCoord> {
        self.chimera.as_ref().map(|spec| spec.coord(id))
    }
}

/// Builds the Chimera graph for `spec`, dropping broken qubits and their edges.
pub fn build_chimera(spec: &ChimeraSpec) -> Result<HardwareGraph> {
    spec.validate()?;
    let l = spec.shore;
    let mut edges = Vec::new();
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            let id = |partition, index, row, col| {
                spec.qubit_id(QubitCoord {
                    row,
                    col,
                    partition,
                    index,
                })
            };
            for i in 0..l {
                for j in 0..l {
                    edges.push((
                        id(Partition::Left, i, row, col),
                        id(Partition::Right, j, row, col),
                    ));
                }
            }
            for k in 0..l {
                if row + 1 < spec.rows {
                    edges.push((
                        id(Partition::Left, k, row, col),
                        id(Partition::Left, k, row + 1, col),
                    ));
                }
                if col + 1 < spec.cols {
                    edges.push((
                        id(Partition::Right, k, row, col),
                        id(Partition::Right, k, row, col + 1),
                    ));
                }
            }
        }
    }
    let mut present = vec![true; spec.num_slots()];
    for &b in &spec.broken {
        present[b] = false;
    }
    HardwareGraph::assemble(spec.num_slots(), present, edges, Some(spec.clone()))
}

/// Draws `J` uniformly from `couplings` for every edge (in edge order) and then
/// `h` uniformly from `fields` for every node (in id order).
pub fn random_spin_glass(
    graph: &HardwareGraph,
    couplings: &[f64],
    fields: &[f64],
    seed: u64,
) -> Result<IsingProblem> {
    if couplings.is_empty() || fields.is_empty() {
        return Err(Error::validation(
            "coupling and field domains must be non-empty",
        ));
    }
    if graph.num_nodes() == 0 {
        return Err(Error::validation("graph has no nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let js: Vec<_> = graph
        .edges()
        .iter()
        .map(|&(a, b)| (a, b, couplings[rng.random_range(0..couplings.len())]))
        .collect();
    let mut h = vec![0.0; graph.num_slots()];
    for node in graph.nodes() {
        h[node] = fields[rng.random_range(0..fields.len())];
    }
    IsingProblem::new(h, js, 0.0)
}
