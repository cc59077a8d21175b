//! Distributed coverage on a grid graph: agents sit on free cells, cover
//! their closed neighborhood, move at most one hop per update, and are
//! rewarded with the weight they alone cover.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::Game;

/// Hop radius of sensing and of one move.
pub const COVERAGE_RADIUS: u32 = 1;

/// Agents within this many hops are coupled.
pub const COUPLING_RADIUS: u32 = 4;

/// Free cells of a rectangular grid with 4-neighbor edges, node weights and
/// an all-pairs hop-distance table. Nodes are numbered in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    rows: usize,
    cols: usize,
    cell_node: Vec<Option<usize>>,
    coords: Vec<(usize, usize)>,
    weights: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    distances: Vec<u32>,
}

impl GridWorld {
    /// Builds a world from a row-major grid where `None` marks an obstacle.
    pub fn from_cells(rows: usize, cols: usize, cells: &[Option<f64>]) -> Result<Self> {
        if rows == 0 || cols == 0 || cells.len() != rows * cols {
            return Err(Error::Input(format!(
                "grid of {rows}x{cols} needs {} cells, got {}",
                rows * cols,
                cells.len()
            )));
        }
        let mut cell_node = vec![None; cells.len()];
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (cell, weight) in cells.iter().enumerate() {
            if let Some(w) = *weight {
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::Input(format!(
                        "cell ({}, {}) has invalid weight {w}",
                        cell / cols,
                        cell % cols
                    )));
                }
                cell_node[cell] = Some(coords.len());
                coords.push((cell / cols, cell % cols));
                weights.push(w);
            }
        }
        if coords.is_empty() {
            return Err(Error::Input("map has no free cells".into()));
        }
        let neighbors: Vec<Vec<usize>> = coords
            .iter()
            .map(|&(r, c)| {
                let mut adjacent = Vec::with_capacity(4);
                if r > 0 {
                    adjacent.push((r - 1, c));
                }
                if c > 0 {
                    adjacent.push((r, c - 1));
                }
                if c + 1 < cols {
                    adjacent.push((r, c + 1));
                }
                if r + 1 < rows {
                    adjacent.push((r + 1, c));
                }
                adjacent
                    .into_iter()
                    .filter_map(|(r, c)| cell_node[r * cols + c])
                    .collect()
            })
            .collect();

        let n = coords.len();
        let mut distances = vec![u32::MAX; n * n];
        for source in 0..n {
            for (node, d) in bfs(&neighbors, source).into_iter().enumerate() {
                distances[source * n + node] = d;
            }
        }
        let mut world = GridWorld {
            rows,
            cols,
            cell_node,
            coords,
            weights,
            neighbors,
            distances,
        };
        let components = world.components();
        if components.len() > 1 {
            return Err(Error::Disconnected {
                components: components
                    .iter()
                    .map(|nodes| nodes.iter().map(|&v| world.coords[v]).collect())
                    .collect(),
            });
        }
        world.neighbors.iter_mut().for_each(|adj| adj.sort_unstable());
        Ok(world)
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let members: Vec<usize> = (0..n)
                .filter(|&v| self.distances[start * n + v] != u32::MAX)
                .collect();
            members.iter().for_each(|&v| seen[v] = true);
            components.push(members);
        }
        components
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn weight(&self, node: usize) -> f64 {
        self.weights[node]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(row, column)` of a node.
    pub fn coordinate(&self, node: usize) -> (usize, usize) {
        self.coords[node]
    }

    pub fn node_at(&self, row: usize, col: usize) -> Option<usize> {
        if row < self.rows && col < self.cols {
            self.cell_node[row * self.cols + col]
        } else {
            None
        }
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    /// Hop distance between two nodes.
    pub fn distance(&self, from: usize, to: usize) -> u32 {
        self.distances[from * self.node_count() + to]
    }

    /// `{v : d(v, node) ≤ radius}` in ascending order.
    pub fn ball(&self, node: usize, radius: u32) -> Vec<usize> {
        let n = self.node_count();
        let row = &self.distances[node * n..(node + 1) * n];
        (0..n).filter(|&v| row[v] <= radius).collect()
    }

    /// Checks a deployment: every position must name a node.
    pub fn check_positions(&self, positions: &[usize]) -> Result<()> {
        match positions.iter().position(|&v| v >= self.node_count()) {
            Some(agent) => Err(Error::Input(format!(
                "agent {agent} sits on node {}, but the map has {} nodes",
                positions[agent],
                self.node_count()
            ))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for GridWorld {
    /// Writes the map in the text format accepted by [`parse_map`], with
    /// weights rounded to a single digit.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                match self.node_at(r, c) {
                    Some(v) => write!(f, "{}", self.weights[v].round() as u32)?,
                    None => f.write_str("#")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn bfs(neighbors: &[Vec<usize>], source: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; neighbors.len()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &neighbors[u] {
            if dist[v] == u32::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Parses a map: one line per grid row, `#` for an obstacle and a digit
/// `1`–`9` for a free cell of that weight. A single trailing newline is
/// allowed.
pub fn parse_map(text: &str) -> Result<GridWorld> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(Error::Parse {
            row: 0,
            column: 0,
            message: "empty map".into(),
        });
    }
    let lines: Vec<&str> = body.split('\n').collect();
    let cols = lines[0].chars().count();
    let mut cells = Vec::with_capacity(lines.len() * cols);
    for (row, line) in lines.iter().enumerate() {
        let width = line.chars().count();
        if width != cols {
            return Err(Error::Parse {
                row,
                column: width.min(cols),
                message: format!("row has {width} cells, expected {cols}"),
            });
        }
        for (column, ch) in line.chars().enumerate() {
            cells.push(match ch {
                '#' => None,
                '1'..='9' => Some(f64::from(ch as u8 - b'0')),
                other => {
                    return Err(Error::Parse {
                        row,
                        column,
                        message: format!("unexpected character {other:?}"),
                    })
                }
            });
        }
    }
    GridWorld::from_cells(lines.len(), cols, &cells)
}

/// Draws a connected map by shuffling cells with a ChaCha8 stream: the first
/// `obstacles` cells of the shuffle become obstacles. Shuffles repeat on the
/// same stream until the free space is connected.
///
/// With `smoothing == 0` each free cell gets a weight drawn uniformly from
/// `weights`. Otherwise a uniform random field over all cells is averaged
/// with its 4-neighbours `smoothing` times, and the free cells, ranked by
/// field value, are split into equal-size bands mapped to `weights` in the
/// given order.
pub fn generate_map(
    rows: usize,
    cols: usize,
    obstacles: usize,
    weights: &[u8],
    smoothing: usize,
    seed: u64,
) -> Result<String> {
    if obstacles >= rows * cols {
        return Err(Error::Parameter(format!(
            "{obstacles} obstacles leave no free cell on a {rows}x{cols} grid"
        )));
    }
    if weights.is_empty() || weights.iter().any(|w| !(1..=9).contains(w)) {
        return Err(Error::Parameter("map weights must be digits 1-9".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..rows * cols).collect();
    for _ in 0..10_000 {
        order.shuffle(&mut rng);
        let free = &order[obstacles..];
        let mut cells = vec![None; rows * cols];
        if smoothing == 0 {
            for &cell in free {
                cells[cell] = Some(f64::from(*weights.choose(&mut rng).expect("nonempty")));
            }
        } else {
            let field = smooth_field(rows, cols, smoothing, &mut rng);
            let mut ranked = free.to_vec();
            ranked.sort_by(|&a, &b| field[a].total_cmp(&field[b]));
            for (rank, &cell) in ranked.iter().enumerate() {
                cells[cell] = Some(f64::from(weights[rank * weights.len() / ranked.len()]));
            }
        }
        match GridWorld::from_cells(rows, cols, &cells) {
            Ok(world) => return Ok(world.to_string()),
            Err(Error::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Parameter(
        "no connected layout found in 10000 shuffles".into(),
    ))
}

fn smooth_field(rows: usize, cols: usize, passes: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut field: Vec<f64> = (0..rows * cols).map(|_| rng.gen()).collect();
    for _ in 0..passes {
        let old = field.clone();
        for r in 0..rows {
            for c in 0..cols {
                let mut sum = old[r * cols + c];
                let mut count = 1.0;
                let around = [
                    (r > 0).then(|| (r - 1) * cols + c),
                    (r + 1 < rows).then(|| (r + 1) * cols + c),
                    (c > 0).then(|| r * cols + c - 1),
                    (c + 1 < cols).then(|| r * cols + c + 1),
                ];
                for cell in around.into_iter().flatten() {
                    sum += old[cell];
                    count += 1.0;
                }
                field[r * cols + c] = sum / count;
            }
        }
    }
    field
}

/// `{v : d(v, a_i) ≤ 1}`.
pub fn covered_nodes(world: &GridWorld, positions: &[usize], agent: usize) -> Vec<usize> {
    world.ball(positions[agent], COVERAGE_RADIUS)
}

fn is_covered_by_other(world: &GridWorld, positions: &[usize], agent: usize, node: usize) -> bool {
    positions
        .iter()
        .enumerate()
        .any(|(j, &p)| j != agent && world.distance(p, node) <= COVERAGE_RADIUS)
}

/// Total weight of the nodes covered by at least one agent.
pub fn coverage_value(world: &GridWorld, positions: &[usize]) -> f64 {
    let mut covered = vec![false; world.node_count()];
    for &p in positions {
        covered[p] = true;
        for &v in world.neighbors(p) {
            covered[v] = true;
        }
    }
    covered
        .iter()
        .zip(world.weights())
        .filter(|(c, _)| **c)
        .map(|(_, w)| w)
        .sum()
}

/// Weight of the nodes covered by `agent` and by no other agent.
pub fn agent_utility(world: &GridWorld, positions: &[usize], agent: usize) -> f64 {
    let here = positions[agent];
    std::iter::once(here)
        .chain(world.neighbors(here).iter().copied())
        .filter(|&v| !is_covered_by_other(world, positions, agent, v))
        .map(|v| world.weight(v))
        .sum()
}

/// Stay put or move to an adjacent node.
pub fn constrained_actions(world: &GridWorld, positions: &[usize], agent: usize) -> Vec<usize> {
    world.ball(positions[agent], COVERAGE_RADIUS)
}

/// Agents within four hops of `agent`, including itself.
pub fn coupling(world: &GridWorld, positions: &[usize], agent: usize) -> Vec<usize> {
    let here = positions[agent];
    (0..positions.len())
        .filter(|&j| world.distance(here, positions[j]) <= COUPLING_RADIUS)
        .collect()
}

/// The coverage game of `agents` agents on a shared world. Every agent's
/// action set is the node set.
#[derive(Debug, Clone)]
pub struct CoverageGame {
    world: Arc<GridWorld>,
    agents: usize,
}

impl CoverageGame {
    pub fn new(world: impl Into<Arc<GridWorld>>, agents: usize) -> Result<Self> {
        if agents == 0 {
            return Err(Error::Parameter("coverage game needs at least one agent".into()));
        }
        Ok(CoverageGame {
            world: world.into(),
            agents,
        })
    }

    pub fn world(&self) -> &GridWorld {
        &self.world
    }
}

impl Game for CoverageGame {
    fn agent_count(&self) -> usize {
        self.agents
    }

    fn action_count(&self, _agent: usize) -> usize {
        self.world.node_count()
    }

    fn utility(&self, agent: usize, profile: &[usize]) -> f64 {
        agent_utility(&self.world, profile, agent)
    }

    fn constraint(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        constrained_actions(&self.world, profile, agent)
    }

    fn coupling(&self, agent: usize, profile: &[usize]) -> Vec<usize> {
        coupling(&self.world, profile, agent)
    }

    fn potential(&self, profile: &[usize]) -> Option<f64> {
        Some(coverage_value(&self.world, profile))
    }

    fn has_potential(&self) -> bool {
        true
    }
}

/// Best deployment of `agents` agents, found by branch and bound over sets of
/// distinct nodes. The bound adds the largest remaining marginal gains, which
/// is valid because coverage is submodular.
pub fn max_coverage(world: &GridWorld, agents: usize) -> (f64, Vec<usize>) {
    let n = world.node_count();
    let distinct = agents.min(n);
    let balls: Vec<Vec<usize>> = (0..n).map(|v| world.ball(v, COVERAGE_RADIUS)).collect();

    struct Search<'a> {
        world: &'a GridWorld,
        balls: &'a [Vec<usize>],
        covered: Vec<u32>,
        chosen: Vec<usize>,
        best: f64,
        best_set: Vec<usize>,
    }

    impl Search<'_> {
        fn gain(&self, v: usize) -> f64 {
            self.balls[v]
                .iter()
                .filter(|&&u| self.covered[u] == 0)
                .map(|&u| self.world.weight(u))
                .sum()
        }

        fn place(&mut self, v: usize, delta: i32) {
            for &u in &self.balls[v] {
                self.covered[u] = self.covered[u].wrapping_add_signed(delta);
            }
        }

        fn run_over(&mut self, candidates: &[usize], left: usize, value: f64) {
            if value > self.best {
                self.best = value;
                self.best_set = self.chosen.clone();
            }
            if left == 0 || candidates.is_empty() {
                return;
            }
            let mut gains: Vec<(f64, usize)> = candidates.iter().map(|&v| (self.gain(v), v)).collect();
            gains.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for k in 0..gains.len() {
                let optimistic: f64 = gains[k..].iter().take(left).map(|g| g.0).sum();
                if value + optimistic <= self.best {
                    break;
                }
                let (gain, v) = gains[k];
                // later candidates only, so each set is visited once
                self.place(v, 1);
                self.chosen.push(v);
                let rest: Vec<usize> = gains[k + 1..].iter().map(|g| g.1).collect();
                self.run_over(&rest, left - 1, value + gain);
                self.chosen.pop();
                self.place(v, -1);
            }
        }
    }

    let mut search = Search {
        world,
        balls: &balls,
        covered: vec![0; n],
        chosen: Vec::with_capacity(distinct),
        best: f64::NEG_INFINITY,
        best_set: Vec::new(),
    };
    let all: Vec<usize> = (0..n).collect();
    search.run_over(&all, distinct, 0.0);
    let mut deployment = search.best_set;
    deployment.sort_unstable();
    while deployment.len() < agents {
        deployment.push(deployment[0]);
    }
    (search.best, deployment)
}
