//! Exact balanced optimal transport (earth mover's distance) by the
//! transportation simplex method, plus the word mover's distance built on
//! it.
//!
//! The basis is kept as a spanning tree of `m + n - 1` cells over the
//! bipartite row/column graph. Degenerate (zero-flow) basic cells stay in
//! the tree, so every pivot is well defined. Entering and leaving cells
//! follow Bland's rule (lowest row-major index), which rules out cycling.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{euclidean, WordDistribution};
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum TransportError {
    #[error("invalid transport problem: {0}")]
    InvalidProblem(String),
    #[error("simplex did not terminate within {0} pivots")]
    NumericalFailure(usize),
}

/// Balanced transportation problem with unit total mass on both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportProblem<T> {
    pub supply: Vec<T>,
    pub demand: Vec<T>,
    /// `cost[i][j]` for moving mass from supply `i` to demand `j`.
    pub cost: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow<T> {
    pub from: usize,
    pub to: usize,
    pub mass: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan<T> {
    /// Positive flows in row-major order.
    pub flows: Vec<Flow<T>>,
    pub objective: T,
}

impl<T: Scalar> TransportPlan<T> {
    pub fn row_sums(&self, m: usize) -> Vec<T> {
        let mut sums = vec![T::zero(); m];
        for f in &self.flows {
            sums[f.from] = sums[f.from] + f.mass;
        }
        sums
    }

    pub fn column_sums(&self, n: usize) -> Vec<T> {
        let mut sums = vec![T::zero(); n];
        for f in &self.flows {
            sums[f.to] = sums[f.to] + f.mass;
        }
        sums
    }
}

impl<T: Scalar> TransportProblem<T> {
    /// Problem between two weighted point sets with Euclidean ground cost.
    pub fn euclidean(a: &WordDistribution<T>, b: &WordDistribution<T>) -> Self {
        let cost = a
            .points
            .iter()
            .map(|(p, _)| b.points.iter().map(|(q, _)| euclidean(p, q)).collect())
            .collect();
        TransportProblem {
            supply: a.points.iter().map(|(_, w)| *w).collect(),
            demand: b.points.iter().map(|(_, w)| *w).collect(),
            cost,
        }
    }

    fn mass_tolerance() -> T {
        T::of(1e-9).max(T::epsilon() * T::of(1e3))
    }

    pub fn validate(&self) -> Result<(), TransportError> {
        let invalid = |msg: String| Err(TransportError::InvalidProblem(msg));
        let (m, n) = (self.supply.len(), self.demand.len());
        if m == 0 || n == 0 {
            return invalid("supply and demand must be non-empty".into());
        }
        if self.cost.len() != m || self.cost.iter().any(|row| row.len() != n) {
            return invalid(format!("cost matrix must be {m}x{n}"));
        }
        if self
            .cost
            .iter()
            .flatten()
            .any(|c| !c.is_finite() || *c < T::zero())
        {
            return invalid("costs must be finite and non-negative".into());
        }
        for (name, weights) in [("supply", &self.supply), ("demand", &self.demand)] {
            if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
                return invalid(format!("{name} weights must be finite and non-negative"));
            }
            let total: T = weights.iter().copied().sum();
            if (total - T::one()).abs() > Self::mass_tolerance() {
                return invalid(format!("{name} sums to {total}, expected 1"));
            }
        }
        Ok(())
    }
}

struct Basis<T> {
    m: usize,
    n: usize,
    flow: Vec<T>,
    is_basic: Vec<bool>,
    cells: Vec<usize>,
}

impl<T: Scalar> Basis<T> {
    /// North-west corner start. Produces exactly `m + n - 1` basic cells
    /// forming a staircase, zero-flow cells included.
    fn north_west(supply: &[T], demand: &[T]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut basis = Basis {
            m,
            n,
            flow: vec![T::zero(); m * n],
            is_basic: vec![false; m * n],
            cells: Vec::with_capacity(m + n - 1),
        };
        let (mut i, mut j) = (0, 0);
        loop {
            let x = s[i].min(d[j]).max(T::zero());
            let cell = i * n + j;
            basis.flow[cell] = x;
            basis.is_basic[cell] = true;
            basis.cells.push(cell);
            s[i] = s[i] - x;
            d[j] = d[j] - x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || s[i] <= d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        basis
    }

    /// Row nodes are `0..m`, column nodes `m..m+n`. Returns adjacency lists
    /// of (neighbour node, cell).
    fn tree(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for &cell in &self.cells {
            let (i, j) = (cell / self.n, cell % self.n);
            adj[i].push((self.m + j, cell));
            adj[self.m + j].push((i, cell));
        }
        adj
    }

    fn potentials(&self, cost: &[Vec<T>], adj: &[Vec<(usize, usize)>]) -> (Vec<T>, Vec<T>) {
        let mut u = vec![T::zero(); self.m];
        let mut v = vec![T::zero(); self.n];
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(node) = queue.pop_front() {
            for &(next, cell) in &adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let (i, j) = (cell / self.n, cell % self.n);
                if next >= self.m {
                    v[j] = cost[i][j] - u[i];
                } else {
                    u[i] = cost[i][j] - v[j];
                }
                queue.push_back(next);
            }
        }
        (u, v)
    }

    /// Cells on the tree path from row `i` to column `j`, in path order.
    fn path(&self, adj: &[Vec<(usize, usize)>], i: usize, j: usize) -> Vec<usize> {
        let target = self.m + j;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        let mut queue = VecDeque::from([i]);
        seen[i] = true;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &(next, cell) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, cell));
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = target;
        while let Some((prev, cell)) = parent[node] {
            cells.push(cell);
            node = prev;
        }
        cells.reverse();
        cells
    }
}

/// Solves the transportation problem exactly.
pub fn emd<T: Scalar>(problem: &TransportProblem<T>) -> Result<TransportPlan<T>, TransportError> {
    problem.validate()?;
    let (m, n) = (problem.supply.len(), problem.demand.len());
    let cost = &problem.cost;

    // Rescale demand onto the supply total so both marginals balance exactly.
    let supply_total: T = problem.supply.iter().copied().sum();
    let demand_total: T = problem.demand.iter().copied().sum();
    let demand: Vec<T> = problem
        .demand
        .iter()
        .map(|&d| d * supply_total / demand_total)
        .collect();

    let mut basis = Basis::north_west(&problem.supply, &demand);
    let max_cost = cost
        .iter()
        .flatten()
        .fold(T::zero(), |acc, &c| acc.max(c));
    let tolerance = T::epsilon() * T::of(1e4) * (T::one() + max_cost);
    let max_pivots = 100_000 + 10 * m * n * (m + n);

    for _ in 0..max_pivots {
        let adj = basis.tree();
        let (u, v) = basis.potentials(cost, &adj);
        let entering = (0..m * n).find(|&cell| {
            let (i, j) = (cell / n, cell % n);
            !basis.is_basic[cell] && cost[i][j] - u[i] - v[j] < -tolerance
        });
        let Some(entering) = entering else {
            return Ok(extract_plan(&basis, cost));
        };
        let (ei, ej) = (entering / n, entering % n);
        let path = basis.path(&adj, ei, ej);
        // path cells alternate donor (-), receiver (+), ..., donor (-)
        let donors = path.iter().step_by(2).copied();
        let (leaving, theta) = donors
            .map(|cell| (cell, basis.flow[cell]))
            .min_by(|a, b| {
                a.1.partial_cmp(&b.1)
                    .expect("flows are finite")
                    .then(a.0.cmp(&b.0))
            })
            .expect("cycle has a donor cell");
        for (k, &cell) in path.iter().enumerate() {
            basis.flow[cell] = if k % 2 == 0 {
                basis.flow[cell] - theta
            } else {
                basis.flow[cell] + theta
            };
        }
        basis.flow[entering] = theta;
        basis.flow[leaving] = T::zero();
        basis.is_basic[leaving] = false;
        basis.is_basic[entering] = true;
        let slot = basis
            .cells
            .iter()
            .position(|&c| c == leaving)
            .expect("leaving cell is basic");
        basis.cells[slot] = entering;
    }
    Err(TransportError::NumericalFailure(max_pivots))
}

fn extract_plan<T: Scalar>(basis: &Basis<T>, cost: &[Vec<T>]) -> TransportPlan<T> {
    let mut cells = basis.cells.clone();
    cells.sort_unstable();
    let mut objective = T::zero();
    let mut flows = Vec::new();
    for cell in cells {
        let mass = basis.flow[cell];
        if mass > T::zero() {
            let (i, j) = (cell / basis.n, cell % basis.n);
            objective = objective + mass * cost[i][j];
            flows.push(Flow {
                from: i,
                to: j,
                mass,
            });
        }
    }
    TransportPlan { flows, objective }
}

/// Word mover's distance: optimal transport cost between the two
/// distributions under Euclidean ground distance.
pub fn wmd<T: Scalar>(a: &WordDistribution<T>, b: &WordDistribution<T>) -> Result<T, TransportError> {
    Ok(emd(&TransportProblem::euclidean(a, b))?.objective)
}

/// Word centroid distance, a lower bound on [`wmd`].
pub fn wcd_lower_bound<T: Scalar>(a: &WordDistribution<T>, b: &WordDistribution<T>) -> T {
    euclidean(&a.mean(), &b.mean())
}
