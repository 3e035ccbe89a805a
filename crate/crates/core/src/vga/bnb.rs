//! Exact set partitioning: every row covered by exactly one selected column.
//!
//! [`ExactSolver`] is the backend interface; [`BranchAndBound`] is the
//! built-in implementation using LP relaxations for bounds.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use log::debug;
use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use thiserror::Error;

const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    /// Rows covered, each at most once.
    pub rows: Vec<usize>,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionProblem {
    pub n_rows: usize,
    pub columns: Vec<Column>,
}

impl PartitionProblem {
    /// Whether `selected` covers every row exactly once.
    pub fn is_partition(&self, selected: &[usize]) -> bool {
        let mut covered = vec![0u32; self.n_rows];
        for &c in selected {
            for &r in &self.columns[c].rows {
                covered[r] += 1;
            }
        }
        covered.iter().all(|&k| k == 1)
    }

    pub fn cost_of(&self, selected: &[usize]) -> u64 {
        selected.iter().map(|&c| self.columns[c].cost).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSolution {
    /// Selected column indices, ascending.
    pub selected: Vec<usize>,
    pub cost: u64,
    pub proven_optimal: bool,
    /// Best proven lower bound on the optimum.
    pub lower_bound: u64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("no exact partition exists")]
    Infeasible,
    #[error("time limit reached before any partition was found")]
    Timeout,
    #[error("LP relaxation failed: {0}")]
    Lp(String),
}

/// Backend that solves a [`PartitionProblem`] to proven optimality.
pub trait ExactSolver: Sync {
    /// `incumbent`, when given, must be a valid partition.
    /// On reaching `deadline` the best partition found so far is returned with
    /// `proven_optimal == false`.
    fn solve(
        &self,
        problem: &PartitionProblem,
        incumbent: Option<&[usize]>,
        deadline: Option<Instant>,
    ) -> Result<PartitionSolution, PartitionError>;
}

/// LP-based branch and bound. Branches on pairs of rows that are covered
/// together or apart, diving after each branching and otherwise taking the
/// open node with the best bound. Large problems drop columns whose reduced
/// cost rules them out of any partition cheaper than the incumbent.
#[derive(Debug, Clone, Copy, Default)]
pub struct BranchAndBound;

struct Node {
    lower_bound: u64,
    depth: usize,
    seq: usize,
    decisions: Vec<Decision>,
}

#[derive(Debug, Clone, Copy)]
enum Decision {
    /// Rows covered by the same selected column.
    Together(usize, usize),
    /// Rows covered by different selected columns.
    Apart(usize, usize),
    Fix(usize, f64),
}

fn covers(col: &Column, row: usize) -> bool {
    col.rows.contains(&row)
}

/// Column bounds implied by a decision.
fn fixings(
    problem: &PartitionProblem,
    by_row: &[Vec<usize>],
    decision: Decision,
) -> Vec<(usize, f64)> {
    match decision {
        Decision::Together(a, b) => {
            let only = |x: usize, y: usize| {
                by_row[x]
                    .iter()
                    .copied()
                    .filter(move |&c| !covers(&problem.columns[c], y))
            };
            only(a, b).chain(only(b, a)).map(|c| (c, 0.0)).collect()
        }
        Decision::Apart(a, b) => by_row[a]
            .iter()
            .copied()
            .filter(|&c| covers(&problem.columns[c], b))
            .map(|c| (c, 0.0))
            .collect(),
        Decision::Fix(c, value) => vec![(c, value)],
    }
}

/// Row pair whose joint coverage is most fractional.
fn branching_pair(problem: &PartitionProblem, values: &[f64]) -> Option<(usize, usize)> {
    let mut joint: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (c, &x) in values.iter().enumerate() {
        if x > INTEGRALITY_TOL && x < 1.0 - INTEGRALITY_TOL {
            let rows = &problem.columns[c].rows;
            for (i, &a) in rows.iter().enumerate() {
                for &b in &rows[i + 1..] {
                    *joint.entry((a.min(b), a.max(b))).or_default() += x;
                }
            }
        }
    }
    joint
        .into_iter()
        .filter(|&(_, s)| s > INTEGRALITY_TOL && s < 1.0 - INTEGRALITY_TOL)
        .min_by(|(_, s), (_, t)| (s - 0.5).abs().total_cmp(&(t - 0.5).abs()))
        .map(|(pair, _)| pair)
}

impl Node {
    fn key(&self) -> (Reverse<u64>, usize, Reverse<usize>) {
        (Reverse(self.lower_bound), self.depth, Reverse(self.seq))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

fn lp_err(e: minilp::Error) -> PartitionError {
    PartitionError::Lp(e.to_string())
}

/// Integer lower bound implied by an LP objective over integer costs.
fn integer_bound(objective: f64) -> u64 {
    (objective - INTEGRALITY_TOL).ceil().max(0.0) as u64
}

impl ExactSolver for BranchAndBound {
    fn solve(
        &self,
        problem: &PartitionProblem,
        incumbent: Option<&[usize]>,
        deadline: Option<Instant>,
    ) -> Result<PartitionSolution, PartitionError> {
        let (kept, incumbent, cutoff, nodes) = match search(problem, incumbent, deadline)? {
            Search::Finished(solution) => return Ok(solution),
            Search::Reduced {
                kept,
                incumbent,
                cutoff,
                nodes,
            } => (kept, incumbent, cutoff, nodes),
        };
        let (s, selected) = solve_restricted(problem, &kept, &incumbent, deadline)?;
        let lower_bound = if s.proven_optimal {
            s.cost
        } else {
            s.lower_bound.min(cutoff)
        };
        Ok(PartitionSolution {
            selected,
            nodes: nodes + s.nodes,
            lower_bound,
            ..s
        })
    }
}

/// Solves `problem` over the `kept` columns (ascending), which contain
/// `incumbent`. The selection is returned in the original column indices.
fn solve_restricted(
    problem: &PartitionProblem,
    kept: &[usize],
    incumbent: &[usize],
    deadline: Option<Instant>,
) -> Result<(PartitionSolution, Vec<usize>), PartitionError> {
    let sub = PartitionProblem {
        n_rows: problem.n_rows,
        columns: kept.iter().map(|&c| problem.columns[c].clone()).collect(),
    };
    let mapped: Vec<usize> = incumbent
        .iter()
        .map(|c| kept.binary_search(c).expect("incumbent columns are kept"))
        .collect();
    let s = BranchAndBound.solve(&sub, Some(&mapped), deadline)?;
    let mut selected: Vec<usize> = s.selected.iter().map(|&i| kept[i]).collect();
    selected.sort_unstable();
    Ok((s, selected))
}

/// Problems with fewer columns are searched without reduced-cost filtering.
const REDUCE_MIN_COLUMNS: usize = 1000;

/// Columns per row in the restricted problem searched for a better incumbent.
const HEURISTIC_COLUMNS_PER_ROW: usize = 10;

/// Best partition over the incumbent and the columns of least reduced cost,
/// if it beats the incumbent. With a deadline it gets a fifth of the time left.
fn restricted_incumbent(
    problem: &PartitionProblem,
    dual: &DualPrices,
    incumbent: &[usize],
    cost: u64,
    deadline: Option<Instant>,
) -> Option<(u64, Vec<usize>)> {
    let k = HEURISTIC_COLUMNS_PER_ROW * problem.n_rows;
    if 2 * k >= problem.columns.len() {
        return None;
    }
    let d = &dual.reduced_costs;
    let mut order: Vec<usize> = (0..problem.columns.len()).collect();
    order.select_nth_unstable_by(k, |&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut kept = order[..k].to_vec();
    kept.extend_from_slice(incumbent);
    kept.sort_unstable();
    kept.dedup();
    let budget = deadline.map(|d| {
        let now = Instant::now();
        now + d.saturating_duration_since(now) / 5
    });
    let (s, selected) = solve_restricted(problem, &kept, incumbent, budget).ok()?;
    debug!(
        "restricted problem over {} columns: {} (incumbent {cost})",
        kept.len(),
        s.cost
    );
    (s.cost < cost).then_some((s.cost, selected))
}

enum Search {
    Finished(PartitionSolution),
    /// Any partition cheaper than `cutoff` uses only `kept` columns (ascending),
    /// which include the `incumbent` partition of cost `cutoff`.
    Reduced {
        kept: Vec<usize>,
        incumbent: Vec<usize>,
        cutoff: u64,
        nodes: usize,
    },
}

/// A feasible solution of the dual LP `max sum(y) s.t. sum(y[r] for r in col) <= cost(col)`.
struct DualPrices {
    reduced_costs: Vec<f64>,
    /// Lower bound on the cost of every partition, before adding reduced costs.
    base: f64,
}

impl DualPrices {
    /// Columns that may appear in a partition of cost below `cutoff`, plus `incumbent`.
    fn kept(&self, cutoff: u64, incumbent: &[usize]) -> Vec<usize> {
        let limit = cutoff as f64 - 1.0 + 1e-4 + 1e-9 * cutoff as f64;
        let mut kept: Vec<usize> = (0..self.reduced_costs.len())
            .filter(|&c| self.base + self.reduced_costs[c] <= limit)
            .collect();
        kept.extend_from_slice(incumbent);
        kept.sort_unstable();
        kept.dedup();
        kept
    }
}

/// Dual prices by row generation, starting from the columns in `support`,
/// which must contain a feasible partition of the LP relaxation.
fn dual_prices(
    problem: &PartitionProblem,
    support: &[usize],
    deadline: Option<Instant>,
) -> Option<DualPrices> {
    const BATCH: usize = 500;
    if problem.columns.iter().any(|c| c.rows.is_empty()) {
        return None;
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    // Any box keeps the prices feasible; this one is wide enough not to bind.
    let bound = problem.columns.iter().map(|c| c.cost).max().unwrap_or(0) as f64
        * problem.n_rows as f64
        + 1.0;
    let y: Vec<Variable> = (0..problem.n_rows)
        .map(|_| lp.add_var(1.0, (-bound, bound)))
        .collect();
    let expr = |c: usize| {
        problem.columns[c]
            .rows
            .iter()
            .map(|&r| (y[r], 1.0))
            .collect::<Vec<_>>()
    };
    let mut added = vec![false; problem.columns.len()];
    for &c in support {
        lp.add_constraint(expr(c), ComparisonOp::Le, problem.columns[c].cost as f64);
        added[c] = true;
    }
    let mut solution = lp.solve().ok()?;
    loop {
        let prices: Vec<f64> = y.iter().map(|&v| *solution.var_value(v)).collect();
        let reduced_costs: Vec<f64> = problem
            .columns
            .iter()
            .map(|c| c.cost as f64 - c.rows.iter().map(|&r| prices[r]).sum::<f64>())
            .collect();
        let mut violated: Vec<usize> = (0..reduced_costs.len())
            .filter(|&c| !added[c] && reduced_costs[c] < -1e-7)
            .collect();
        if violated.is_empty() {
            // Every partition has at most `n_rows` columns, so residual violations
            // weaken the bound by at most that many times the worst one.
            let worst = reduced_costs.iter().fold(0.0f64, |m, &d| m.min(d));
            let base = prices.iter().sum::<f64>() + problem.n_rows as f64 * worst;
            if !base.is_finite() || reduced_costs.iter().any(|d| !d.is_finite()) {
                return None;
            }
            return Some(DualPrices {
                reduced_costs,
                base,
            });
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return None;
        }
        violated.sort_by(|&a, &b| reduced_costs[a].total_cmp(&reduced_costs[b]));
        for &c in violated.iter().take(BATCH) {
            solution = solution
                .add_constraint(expr(c), ComparisonOp::Le, problem.columns[c].cost as f64)
                .ok()?;
            added[c] = true;
        }
    }
}

/// Column bounds after `decisions`, or `None` when they contradict each other.
fn column_bounds(
    problem: &PartitionProblem,
    by_row: &[Vec<usize>],
    decisions: &[Decision],
) -> Option<Vec<(f64, f64)>> {
    let mut bounds = vec![(0.0, 1.0); problem.columns.len()];
    for &decision in decisions {
        for (c, value) in fixings(problem, by_row, decision) {
            let (lo, hi) = bounds[c];
            if value < lo || value > hi {
                return None;
            }
            bounds[c] = (value, value);
        }
    }
    Some(bounds)
}

/// LP relaxation with the given column bounds; `None` when infeasible.
fn relaxation(
    problem: &PartitionProblem,
    bounds: &[(f64, f64)],
) -> Result<Option<(Vec<Variable>, minilp::Solution)>, PartitionError> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Variable> = problem
        .columns
        .iter()
        .zip(bounds)
        .map(|(c, &b)| lp.add_var(c.cost as f64, b))
        .collect();
    let mut rows: Vec<LinearExpr> = (0..problem.n_rows).map(|_| LinearExpr::empty()).collect();
    for (c, col) in problem.columns.iter().enumerate() {
        for &r in &col.rows {
            rows[r].add(vars[c], 1.0);
        }
    }
    for expr in rows {
        lp.add_constraint(expr, ComparisonOp::Eq, 1.0);
    }
    match lp.solve() {
        Ok(s) => Ok(Some((vars, s))),
        Err(minilp::Error::Infeasible) => Ok(None),
        Err(e) => Err(lp_err(e)),
    }
}

fn search(
    problem: &PartitionProblem,
    incumbent: Option<&[usize]>,
    deadline: Option<Instant>,
) -> Result<Search, PartitionError> {
    let mut best: Option<(u64, Vec<usize>)> = incumbent.map(|sel| {
        debug_assert!(problem.is_partition(sel));
        let mut sel = sel.to_vec();
        sel.sort_unstable();
        (problem.cost_of(&sel), sel)
    });

    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); problem.n_rows];
    for (c, col) in problem.columns.iter().enumerate() {
        for &r in &col.rows {
            by_row[r].push(c);
        }
    }
    let mut prices: Option<Option<DualPrices>> = None;
    if problem.columns.len() >= REDUCE_MIN_COLUMNS {
        if let Some((cost, selected)) = best.clone() {
            let dual = dual_prices(problem, &selected, deadline);
            if let Some(dual) = &dual {
                if let Some(better) = restricted_incumbent(problem, dual, &selected, cost, deadline)
                {
                    best = Some(better);
                }
                let (cost, selected) = best.as_ref().expect("incumbent");
                let kept = dual.kept(*cost, selected);
                debug!(
                    "incumbent {cost}: {} of {} columns can improve on it",
                    kept.len(),
                    problem.columns.len()
                );
                if 2 * kept.len() <= problem.columns.len() {
                    return Ok(Search::Reduced {
                        kept,
                        incumbent: selected.clone(),
                        cutoff: *cost,
                        nodes: 0,
                    });
                }
            }
            if dual.is_some() {
                prices = Some(dual);
            }
        }
    }

    let started = Instant::now();
    let Some((vars, root)) = relaxation(problem, &vec![(0.0, 1.0); problem.columns.len()])? else {
        return Err(PartitionError::Infeasible);
    };
    debug!(
        "root LP over {} columns: {:.2} in {:?}",
        problem.columns.len(),
        root.objective(),
        started.elapsed()
    );

    let support: Vec<usize> = (0..vars.len())
        .filter(|&c| *root.var_value(vars[c]) > INTEGRALITY_TOL)
        .collect();
    let reduce =
        |prices: &mut Option<Option<DualPrices>>, cost: u64, selected: &[usize], nodes: usize| {
            if problem.columns.len() < REDUCE_MIN_COLUMNS {
                return None;
            }
            let dual = prices
                .get_or_insert_with(|| dual_prices(problem, &support, deadline))
                .as_ref()?;
            let kept = dual.kept(cost, selected);
            debug!(
                "incumbent {cost}: {} of {} columns can improve on it",
                kept.len(),
                problem.columns.len()
            );
            (2 * kept.len() <= problem.columns.len()).then(|| Search::Reduced {
                kept,
                incumbent: selected.to_vec(),
                cutoff: cost,
                nodes,
            })
        };
    if let Some((cost, selected)) = &best {
        if let Some(reduced) = reduce(&mut prices, *cost, selected, 0) {
            return Ok(reduced);
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        lower_bound: integer_bound(root.objective()),
        depth: 0,
        seq: 0,
        decisions: Vec::new(),
    });
    let mut seq = 1;
    let mut nodes = 0;
    let mut timed_out = false;

    let expired = || deadline.is_some_and(|d| Instant::now() >= d);
    // Applies decisions to an LP solution; `Ok(None)` when infeasible,
    // `Err(None)` on reaching the deadline.
    // Solves a node from scratch.
    let rebuild = |decisions: &[Decision]| match column_bounds(problem, &by_row, decisions) {
        Some(bounds) => relaxation(problem, &bounds).map(|r| r.map(|(_, s)| s)),
        None => Ok(None),
    };
    // After branching, the first child is solved next from its parent's LP;
    // other nodes are rebuilt in best-bound order.
    let mut dive: Option<(Node, minilp::Solution)> = None;
    loop {
        let (node, relaxed) = match dive.take() {
            Some((node, parent)) => {
                if expired() {
                    heap.push(node);
                    timed_out = true;
                    break;
                }
                let (last, earlier) = node
                    .decisions
                    .split_last()
                    .expect("child node has a decision");
                let mut relaxed = Some(parent);
                for (c, value) in fixings(problem, &by_row, *last) {
                    let Some(s) = relaxed.take() else { break };
                    // An infeasible bound change is confirmed from scratch:
                    // incremental updates can misreport degenerate bases.
                    relaxed = s.fix_var(vars[c], value).ok();
                }
                let conflict = column_bounds(problem, &by_row, earlier).is_some_and(|bounds| {
                    fixings(problem, &by_row, *last)
                        .iter()
                        .any(|&(c, v)| !(bounds[c].0..=bounds[c].1).contains(&v))
                });
                match relaxed {
                    Some(s) if !conflict => (node, s),
                    _ => match rebuild(&node.decisions)? {
                        Some(s) => (node, s),
                        None => continue,
                    },
                }
            }
            None => {
                let Some(node) = heap.pop() else { break };
                if best
                    .as_ref()
                    .is_some_and(|(cost, _)| node.lower_bound >= *cost)
                {
                    // Best-bound order: nothing left can improve on the incumbent.
                    heap.clear();
                    break;
                }
                if expired() {
                    heap.push(node);
                    timed_out = true;
                    break;
                }
                match rebuild(&node.decisions)? {
                    Some(s) => (node, s),
                    None => continue,
                }
            }
        };
        nodes += 1;
        let lower_bound = integer_bound(relaxed.objective());
        if best.as_ref().is_some_and(|(cost, _)| lower_bound >= *cost) {
            continue;
        }

        let values: Vec<f64> = vars.iter().map(|&v| *relaxed.var_value(v)).collect();
        let split = match branching_pair(problem, &values) {
            Some((a, b)) => Some((Decision::Together(a, b), Decision::Apart(a, b))),
            None => values
                .iter()
                .enumerate()
                .map(|(c, &x)| (c, x.min(1.0 - x)))
                .filter(|&(_, frac)| frac > INTEGRALITY_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(c, _)| (Decision::Fix(c, 1.0), Decision::Fix(c, 0.0))),
        };
        match split {
            None => {
                let selected: Vec<usize> = (0..vars.len()).filter(|&c| values[c] > 0.5).collect();
                if !problem.is_partition(&selected) {
                    return Err(PartitionError::Lp(
                        "integral LP point is not a partition".into(),
                    ));
                }
                let cost = problem.cost_of(&selected);
                if best.as_ref().map_or(true, |(b, _)| cost < *b) {
                    if let Some(reduced) = reduce(&mut prices, cost, &selected, nodes) {
                        return Ok(reduced);
                    }
                    best = Some((cost, selected));
                }
            }
            Some((first, second)) => {
                let child = |decision: Decision, seq: usize| {
                    let mut decisions = node.decisions.clone();
                    decisions.push(decision);
                    Node {
                        lower_bound,
                        depth: node.depth + 1,
                        seq,
                        decisions,
                    }
                };
                heap.push(child(second, seq));
                dive = Some((child(first, seq + 1), relaxed));
                seq += 2;
            }
        }
    }

    let (cost, selected) = match best {
        Some(b) => b,
        None if timed_out => return Err(PartitionError::Timeout),
        None => return Err(PartitionError::Infeasible),
    };
    let lower_bound = heap
        .iter()
        .map(|n| n.lower_bound)
        .min()
        .map_or(cost, |b| b.min(cost));
    Ok(Search::Finished(PartitionSolution {
        selected,
        cost,
        proven_optimal: !timed_out,
        lower_bound,
        nodes,
    }))
}
