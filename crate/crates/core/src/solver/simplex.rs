//! Transportation simplex on the complete bipartite graph.
//!
//! The basis is a spanning tree of `rows + cols` nodes with `rows + cols − 1`
//! basic cells, degenerate (zero-flow) cells included. Start: north-west
//! corner. Pivoting: block-search pricing (most improving cell within the
//! first block of about `√cells` cells that has one, scanned cyclically).
//! After more than `rows + cols` consecutive degenerate pivots the solver
//! switches to Bland's rule, least cell index entering and least cell index
//! leaving among ties, until the next nondegenerate pivot. Bland's rule cannot
//! cycle and nondegenerate pivots strictly decrease the objective, so the
//! method terminates.
//!
//! Forbidden (`+∞`) cells never enter the basis. The north-west start may
//! still place them in the basis, so the objective is the lexicographic pair
//! (mass on forbidden cells, finite cost). A basic forbidden cell behaves like
//! an arc of unbounded cost, pivoted out as soon as finite cells allow it.

use std::collections::VecDeque;

use crate::error::{OtError, Result};
use crate::scalar::{NumericMode, Scalar, FLOAT_MASS_TOL, FLOAT_TOL};
use crate::space::CostMatrix;

pub(crate) struct SimplexOutcome<T> {
    /// Dense row-major flows.
    pub flows: Vec<T>,
    pub iterations: usize,
    /// Mass left on forbidden cells; positive means no finite plan exists.
    pub forbidden_mass: T,
}

/// Potential or reduced cost in the lexicographic objective.
#[derive(Clone, Debug)]
struct Lex<T> {
    forbidden: i64,
    finite: T,
}

struct Tree {
    /// Neighbours of each node as `(node, cell)`. Rows are `0..rows`, columns `rows..rows+cols`.
    adj: Vec<Vec<(usize, usize)>>,
    parent: Vec<usize>,
    parent_cell: Vec<usize>,
    depth: Vec<usize>,
    order: VecDeque<usize>,
}

impl Tree {
    fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            parent: vec![usize::MAX; nodes],
            parent_cell: vec![usize::MAX; nodes],
            depth: vec![0; nodes],
            order: VecDeque::with_capacity(nodes),
        }
    }

    fn link(&mut self, a: usize, b: usize, cell: usize) {
        self.adj[a].push((b, cell));
        self.adj[b].push((a, cell));
    }

    fn unlink(&mut self, a: usize, b: usize, cell: usize) {
        for (x, y) in [(a, b), (b, a)] {
            let pos = self.adj[x].iter().position(|&(n, c)| n == y && c == cell).expect("basic cell missing from tree");
            self.adj[x].swap_remove(pos);
        }
    }
}

pub(crate) fn transportation_simplex<T: Scalar>(supply: &[T], demand: &[T], cost: &CostMatrix<T>) -> Result<SimplexOutcome<T>> {
    let rows = supply.len();
    let cols = demand.len();
    debug_assert_eq!((rows, cols), (cost.rows(), cost.cols()));
    let cells = rows * cols;
    let nodes = rows + cols;

    let forbidden: Vec<bool> = cost.cells().iter().map(|c| c.is_infinite()).collect();
    let finite_cost: Vec<T> = cost.cells().iter().map(|c| c.finite().cloned().unwrap_or_else(T::zero)).collect();
    let price_tol = match T::MODE {
        NumericMode::Rational => T::zero(),
        NumericMode::Float => {
            let scale = T::one() + cost.max_abs_finite();
            T::from_f64(FLOAT_TOL).unwrap_or_else(T::zero) * scale
        }
    };
    let neg_price_tol = -price_tol;

    let mut flows = vec![T::zero(); cells];
    let mut basic = vec![false; cells];
    let mut tree = Tree::new(nodes);

    // North-west corner: each step moves right or down, giving `rows + cols − 1` cells.
    {
        let (mut i, mut j) = (0usize, 0usize);
        let mut s = supply[0].clone();
        let mut d = demand[0].clone();
        loop {
            let cell = i * cols + j;
            let x = T::min_val(s.clone(), d.clone());
            flows[cell] = if x.is_negative_val() { T::zero() } else { x.clone() };
            basic[cell] = true;
            tree.link(i, rows + j, cell);
            if i == rows - 1 && j == cols - 1 {
                break;
            }
            let go_down = j == cols - 1 || (i < rows - 1 && s <= d);
            if go_down {
                d -= x;
                i += 1;
                s = supply[i].clone();
            } else {
                s -= x;
                j += 1;
                d = demand[j].clone();
            }
        }
    }

    let limit = (20 * cells).max(1_000_000);
    let mut potentials: Vec<Lex<T>> = vec![Lex { forbidden: 0, finite: T::zero() }; nodes];
    let mut iterations = 0usize;
    let mut plus = Vec::with_capacity(nodes);
    let mut minus = Vec::with_capacity(nodes);
    let block = ((cells as f64).sqrt() as usize).max(16);
    let mut cursor = 0usize;
    let mut bland_mode = false;
    let mut degenerate_run = 0usize;
    let zero_mass = match T::MODE {
        NumericMode::Rational => T::zero(),
        NumericMode::Float => T::from_f64(FLOAT_MASS_TOL).unwrap_or_else(T::zero),
    };
    let pricing = Pricing { rows, cols, forbidden: &forbidden, finite_cost: &finite_cost, neg_tol: neg_price_tol };

    loop {
        compute_tree(&mut tree, &mut potentials, &forbidden, &finite_cost);

        let entering = if bland_mode {
            (0..cells).find(|&cell| pricing.reduced(cell, &basic, &potentials).is_some())
        } else {
            block_search(&mut cursor, cells, block, |cell| pricing.reduced(cell, &basic, &potentials))
        };
        let Some(enter) = entering else { break };

        iterations += 1;
        if iterations > limit {
            return Err(OtError::IterationLimit(limit));
        }

        // Cycle: enter (+), then alternate along the tree path from its column back to its row.
        let (ei, ej) = (enter / cols, enter % cols);
        plus.clear();
        minus.clear();
        let mut a = ei;
        let mut b = rows + ej;
        let mut from_b = Vec::new();
        let mut from_a = Vec::new();
        while tree.depth[b] > tree.depth[a] {
            from_b.push(tree.parent_cell[b]);
            b = tree.parent[b];
        }
        while tree.depth[a] > tree.depth[b] {
            from_a.push(tree.parent_cell[a]);
            a = tree.parent[a];
        }
        while a != b {
            from_b.push(tree.parent_cell[b]);
            b = tree.parent[b];
            from_a.push(tree.parent_cell[a]);
            a = tree.parent[a];
        }
        for (k, &cell) in from_b.iter().chain(from_a.iter().rev()).enumerate() {
            if k % 2 == 0 {
                minus.push(cell);
            } else {
                plus.push(cell);
            }
        }

        let mut leave = minus[0];
        for &cell in &minus[1..] {
            if flows[cell] < flows[leave] || (flows[cell] == flows[leave] && cell < leave) {
                leave = cell;
            }
        }
        let theta = flows[leave].clone();
        if theta <= zero_mass {
            degenerate_run += 1;
            if degenerate_run > nodes {
                bland_mode = true;
            }
        } else {
            degenerate_run = 0;
            bland_mode = false;
        }
        if !theta.is_zero() {
            for &cell in &plus {
                flows[cell] += theta.clone();
            }
            for &cell in &minus {
                flows[cell] -= theta.clone();
            }
        }
        flows[leave] = T::zero();
        flows[enter] = theta;

        basic[leave] = false;
        basic[enter] = true;
        let (li, lj) = (leave / cols, leave % cols);
        tree.unlink(li, rows + lj, leave);
        tree.link(ei, rows + ej, enter);
    }

    let forbidden_mass = flows.iter().zip(&forbidden).filter(|(_, &f)| f).map(|(x, _)| x.clone()).sum();
    Ok(SimplexOutcome { flows, iterations, forbidden_mass })
}

struct Pricing<'a, T> {
    rows: usize,
    cols: usize,
    forbidden: &'a [bool],
    finite_cost: &'a [T],
    neg_tol: T,
}

impl<T: Scalar> Pricing<'_, T> {
    /// Reduced cost of a nonbasic finite cell, if it improves the objective.
    fn reduced(&self, cell: usize, basic: &[bool], potentials: &[Lex<T>]) -> Option<Lex<T>> {
        if basic[cell] || self.forbidden[cell] {
            return None;
        }
        let (u, v) = (&potentials[cell / self.cols], &potentials[self.rows + cell % self.cols]);
        let forbidden = -u.forbidden - v.forbidden;
        match forbidden {
            0 => {
                let finite = self.finite_cost[cell].clone() - u.finite.clone() - v.finite.clone();
                (finite < self.neg_tol).then_some(Lex { forbidden, finite })
            }
            f if f < 0 => Some(Lex { forbidden, finite: T::zero() }),
            _ => None,
        }
    }
}

/// Scans blocks of cells cyclically from `cursor` and returns the most improving
/// cell of the first block that has one.
fn block_search<T: Scalar>(cursor: &mut usize, cells: usize, block: usize, reduced: impl Fn(usize) -> Option<Lex<T>>) -> Option<usize> {
    let mut best: Option<(usize, Lex<T>)> = None;
    let mut scanned = 0;
    while scanned < cells {
        let end = (scanned + block).min(cells);
        for _ in scanned..end {
            let cell = *cursor;
            *cursor = if cell + 1 == cells { 0 } else { cell + 1 };
            if let Some(r) = reduced(cell) {
                let better = match &best {
                    None => true,
                    Some((_, b)) => r.forbidden < b.forbidden || (r.forbidden == b.forbidden && r.finite < b.finite),
                };
                if better {
                    best = Some((cell, r));
                }
            }
        }
        scanned = end;
        if best.is_some() {
            break;
        }
    }
    best.map(|(cell, _)| cell)
}

/// BFS from row 0: parents, depths and potentials with `u_i + v_j = c_ij` on basic cells.
fn compute_tree<T: Scalar>(tree: &mut Tree, potentials: &mut [Lex<T>], forbidden: &[bool], finite_cost: &[T]) {
    tree.order.clear();
    tree.order.push_back(0);
    tree.parent[0] = usize::MAX;
    tree.depth[0] = 0;
    potentials[0] = Lex { forbidden: 0, finite: T::zero() };
    let mut visited = vec![false; potentials.len()];
    visited[0] = true;
    while let Some(node) = tree.order.pop_front() {
        for k in 0..tree.adj[node].len() {
            let (next, cell) = tree.adj[node][k];
            if visited[next] {
                continue;
            }
            visited[next] = true;
            tree.parent[next] = node;
            tree.parent_cell[next] = cell;
            tree.depth[next] = tree.depth[node] + 1;
            let base = &potentials[node];
            let (big, small) = if forbidden[cell] { (1, T::zero()) } else { (0, finite_cost[cell].clone()) };
            potentials[next] = Lex { forbidden: big - base.forbidden, finite: small - base.finite.clone() };
            tree.order.push_back(next);
        }
    }
    debug_assert!(visited.iter().all(|&v| v), "basis is not a spanning tree");
}
