//! Feasibility of a transport problem restricted to finite-cost cells.
//!
//! Dinic max-flow on source → rows → columns → sink. A shortfall gives a
//! Hall-type cut: rows `S` whose mass exceeds that of every column they can reach.

use std::collections::VecDeque;

use crate::scalar::{NumericMode, Scalar, FLOAT_TOL};
use crate::space::CostMatrix;

/// Rows whose mass cannot be shipped through finite-cost cells.
#[derive(Clone, Debug, PartialEq)]
pub struct InfeasibilityCut<T> {
    pub rows: Vec<usize>,
    /// Every column reachable from `rows` through a finite-cost cell.
    pub reachable_cols: Vec<usize>,
    pub row_mass: T,
    pub reachable_col_mass: T,
}

struct Edge<T> {
    to: usize,
    cap: T,
}

struct Network<T> {
    edges: Vec<Edge<T>>,
    adj: Vec<Vec<usize>>,
    eps: T,
}

impl<T: Scalar> Network<T> {
    fn new(nodes: usize, eps: T) -> Self {
        Self { edges: Vec::new(), adj: vec![Vec::new(); nodes], eps }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: T) {
        self.adj[from].push(self.edges.len());
        self.edges.push(Edge { to, cap });
        self.adj[to].push(self.edges.len());
        self.edges.push(Edge { to: from, cap: T::zero() });
    }

    fn levels(&self, source: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &e in &self.adj[v] {
                let edge = &self.edges[e];
                if edge.cap > self.eps && level[edge.to] == usize::MAX {
                    level[edge.to] = level[v] + 1;
                    queue.push_back(edge.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, v: usize, sink: usize, pushed: T, level: &[usize], next: &mut [usize]) -> T {
        if v == sink {
            return pushed;
        }
        while next[v] < self.adj[v].len() {
            let e = self.adj[v][next[v]];
            let (to, cap) = (self.edges[e].to, self.edges[e].cap.clone());
            if cap > self.eps && level[to] == level[v] + 1 {
                let got = self.augment(to, sink, T::min_val(pushed.clone(), cap), level, next);
                if got > self.eps {
                    self.edges[e].cap -= got.clone();
                    self.edges[e ^ 1].cap += got.clone();
                    return got;
                }
            }
            next[v] += 1;
        }
        T::zero()
    }

    fn max_flow(&mut self, source: usize, sink: usize, bound: T) -> T {
        let mut total = T::zero();
        loop {
            let level = self.levels(source);
            if level[sink] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.adj.len()];
            loop {
                let got = self.augment(source, sink, bound.clone(), &level, &mut next);
                if !(got > self.eps) {
                    break;
                }
                total += got;
            }
        }
    }
}

/// `None` when all mass can move over finite cells, otherwise the violated cut.
pub(crate) fn finite_support_cut<T: Scalar>(supply: &[T], demand: &[T], cost: &CostMatrix<T>) -> Option<InfeasibilityCut<T>> {
    let rows = supply.len();
    let cols = demand.len();
    let source = 0;
    let sink = rows + cols + 1;
    let eps = match T::MODE {
        NumericMode::Rational => T::zero(),
        NumericMode::Float => T::from_f64(1e-15).unwrap_or_else(T::zero),
    };
    let mut net = Network::new(rows + cols + 2, eps);
    for (i, s) in supply.iter().enumerate() {
        net.add_edge(source, 1 + i, s.clone());
    }
    for (j, d) in demand.iter().enumerate() {
        net.add_edge(1 + rows + j, sink, d.clone());
    }
    let total_supply: T = supply.iter().cloned().sum();
    // Effectively uncapacitated: a residual finite cell can never saturate.
    let unbounded = total_supply.clone() + T::one();
    for i in 0..rows {
        for j in 0..cols {
            if cost.get(i, j).is_finite() {
                net.add_edge(1 + i, 1 + rows + j, unbounded.clone());
            }
        }
    }
    let total_demand: T = demand.iter().cloned().sum();
    let needed = T::min_val(total_supply.clone(), total_demand);
    let flow = net.max_flow(source, sink, total_supply);
    let slack = match T::MODE {
        NumericMode::Rational => T::zero(),
        NumericMode::Float => T::from_f64(FLOAT_TOL).unwrap_or_else(T::zero),
    };
    if needed.le_tol(&flow, &slack) {
        return None;
    }

    let level = net.levels(source);
    let cut_rows: Vec<usize> = (0..rows).filter(|&i| level[1 + i] != usize::MAX).collect();
    let mut reach = vec![false; cols];
    for &i in &cut_rows {
        for (j, r) in reach.iter_mut().enumerate() {
            *r |= cost.get(i, j).is_finite();
        }
    }
    let reachable_cols: Vec<usize> = (0..cols).filter(|&j| reach[j]).collect();
    let row_mass = cut_rows.iter().map(|&i| supply[i].clone()).sum();
    let reachable_col_mass = reachable_cols.iter().map(|&j| demand[j].clone()).sum();
    Some(InfeasibilityCut { rows: cut_rows, reachable_cols, row_mass, reachable_col_mass })
}
