use std::collections::{BTreeMap, VecDeque};

use super::{PartitionError, PartitionMap, Stage};
use crate::views::ElementGraph;

pub const DEFAULT_IMBALANCE: f64 = 1.05;
pub const DEFAULT_PASSES: usize = 10;

/// Swaps tried past the best prefix before a swap pass gives up.
const SWAP_WINDOW: usize = 64;
/// Candidates per direction considered when pairing a swap.
const SWAP_FANOUT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    /// Upper bound on any partition size, as a multiple of `elements / N`.
    pub imbalance: f64,
    pub max_passes: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { imbalance: DEFAULT_IMBALANCE, max_passes: DEFAULT_PASSES }
    }
}

/// Greedy edge-cut refinement of a bootstrap partitioning into `target`
/// partitions.
///
/// When `target` exceeds the bootstrap count the largest partitions are
/// first split in two along a breadth-first ordering of their induced
/// subgraph. Each pass then
///
/// 1. moves single boundary elements to a neighbouring partition while that
///    strictly lowers the cut and keeps the destination within the size
///    bound, and
/// 2. runs a pairwise swap sequence (sizes unchanged) and keeps its best
///    prefix if that prefix lowers the cut.
///
/// Every committed state satisfies the size bound unless the input already
/// violated it, and no committed step raises the cut.
pub fn refine(
    g: &ElementGraph,
    boot: &PartitionMap,
    target: usize,
    opts: RefineOptions,
) -> Result<PartitionMap, PartitionError> {
    if target < boot.parts() {
        return Err(PartitionError::TargetTooSmall { target, boot: boot.parts() });
    }
    let mut state = State::new(g, boot.dense(g)?, boot.parts(), boot.ancestry().to_vec());
    while state.sizes.len() < target {
        state.split_largest();
    }
    state.bound = opts.imbalance * g.len() as f64 / target as f64;
    for _ in 0..opts.max_passes {
        let moved = state.greedy_moves();
        let swapped = state.swap_pass();
        if !moved && !swapped {
            break;
        }
    }
    let assignment: BTreeMap<_, _> = g.ids().iter().copied().zip(state.part.iter().copied()).collect();
    PartitionMap::with_ancestry(assignment, target, Stage::Refined, state.ancestry)
}

struct State<'g> {
    g: &'g ElementGraph,
    part: Vec<u32>,
    sizes: Vec<usize>,
    ancestry: Vec<u32>,
    bound: f64,
}

impl<'g> State<'g> {
    fn new(g: &'g ElementGraph, part: Vec<u32>, parts: usize, ancestry: Vec<u32>) -> Self {
        let mut sizes = vec![0; parts];
        for &p in &part {
            sizes[p as usize] += 1;
        }
        Self { g, part, sizes, ancestry, bound: f64::INFINITY }
    }

    fn split_largest(&mut self) {
        let (src, _) = self
            .sizes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("at least one partition");
        let src = src as u32;
        let members: Vec<usize> = (0..self.part.len()).filter(|&i| self.part[i] == src).collect();
        let order = self.bfs_order(&members, src);
        let order = match order.last() {
            Some(&far) => self.bfs_order_from(&members, src, far),
            None => order,
        };
        let new = self.sizes.len() as u32;
        self.sizes.push(0);
        self.ancestry.push(self.ancestry[src as usize]);
        for &i in &order[..order.len() / 2] {
            self.apply_move(i, new);
        }
    }

    fn bfs_order(&self, members: &[usize], p: u32) -> Vec<usize> {
        match members.first() {
            Some(&start) => self.bfs_order_from(members, p, start),
            None => Vec::new(),
        }
    }

    /// Breadth-first order of the partition's induced subgraph; disconnected
    /// pieces are appended in index order.
    fn bfs_order_from(&self, members: &[usize], p: u32, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.part.len()];
        let mut order = Vec::with_capacity(members.len());
        let roots = std::iter::once(start).chain(members.iter().copied());
        for root in roots {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            while let Some(u) = queue.pop_front() {
                order.push(u);
                for &v in self.g.neighbors(u) {
                    if !seen[v] && self.part[v] == p {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        order
    }

    fn apply_move(&mut self, u: usize, to: u32) {
        self.sizes[self.part[u] as usize] -= 1;
        self.sizes[to as usize] += 1;
        self.part[u] = to;
    }

    /// Neighbour counts per partition, plus the count in `u`'s own.
    fn neighbour_parts(&self, u: usize) -> (Vec<(u32, i64)>, i64) {
        let own = self.part[u];
        let mut internal = 0;
        let mut ext: Vec<(u32, i64)> = Vec::new();
        for &v in self.g.neighbors(u) {
            let q = self.part[v];
            if q == own {
                internal += 1;
            } else if let Some(slot) = ext.iter_mut().find(|(p, _)| *p == q) {
                slot.1 += 1;
            } else {
                ext.push((q, 1));
            }
        }
        ext.sort_unstable();
        (ext, internal)
    }

    fn fits(&self, q: u32) -> bool {
        (self.sizes[q as usize] + 1) as f64 <= self.bound
    }

    fn greedy_moves(&mut self) -> bool {
        let mut any = false;
        loop {
            let mut moved = false;
            for u in 0..self.part.len() {
                let (ext, internal) = self.neighbour_parts(u);
                let best = ext
                    .iter()
                    .filter(|(q, c)| c - internal > 0 && self.fits(*q))
                    .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)));
                if let Some(&(q, _)) = best {
                    self.apply_move(u, q);
                    moved = true;
                }
            }
            if !moved {
                return any;
            }
            any = true;
        }
    }

    /// Kernighan-Lin style sequence of pairwise swaps with rollback to the
    /// best prefix. Returns true when a strictly better prefix was kept.
    fn swap_pass(&mut self) -> bool {
        let n = self.part.len();
        let mut locked = vec![false; n];
        let mut history: Vec<(usize, usize)> = Vec::new();
        let (mut cum, mut best, mut best_len) = (0i64, 0i64, 0usize);
        while history.len() < n / 2 && history.len() - best_len < SWAP_WINDOW {
            let Some((u, v, gain)) = self.best_swap(&locked) else { break };
            let (pu, pv) = (self.part[u], self.part[v]);
            self.apply_move(u, pv);
            self.apply_move(v, pu);
            locked[u] = true;
            locked[v] = true;
            history.push((u, v));
            cum += gain;
            if cum > best {
                best = cum;
                best_len = history.len();
            }
        }
        for &(u, v) in history[best_len..].iter().rev() {
            let (pu, pv) = (self.part[u], self.part[v]);
            self.apply_move(u, pv);
            self.apply_move(v, pu);
        }
        best > 0
    }

    fn best_swap(&self, locked: &[bool]) -> Option<(usize, usize, i64)> {
        // (from, to) -> [(gain, node)]
        let mut cands: BTreeMap<(u32, u32), Vec<(i64, usize)>> = BTreeMap::new();
        for (u, _) in locked.iter().enumerate().filter(|(_, &l)| !l) {
            let (ext, internal) = self.neighbour_parts(u);
            for (q, c) in ext {
                cands.entry((self.part[u], q)).or_default().push((c - internal, u));
            }
        }
        for list in cands.values_mut() {
            list.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            list.truncate(SWAP_FANOUT);
        }
        let mut best: Option<(usize, usize, i64)> = None;
        for (&(a, b), forward) in &cands {
            if a > b {
                continue;
            }
            let Some(backward) = cands.get(&(b, a)) else { continue };
            for &(gu, u) in forward {
                for &(gv, v) in backward {
                    let adjacent = self.g.neighbors(u).binary_search(&v).is_ok();
                    let gain = gu + gv - if adjacent { 2 } else { 0 };
                    let better = match best {
                        None => true,
                        Some((bu, bv, bg)) => gain > bg || (gain == bg && (u, v) < (bu, bv)),
                    };
                    if better {
                        best = Some((u, v, gain));
                    }
                }
            }
        }
        best
    }
}
