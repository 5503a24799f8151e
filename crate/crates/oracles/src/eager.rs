//! The whole approval tree held in memory with the textbook graph update:
//! removing node `j` adds `g[j][k] * w[j]` to every remaining `k` and
//! rewires edges as `g[k][l] <- (g[k][l] + g[k][j] g[j][l]) / (1 - g[k][j] g[j][k])`.

use std::collections::HashMap;

#[derive(Clone, Debug)]
pub struct EagerGraph {
    pub horizon: usize,
    nodes: Vec<Vec<bool>>,
    index: HashMap<Vec<bool>, usize>,
    weights: Vec<f64>,
    edges: Vec<Vec<f64>>,
    alive: Vec<bool>,
}

impl EagerGraph {
    /// Every history of length below `horizon`, ordered by length and then bits.
    pub fn new(
        horizon: usize,
        node_decay: f64,
        edge_success: f64,
        edge_decay: f64,
        streak_scale: f64,
    ) -> Self {
        let mut nodes = Vec::new();
        for len in 0..horizon {
            for code in 0..(1usize << len) {
                nodes.push((0..len).map(|i| code >> (len - 1 - i) & 1 == 1).collect::<Vec<bool>>());
            }
        }
        let index: HashMap<Vec<bool>, usize> =
            nodes.iter().enumerate().map(|(i, h)| (h.clone(), i)).collect();
        let n = nodes.len();

        let norm: f64 = (0..horizon).map(|i| node_decay.powi(i as i32)).sum();
        let mut weights = vec![0.0; n];
        for (i, h) in nodes.iter().enumerate() {
            if h.iter().all(|b| !b) {
                weights[i] = streak_scale * node_decay.powi(h.len() as i32) / norm;
            }
        }

        let mut edges = vec![vec![0.0; n]; n];
        for (i, h) in nodes.iter().enumerate() {
            let mut remaining = 1.0;
            let mut target = h.clone();
            target.push(true);
            let mut rank = 1;
            while target.len() < horizon {
                let g = if rank == 1 {
                    edge_success
                } else {
                    remaining * edge_decay
                };
                if rank == 1 {
                    remaining = 1.0 - edge_success;
                } else {
                    remaining -= g;
                }
                edges[i][index[&target]] = g;
                target.push(false);
                rank += 1;
            }
        }
        Self {
            horizon,
            nodes,
            index,
            weights,
            edges,
            alive: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<bool>] {
        &self.nodes
    }

    pub fn index_of(&self, history: &[bool]) -> usize {
        self.index[history]
    }

    pub fn weight(&self, history: &[bool]) -> f64 {
        self.weights[self.index[history]]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn edge(&self, from: usize, to: usize) -> f64 {
        self.edges[from][to]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn remove(&mut self, j: usize) {
        assert!(self.alive[j], "node removed twice");
        let n = self.len();
        let wj = self.weights[j];
        for k in 0..n {
            if k != j && self.alive[k] {
                self.weights[k] += self.edges[j][k] * wj;
            }
        }
        let mut next = self.edges.clone();
        for k in 0..n {
            for l in 0..n {
                if k == l || k == j || l == j || !self.alive[k] || !self.alive[l] {
                    continue;
                }
                let denom = 1.0 - self.edges[k][j] * self.edges[j][k];
                next[k][l] = if denom > 0.0 {
                    (self.edges[k][l] + self.edges[k][j] * self.edges[j][l]) / denom
                } else {
                    0.0
                };
            }
        }
        for k in 0..n {
            next[j][k] = 0.0;
            next[k][j] = 0.0;
        }
        self.edges = next;
        self.weights[j] = 0.0;
        self.alive[j] = false;
    }

    pub fn remove_history(&mut self, history: &[bool]) {
        let j = self.index[history];
        self.remove(j);
    }

    /// Weights of the intersection hypothesis keeping exactly the nodes in `keep`.
    pub fn intersection_weights(&self, keep: &[bool]) -> Vec<f64> {
        let mut g = self.clone();
        for (j, &k) in keep.iter().enumerate() {
            if !k {
                g.remove(j);
            }
        }
        g.weights
    }
}
