//! Brute-force closed testing over every intersection of the approval tree.
//!
//! Test statistics are lower-tail normal scores `U_j` (reject for small
//! values, `p_j = Phi(U_j)`) with a one-factor correlation: `corr(U_j, U_k) =
//! l_j l_k`. Prespecified deviations `xi_t` load on the same factor. Every
//! joint probability is a one-dimensional integral, so thresholds are exact
//! up to quadrature and bisection error.

use std::collections::HashMap;

use crate::eager::EagerGraph;
use crate::normal::{bisect_increasing, factor_rectangle, quantile};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Every node at level alpha.
    Naive,
    /// Every node at `alpha / (number of nodes)`, no recycling.
    Bonferroni,
    /// Weighted Bonferroni with the intersection's graph weights.
    GraphBonferroni,
    /// Failure streaks after each approval share alpha through their joint law.
    FixedSequence,
    /// Adaptive nodes are tested jointly with the prespecified deviations.
    Prespecified,
}

#[derive(Clone, Debug)]
pub struct FactorModel {
    /// Loading of each tree node's statistic, indexed like [`EagerGraph::nodes`].
    pub node_loadings: Vec<f64>,
    /// Loading of the prespecified deviation at each step.
    pub prespec_loadings: Vec<f64>,
}

pub struct ClosedTest<'a> {
    pub graph: &'a EagerGraph,
    pub alpha: f64,
    pub rule: Rule,
    pub model: &'a FactorModel,
    /// Prespecified node weight per step (only read by [`Rule::Prespecified`]).
    pub prespec_weights: Vec<f64>,
}

/// Nodes of an intersection are encoded as bit masks over the tree nodes.
fn members(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&j| mask >> j & 1 == 1).collect()
}

/// Histories sharing everything up to and including their last approval.
fn group_key(h: &[bool]) -> &[bool] {
    match h.iter().rposition(|&b| b) {
        Some(i) => &h[..=i],
        None => &[],
    }
}

impl<'a> ClosedTest<'a> {
    /// Critical values of the prespecified chain.
    pub fn prespec_critical_values(&self) -> Vec<f64> {
        let l = &self.model.prespec_loadings;
        let mut z: Vec<f64> = Vec::new();
        for t in 0..self.graph.horizon {
            let target = self.prespec_weights[t] * self.alpha;
            if target <= 0.0 {
                z.push(f64::NEG_INFINITY);
                continue;
            }
            let floor = quantile(target);
            let prob = |q: f64| {
                let mut lower: Vec<f64> = z.clone();
                let mut upper = vec![f64::INFINITY; t];
                lower.push(f64::NEG_INFINITY);
                upper.push(q);
                factor_rectangle(&l[..=t], &lower, &upper)
            };
            z.push(bisect_increasing(prob, target, floor, 10.0f64.max(floor)));
        }
        z
    }

    fn fixed_sequence(&self, mask: u64, w: &[f64], cache: &mut HashMap<Vec<u64>, f64>) -> Vec<f64> {
        let n = self.graph.len();
        let nodes = self.graph.nodes();
        let mut c = vec![0.0; n];
        let mut groups: HashMap<&[bool], Vec<usize>> = HashMap::new();
        for j in members(mask, n) {
            groups.entry(group_key(&nodes[j])).or_default().push(j);
        }
        for (_, mut list) in groups {
            list.sort_by_key(|&j| nodes[j].len());
            for (pos, &j) in list.iter().enumerate() {
                let target = w[j] * self.alpha;
                let earlier = &list[..pos];
                if target <= 0.0 || earlier.is_empty() {
                    c[j] = target;
                    continue;
                }
                let mut key = vec![j as u64, target.to_bits()];
                for &k in earlier {
                    key.push(k as u64);
                    key.push(c[k].to_bits());
                }
                if let Some(&v) = cache.get(&key) {
                    c[j] = v;
                    continue;
                }
                let mut loadings: Vec<f64> = earlier.iter().map(|&k| self.model.node_loadings[k]).collect();
                loadings.push(self.model.node_loadings[j]);
                let mut lower: Vec<f64> = earlier.iter().map(|&k| quantile(c[k])).collect();
                lower.push(f64::NEG_INFINITY);
                let prob = |x: f64| {
                    let mut upper = vec![f64::INFINITY; earlier.len()];
                    upper.push(quantile(x));
                    factor_rectangle(&loadings, &lower, &upper)
                };
                let v = bisect_increasing(prob, target, target, 1.0);
                cache.insert(key, v);
                c[j] = v;
            }
        }
        c
    }

    fn prespecified(
        &self,
        mask: u64,
        w: &[f64],
        z: &[f64],
        cache: &mut HashMap<Vec<u64>, f64>,
    ) -> Vec<f64> {
        let n = self.graph.len();
        let mut c = vec![0.0; n];
        for j in members(mask, n) {
            let target = w[j] * self.alpha;
            if target <= 0.0 {
                continue;
            }
            let key = vec![j as u64, target.to_bits()];
            if let Some(&v) = cache.get(&key) {
                c[j] = v;
                continue;
            }
            let t = self.graph.nodes()[j].len() + 1;
            let mut loadings: Vec<f64> = self.model.prespec_loadings[..t].to_vec();
            loadings.push(self.model.node_loadings[j]);
            let mut lower: Vec<f64> = z[..t].to_vec();
            lower.push(f64::NEG_INFINITY);
            let prob = |x: f64| {
                let mut upper = vec![f64::INFINITY; t];
                upper.push(quantile(x));
                factor_rectangle(&loadings, &lower, &upper)
            };
            let v = bisect_increasing(prob, target, target, 1.0);
            cache.insert(key, v);
            c[j] = v;
        }
        c
    }

    /// Local thresholds of every nonempty intersection, indexed by mask.
    pub fn local_thresholds(&self) -> Vec<Vec<f64>> {
        let n = self.graph.len();
        assert!(n < 16, "brute force is limited to small trees");
        let z = match self.rule {
            Rule::Prespecified => self.prespec_critical_values(),
            _ => Vec::new(),
        };
        let mut cache = HashMap::new();
        let mut out = vec![Vec::new(); 1 << n];
        for mask in 1u64..(1 << n) {
            let keep: Vec<bool> = (0..n).map(|j| mask >> j & 1 == 1).collect();
            let c = match self.rule {
                Rule::Naive => keep.iter().map(|&k| if k { self.alpha } else { 0.0 }).collect(),
                Rule::Bonferroni => keep
                    .iter()
                    .map(|&k| if k { self.alpha / n as f64 } else { 0.0 })
                    .collect(),
                Rule::GraphBonferroni => {
                    let w = self.graph.intersection_weights(&keep);
                    w.iter().map(|x| x * self.alpha).collect()
                }
                Rule::FixedSequence => {
                    let w = self.graph.intersection_weights(&keep);
                    self.fixed_sequence(mask, &w, &mut cache)
                }
                Rule::Prespecified => {
                    let w = self.graph.intersection_weights(&keep);
                    self.prespecified(mask, &w, &z, &mut cache)
                }
            };
            out[mask as usize] = c;
        }
        out
    }
}

/// Closed-test rejections: node `j` is rejected when every intersection
/// containing it has some member with `p <= threshold` (and `p < 1`).
pub fn closed_rejections(thresholds: &[Vec<f64>], p: &[f64]) -> Vec<bool> {
    let n = p.len();
    let local: Vec<bool> = (0..thresholds.len())
        .map(|mask| {
            mask > 0
                && (0..n).any(|j| mask >> j & 1 == 1 && p[j] <= thresholds[mask][j] && p[j] < 1.0)
        })
        .collect();
    (0..n)
        .map(|j| (1..thresholds.len()).filter(|m| m >> j & 1 == 1).all(|m| local[m]))
        .collect()
}

/// Decisions along the path the closed test itself walks: start at the root
/// and follow each node's rejection status.
pub fn closed_path(graph: &EagerGraph, rejected: &[bool]) -> Vec<bool> {
    let mut history = Vec::new();
    for _ in 0..graph.horizon {
        let r = rejected[graph.index_of(&history)];
        history.push(r);
    }
    history
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(n: usize, t: usize, l: f64) -> FactorModel {
        FactorModel {
            node_loadings: vec![l; n],
            prespec_loadings: vec![l; t],
        }
    }

    #[test]
    fn graph_bonferroni_rejects_root_like_shortcut() {
        let g = EagerGraph::new(3, 0.2, 0.8, 0.8, 1.0);
        let m = model(7, 3, 0.0);
        let ct = ClosedTest {
            graph: &g,
            alpha: 0.1,
            rule: Rule::GraphBonferroni,
            model: &m,
            prespec_weights: vec![0.0; 3],
        };
        let thr = ct.local_thresholds();
        let mut p = vec![0.5; 7];
        p[g.index_of(&[])] = 0.07;
        p[g.index_of(&[true])] = 0.06;
        let rej = closed_rejections(&thr, &p);
        // Root weight is 1/1.24 so its threshold is about 0.0806.
        assert_eq!(closed_path(&g, &rej), vec![true, true, false]);
    }

    #[test]
    fn independent_streak_threshold() {
        let g = EagerGraph::new(3, 0.2, 0.8, 0.8, 1.0);
        let m = model(7, 3, 0.0);
        let ct = ClosedTest {
            graph: &g,
            alpha: 0.1,
            rule: Rule::FixedSequence,
            model: &m,
            prespec_weights: vec![0.0; 3],
        };
        let thr = ct.local_thresholds();
        let full = (1usize << 7) - 1;
        let root = g.index_of(&[]);
        let second = g.index_of(&[false]);
        let c1 = thr[full][root];
        let w2 = g.weight(&[false]) * 0.1;
        assert!((thr[full][second] - w2 / (1.0 - c1)).abs() < 1e-9);
    }
}
