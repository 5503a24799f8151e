//! Lazy bookkeeping for the approval tree of a sequentially rejective
//! graphical procedure.
//!
//! Every possible submission is a node identified by the approve/deny bits
//! that preceded it, so a horizon of `T` tests spans `2^T - 1` nodes. Only a
//! handful ever carry mass: the initial allocation sits on the root failure
//! streak `(), (0), (0,0), ...` and every other node receives weight solely
//! from the single node whose rejection points at it. Rejecting `a` sends
//! `g_k * w(a)` to `(a, 1, 0^{k-1})` for `k = 1, 2, ...` within the horizon.
//!
//! [`WeightTree`] stores only the recycled credits and the set of removed
//! nodes; root-streak weights are recomputed from the scheme on demand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::Policy;
use crate::scalar::{powi, Weight};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("history {history} cannot be extended within a horizon of {horizon} tests")]
    HorizonExceeded { history: ApprovalHistory, horizon: usize },
    #[error("time index {t} is outside 1..={horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },
    #[error("node {0} is not the node under test on the observed path")]
    UnknownNode(ApprovalHistory),
    #[error("session exhausted: all {0} tests have been used")]
    Exhausted(usize),
    #[error("invalid weight scheme: {0}")]
    InvalidScheme(String),
    #[error("horizon must allow at least one test")]
    EmptyHorizon,
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),
}

/// Approve/deny outcomes preceding a test; the empty history is the root.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct ApprovalHistory(Vec<bool>);

impl ApprovalHistory {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn from_bits(bits: impl Into<Vec<bool>>) -> Self {
        Self(bits.into())
    }

    /// Root failure streak of length `len`.
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// The time step at which this node is tested (1-based).
    pub fn time(&self) -> usize {
        self.0.len() + 1
    }

    /// True for the nodes `(), (0), (0,0), ...` that carry the initial mass.
    pub fn is_root_streak(&self) -> bool {
        self.0.iter().all(|b| !b)
    }

    /// Time of the latest approval recorded in this history, 0 if none.
    pub fn last_approval(&self) -> usize {
        self.0.iter().rposition(|&b| b).map_or(0, |i| i + 1)
    }

    /// The node whose rejection feeds this one, with the rank of the edge.
    pub fn source(&self) -> Option<(ApprovalHistory, usize)> {
        let tau = self.last_approval();
        if tau == 0 {
            return None;
        }
        let source = ApprovalHistory(self.0[..tau - 1].to_vec());
        Some((source, self.0.len() + 1 - tau))
    }

    /// Appends one outcome without horizon checks.
    pub fn extended(&self, approved: bool) -> Self {
        let mut bits = self.0.clone();
        bits.push(approved);
        Self(bits)
    }

    fn edge_target(&self, rank: usize) -> Self {
        let mut bits = Vec::with_capacity(self.0.len() + rank);
        bits.extend_from_slice(&self.0);
        bits.push(true);
        bits.extend(std::iter::repeat(false).take(rank - 1));
        Self(bits)
    }
}

impl fmt::Display for ApprovalHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if *b { "1" } else { "0" })?;
        }
        f.write_str(")")
    }
}

impl fmt::Debug for ApprovalHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<ApprovalHistory> for String {
    fn from(h: ApprovalHistory) -> String {
        h.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl TryFrom<String> for ApprovalHistory {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid history bit `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(ApprovalHistory)
    }
}

/// Returns `a` with one outcome appended, refusing to leave a horizon of `horizon` tests.
pub fn child_history(
    a: &ApprovalHistory,
    approved: bool,
    horizon: usize,
) -> Result<ApprovalHistory, GraphError> {
    if a.len() + 1 >= horizon {
        return Err(GraphError::HorizonExceeded {
            history: a.clone(),
            horizon,
        });
    }
    Ok(a.extended(approved))
}

/// Node and edge weight parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme<W> {
    /// Geometric ratio of the initial weights along the root failure streak.
    pub node_decay: W,
    /// Share of a rejected node's weight sent along its success edge.
    pub edge_success: W,
    /// Share of the remaining weight given to each failure-continuation edge.
    pub edge_decay: W,
    /// Share of each step's initial mass reserved for prespecified nodes.
    pub prespec_fraction: W,
}

impl<W: Weight> WeightScheme<W> {
    pub fn new(
        node_decay: W,
        edge_success: W,
        edge_decay: W,
        prespec_fraction: W,
    ) -> Result<Self, GraphError> {
        let zero = W::zero();
        let one = W::one();
        let open = |name: &str, v: &W| {
            if *v > zero && *v < one {
                Ok(())
            } else {
                Err(GraphError::InvalidScheme(format!("{name} must lie in (0, 1), got {v:?}")))
            }
        };
        open("node_decay", &node_decay)?;
        open("edge_success", &edge_success)?;
        if !(edge_decay > zero && edge_decay <= one) {
            return Err(GraphError::InvalidScheme(format!(
                "edge_decay must lie in (0, 1], got {edge_decay:?}"
            )));
        }
        if !(prespec_fraction >= zero && prespec_fraction < one) {
            return Err(GraphError::InvalidScheme(format!(
                "prespec_fraction must lie in [0, 1), got {prespec_fraction:?}"
            )));
        }
        Ok(Self {
            node_decay,
            edge_success,
            edge_decay,
            prespec_fraction,
        })
    }

    /// Node decay 0.2, success edge 0.8, continuation decay 0.8, prespecified share 0.2.
    pub fn standard() -> Self {
        Self {
            node_decay: W::ratio(1, 5),
            edge_success: W::ratio(4, 5),
            edge_decay: W::ratio(4, 5),
            prespec_fraction: W::ratio(1, 5),
        }
    }

    /// Initial mass of step `t` on the root failure streak, normalized over `1..=horizon`.
    pub fn initial_node_weight(&self, t: usize, horizon: usize) -> Result<W, GraphError> {
        if t == 0 || t > horizon {
            return Err(GraphError::TimeOutOfRange { t, horizon });
        }
        let one = W::one();
        let g = &self.node_decay;
        let num = powi(g, t - 1) * (one.clone() - g.clone());
        Ok(num / (one - powi(g, horizon)))
    }

    /// Weight of the `rank`-th outgoing edge: rank 1 is the success edge.
    pub fn edge_weight(&self, rank: usize) -> W {
        match rank {
            0 => W::zero(),
            1 => self.edge_success.clone(),
            k => {
                let rest = W::one() - self.edge_success.clone();
                let d = &self.edge_decay;
                rest * d.clone() * powi(&(W::one() - d.clone()), k - 2)
            }
        }
    }

    /// Sum of the first `ranks` edge weights.
    pub fn edge_mass(&self, ranks: usize) -> W {
        (1..=ranks).fold(W::zero(), |acc, k| acc + self.edge_weight(k))
    }
}

/// Weights of all nodes in the approval tree, stored lazily.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTree<W> {
    scheme: WeightScheme<W>,
    horizon: usize,
    streak_scale: W,
    recycled: BTreeMap<ApprovalHistory, W>,
    removed: BTreeSet<ApprovalHistory>,
}

impl<W: Weight> WeightTree<W> {
    /// Tree whose root streak carries `streak_scale` times the scheme's initial weights.
    pub fn new(scheme: WeightScheme<W>, horizon: usize, streak_scale: W) -> Self {
        Self {
            scheme,
            horizon,
            streak_scale,
            recycled: BTreeMap::new(),
            removed: BTreeSet::new(),
        }
    }

    /// Tree without initial mass; weights are seeded with [`WeightTree::credit`].
    pub fn empty(scheme: WeightScheme<W>, horizon: usize) -> Self {
        Self::new(scheme, horizon, W::zero())
    }

    pub fn scheme(&self) -> &WeightScheme<W> {
        &self.scheme
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial(&self, h: &ApprovalHistory) -> W {
        if h.len() < self.horizon && h.is_root_streak() && !self.streak_scale.is_zero() {
            let base = self
                .scheme
                .initial_node_weight(h.time(), self.horizon)
                .expect("time checked against horizon");
            self.streak_scale.clone() * base
        } else {
            W::zero()
        }
    }

    /// Current weight of any node in the tree; nodes outside the horizon weigh 0.
    pub fn weight(&self, h: &ApprovalHistory) -> W {
        if h.len() >= self.horizon || self.removed.contains(h) {
            return W::zero();
        }
        let recycled = self.recycled.get(h).cloned().unwrap_or_else(W::zero);
        self.initial(h) + recycled
    }

    /// Adds `amount` to a live node.
    pub fn credit(&mut self, h: &ApprovalHistory, amount: W) {
        if amount.is_zero() || h.len() >= self.horizon || self.removed.contains(h) {
            return;
        }
        let slot = self.recycled.entry(h.clone()).or_insert_with(W::zero);
        *slot = slot.clone() + amount;
    }

    pub fn is_removed(&self, h: &ApprovalHistory) -> bool {
        self.removed.contains(h)
    }

    /// Removes `rejected` and distributes its weight along its outgoing edges.
    /// Returns the forfeited mass: the part of the edge series beyond the horizon.
    pub fn propagate(&mut self, rejected: &ApprovalHistory) -> W {
        let w = self.weight(rejected);
        self.removed.insert(rejected.clone());
        self.recycled.remove(rejected);
        if w.is_zero() {
            return W::zero();
        }
        let ranks = self.horizon.saturating_sub(rejected.time());
        let mut assigned = W::zero();
        for rank in 1..=ranks {
            let share = self.scheme.edge_weight(rank) * w.clone();
            assigned = assigned + share.clone();
            let target = rejected.edge_target(rank);
            self.credit(&target, share);
        }
        w - assigned
    }

    /// Sum of the weights of every live node in the tree.
    pub fn total_mass(&self) -> W {
        let streak = (0..self.horizon)
            .map(ApprovalHistory::zeros)
            .filter(|h| !self.removed.contains(h))
            .fold(W::zero(), |acc, h| acc + self.initial(&h));
        self.recycled.values().fold(streak, |acc, w| acc + w.clone())
    }

    /// Nodes holding recycled weight, in history order.
    pub fn recycled(&self) -> impl Iterator<Item = (&ApprovalHistory, &W)> {
        self.recycled.iter()
    }
}

/// Result of one call to [`GraphSession::advance`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphStep<W> {
    pub t: usize,
    pub history: ApprovalHistory,
    pub node_weight: W,
    pub approved: bool,
    pub tau: usize,
}

/// Live state of the procedure along the observed path.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSession<W> {
    horizon: usize,
    alpha: f64,
    policy: Policy,
    decisions: Vec<bool>,
    tau: usize,
    tree: WeightTree<W>,
}

impl<W: Weight> GraphSession<W> {
    pub fn new(
        horizon: usize,
        alpha: f64,
        policy: Policy,
        scheme: WeightScheme<W>,
    ) -> Result<Self, GraphError> {
        if horizon == 0 {
            return Err(GraphError::EmptyHorizon);
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(GraphError::InvalidAlpha(alpha));
        }
        let streak_scale = if policy.uses_prespecified_chain() {
            W::one() - scheme.prespec_fraction.clone()
        } else {
            W::one()
        };
        Ok(Self {
            horizon,
            alpha,
            policy,
            decisions: Vec::new(),
            tau: 0,
            tree: WeightTree::new(scheme, horizon, streak_scale),
        })
    }

    /// Rebuilds a session by replaying recorded decisions.
    pub fn replay(
        horizon: usize,
        alpha: f64,
        policy: Policy,
        scheme: WeightScheme<W>,
        decisions: &[bool],
    ) -> Result<Self, GraphError> {
        let mut session = Self::new(horizon, alpha, policy, scheme)?;
        for &d in decisions {
            session.advance(d)?;
        }
        Ok(session)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn scheme(&self) -> &WeightScheme<W> {
        self.tree.scheme()
    }

    pub fn tree(&self) -> &WeightTree<W> {
        &self.tree
    }

    /// Current time step; `horizon + 1` once exhausted.
    pub fn clock(&self) -> usize {
        self.decisions.len() + 1
    }

    /// Time of the latest approval, 0 if none.
    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn decisions(&self) -> &[bool] {
        &self.decisions
    }

    pub fn approvals(&self) -> usize {
        self.decisions.iter().filter(|&&d| d).count()
    }

    pub fn is_exhausted(&self) -> bool {
        self.decisions.len() >= self.horizon
    }

    /// The node about to be tested, `None` once exhausted.
    pub fn current_history(&self) -> Option<ApprovalHistory> {
        (!self.is_exhausted()).then(|| ApprovalHistory::from_bits(self.decisions.clone()))
    }

    pub fn current_weight(&self) -> W {
        self.current_history()
            .map_or_else(W::zero, |h| self.tree.weight(&h))
    }

    pub fn weight_of(&self, h: &ApprovalHistory) -> W {
        self.tree.weight(h)
    }

    /// Weight of the prespecified node paired with step `t`.
    pub fn prespec_weight(&self, t: usize) -> Result<W, GraphError> {
        if !self.policy.uses_prespecified_chain() {
            return Ok(W::zero());
        }
        let scheme = self.tree.scheme();
        Ok(scheme.prespec_fraction.clone() * scheme.initial_node_weight(t, self.horizon)?)
    }

    /// Mass of all adaptive nodes plus the prespecified nodes not yet spent.
    pub fn total_mass(&self) -> W {
        let mut mass = self.tree.total_mass();
        if self.policy.uses_prespecified_chain() {
            for t in 1..=self.horizon {
                mass = mass + self.prespec_weight(t).expect("t within horizon");
            }
        }
        mass
    }

    /// Removes the node under test and recycles its weight.
    pub fn propagate_weight(&mut self, rejected: &ApprovalHistory) -> Result<W, GraphError> {
        match self.current_history() {
            Some(h) if &h == rejected => Ok(self.tree.propagate(rejected)),
            _ => Err(GraphError::UnknownNode(rejected.clone())),
        }
    }

    /// Records the outcome of the current test and moves to the next node.
    pub fn advance(&mut self, approved: bool) -> Result<GraphStep<W>, GraphError> {
        let history = self
            .current_history()
            .ok_or(GraphError::Exhausted(self.horizon))?;
        let t = history.time();
        let node_weight = self.tree.weight(&history);
        if approved {
            self.propagate_weight(&history)?;
            self.tau = t;
        }
        self.decisions.push(approved);
        Ok(GraphStep {
            t,
            history,
            node_weight,
            approved,
            tau: self.tau,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::ratio(n, d)
    }

    fn h(bits: &[u8]) -> ApprovalHistory {
        ApprovalHistory::from_bits(bits.iter().map(|&b| b == 1).collect::<Vec<_>>())
    }

    #[test]
    fn child_history_appends() {
        assert_eq!(child_history(&h(&[]), true, 5).unwrap(), h(&[1]));
        assert_eq!(child_history(&h(&[0, 1]), true, 5).unwrap(), h(&[0, 1, 1]));
        assert_eq!(child_history(&h(&[1, 0, 0]), false, 5).unwrap(), h(&[1, 0, 0, 0]));
        let a = h(&[0, 1]);
        let _ = child_history(&a, false, 5).unwrap();
        assert_eq!(a, h(&[0, 1]));
    }

    #[test]
    fn child_history_respects_horizon() {
        let err = child_history(&h(&[0, 0]), true, 3).unwrap_err();
        assert!(matches!(err, GraphError::HorizonExceeded { horizon: 3, .. }));
    }

    #[test]
    fn initial_weights_are_normalized_geometric() {
        let scheme = WeightScheme::new(q(1, 2), q(4, 5), q(4, 5), q(0, 1)).unwrap();
        assert_eq!(scheme.initial_node_weight(1, 3).unwrap(), q(4, 7));
        assert_eq!(scheme.initial_node_weight(3, 3).unwrap(), q(1, 7));
        for horizon in 1..12 {
            let total = (1..=horizon).fold(Q::ratio(0, 1), |acc, t| {
                acc + scheme.initial_node_weight(t, horizon).unwrap()
            });
            assert_eq!(total, q(1, 1));
        }
        assert!(scheme.initial_node_weight(0, 3).is_err());
        assert!(scheme.initial_node_weight(4, 3).is_err());
    }

    #[test]
    fn edge_weights_follow_geometric_continuation() {
        let scheme = WeightScheme::<Q>::standard();
        assert_eq!(scheme.edge_weight(1), q(4, 5));
        assert_eq!(scheme.edge_weight(2), q(4, 25));
        assert_eq!(scheme.edge_weight(3), q(4, 125));
        let mut partial = q(0, 1);
        for k in 1..40 {
            partial = partial + scheme.edge_weight(k);
            assert!(partial <= q(1, 1));
        }
    }

    #[test]
    fn scheme_rejects_out_of_range_parameters() {
        assert!(WeightScheme::new(0.0, 0.8, 0.8, 0.2).is_err());
        assert!(WeightScheme::new(0.2, 1.0, 0.8, 0.2).is_err());
        assert!(WeightScheme::new(0.2, 0.8, 0.0, 0.2).is_err());
        assert!(WeightScheme::new(0.2, 0.8, 0.8, 1.0).is_err());
        assert!(WeightScheme::new(0.2, 0.8, 1.0, 0.0).is_ok());
    }

    #[test]
    fn propagation_adds_edge_share_to_child() {
        let scheme = WeightScheme::<f64>::standard();
        let mut tree = WeightTree::empty(scheme, 4);
        tree.credit(&h(&[0]), 0.5);
        tree.credit(&h(&[0, 1]), 0.1);
        let forfeited = tree.propagate(&h(&[0]));
        assert!((tree.weight(&h(&[0, 1])) - 0.5).abs() < 1e-15);
        assert!((tree.weight(&h(&[0, 1, 0])) - 0.16 * 0.5).abs() < 1e-15);
        assert_eq!(tree.weight(&h(&[0])), 0.0);
        assert!((forfeited - 0.5 * 0.04).abs() < 1e-15);
    }

    #[test]
    fn zero_weight_propagation_changes_nothing() {
        let scheme = WeightScheme::<f64>::standard();
        let mut tree = WeightTree::new(scheme, 4, 1.0);
        let before: Vec<f64> = (0..4).map(|k| tree.weight(&ApprovalHistory::zeros(k))).collect();
        let forfeited = tree.propagate(&h(&[1]));
        assert_eq!(forfeited, 0.0);
        let after: Vec<f64> = (0..4).map(|k| tree.weight(&ApprovalHistory::zeros(k))).collect();
        assert_eq!(before, after);
        assert_eq!(tree.recycled().count(), 0);
    }

    #[test]
    fn fresh_session_denied_then_approved() {
        let mut s = GraphSession::new(5, 0.1, Policy::BonfSrgp, WeightScheme::<f64>::standard()).unwrap();
        let step = s.advance(false).unwrap();
        assert_eq!(step.t, 1);
        assert_eq!(s.tau(), 0);
        assert_eq!(s.current_history().unwrap(), h(&[0]));

        let mut s = GraphSession::new(5, 0.1, Policy::BonfSrgp, WeightScheme::<f64>::standard()).unwrap();
        s.advance(true).unwrap();
        assert_eq!(s.tau(), 1);
        assert_eq!(s.current_history().unwrap(), h(&[1]));
    }

    #[test]
    fn exhausted_session_refuses_to_advance() {
        let mut s = GraphSession::new(2, 0.1, Policy::BonfSrgp, WeightScheme::<f64>::standard()).unwrap();
        s.advance(true).unwrap();
        s.advance(false).unwrap();
        assert!(s.is_exhausted());
        assert_eq!(s.current_history(), None);
        assert_eq!(s.advance(true).unwrap_err(), GraphError::Exhausted(2));
    }

    #[test]
    fn denial_streak_tests_initial_weights() {
        let scheme = WeightScheme::<Q>::standard();
        let mut s = GraphSession::new(5, 0.1, Policy::BonfSrgp, scheme.clone()).unwrap();
        for t in 1..=5 {
            let step = s.advance(false).unwrap();
            assert_eq!(step.node_weight, scheme.initial_node_weight(t, 5).unwrap());
        }
    }

    #[test]
    fn approval_recycles_to_success_child_and_streak() {
        let scheme = WeightScheme::<Q>::standard();
        let mut s = GraphSession::new(4, 0.1, Policy::BonfSrgp, scheme.clone()).unwrap();
        let w1 = s.current_weight();
        s.advance(true).unwrap();
        assert_eq!(s.current_weight(), scheme.edge_weight(1) * w1.clone());
        s.advance(false).unwrap();
        assert_eq!(s.current_weight(), scheme.edge_weight(2) * w1.clone());
        // Counterfactual sibling under the root still carries its initial weight.
        assert_eq!(s.weight_of(&h(&[0])), scheme.initial_node_weight(2, 4).unwrap());
        let forfeited = q(1, 1) - s.total_mass();
        assert_eq!(forfeited, w1 * (q(1, 1) - scheme.edge_mass(3)));
    }

    #[test]
    fn unknown_node_is_rejected() {
        let mut s = GraphSession::new(4, 0.1, Policy::BonfSrgp, WeightScheme::<f64>::standard()).unwrap();
        assert!(matches!(s.propagate_weight(&h(&[1])), Err(GraphError::UnknownNode(_))));
    }

    #[test]
    fn prespecified_share_is_carved_from_initial_mass() {
        let scheme = WeightScheme::<Q>::standard();
        let s = GraphSession::new(6, 0.1, Policy::PresSrgp, scheme.clone()).unwrap();
        assert_eq!(s.total_mass(), q(1, 1));
        let w1 = scheme.initial_node_weight(1, 6).unwrap();
        assert_eq!(s.current_weight(), q(4, 5) * w1.clone());
        assert_eq!(s.prespec_weight(1).unwrap(), q(1, 5) * w1);
    }

    #[test]
    fn history_serializes_as_bit_string() {
        let a = h(&[0, 1, 1]);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "\"011\"");
        let back: ApprovalHistory = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<ApprovalHistory>("\"012\"").is_err());
        assert_eq!(a.to_string(), "(0,1,1)");
        assert_eq!(ApprovalHistory::root().to_string(), "()");
    }

    #[test]
    fn source_and_rank() {
        assert_eq!(h(&[0, 0]).source(), None);
        assert_eq!(h(&[0, 1]).source(), Some((h(&[0]), 1)));
        assert_eq!(h(&[1, 0, 0]).source(), Some((h(&[]), 3)));
    }
}
