use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;
use srgp::{ApprovalHistory, ExactScheme, ExactSession, Policy, Scheme, Session, Weight};
use srgp_oracles::eager::EagerGraph;

fn all_sequences(t: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1usize << t).map(move |code| (0..t).map(|i| code >> i & 1 == 1).collect())
}

fn scheme(g: f64, s: f64, d: f64, eta: f64) -> Scheme {
    Scheme::new(g, s, d, eta).unwrap()
}

/// Replays `decisions` on both implementations and compares every node's
/// weight after every step.
fn compare_lazy_eager(horizon: usize, sch: &Scheme, policy: Policy, decisions: &[bool]) {
    let scale = if policy.uses_prespecified_chain() {
        1.0 - sch.prespec_fraction
    } else {
        1.0
    };
    let mut eager = EagerGraph::new(horizon, sch.node_decay, sch.edge_success, sch.edge_decay, scale);
    let mut lazy = Session::new(horizon, 0.1, policy, sch.clone()).unwrap();
    for &d in decisions {
        let h = lazy.current_history().unwrap();
        let step = lazy.advance(d).unwrap();
        assert!((step.node_weight - eager.weight(h.bits())).abs() < 1e-14);
        if d {
            eager.remove_history(h.bits());
        }
        for node in eager.nodes().to_vec() {
            let lw = lazy.weight_of(&ApprovalHistory::from_bits(node.clone()));
            let ew = eager.weight(&node);
            assert!(
                (lw - ew).abs() < 1e-14,
                "T={horizon} decisions={decisions:?} node={node:?}: lazy {lw} eager {ew}"
            );
        }
        assert!((lazy.tree().total_mass() - eager.total_mass()).abs() < 1e-13);
    }
}

#[test]
fn lazy_matches_eager_on_every_sequence_up_to_four() {
    let schemes = [
        Scheme::standard(),
        scheme(0.5, 0.8, 0.8, 0.2),
        scheme(0.7, 0.3, 0.5, 0.4),
        scheme(0.05, 0.95, 1.0, 0.0),
    ];
    for horizon in 1..=4 {
        for sch in &schemes {
            for policy in [Policy::BonfSrgp, Policy::PresSrgp] {
                for seq in all_sequences(horizon) {
                    compare_lazy_eager(horizon, sch, policy, &seq);
                }
            }
        }
    }
}

#[test]
fn consecutive_denials_keep_initial_weights() {
    let sch = Scheme::standard();
    let mut s = Session::new(5, 0.1, Policy::BonfSrgp, sch.clone()).unwrap();
    for t in 1..=5 {
        let step = s.advance(false).unwrap();
        assert_eq!(step.t, t);
        assert_eq!(step.node_weight, sch.initial_node_weight(t, 5).unwrap());
        assert_eq!(step.tau, 0);
    }
}

#[test]
fn exact_conservation_accounts_for_forfeited_tail() {
    let horizon = 6;
    for seq in all_sequences(horizon) {
        let mut s = ExactSession::new(horizon, 0.1, Policy::PresSrgp, ExactScheme::standard()).unwrap();
        assert!(s.total_mass().is_one());
        let mut forfeited = BigRational::zero();
        for &d in &seq {
            let before = s.total_mass();
            if d {
                let t = s.clock();
                let w = s.current_weight();
                forfeited = forfeited + w * (BigRational::one() - s.scheme().edge_mass(horizon - t));
            }
            s.advance(d).unwrap();
            assert!(s.total_mass() <= before);
            assert!(s.total_mass() <= BigRational::one());
            assert_eq!(s.total_mass() + forfeited.clone(), BigRational::one(), "{seq:?}");
        }
    }
}

fn session_strategy() -> impl Strategy<Value = (usize, Vec<bool>, f64, f64, f64, f64, usize)> {
    (2usize..=50).prop_flat_map(|t| {
        (
            Just(t),
            proptest::collection::vec(any::<bool>(), t),
            0.01f64..0.99,
            0.01f64..0.99,
            0.01f64..=1.0,
            0.0f64..0.9,
            0usize..5,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn total_mass_never_exceeds_one((t, seq, g, s, d, eta, p) in session_strategy()) {
        let policy = Policy::ALL[p];
        let sch = scheme(g, s, d, eta);
        let mut session = Session::new(t, 0.1, policy, sch.clone()).unwrap();
        prop_assert!((session.total_mass() - 1.0).abs() < 1e-12);
        for &bit in &seq {
            session.advance(bit).unwrap();
            prop_assert!(session.total_mass() <= 1.0 + 1e-12);
        }
        let replayed = Session::replay(t, 0.1, policy, sch, &seq).unwrap();
        prop_assert_eq!(replayed, session);
    }

    #[test]
    fn recycling_never_lowers_a_future_node((t, seq, g, s, d, eta, _p) in session_strategy()) {
        // Track the weight of the node reached by the actual sequence at every
        // step: rejections of its ancestors can only add to it.
        let sch = scheme(g, s, d, eta);
        let target = ApprovalHistory::from_bits(seq[..t - 1].to_vec());
        let mut session = Session::new(t, 0.1, Policy::BonfSrgp, sch).unwrap();
        let mut last = session.weight_of(&target);
        for &bit in &seq[..t - 1] {
            session.advance(bit).unwrap();
            let now = session.weight_of(&target);
            prop_assert!(now >= last - 1e-15);
            last = now;
        }
    }

    #[test]
    fn single_precision_tracks_double(seq in proptest::collection::vec(any::<bool>(), 1..30)) {
        let t = seq.len();
        let mut a = Session::new(t, 0.1, Policy::BonfSrgp, Scheme::standard()).unwrap();
        let mut b = srgp::Session32::new(t, 0.1, Policy::BonfSrgp, srgp::WeightScheme::<f32>::standard()).unwrap();
        for &bit in &seq {
            let x = a.advance(bit).unwrap().node_weight;
            let y = b.advance(bit).unwrap().node_weight;
            prop_assert!((x - y.to_f64_lossy()).abs() < 1e-5);
        }
        prop_assert!(b.total_mass().to_f64().unwrap() <= 1.0 + 1e-5);
    }
}
