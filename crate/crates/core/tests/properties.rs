use aixi_core::bayes::{mixture_percept_prob, posterior_update, MixtureBelief};
use aixi_core::empowerment::{
    channel_capacity, mutual_information, variational_empowerment, Channel, Decoder,
};
use aixi_core::planner::{
    optimal_action_values, softmax_log_policy, softmax_policy, ActionValues, PlanningParams,
};
use aixi_core::prob::{argmax, floor_distribution};
use aixi_core::self_aixi::{kl_policy, self_aixi_action, RegularizationParams};
use aixi_core::{ActionId, History};
use aixi_testkit::{random_class, random_distribution, random_history, rng};
use proptest::prelude::*;
use rand::Rng;

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(|mut v| {
        if v.iter().all(|x| *x == 0.0) {
            v[0] = 1.0;
        }
        let t: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= t);
        v
    })
}

fn channel(inputs: usize, outputs: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(any::<u64>(), inputs).prop_map(move |seeds| {
        let rows = seeds
            .into_iter()
            .map(|s| random_distribution(&mut rng(s), outputs, true))
            .collect();
        Channel::from_matrix(rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn posterior_stays_normalized(seed in any::<u64>(), steps in 0usize..6) {
        let mut r = rng(seed);
        let class = random_class(&mut r, 3, 2, 3, 2);
        let h = random_history(&mut r, &class.models()[1], steps);
        let mut b = MixtureBelief::prior(&class);
        let mut prefix = History::new();
        for (a, e) in h.steps() {
            b = posterior_update(&b, &class, &prefix, *a, e).unwrap();
            prefix = prefix.extend(*a, *e);
            let w = b.weights();
            prop_assert!(w.iter().all(|x| *x >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_predictive_is_normalized(seed in any::<u64>(), steps in 0usize..4) {
        let mut r = rng(seed);
        let class = random_class(&mut r, 3, 3, 3, 3);
        let h = random_history(&mut r, &class.models()[0], steps);
        let mut b = MixtureBelief::prior(&class);
        let mut prefix = History::new();
        for (a, e) in h.steps() {
            b = posterior_update(&b, &class, &prefix, *a, e).unwrap();
            prefix = prefix.extend(*a, *e);
        }
        for a in 0..class.num_actions() {
            let total: f64 = class
                .percepts()
                .iter()
                .map(|e| mixture_percept_prob(&b, &class, &h, ActionId::new(a), e).unwrap())
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn values_are_bounded(seed in any::<u64>(), m in 1usize..4, gamma in 0.0f64..0.99) {
        let mut r = rng(seed);
        let class = random_class(&mut r, 2, 2, 3, 2);
        let params = PlanningParams::new(m, gamma).unwrap();
        let q = optimal_action_values(&MixtureBelief::prior(&class), &class, &History::new(), &params)
            .unwrap();
        for v in q.values() {
            prop_assert!(*v >= -1e-12 && *v <= params.max_value() + 1e-12);
        }
    }

    #[test]
    fn softmax_argmax_matches_q_argmax(values in prop::collection::vec(-20i32..20, 1..8)) {
        let q = ActionValues::new(values.iter().map(|v| *v as f64 / 4.0).collect());
        prop_assert_eq!(argmax(&softmax_log_policy(&q)), q.argmax().index());
        prop_assert_eq!(argmax(&softmax_policy(&q)), q.argmax().index());
    }

    #[test]
    fn zero_lambda_is_greedy(
        values in prop::collection::vec(-1.0f64..1.0, 2..6),
        seed in any::<u64>(),
    ) {
        let n = values.len();
        let mut r = rng(seed);
        let pi = floor_distribution(&random_distribution(&mut r, n, true), 1e-6);
        let zeta = floor_distribution(&random_distribution(&mut r, n, true), 1e-6);
        let q = ActionValues::new(values);
        let reg = RegularizationParams { lambda: 0.0, kappa: 1e-6 };
        prop_assert_eq!(self_aixi_action(&q, &pi, &zeta, &reg), q.argmax());
    }

    #[test]
    fn kl_is_nonnegative(p in distribution(4), q in distribution(4)) {
        let q = floor_distribution(&q, 1e-6);
        prop_assert!(kl_policy(&p, &q) >= 0.0);
        prop_assert_eq!(kl_policy(&q, &q), 0.0);
    }

    #[test]
    fn floor_keeps_a_distribution(p in distribution(5)) {
        let f = floor_distribution(&p, 1e-6);
        prop_assert!(f.iter().all(|x| *x >= 1e-6));
        prop_assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_bounds(ch in channel(4, 3), p in distribution(4)) {
        // Near-degenerate channels converge sublinearly.
        let cap = channel_capacity(&ch, 1e-9, 1_000_000).unwrap();
        let ceiling = (ch.num_inputs() as f64).ln().min((ch.num_outputs() as f64).ln());
        prop_assert!(cap.capacity >= 0.0 && cap.capacity <= ceiling + 1e-9);
        prop_assert!(cap.capacity >= mutual_information(&ch, &p) - 1e-9);
        let achieved = mutual_information(&ch, &cap.optimal_input);
        prop_assert!(achieved >= cap.capacity - 1e-9);
    }

    #[test]
    fn variational_bound(ch in channel(3, 3), p in distribution(3), seed in any::<u64>()) {
        let mi = mutual_information(&ch, &p);
        let exact = variational_empowerment(&ch, &p, &Decoder::posterior(&ch, &p)).unwrap();
        prop_assert!((exact - mi).abs() < 1e-12);
        let mut r = rng(seed);
        let rows = (0..ch.num_outputs())
            .map(|_| random_distribution(&mut r, ch.num_inputs(), false))
            .collect();
        let q = Decoder::new(rows).unwrap();
        prop_assert!(variational_empowerment(&ch, &p, &q).unwrap() <= mi + 1e-9);
    }

    #[test]
    fn extend_leaves_the_original_untouched(seed in any::<u64>(), a in 0usize..2) {
        let mut r = rng(seed);
        let class = random_class(&mut r, 1, 2, 2, 1);
        let len = r.gen_range(0..4);
        let h = random_history(&mut r, &class.models()[0], len);
        let before = h.clone();
        let e = class.percepts()[0];
        let longer = h.extend(ActionId::new(a), e);
        prop_assert_eq!(&h, &before);
        prop_assert_eq!(longer.len(), h.len() + 1);
        prop_assert_eq!(longer.last(), Some(&(ActionId::new(a), e)));
    }
}
