use std::collections::HashMap;

use aixi_core::bayes::{BayesMixture, MixtureCursor};
use aixi_core::empowerment::{
    channel_at, channel_capacity, Channel, DEFAULT_CAPACITY_TOL, DEFAULT_MAX_ITER,
};
use aixi_core::planner::{aixi_loss, optimal_action_values_shaped, softmax_policy, Shaping};
use aixi_core::prob::floor_distribution;
use aixi_core::self_aixi::{
    evaluate_mixture, kl_policy, policy_posterior_update, self_aixi_action, self_aixi_loss,
    zeta_distribution, PolicyBelief, StateShaping,
};
use aixi_core::{posterior_update, Error, History, MixtureBelief, Percept, PerceptPredictor};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Resolved;
use crate::error::HarnessError;

/// Everything the agent computed at one step, before its beliefs absorb the
/// step's action and percept. Information quantities are in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    pub seed: u64,
    pub t: usize,
    pub lambda: f64,
    /// Action taken by the regularized rule.
    pub action: usize,
    /// `argmax_a Q_ξ^ζ(h, a)`.
    pub greedy_action: usize,
    pub percept: Percept,
    pub env_posterior: Vec<f64>,
    pub policy_posterior: Vec<f64>,
    pub q_star: Vec<f64>,
    pub q_zeta: Vec<f64>,
    pub pi_star: Vec<f64>,
    pub zeta: Vec<f64>,
    /// `V*_ξ(h)`.
    pub v_star: f64,
    /// `V_ξ^ζ(h)`, the exact value of the mixture policy.
    pub v_policy: f64,
    pub value_gap: f64,
    pub kl_pi_star_zeta: f64,
    pub l_aixi: f64,
    pub l_self_aixi: f64,
    pub loss_gap: f64,
    /// Capacity of the k-step channel of ξ at `h`.
    pub empowerment: f64,
}

/// Uniform draw in `[0, 1)` from the top 53 bits of one ChaCha8 output.
pub fn uniform_draw(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn sample_index(dist: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last = 0;
    for (i, &p) in dist.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        cumulative += p;
        last = i;
        if u < cumulative {
            return i;
        }
    }
    last
}

fn capacity(ch: &Channel) -> Result<f64, Error> {
    Ok(channel_capacity(ch, DEFAULT_CAPACITY_TOL, DEFAULT_MAX_ITER)?.capacity)
}

/// Memoized empowerment lookups shared across the steps of one episode.
#[derive(Default)]
struct EmpowermentCache {
    mixture: HashMap<(Vec<usize>, Vec<u64>), f64>,
    model: HashMap<(usize, usize), f64>,
}

pub fn run_episode(cfg: &Resolved, seed: u64) -> Result<Vec<StepRecord>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = History::new();
    let mut belief = MixtureBelief::prior(&cfg.class);
    let mut omega = PolicyBelief::prior(&cfg.policies);
    let mut cache = EmpowermentCache::default();
    let mut records = Vec::with_capacity(cfg.steps);

    for t in 0..cfg.steps {
        let mixture = BayesMixture::new(&cfg.class, &belief)?;
        let k = cfg.k;
        let beta = cfg.beta;

        let mut mixture_bonus = |cursor: &MixtureCursor| -> Result<f64, Error> {
            let key = cursor.key();
            if let Some(v) = cache.mixture.get(&key) {
                return Ok(*v);
            }
            let v = beta * capacity(&channel_at(&mixture, cursor, k)?)?;
            cache.mixture.insert(key, v);
            Ok(v)
        };
        let q_star = optimal_action_values_shaped(
            &belief,
            &cfg.class,
            &h,
            &cfg.params,
            if beta > 0.0 {
                Some(&mut mixture_bonus as &mut Shaping<'_, MixtureCursor>)
            } else {
                None
            },
        )?;

        let models = cfg.class.models();
        let mut model_bonus = |model: usize, state: usize| -> Result<f64, Error> {
            if let Some(v) = cache.model.get(&(model, state)) {
                return Ok(*v);
            }
            let v = beta * capacity(&channel_at(&models[model], &state, k)?)?;
            cache.model.insert((model, state), v);
            Ok(v)
        };
        let eval = evaluate_mixture(
            &omega,
            &cfg.policies,
            &belief,
            &cfg.class,
            &h,
            &cfg.params,
            if beta > 0.0 {
                Some(&mut model_bonus as &mut StateShaping<'_>)
            } else {
                None
            },
        )?;

        let mut one_hot = vec![0.0; cfg.class.num_actions()];
        one_hot[q_star.argmax().index()] = 1.0;
        let pi_star = floor_distribution(&one_hot, cfg.reg.kappa);
        let zeta = zeta_distribution(&omega, &cfg.policies, &h, cfg.reg.kappa)?;
        let action = self_aixi_action(&eval.q, &pi_star, &zeta, &cfg.reg);
        let greedy_action = eval.q.argmax();

        let v_star = q_star.max();
        let kl = kl_policy(&pi_star, &zeta);
        let l_aixi = aixi_loss(&softmax_policy(&q_star));
        let l_self_aixi = self_aixi_loss(&softmax_policy(&eval.q), &pi_star, &zeta, &cfg.reg);
        let empowerment = capacity(&channel_at(&mixture, &mixture.cursor(&h)?, k)?)?;

        let dist = cfg.env.percept_distribution(&h, action)?;
        let percept = cfg.env.percepts()[sample_index(&dist, uniform_draw(&mut rng))];

        records.push(StepRecord {
            seed,
            t,
            lambda: cfg.reg.lambda,
            action: action.index(),
            greedy_action: greedy_action.index(),
            percept,
            env_posterior: belief.weights(),
            policy_posterior: omega.weights(),
            q_star: q_star.values().to_vec(),
            q_zeta: eval.q.values().to_vec(),
            pi_star,
            zeta,
            v_star,
            v_policy: eval.value,
            value_gap: v_star - eval.value,
            kl_pi_star_zeta: kl,
            l_aixi,
            l_self_aixi,
            loss_gap: (l_aixi - l_self_aixi).abs(),
            empowerment,
        });

        belief = posterior_update(&belief, &cfg.class, &h, action, &percept)?;
        omega = match policy_posterior_update(&omega, &cfg.policies, &h, action) {
            Ok(next) => next,
            Err(Error::ImpossibleEvidence(_)) => omega,
            Err(other) => return Err(other.into()),
        };
        h = h.extend(action, percept);
    }
    Ok(records)
}

/// One episode per seed, run in parallel, returned in seed order.
pub fn run_seeds(cfg: &Resolved, seeds: &[u64]) -> Result<Vec<Vec<StepRecord>>, HarnessError> {
    seeds.par_iter().map(|&s| run_episode(cfg, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_draw_is_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = uniform_draw(&mut rng);
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn sampling_skips_zero_mass() {
        assert_eq!(sample_index(&[0.0, 1.0, 0.0], 0.999), 1);
        assert_eq!(sample_index(&[0.5, 0.0, 0.5], 0.5), 2);
        assert_eq!(sample_index(&[0.5, 0.5, 0.0], 0.9999999999999999), 1);
    }
}
