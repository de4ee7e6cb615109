//! The Self-AIXI learner.
//!
//! The agent keeps a Bayesian mixture over a finite policy class,
//! `ζ(a | h) = Σ_π ω(π | h) π(a | h)`, evaluates actions by
//!
//! ```text
//! Q_ξ^ζ(h, a) = Σ_π ω(π | h) Σ_ν w(ν | h) Q_ν^π(h, a)
//! ```
//!
//! and acts by the KL-regularized rule
//! `argmax_a Q_ξ^ζ(h, a) - λ ln(π*(a | h) / ζ(a | h))`.
//!
//! Distributions that enter a log-ratio are floored: mixed with the uniform
//! distribution at total weight `κ·A`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::bayes::{LogWeights, MixtureBelief};
use crate::env_core::{
    ActionId, ActionLaw, EnvironmentClass, EnvironmentModel, History, MAX_OBSERVATIONS,
};
use crate::error::{Error, Result};
use crate::planner::{ActionValues, PlanningParams};
use crate::prob::{argmax, check_distribution, entropy, floor_distribution, uniform};

/// Default probability floor.
pub const DEFAULT_KAPPA: f64 = 1e-6;
/// Default regularization strength for regularized runs.
pub const DEFAULT_LAMBDA: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
enum PolicyLaw {
    /// Same distribution after every history.
    Fixed(Vec<f64>),
    /// Distribution chosen by the most recent observation.
    Reactive {
        initial: Vec<f64>,
        by_observation: Vec<Vec<f64>>,
    },
}

/// A candidate policy `π ∈ P`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyModel {
    name: String,
    num_actions: usize,
    law: PolicyLaw,
}

impl PolicyModel {
    pub fn fixed(name: impl Into<String>, probabilities: Vec<f64>) -> Result<Self> {
        check_distribution(&probabilities, "probabilities")?;
        Ok(Self {
            name: name.into(),
            num_actions: probabilities.len(),
            law: PolicyLaw::Fixed(probabilities),
        })
    }

    pub fn reactive(
        name: impl Into<String>,
        initial: Vec<f64>,
        by_observation: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_distribution(&initial, "initial")?;
        if by_observation.len() > MAX_OBSERVATIONS {
            return Err(Error::config(
                "by_observation",
                "more rows than observations",
            ));
        }
        for row in &by_observation {
            check_distribution(row, "by_observation")?;
            if row.len() != initial.len() {
                return Err(Error::config(
                    "by_observation",
                    "row length differs from `initial`",
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            num_actions: initial.len(),
            law: PolicyLaw::Reactive {
                initial,
                by_observation,
            },
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn distribution_for(&self, last_observation: Option<u8>) -> Result<&[f64]> {
        match (&self.law, last_observation) {
            (PolicyLaw::Fixed(p), _) => Ok(p),
            (PolicyLaw::Reactive { initial, .. }, None) => Ok(initial),
            (PolicyLaw::Reactive { by_observation, .. }, Some(o)) => by_observation
                .get(o as usize)
                .map(Vec::as_slice)
                .ok_or_else(|| {
                    Error::config(
                        "by_observation",
                        format!("policy `{}` has no row for observation {o}", self.name),
                    )
                }),
        }
    }

    /// Memo key of the policy's internal state.
    fn state_key(&self, last_observation: Option<u8>) -> usize {
        match (&self.law, last_observation) {
            (PolicyLaw::Fixed(_), _) | (_, None) => 0,
            (_, Some(o)) => o as usize + 1,
        }
    }

    /// `π(a | h)`.
    pub fn action_prob(&self, h: &History, action: ActionId) -> Result<f64> {
        Ok(self
            .distribution_for(h.last_observation())?
            .get(action.index())
            .copied()
            .unwrap_or(0.0))
    }
}

impl ActionLaw for PolicyModel {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn action_distribution(&self, h: &History) -> Result<Vec<f64>> {
        Ok(self.distribution_for(h.last_observation())?.to_vec())
    }
}

/// Descriptor for policy builders.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    Always {
        action: usize,
    },
    /// `1 - epsilon` on `action`, the rest spread evenly over the others.
    SoftAlways {
        action: usize,
        epsilon: f64,
    },
    Uniform,
    Fixed {
        probabilities: Vec<f64>,
    },
    Reactive {
        initial: Vec<f64>,
        by_observation: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyClassSpec {
    pub policies: Vec<PolicySpec>,
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
}

pub fn make_policy(spec: &PolicySpec, num_actions: usize) -> Result<PolicyModel> {
    let check_action = |action: usize| {
        if action >= num_actions {
            Err(Error::config(
                "action",
                format!("{action} is outside the alphabet of {num_actions} actions"),
            ))
        } else {
            Ok(())
        }
    };
    let model = match spec {
        PolicySpec::Always { action } => {
            check_action(*action)?;
            let mut p = vec![0.0; num_actions];
            p[*action] = 1.0;
            PolicyModel::fixed(format!("always({action})"), p)?
        }
        PolicySpec::SoftAlways { action, epsilon } => {
            check_action(*action)?;
            if !(0.0..=1.0).contains(epsilon) || num_actions < 2 && *epsilon > 0.0 {
                return Err(Error::config("epsilon", format!("{epsilon} is not usable")));
            }
            let mut p = vec![epsilon / (num_actions.max(2) - 1) as f64; num_actions];
            p[*action] = 1.0 - epsilon;
            PolicyModel::fixed(format!("soft_always({action}, {epsilon})"), p)?
        }
        PolicySpec::Uniform => PolicyModel::fixed("uniform", uniform(num_actions))?,
        PolicySpec::Fixed { probabilities } => {
            PolicyModel::fixed(format!("fixed{probabilities:?}"), probabilities.clone())?
        }
        PolicySpec::Reactive {
            initial,
            by_observation,
        } => PolicyModel::reactive("reactive", initial.clone(), by_observation.clone())?,
    };
    if model.num_actions() != num_actions {
        return Err(Error::config(
            "probabilities",
            format!(
                "policy has {} actions, environment has {num_actions}",
                model.num_actions()
            ),
        ));
    }
    Ok(model)
}

/// Finite policy class `P` with prior `ω(π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyClass {
    policies: Vec<PolicyModel>,
    prior: Vec<f64>,
}

impl PolicyClass {
    pub fn new(policies: Vec<PolicyModel>, prior: Vec<f64>) -> Result<Self> {
        if policies.is_empty() {
            return Err(Error::config("policies", "class needs at least one policy"));
        }
        if prior.len() != policies.len() {
            return Err(Error::config("prior", "one weight per policy required"));
        }
        if prior.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::config("prior", "weights must be strictly positive"));
        }
        check_distribution(&prior, "prior")?;
        let a = policies[0].num_actions();
        if policies.iter().any(|p| p.num_actions() != a) {
            return Err(Error::config(
                "policies",
                "policies disagree on the action count",
            ));
        }
        Ok(Self { policies, prior })
    }

    pub fn uniform(policies: Vec<PolicyModel>) -> Result<Self> {
        let n = policies.len().max(1);
        Self::new(policies, vec![1.0 / n as f64; n])
    }

    pub fn policies(&self) -> &[PolicyModel] {
        &self.policies
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    pub fn num_actions(&self) -> usize {
        self.policies[0].num_actions()
    }
}

pub fn make_policy_class(spec: &PolicyClassSpec, num_actions: usize) -> Result<PolicyClass> {
    let policies = spec
        .policies
        .iter()
        .map(|p| make_policy(p, num_actions))
        .collect::<Result<Vec<_>>>()?;
    match &spec.prior {
        Some(prior) => PolicyClass::new(policies, prior.clone()),
        None => PolicyClass::uniform(policies),
    }
}

/// Posterior `ω(π | h)` aligned with a [`PolicyClass`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyBelief {
    inner: LogWeights,
}

impl PolicyBelief {
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        Ok(Self {
            inner: LogWeights::from_probabilities(weights, "weights")?,
        })
    }

    pub fn prior(class: &PolicyClass) -> Self {
        Self::from_weights(class.prior()).expect("class prior is validated at construction")
    }

    pub fn weights(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len() == 0
    }

    fn check_aligned(&self, class: &PolicyClass) -> Result<()> {
        if self.len() != class.len() {
            return Err(Error::config(
                "policy_belief",
                format!(
                    "{} weights for a class of {} policies",
                    self.len(),
                    class.len()
                ),
            ));
        }
        Ok(())
    }
}

/// `κ` and the signed regularization strength `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationParams {
    pub lambda: f64,
    pub kappa: f64,
}

impl Default for RegularizationParams {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            kappa: DEFAULT_KAPPA,
        }
    }
}

impl RegularizationParams {
    pub fn new(lambda: f64, kappa: f64, num_actions: usize) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::config("lambda", "must be finite"));
        }
        if !(kappa > 0.0 && kappa < 1.0 / num_actions as f64) {
            return Err(Error::config(
                "kappa",
                format!("{kappa} is outside (0, 1/{num_actions})"),
            ));
        }
        Ok(Self { lambda, kappa })
    }
}

/// Floored `ζ(· | h)`.
pub fn zeta_distribution(
    belief: &PolicyBelief,
    class: &PolicyClass,
    h: &History,
    kappa: f64,
) -> Result<Vec<f64>> {
    Ok(floor_distribution(&raw_zeta(belief, class, h)?, kappa))
}

fn raw_zeta(belief: &PolicyBelief, class: &PolicyClass, h: &History) -> Result<Vec<f64>> {
    belief.check_aligned(class)?;
    let mut zeta = vec![0.0; class.num_actions()];
    for (w, policy) in belief.weights().iter().zip(class.policies()) {
        for (z, p) in zeta
            .iter_mut()
            .zip(policy.distribution_for(h.last_observation())?)
        {
            *z += w * p;
        }
    }
    Ok(zeta)
}

/// Floored `ζ(a | h)`.
pub fn zeta_prob(
    belief: &PolicyBelief,
    class: &PolicyClass,
    h: &History,
    action: ActionId,
    kappa: f64,
) -> Result<f64> {
    let zeta = zeta_distribution(belief, class, h, kappa)?;
    zeta.get(action.index())
        .copied()
        .ok_or_else(|| Error::config("action", "outside the policy alphabet"))
}

/// `ω'(π) ∝ ω(π) π(a | h)`.
pub fn policy_posterior_update(
    belief: &PolicyBelief,
    class: &PolicyClass,
    h: &History,
    action: ActionId,
) -> Result<PolicyBelief> {
    belief.check_aligned(class)?;
    let likelihoods = class
        .policies()
        .iter()
        .map(|p| p.action_prob(h, action))
        .collect::<Result<Vec<_>>>()?;
    let inner = belief.inner.update(
        &likelihoods,
        &format!(
            "action {} has zero probability under every policy",
            action.index()
        ),
    )?;
    Ok(PolicyBelief { inner })
}

/// Shaping term for a single model, evaluated at `(model index, successor state)`.
pub type StateShaping<'s> = dyn FnMut(usize, usize) -> Result<f64> + 's;

/// Exact finite-horizon evaluation of one policy in one environment,
/// memoized on `(machine state, policy state, depth)`.
struct PolicyEvaluator<'a, 's, 'f> {
    env: &'a EnvironmentModel,
    env_index: usize,
    policy: &'a PolicyModel,
    gamma: f64,
    memo: HashMap<(usize, usize, usize), f64>,
    shaping: Option<&'f mut StateShaping<'s>>,
}

impl PolicyEvaluator<'_, '_, '_> {
    fn q(&mut self, state: usize, action: ActionId, depth: usize) -> Result<f64> {
        if depth == 0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (e, &prob) in self.env.distribution_at(state, action).iter().enumerate() {
            if prob == 0.0 {
                continue;
            }
            let next = self.env.successor(state, action, e);
            let percept = self.env.percepts()[e];
            let mut value = percept.reward;
            if let Some(f) = self.shaping.as_mut() {
                value += f(self.env_index, next)?;
            }
            if depth > 1 {
                value += self.gamma * self.v(next, Some(percept.observation), depth - 1)?;
            }
            total += prob * value;
        }
        Ok(total)
    }

    fn v(&mut self, state: usize, last_observation: Option<u8>, depth: usize) -> Result<f64> {
        let key = (state, self.policy.state_key(last_observation), depth);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let dist = self.policy.distribution_for(last_observation)?.to_vec();
        let mut total = 0.0;
        for (a, &p) in dist.iter().enumerate() {
            if p > 0.0 {
                total += p * self.q(state, ActionId::new(a), depth)?;
            }
        }
        self.memo.insert(key, total);
        Ok(total)
    }
}

/// `Q_ν^π(h, a)` at depth `m`.
pub fn policy_q(
    policy: &PolicyModel,
    env: &EnvironmentModel,
    h: &History,
    action: ActionId,
    params: &PlanningParams,
) -> Result<f64> {
    env.check_action(action)?;
    let state = env.state_after(h)?;
    PolicyEvaluator {
        env,
        env_index: 0,
        policy,
        gamma: params.gamma(),
        memo: HashMap::new(),
        shaping: None,
    }
    .q(state, action, params.horizon())
}

/// `V_ν^π(h)` at depth `m`.
pub fn policy_value(
    policy: &PolicyModel,
    env: &EnvironmentModel,
    h: &History,
    params: &PlanningParams,
) -> Result<f64> {
    let state = env.state_after(h)?;
    PolicyEvaluator {
        env,
        env_index: 0,
        policy,
        gamma: params.gamma(),
        memo: HashMap::new(),
        shaping: None,
    }
    .v(state, h.last_observation(), params.horizon())
}

/// `Q_ξ^ζ(h, ·)` together with the value of the mixture policy,
/// `V_ξ^ζ(h) = Σ_π ω(π) Σ_ν w(ν) V_ν^π(h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureEvaluation {
    pub q: ActionValues,
    pub value: f64,
}

pub fn evaluate_mixture(
    policy_belief: &PolicyBelief,
    policy_class: &PolicyClass,
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    params: &PlanningParams,
    mut shaping: Option<&mut StateShaping<'_>>,
) -> Result<MixtureEvaluation> {
    policy_belief.check_aligned(policy_class)?;
    belief.check_aligned(class)?;
    if policy_class.num_actions() != class.num_actions() {
        return Err(Error::config(
            "policy_class",
            "policy and environment alphabets differ",
        ));
    }
    let num_actions = class.num_actions();
    let mut q = vec![0.0; num_actions];
    let mut value = 0.0;
    let env_weights = belief.weights();
    for (omega, policy) in policy_belief.weights().iter().zip(policy_class.policies()) {
        if *omega == 0.0 {
            continue;
        }
        for (env_index, (w, env)) in env_weights.iter().zip(class.models()).enumerate() {
            if *w == 0.0 {
                continue;
            }
            let state = env.state_after(h)?;
            let mut eval = PolicyEvaluator {
                env,
                env_index,
                policy,
                gamma: params.gamma(),
                memo: HashMap::new(),
                shaping: shaping.as_deref_mut(),
            };
            for (a, slot) in q.iter_mut().enumerate() {
                *slot += omega * w * eval.q(state, ActionId::new(a), params.horizon())?;
            }
            value += omega * w * eval.v(state, h.last_observation(), params.horizon())?;
        }
    }
    Ok(MixtureEvaluation {
        q: ActionValues::new(q),
        value,
    })
}

/// `Q_ξ^ζ(h, a)`.
#[allow(clippy::too_many_arguments)]
pub fn q_zeta(
    policy_belief: &PolicyBelief,
    policy_class: &PolicyClass,
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    action: ActionId,
    params: &PlanningParams,
) -> Result<f64> {
    class.models()[0].check_action(action)?;
    let eval = evaluate_mixture(policy_belief, policy_class, belief, class, h, params, None)?;
    Ok(eval.q.get(action))
}

/// Lowest-index maximizer of `Q(a) - λ ln(π*(a) / ζ(a))`.
pub fn self_aixi_action(
    q_values: &ActionValues,
    pi_star: &[f64],
    zeta: &[f64],
    reg: &RegularizationParams,
) -> ActionId {
    ActionId::new(argmax(&regularized_scores(q_values, pi_star, zeta, reg)))
}

/// The scores maximized by [`self_aixi_action`].
pub fn regularized_scores(
    q_values: &ActionValues,
    pi_star: &[f64],
    zeta: &[f64],
    reg: &RegularizationParams,
) -> Vec<f64> {
    q_values
        .values()
        .iter()
        .zip(pi_star.iter().zip(zeta))
        .map(|(q, (p, z))| q - reg.lambda * (p / z).ln())
        .collect()
}

/// `KL(π* ‖ ζ)` in nats with `0 ln 0 = 0`.
pub fn kl_policy(pi_star: &[f64], zeta: &[f64]) -> f64 {
    pi_star
        .iter()
        .zip(zeta)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, z)| p * (p / z).ln())
        .sum::<f64>()
        .max(0.0)
}

/// `L_Self-AIXI = H(q_φ) + λ KL(π* ‖ ζ)`.
pub fn self_aixi_loss(
    q_phi: &[f64],
    pi_star: &[f64],
    zeta: &[f64],
    reg: &RegularizationParams,
) -> f64 {
    entropy(q_phi) + reg.lambda * kl_policy(pi_star, zeta)
}

/// The floored mixture policy ζ as a history-dependent action law.
///
/// The belief is the posterior at `root`; the actions in a history's suffix
/// beyond `root` update it. A suffix action that no policy supports leaves
/// the weights unchanged.
#[derive(Clone, Debug)]
pub struct MixturePolicy<'a> {
    class: &'a PolicyClass,
    belief: PolicyBelief,
    root_len: usize,
    kappa: f64,
}

impl<'a> MixturePolicy<'a> {
    pub fn new(
        class: &'a PolicyClass,
        belief: &PolicyBelief,
        root: &History,
        kappa: f64,
    ) -> Result<Self> {
        belief.check_aligned(class)?;
        Ok(Self {
            class,
            belief: belief.clone(),
            root_len: root.len(),
            kappa,
        })
    }
}

impl ActionLaw for MixturePolicy<'_> {
    fn num_actions(&self) -> usize {
        self.class.num_actions()
    }

    fn action_distribution(&self, h: &History) -> Result<Vec<f64>> {
        if h.len() < self.root_len {
            return Err(Error::config("history", "does not extend the policy root"));
        }
        let mut belief = self.belief.clone();
        let mut prefix = History::new();
        for (i, (a, e)) in h.steps().iter().enumerate() {
            if i >= self.root_len {
                match policy_posterior_update(&belief, self.class, &prefix, *a) {
                    Ok(next) => belief = next,
                    Err(Error::ImpossibleEvidence(_)) => {}
                    Err(other) => return Err(other),
                }
            }
            prefix.push(*a, *e);
        }
        zeta_distribution(&belief, self.class, h, self.kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_core::{make_env, EnvSpec, Percept};
    use crate::planner::optimal_q;

    fn always(a: usize, n: usize) -> PolicyModel {
        make_policy(&PolicySpec::Always { action: a }, n).unwrap()
    }

    fn bandit(p: &[f64]) -> EnvironmentModel {
        make_env(&EnvSpec::BernoulliBandit {
            probabilities: p.to_vec(),
        })
        .unwrap()
    }

    #[test]
    fn zeta_of_two_dirac_policies() {
        let class = PolicyClass::uniform(vec![always(0, 2), always(1, 2)]).unwrap();
        let b = PolicyBelief::prior(&class);
        let h = History::new();
        let p0 = zeta_prob(&b, &class, &h, ActionId::new(0), DEFAULT_KAPPA).unwrap();
        assert!((p0 - 0.5).abs() < 1e-15);
        let z = zeta_distribution(&b, &class, &h, DEFAULT_KAPPA).unwrap();
        assert!((z.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let degenerate = PolicyBelief::from_weights(&[1.0, 0.0]).unwrap();
        let p = zeta_prob(&degenerate, &class, &h, ActionId::new(0), DEFAULT_KAPPA).unwrap();
        assert!((p - 1.0).abs() <= 2.0 * DEFAULT_KAPPA);
    }

    #[test]
    fn policy_posterior_examples() {
        let class = PolicyClass::uniform(vec![always(0, 2), always(1, 2)]).unwrap();
        let b = PolicyBelief::prior(&class);
        let post = policy_posterior_update(&b, &class, &History::new(), ActionId::new(0)).unwrap();
        assert_eq!(post.weights(), vec![1.0, 0.0]);

        let flat = PolicyClass::uniform(vec![
            make_policy(&PolicySpec::Uniform, 3).unwrap(),
            make_policy(&PolicySpec::Uniform, 3).unwrap(),
        ])
        .unwrap();
        let fb = PolicyBelief::from_weights(&[0.3, 0.7]).unwrap();
        let after = policy_posterior_update(&fb, &flat, &History::new(), ActionId::new(2)).unwrap();
        for (x, y) in after.weights().iter().zip(fb.weights()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn unsupported_action_is_impossible_evidence() {
        let class = PolicyClass::uniform(vec![always(0, 3), always(1, 3)]).unwrap();
        let b = PolicyBelief::prior(&class);
        let err = policy_posterior_update(&b, &class, &History::new(), ActionId::new(2));
        assert!(matches!(err, Err(Error::ImpossibleEvidence(_))));
    }

    #[test]
    fn q_zeta_examples() {
        let envs =
            EnvironmentClass::uniform(vec![bandit(&[0.9, 0.0]), bandit(&[0.1, 0.0])]).unwrap();
        let w = MixtureBelief::prior(&envs);
        let policies = PolicyClass::uniform(vec![always(0, 2)]).unwrap();
        let omega = PolicyBelief::prior(&policies);
        let p = PlanningParams::new(1, 0.5).unwrap();
        let q = q_zeta(
            &omega,
            &policies,
            &w,
            &envs,
            &History::new(),
            ActionId::new(0),
            &p,
        )
        .unwrap();
        assert!((q - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_mixtures_match_the_planner() {
        let env = bandit(&[0.3, 0.8]);
        let envs = EnvironmentClass::uniform(vec![env]).unwrap();
        let w = MixtureBelief::prior(&envs);
        let policies = PolicyClass::uniform(vec![always(1, 2)]).unwrap();
        let omega = PolicyBelief::prior(&policies);
        let p = PlanningParams::new(4, 0.7).unwrap();
        let h = History::new().extend(ActionId::new(0), Percept::new(1, 1.0).unwrap());
        for a in 0..2 {
            let a = ActionId::new(a);
            let qz = q_zeta(&omega, &policies, &w, &envs, &h, a, &p).unwrap();
            let qs = optimal_q(&w, &envs, &h, a, &p).unwrap();
            assert!((qz - qs).abs() < 1e-9, "{qz} vs {qs}");
        }
    }

    #[test]
    fn action_rule_examples() {
        let reg = RegularizationParams {
            lambda: 0.5,
            kappa: DEFAULT_KAPPA,
        };
        let q = ActionValues::new(vec![0.5, 0.6]);
        let scores = regularized_scores(&q, &[0.9, 0.1], &[0.5, 0.5], &reg);
        assert!((scores[0] - (0.5 - 0.5 * 1.8f64.ln())).abs() < 1e-12);
        assert!((scores[1] - (0.6 - 0.5 * 0.2f64.ln())).abs() < 1e-12);
        assert!((scores[0] - 0.2061).abs() < 1e-4);
        assert!((scores[1] - 1.4047).abs() < 1e-4);
        assert_eq!(
            self_aixi_action(&q, &[0.9, 0.1], &[0.5, 0.5], &reg),
            ActionId::new(1)
        );

        let zero = RegularizationParams {
            lambda: 0.0,
            kappa: DEFAULT_KAPPA,
        };
        assert_eq!(
            self_aixi_action(&q, &[0.9, 0.1], &[0.5, 0.5], &zero),
            ActionId::new(1)
        );
        let q2 = ActionValues::new(vec![0.7, 0.6]);
        assert_eq!(
            self_aixi_action(&q2, &[0.1, 0.9], &[0.1, 0.9], &reg),
            ActionId::new(0)
        );
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_policy(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        assert!((kl_policy(&[1.0, 0.0], &[0.5, 0.5]) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn loss_examples() {
        let q_phi = [2.0 / 3.0, 1.0 / 3.0];
        let h = entropy(&q_phi);
        let zero = RegularizationParams {
            lambda: 0.0,
            kappa: DEFAULT_KAPPA,
        };
        assert_eq!(self_aixi_loss(&q_phi, &[1.0, 0.0], &[0.5, 0.5], &zero), h);
        let reg = RegularizationParams {
            lambda: 0.5,
            kappa: DEFAULT_KAPPA,
        };
        assert_eq!(self_aixi_loss(&q_phi, &[0.2, 0.8], &[0.2, 0.8], &reg), h);
        let l = self_aixi_loss(&q_phi, &[1.0, 0.0], &[0.5, 0.5], &reg);
        assert!((l - 0.9831).abs() < 1e-4);
        assert!((h - 0.6365).abs() < 1e-4);
    }

    #[test]
    fn regularization_params_validate_kappa() {
        assert!(RegularizationParams::new(0.1, 0.0, 2).is_err());
        assert!(RegularizationParams::new(0.1, 0.5, 2).is_err());
        assert!(RegularizationParams::new(-3.0, 1e-6, 16).is_ok());
    }

    #[test]
    fn reactive_policy_follows_last_observation() {
        let p = make_policy(
            &PolicySpec::Reactive {
                initial: vec![1.0, 0.0],
                by_observation: vec![vec![0.0, 1.0], vec![0.25, 0.75]],
            },
            2,
        )
        .unwrap();
        let h = History::new();
        assert_eq!(p.action_distribution(&h).unwrap(), vec![1.0, 0.0]);
        let h1 = h.extend(ActionId::new(0), Percept::new(1, 1.0).unwrap());
        assert_eq!(p.action_distribution(&h1).unwrap(), vec![0.25, 0.75]);
        let h2 = h.extend(ActionId::new(0), Percept::new(5, 0.0).unwrap());
        assert!(p.action_distribution(&h2).is_err());
    }
}
