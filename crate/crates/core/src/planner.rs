//! Finite-horizon expectimax for `Q*_ξ` and `V*_ξ`, the AIXI action rule,
//! its softmax form and the entropy objective `L_AIXI`.
//!
//! The recursion is Bayes-adaptive: every hypothetical percept updates the
//! mixture weights before the next level is expanded, so
//!
//! ```text
//! Q(h, a) = Σ_e ξ(e | h, a) (r(e) + γ V(h ⊕ (a, e))),   V(h) = max_a Q(h, a)
//! ```
//!
//! with `V = 0` once the horizon is exhausted.

use crate::bayes::{posterior_update, BayesMixture, MixtureBelief, MixtureCursor};
use crate::env_core::{ActionId, ActionLaw, EnvironmentClass, History, PerceptPredictor};
use crate::error::{Error, Result};
use crate::prob::{argmax, entropy, floor_distribution};

/// Lookahead depth and discount.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanningParams {
    horizon: usize,
    gamma: f64,
}

impl PlanningParams {
    pub fn new(horizon: usize, gamma: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::config("gamma", format!("{gamma} is outside [0, 1)")));
        }
        Ok(Self { horizon, gamma })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `(1 - γ^m) / (1 - γ)`, the largest attainable value for rewards in [0, 1].
    pub fn max_value(&self) -> f64 {
        (1.0 - self.gamma.powi(self.horizon as i32)) / (1.0 - self.gamma)
    }
}

/// `Q(h, ·)` for a fixed history, indexed by action.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionValues(Vec<f64>);

impl ActionValues {
    pub fn new(values: Vec<f64>) -> Self {
        ActionValues(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, action: ActionId) -> f64 {
        self.0[action.index()]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Lowest-index maximizer.
    pub fn argmax(&self) -> ActionId {
        ActionId::new(argmax(&self.0))
    }

    pub fn max(&self) -> f64 {
        self.0[argmax(&self.0)]
    }
}

/// Extra per-step reward evaluated at the cursor reached after each percept.
pub type Shaping<'s, C> = dyn FnMut(&C) -> Result<f64> + 's;

fn q_node<P: PerceptPredictor>(
    predictor: &P,
    cursor: &P::Cursor,
    action: ActionId,
    depth: usize,
    gamma: f64,
    shaping: &mut Option<&mut Shaping<'_, P::Cursor>>,
) -> Result<f64> {
    let predictive = predictor.predict(cursor, action);
    let mut total = 0.0;
    for (e, &prob) in predictive.iter().enumerate() {
        if prob == 0.0 {
            continue;
        }
        let next = predictor.advance(cursor, action, e)?;
        let mut value = predictor.percepts()[e].reward;
        if let Some(f) = shaping.as_mut() {
            value += f(&next)?;
        }
        if depth > 1 {
            value += gamma * v_node(predictor, &next, depth - 1, gamma, shaping)?;
        }
        total += prob * value;
    }
    Ok(total)
}

fn v_node<P: PerceptPredictor>(
    predictor: &P,
    cursor: &P::Cursor,
    depth: usize,
    gamma: f64,
    shaping: &mut Option<&mut Shaping<'_, P::Cursor>>,
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for a in 0..predictor.num_actions() {
        let q = q_node(predictor, cursor, ActionId::new(a), depth, gamma, shaping)?;
        if q > best {
            best = q;
        }
    }
    Ok(best)
}

/// Expectimax action values under any exact predictor, with an optional
/// shaping term added to the reward of every simulated step.
pub fn plan_action_values<P: PerceptPredictor>(
    predictor: &P,
    h: &History,
    params: &PlanningParams,
    mut shaping: Option<&mut Shaping<'_, P::Cursor>>,
) -> Result<ActionValues> {
    let cursor = predictor.cursor(h)?;
    let values = (0..predictor.num_actions())
        .map(|a| {
            q_node(
                predictor,
                &cursor,
                ActionId::new(a),
                params.horizon,
                params.gamma,
                &mut shaping,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ActionValues(values))
}

/// `Q*_ξ(h, ·)` with an optional shaping term on the mixture cursor.
pub fn optimal_action_values_shaped(
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    params: &PlanningParams,
    shaping: Option<&mut Shaping<'_, MixtureCursor>>,
) -> Result<ActionValues> {
    let mixture = BayesMixture::new(class, belief)?;
    plan_action_values(&mixture, h, params, shaping)
}

pub fn optimal_action_values(
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    params: &PlanningParams,
) -> Result<ActionValues> {
    optimal_action_values_shaped(belief, class, h, params, None)
}

/// `Q*_ξ(h, a)`.
pub fn optimal_q(
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    action: ActionId,
    params: &PlanningParams,
) -> Result<f64> {
    let mixture = BayesMixture::new(class, belief)?;
    class.models()[0].check_action(action)?;
    let cursor = mixture.cursor(h)?;
    q_node(
        &mixture,
        &cursor,
        action,
        params.horizon,
        params.gamma,
        &mut None,
    )
}

/// `V*_ξ(h) = max_a Q*_ξ(h, a)`.
pub fn optimal_value(
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    params: &PlanningParams,
) -> Result<f64> {
    Ok(optimal_action_values(belief, class, h, params)?.max())
}

/// Lowest-index maximizer of `Q*_ξ(h, ·)`.
pub fn aixi_action(
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    params: &PlanningParams,
) -> Result<ActionId> {
    Ok(optimal_action_values(belief, class, h, params)?.argmax())
}

/// `p(a) ∝ exp(Q(a))` at unit temperature, shifted by the maximum.
pub fn softmax_policy(q: &ActionValues) -> Vec<f64> {
    let max = q.max();
    let exps: Vec<f64> = q.values().iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|x| x / total).collect()
}

/// Log-probabilities of [`softmax_policy`]: `Q(a) - ln Σ exp Q`.
pub fn softmax_log_policy(q: &ActionValues) -> Vec<f64> {
    let lse = crate::prob::log_sum_exp(q.values());
    q.values().iter().map(|v| v - lse).collect()
}

/// `L_AIXI = -E_{a~p} ln p(a)`.
pub fn aixi_loss(policy: &[f64]) -> f64 {
    entropy(policy)
}

/// The ξ-optimal policy as a history-dependent action law: a floored
/// one-hot vector on the expectimax action.
///
/// The belief is the posterior at `root`; histories passed to
/// [`ActionLaw::action_distribution`] must extend `root`, and the suffix is
/// absorbed with exact Bayes updates. A suffix percept that no model
/// supports leaves the weights unchanged.
#[derive(Clone, Debug)]
pub struct OptimalPolicy<'a> {
    class: &'a EnvironmentClass,
    belief: MixtureBelief,
    root_len: usize,
    params: PlanningParams,
    kappa: f64,
}

impl<'a> OptimalPolicy<'a> {
    pub fn new(
        class: &'a EnvironmentClass,
        belief: &MixtureBelief,
        root: &History,
        params: PlanningParams,
        kappa: f64,
    ) -> Result<Self> {
        belief.check_aligned(class)?;
        Ok(Self {
            class,
            belief: belief.clone(),
            root_len: root.len(),
            params,
            kappa,
        })
    }
}

impl ActionLaw for OptimalPolicy<'_> {
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
                match posterior_update(&belief, self.class, &prefix, *a, e) {
                    Ok(next) => belief = next,
                    Err(Error::ImpossibleEvidence(_)) => {}
                    Err(other) => return Err(other),
                }
            }
            prefix.push(*a, *e);
        }
        let best = aixi_action(&belief, self.class, h, &self.params)?;
        let mut one_hot = vec![0.0; self.class.num_actions()];
        one_hot[best.index()] = 1.0;
        Ok(floor_distribution(&one_hot, self.kappa))
    }
}
