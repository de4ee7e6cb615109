//! Posterior maintenance over a finite environment class and the mixture
//! predictive `ξ(e | h, a) = Σ_ν w(ν | h) ν(e | h, a)`.

use serde::{Deserialize, Serialize};

use crate::env_core::{ActionId, EnvironmentClass, History, Percept, PerceptPredictor};
use crate::error::{Error, Result};
use crate::prob::{check_distribution, log_sum_exp};

/// Normalized log-space weights; `log_sum_exp(log_weights) == 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct LogWeights {
    log_weights: Vec<f64>,
}

impl LogWeights {
    pub(crate) fn from_probabilities(weights: &[f64], field: &str) -> Result<Self> {
        check_distribution(weights, field)?;
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub(crate) fn probabilities(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub(crate) fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Multiplies in `likelihoods` and renormalizes.
    pub(crate) fn update(&self, likelihoods: &[f64], what: &str) -> Result<Self> {
        let unnormalized: Vec<f64> = self
            .log_weights
            .iter()
            .zip(likelihoods)
            .map(|(lw, &l)| {
                if l > 0.0 {
                    lw + l.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let total = log_sum_exp(&unnormalized);
        if total == f64::NEG_INFINITY {
            return Err(Error::ImpossibleEvidence(what.to_string()));
        }
        Ok(Self {
            log_weights: unnormalized.iter().map(|l| l - total).collect(),
        })
    }
}

/// Posterior `w(ν | h)` aligned with an [`EnvironmentClass`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureBelief {
    inner: LogWeights,
}

impl MixtureBelief {
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        Ok(Self {
            inner: LogWeights::from_probabilities(weights, "weights")?,
        })
    }

    pub fn prior(class: &EnvironmentClass) -> Self {
        Self::from_weights(class.prior()).expect("class prior is validated at construction")
    }

    pub fn weights(&self) -> Vec<f64> {
        self.inner.probabilities()
    }

    pub fn log_weights(&self) -> &[f64] {
        self.inner.log_weights()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len() == 0
    }

    pub(crate) fn check_aligned(&self, class: &EnvironmentClass) -> Result<()> {
        if self.len() != class.len() {
            return Err(Error::config(
                "belief",
                format!(
                    "{} weights for a class of {} models",
                    self.len(),
                    class.len()
                ),
            ));
        }
        Ok(())
    }
}

/// `w'(ν) ∝ w(ν) ν(e | h, a)`.
pub fn posterior_update(
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    action: ActionId,
    percept: &Percept,
) -> Result<MixtureBelief> {
    belief.check_aligned(class)?;
    let likelihoods = class
        .models()
        .iter()
        .map(|m| m.percept_prob(h, action, percept))
        .collect::<Result<Vec<_>>>()?;
    let inner = belief.inner.update(
        &likelihoods,
        &format!("percept {percept:?} after action {}", action.index()),
    )?;
    Ok(MixtureBelief { inner })
}

/// `ξ(e | h, a)`.
pub fn mixture_percept_prob(
    belief: &MixtureBelief,
    class: &EnvironmentClass,
    h: &History,
    action: ActionId,
    percept: &Percept,
) -> Result<f64> {
    belief.check_aligned(class)?;
    let mut total = 0.0;
    for (w, m) in belief.weights().iter().zip(class.models()) {
        total += w * m.percept_prob(h, action, percept)?;
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Bayes-adaptive mixture predictor: the belief is the posterior at the
/// history handed to [`PerceptPredictor::cursor`], and every hypothetical
/// percept updates it.
#[derive(Clone, Copy, Debug)]
pub struct BayesMixture<'a> {
    pub class: &'a EnvironmentClass,
    pub belief: &'a MixtureBelief,
}

impl<'a> BayesMixture<'a> {
    pub fn new(class: &'a EnvironmentClass, belief: &'a MixtureBelief) -> Result<Self> {
        belief.check_aligned(class)?;
        Ok(Self { class, belief })
    }
}

/// Per-model machine states plus linear posterior weights.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureCursor {
    pub states: Vec<usize>,
    pub weights: Vec<f64>,
}

impl MixtureCursor {
    /// Exact bit pattern, usable as a memo key.
    pub fn key(&self) -> (Vec<usize>, Vec<u64>) {
        (
            self.states.clone(),
            self.weights.iter().map(|w| w.to_bits()).collect(),
        )
    }
}

impl PerceptPredictor for BayesMixture<'_> {
    type Cursor = MixtureCursor;

    fn num_actions(&self) -> usize {
        self.class.num_actions()
    }

    fn percepts(&self) -> &[Percept] {
        self.class.percepts()
    }

    fn cursor(&self, h: &History) -> Result<MixtureCursor> {
        let states = self
            .class
            .models()
            .iter()
            .map(|m| m.state_after(h))
            .collect::<Result<Vec<_>>>()?;
        Ok(MixtureCursor {
            states,
            weights: self.belief.weights(),
        })
    }

    fn predict(&self, cursor: &MixtureCursor, action: ActionId) -> Vec<f64> {
        let mut out = vec![0.0; self.percepts().len()];
        for ((m, &s), &w) in self
            .class
            .models()
            .iter()
            .zip(&cursor.states)
            .zip(&cursor.weights)
        {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(m.distribution_at(s, action)) {
                *o += w * p;
            }
        }
        out
    }

    fn advance(
        &self,
        cursor: &MixtureCursor,
        action: ActionId,
        percept: usize,
    ) -> Result<MixtureCursor> {
        let models = self.class.models();
        let mut weights: Vec<f64> = cursor
            .weights
            .iter()
            .zip(models.iter().zip(&cursor.states))
            .map(|(w, (m, &s))| w * m.distribution_at(s, action)[percept])
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleEvidence(format!(
                "percept index {percept} after action {} has zero mixture probability",
                action.index()
            )));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        let states = models
            .iter()
            .zip(&cursor.states)
            .map(|(m, &s)| m.successor(s, action, percept))
            .collect();
        Ok(MixtureCursor { states, weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_core::{make_env, EnvSpec, EnvironmentModel};

    fn bandit(p: &[f64]) -> EnvironmentModel {
        make_env(&EnvSpec::BernoulliBandit {
            probabilities: p.to_vec(),
        })
        .unwrap()
    }

    fn win() -> Percept {
        Percept::new(1, 1.0).unwrap()
    }

    fn lose() -> Percept {
        Percept::new(0, 0.0).unwrap()
    }

    #[test]
    fn dirac_hypotheses_are_resolved_by_one_observation() {
        let class = EnvironmentClass::uniform(vec![bandit(&[1.0]), bandit(&[0.0])]).unwrap();
        let b = MixtureBelief::prior(&class);
        let post = posterior_update(&b, &class, &History::new(), ActionId::new(0), &win()).unwrap();
        assert_eq!(post.weights(), vec![1.0, 0.0]);
    }

    #[test]
    fn one_step_bayes_rule() {
        let class = EnvironmentClass::uniform(vec![bandit(&[0.9]), bandit(&[0.1])]).unwrap();
        let b = MixtureBelief::prior(&class);
        let post = posterior_update(&b, &class, &History::new(), ActionId::new(0), &win()).unwrap();
        let expected = 0.5 * 0.9 / (0.5 * 0.9 + 0.5 * 0.1);
        assert!((post.weights()[0] - expected).abs() < 1e-12);
        assert!((post.weights()[1] - (1.0 - expected)).abs() < 1e-12);
    }

    #[test]
    fn impossible_evidence_is_an_error() {
        let class = EnvironmentClass::uniform(vec![bandit(&[1.0]), bandit(&[1.0])]).unwrap();
        let b = MixtureBelief::prior(&class);
        let err = posterior_update(&b, &class, &History::new(), ActionId::new(0), &lose());
        assert!(matches!(err, Err(Error::ImpossibleEvidence(_))));
    }

    #[test]
    fn mixture_of_disjoint_diracs() {
        let class = EnvironmentClass::uniform(vec![bandit(&[1.0]), bandit(&[0.0])]).unwrap();
        let b = MixtureBelief::prior(&class);
        let h = History::new();
        let a = ActionId::new(0);
        assert_eq!(
            mixture_percept_prob(&b, &class, &h, a, &win()).unwrap(),
            0.5
        );
        assert_eq!(
            mixture_percept_prob(&b, &class, &h, a, &lose()).unwrap(),
            0.5
        );

        let degenerate = MixtureBelief::from_weights(&[1.0, 0.0]).unwrap();
        let p = mixture_percept_prob(&degenerate, &class, &h, a, &win()).unwrap();
        assert_eq!(p, class.models()[0].percept_prob(&h, a, &win()).unwrap());
    }

    #[test]
    fn misaligned_belief_is_rejected() {
        let class = EnvironmentClass::uniform(vec![bandit(&[0.5])]).unwrap();
        let b = MixtureBelief::from_weights(&[0.5, 0.5]).unwrap();
        assert!(
            mixture_percept_prob(&b, &class, &History::new(), ActionId::new(0), &win()).is_err()
        );
    }

    #[test]
    fn cursor_update_matches_posterior_update() {
        let class =
            EnvironmentClass::uniform(vec![bandit(&[0.9, 0.3]), bandit(&[0.2, 0.6])]).unwrap();
        let b = MixtureBelief::prior(&class);
        let mix = BayesMixture::new(&class, &b).unwrap();
        let h = History::new();
        let a = ActionId::new(1);
        let c = mix.cursor(&h).unwrap();
        let next = mix.advance(&c, a, 1).unwrap();
        let post = posterior_update(&b, &class, &h, a, &win()).unwrap();
        for (x, y) in next.weights.iter().zip(post.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
