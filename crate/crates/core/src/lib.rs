//! Bayesian reinforcement-learning agents over finite environment and policy
//! classes: AIXI expectimax planning, the Self-AIXI policy-mixture learner,
//! and the information-theoretic quantities used to audit them.

pub mod bayes;
pub mod empowerment;
pub mod env_core;
pub mod error;
pub mod free_energy;
pub mod planner;
pub mod prob;
pub mod self_aixi;

pub use bayes::{mixture_percept_prob, posterior_update, BayesMixture, MixtureBelief};
pub use empowerment::{
    build_channel, channel_capacity, decomposition_report, empowerment, mutual_information,
    product_policy_prob, variational_empowerment, Channel, Decoder, DecompositionReport,
    EmpowermentResult,
};
pub use env_core::{
    make_env, make_env_class, ActionId, ActionLaw, EnvClassSpec, EnvSpec, EnvironmentClass,
    EnvironmentModel, History, Percept, PerceptPredictor,
};
pub use error::{Error, Result};
pub use free_energy::{
    free_energy_report, regularization_decomposition, FreeEnergyReport, RegularizationReport,
};
pub use planner::{
    aixi_action, aixi_loss, optimal_action_values, optimal_q, optimal_value, softmax_policy,
    ActionValues, OptimalPolicy, PlanningParams,
};
pub use self_aixi::{
    kl_policy, make_policy, make_policy_class, policy_posterior_update, q_zeta, self_aixi_action,
    self_aixi_loss, zeta_distribution, zeta_prob, MixturePolicy, PolicyBelief, PolicyClass,
    PolicyClassSpec, PolicyModel, PolicySpec, RegularizationParams,
};
