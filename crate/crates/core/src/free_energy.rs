//! Free-energy audit of the joint over action sequences and percept blocks.
//!
//! `p(z, o) = Π π*(a_i | h_i) ν(e_i | h_i, a_i)` is the joint generated by the
//! optimal policy in the environment; `q(z, o) = Π ζ(a_i | h_i) q(e_i | h_i, a_i)`
//! is the agent's model. The two-term functional
//!
//! ```text
//! -E_p[ln q(o | z)] + E_p[ln p(z) - ln Π ζ]
//! ```
//!
//! exceeds `KL(p ‖ q)` by exactly the conditional entropy `H(O | Z)` of the
//! environment, which is what `approx_residual` reports.

use serde::{Deserialize, Serialize};

use crate::empowerment::{
    decomposition_from, enumerate_joint, DecompositionReport, JointEnumeration,
};
use crate::env_core::{ActionLaw, EnvironmentModel, History, PerceptPredictor};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyReport {
    /// `-E_p[ln q(o | z)]`.
    pub predictive_error: f64,
    /// `E_p[ln p(z) - ln Π ζ]`.
    pub fep_regularization: f64,
    pub sum: f64,
    /// `KL(p ‖ q)` over the full joint.
    pub true_joint_kl: f64,
    /// `KL(q ‖ p)`; `None` when `q` puts mass where `p` has none.
    pub reverse_joint_kl: Option<f64>,
    /// `|sum - true_joint_kl|`.
    pub approx_residual: f64,
}

fn fep_regularization(joint: &JointEnumeration) -> Result<f64> {
    let mut total = 0.0;
    for leaf in &joint.leaves {
        let p = leaf.p();
        if p == 0.0 {
            continue;
        }
        if leaf.zeta <= 0.0 {
            return Err(Error::NegativeInfinity(
                "Π ζ is zero on a positive-probability trajectory".into(),
            ));
        }
        total += p * (joint.input_marginal[leaf.z].ln() - leaf.zeta.ln());
    }
    Ok(total)
}

pub fn free_energy_report<P: PerceptPredictor, Q: PerceptPredictor>(
    env: &P,
    h: &History,
    k: usize,
    pi_star: &dyn ActionLaw,
    zeta: &dyn ActionLaw,
    q_outputs: &Q,
) -> Result<FreeEnergyReport> {
    let joint = enumerate_joint(env, Some(q_outputs), h, k, pi_star, zeta)?;
    let mut predictive_error = 0.0;
    let mut true_joint_kl = 0.0;
    let mut reverse = Some(0.0);
    for leaf in &joint.leaves {
        let (p, q) = (leaf.p(), leaf.q());
        if p > 0.0 {
            if leaf.q_out <= 0.0 || q <= 0.0 {
                return Err(Error::NegativeInfinity(format!(
                    "q gives zero probability to the trajectory z={} o={:?}",
                    leaf.z, leaf.o
                )));
            }
            predictive_error -= p * leaf.q_out.ln();
            true_joint_kl += p * (p / q).ln();
        }
        if q > 0.0 {
            reverse = match reverse {
                Some(acc) if p > 0.0 => Some(acc + q * (q / p).ln()),
                _ => None,
            };
        }
    }
    let fep_regularization = fep_regularization(&joint)?;
    let sum = predictive_error + fep_regularization;
    let true_joint_kl = true_joint_kl.max(0.0);
    Ok(FreeEnergyReport {
        predictive_error,
        fep_regularization,
        sum,
        true_joint_kl,
        reverse_joint_kl: reverse.map(|r| r.max(0.0)),
        approx_residual: (sum - true_joint_kl).abs(),
    })
}

/// The decomposition report plus the regularization identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationReport {
    pub decomposition: DecompositionReport,
    pub fep_regularization: f64,
    /// `|fep_regularization - (kl_sum_term - pseudo_mi)|`.
    pub regularization_residual: f64,
    /// `|fep_regularization + variational_empowerment|`.
    pub sign_flip_residual: f64,
}

pub fn regularization_decomposition<P: PerceptPredictor>(
    env: &P,
    h: &History,
    k: usize,
    pi_star: &dyn ActionLaw,
    zeta: &dyn ActionLaw,
) -> Result<RegularizationReport> {
    let joint = enumerate_joint::<P, EnvironmentModel>(env, None, h, k, pi_star, zeta)?;
    let decomposition = decomposition_from(&joint)?;
    let fep = fep_regularization(&joint)?;
    Ok(RegularizationReport {
        regularization_residual: (fep - (decomposition.kl_sum_term - decomposition.pseudo_mi))
            .abs(),
        sign_flip_residual: (fep + decomposition.variational_empowerment).abs(),
        fep_regularization: fep,
        decomposition,
    })
}
