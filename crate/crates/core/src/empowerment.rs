//! Empowerment: the capacity of the channel from a k-step action sequence
//! to the percept block it produces.
//!
//! Besides exact capacity, this module computes the variational lower bound
//! `E[ln q(z | o) - ln p(z)]` and the product-of-policies decomposition in
//! which the posterior over action sequences is `Π π*` (the "pseudo"
//! posterior) and the decoder is `Π ζ`:
//!
//! ```text
//! E[ln Π ζ - ln p(z)] = -E[Σ_i KL(π*_i ‖ ζ_i)] + E[ln Π π* - ln p(z)]
//! ```

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::env_core::{ActionId, ActionLaw, EnvironmentModel, History, Percept, PerceptPredictor};
use crate::error::{Error, Result};
use crate::prob::{check_distribution, uniform};

/// Largest number of `(action sequence, percept block)` pairs enumerated.
pub const ENUMERATION_LIMIT: u128 = 1_000_000;
pub const DEFAULT_CAPACITY_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Fails with a size error when `A^k · O^k` exceeds [`ENUMERATION_LIMIT`].
pub fn check_enumeration(num_actions: usize, num_percepts: usize, k: usize) -> Result<()> {
    let exp = u32::try_from(k).unwrap_or(u32::MAX);
    let requested = (num_actions as u128)
        .checked_pow(exp)
        .and_then(|a| {
            (num_percepts as u128)
                .checked_pow(exp)
                .and_then(|o| a.checked_mul(o))
        })
        .unwrap_or(u128::MAX);
    if requested > ENUMERATION_LIMIT {
        return Err(Error::Size {
            requested,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// A discrete memoryless channel `P(o | z)` between action sequences and
/// percept blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    inputs: Vec<Vec<ActionId>>,
    outputs: Vec<Vec<Percept>>,
    matrix: Vec<Vec<f64>>,
}

impl Channel {
    /// A one-step channel with generic labels. Rows are inputs.
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::config(
                "matrix",
                "channel needs at least one input and output",
            ));
        }
        if rows > crate::env_core::MAX_ACTIONS || cols > crate::env_core::MAX_OBSERVATIONS {
            return Err(Error::config("matrix", "at most 16 inputs and 16 outputs"));
        }
        for row in &matrix {
            if row.len() != cols {
                return Err(Error::config("matrix", "rows have different lengths"));
            }
            check_distribution(row, "matrix")?;
        }
        Ok(Self {
            inputs: (0..rows).map(|i| vec![ActionId::new(i)]).collect(),
            outputs: (0..cols)
                .map(|o| vec![Percept::new(o, 0.0).expect("finite reward")])
                .collect(),
            matrix,
        })
    }

    /// Binary symmetric channel.
    pub fn binary_symmetric(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::config("crossover", "must lie in [0, 1]"));
        }
        Self::from_matrix(vec![
            vec![1.0 - crossover, crossover],
            vec![crossover, 1.0 - crossover],
        ])
    }

    pub fn inputs(&self) -> &[Vec<ActionId>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<Percept>] {
        &self.outputs
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    fn output_marginal(&self, p: &[f64]) -> Vec<f64> {
        let mut marginal = vec![0.0; self.num_outputs()];
        for (pz, row) in p.iter().zip(&self.matrix) {
            for (m, x) in marginal.iter_mut().zip(row) {
                *m += pz * x;
            }
        }
        marginal
    }

    /// `D(P(· | z) ‖ r)` for every input.
    fn divergences(&self, r: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| {
                row.iter()
                    .zip(r)
                    .filter(|(x, _)| **x > 0.0)
                    .map(|(x, m)| x * (x / m).ln())
                    .sum()
            })
            .collect()
    }
}

/// Channel from the `k` actions after `h` to the `k` percepts they produce,
/// under a single model or a Bayes-adaptive mixture.
pub fn build_channel<P: PerceptPredictor>(predictor: &P, h: &History, k: usize) -> Result<Channel> {
    let cursor = predictor.cursor(h)?;
    channel_at(predictor, &cursor, k)
}

/// [`build_channel`] starting from an already-positioned cursor.
pub fn channel_at<P: PerceptPredictor>(
    predictor: &P,
    cursor: &P::Cursor,
    k: usize,
) -> Result<Channel> {
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    let num_actions = predictor.num_actions();
    check_enumeration(num_actions, predictor.percepts().len(), k)?;
    let num_inputs = num_actions.pow(k as u32);
    let inputs: Vec<Vec<ActionId>> = (0..num_inputs)
        .map(|mut z| {
            let mut seq = vec![ActionId::new(0); k];
            for slot in seq.iter_mut().rev() {
                *slot = ActionId::new(z % num_actions);
                z /= num_actions;
            }
            seq
        })
        .collect();

    let mut blocks: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    let mut block = Vec::with_capacity(k);
    for (zi, z) in inputs.iter().enumerate() {
        rollout(predictor, cursor, z, 1.0, &mut block, &mut |b, p| {
            blocks
                .entry(b.to_vec())
                .or_insert_with(|| vec![0.0; num_inputs])[zi] += p;
        })?;
    }

    let percepts = predictor.percepts();
    let outputs = blocks
        .keys()
        .map(|b| b.iter().map(|&e| percepts[e]).collect())
        .collect();
    let mut matrix = vec![vec![0.0; blocks.len()]; num_inputs];
    for (o, column) in blocks.values().enumerate() {
        for (row, p) in matrix.iter_mut().zip(column) {
            row[o] = *p;
        }
    }
    Ok(Channel {
        inputs,
        outputs,
        matrix,
    })
}

fn rollout<P: PerceptPredictor>(
    predictor: &P,
    cursor: &P::Cursor,
    actions: &[ActionId],
    prob: f64,
    block: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize], f64),
) -> Result<()> {
    let Some((&a, rest)) = actions.split_first() else {
        emit(block, prob);
        return Ok(());
    };
    for (e, &pe) in predictor.predict(cursor, a).iter().enumerate() {
        if pe == 0.0 {
            continue;
        }
        let next = predictor.advance(cursor, a, e)?;
        block.push(e);
        rollout(predictor, &next, rest, prob * pe, block, emit)?;
        block.pop();
    }
    Ok(())
}

/// `I(Z; O)` in nats for input distribution `p`.
pub fn mutual_information(ch: &Channel, p: &[f64]) -> f64 {
    let marginal = ch.output_marginal(p);
    p.iter()
        .zip(ch.divergences(&marginal))
        .filter(|(pz, _)| **pz > 0.0)
        .map(|(pz, d)| pz * d)
        .sum::<f64>()
        .max(0.0)
}

/// Capacity together with the maximizing input distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpowermentResult {
    /// Nats.
    pub capacity: f64,
    pub optimal_input: Vec<f64>,
    pub iterations: usize,
    /// Final gap between the upper and lower capacity bounds.
    pub residual: f64,
}

/// Blahut–Arimoto iteration from the uniform input distribution, stopped
/// once `max_z D(P(· | z) ‖ r) - I(p)` drops below `tol`.
pub fn channel_capacity(ch: &Channel, tol: f64, max_iter: usize) -> Result<EmpowermentResult> {
    let mut p = uniform(ch.num_inputs());
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    let mut previous = f64::NEG_INFINITY;
    for iteration in 1..=max_iter {
        let marginal = ch.output_marginal(&p);
        let d = ch.divergences(&marginal);
        lower = p
            .iter()
            .zip(&d)
            .map(|(pz, dz)| pz * dz)
            .sum::<f64>()
            .max(0.0);
        upper = d.iter().copied().fold(0.0, f64::max);
        debug_assert!(
            lower >= previous - 1e-12,
            "capacity iteration decreased: {previous} -> {lower}"
        );
        previous = lower;
        if upper - lower < tol {
            return Ok(EmpowermentResult {
                capacity: lower,
                optimal_input: p,
                iterations: iteration,
                residual: upper - lower,
            });
        }
        let shift = upper;
        p.iter_mut()
            .zip(&d)
            .for_each(|(pz, dz)| *pz *= (dz - shift).exp());
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|pz| *pz /= total);
    }
    Err(Error::Convergence {
        iterations: max_iter,
        lower,
        upper,
    })
}

/// Empowerment at `h`: capacity of the `k`-step channel.
pub fn empowerment<P: PerceptPredictor>(
    predictor: &P,
    h: &History,
    k: usize,
) -> Result<EmpowermentResult> {
    channel_capacity(
        &build_channel(predictor, h, k)?,
        DEFAULT_CAPACITY_TOL,
        DEFAULT_MAX_ITER,
    )
}

/// A decoder `q(z | o)`; `rows[o][z]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoder {
    rows: Vec<Vec<f64>>,
}

impl Decoder {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        for row in &rows {
            check_distribution(row, "decoder")?;
        }
        Ok(Self { rows })
    }

    /// The exact Bayes posterior of `(p, ch)`; uniform on unreachable outputs.
    pub fn posterior(ch: &Channel, p: &[f64]) -> Self {
        let marginal = ch.output_marginal(p);
        let rows = marginal
            .iter()
            .enumerate()
            .map(|(o, &m)| {
                if m > 0.0 {
                    p.iter()
                        .zip(&ch.matrix)
                        .map(|(pz, row)| pz * row[o] / m)
                        .collect()
                } else {
                    uniform(ch.num_inputs())
                }
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// `E_{p·P}[ln q(z | o) - ln p(z)]`.
pub fn variational_empowerment(ch: &Channel, p: &[f64], q: &Decoder) -> Result<f64> {
    if q.rows.len() != ch.num_outputs() || q.rows.iter().any(|r| r.len() != ch.num_inputs()) {
        return Err(Error::config("decoder", "shape does not match the channel"));
    }
    let mut total = 0.0;
    for (z, (pz, row)) in p.iter().zip(&ch.matrix).enumerate() {
        for (o, x) in row.iter().enumerate() {
            let mass = pz * x;
            if mass == 0.0 {
                continue;
            }
            let qz = q.rows[o][z];
            if qz <= 0.0 {
                return Err(Error::NegativeInfinity(format!(
                    "decoder gives input {z} zero probability at output {o}"
                )));
            }
            total += mass * (qz.ln() - pz.ln());
        }
    }
    Ok(total)
}

/// `Π_i policy(a_i | h_i)` along the history interleaving `z` and `o`.
pub fn product_policy_prob(
    policy: &dyn ActionLaw,
    h: &History,
    z: &[ActionId],
    o: &[Percept],
) -> Result<f64> {
    if z.len() != o.len() {
        return Err(Error::config(
            "z",
            "action and percept blocks differ in length",
        ));
    }
    let mut h = h.clone();
    let mut prob = 1.0;
    for (a, e) in z.iter().zip(o) {
        prob *= policy
            .action_distribution(&h)?
            .get(a.index())
            .copied()
            .unwrap_or(0.0);
        h.push(*a, *e);
    }
    Ok(prob)
}

/// One complete `(z, o)` trajectory of length `k`.
#[derive(Clone, Debug)]
pub(crate) struct JointLeaf {
    pub z: usize,
    pub o: Vec<usize>,
    /// `Π π*` along the trajectory.
    pub pi_star: f64,
    /// `Π ζ`.
    pub zeta: f64,
    /// `Π ν(e_i | h_i, a_i)`.
    pub env: f64,
    /// `Π q(e_i | h_i, a_i)`; 1 when no output model is supplied.
    pub q_out: f64,
}

impl JointLeaf {
    pub fn p(&self) -> f64 {
        self.pi_star * self.env
    }

    pub fn q(&self) -> f64 {
        self.zeta * self.q_out
    }
}

pub(crate) struct JointEnumeration {
    pub leaves: Vec<JointLeaf>,
    /// `E_p[Σ_i KL(π*_i ‖ ζ_i)]`.
    pub kl_sum: f64,
    /// Marginal `p(z)` indexed like [`JointLeaf::z`].
    pub input_marginal: Vec<f64>,
}

struct Walker<'w, P: PerceptPredictor, Q: PerceptPredictor> {
    env: &'w P,
    q_out: Option<&'w Q>,
    pi_star: &'w dyn ActionLaw,
    zeta: &'w dyn ActionLaw,
    k: usize,
    leaves: Vec<JointLeaf>,
    kl_sum: f64,
}

struct Node<PC, QC> {
    env_cursor: Option<PC>,
    q_cursor: Option<QC>,
    z: usize,
    pi_star: f64,
    zeta: f64,
    env: f64,
    q_out: f64,
}

impl<P: PerceptPredictor, Q: PerceptPredictor> Walker<'_, P, Q> {
    fn visit(
        &mut self,
        node: Node<P::Cursor, Q::Cursor>,
        h: &mut History,
        o: &mut Vec<usize>,
    ) -> Result<()> {
        if o.len() == self.k {
            self.leaves.push(JointLeaf {
                z: node.z,
                o: o.clone(),
                pi_star: node.pi_star,
                zeta: node.zeta,
                env: node.env,
                q_out: node.q_out,
            });
            return Ok(());
        }
        let num_actions = self.env.num_actions();
        let p_prefix = node.pi_star * node.env;
        let q_prefix = node.zeta * node.q_out;
        let live_p = p_prefix > 0.0 && node.env_cursor.is_some();
        let live_q = self.q_out.is_some() && q_prefix > 0.0 && node.q_cursor.is_some();

        let pi = if live_p {
            self.pi_star.action_distribution(h)?
        } else {
            vec![0.0; num_actions]
        };
        let zeta = self.zeta.action_distribution(h)?;
        if pi.len() != num_actions || zeta.len() != num_actions {
            return Err(Error::config(
                "policy",
                "action alphabet differs from the environment",
            ));
        }
        if live_p {
            for (p, z) in pi.iter().zip(&zeta) {
                if *p > 0.0 {
                    if *z <= 0.0 {
                        return Err(Error::NegativeInfinity(
                            "ζ gives zero probability to an action π* takes".into(),
                        ));
                    }
                    self.kl_sum += p_prefix * p * (p / z).ln();
                }
            }
        }

        for a in 0..num_actions {
            let action = ActionId::new(a);
            let pi_a = node.pi_star * pi[a];
            let zeta_a = node.zeta * zeta[a];
            let env_dist = match (&node.env_cursor, pi_a > 0.0 || live_q) {
                (Some(c), true) => Some(self.env.predict(c, action)),
                _ => None,
            };
            let q_dist = match (self.q_out, &node.q_cursor) {
                (Some(model), Some(c)) if live_q && zeta_a > 0.0 => Some(model.predict(c, action)),
                _ => None,
            };
            if pi_a == 0.0 && q_dist.is_none() {
                continue;
            }
            for e in 0..self.env.percepts().len() {
                let pe = env_dist.as_ref().map_or(0.0, |d| d[e]);
                let qe = q_dist.as_ref().map_or(0.0, |d| d[e]);
                let p_next = pi_a * node.env * pe;
                let q_next = zeta_a * node.q_out * qe;
                if p_next == 0.0 && q_next == 0.0 {
                    continue;
                }
                let env_cursor = match &node.env_cursor {
                    Some(c) if pe > 0.0 => Some(self.env.advance(c, action, e)?),
                    _ => None,
                };
                let q_cursor = match (self.q_out, &node.q_cursor) {
                    (Some(model), Some(c)) if qe > 0.0 => Some(model.advance(c, action, e)?),
                    _ => None,
                };
                let next = Node {
                    env_cursor,
                    q_cursor,
                    z: node.z * num_actions + a,
                    pi_star: pi_a,
                    zeta: zeta_a,
                    env: node.env * pe,
                    q_out: if self.q_out.is_some() {
                        node.q_out * qe
                    } else {
                        1.0
                    },
                };
                h.push(action, self.env.percepts()[e]);
                o.push(e);
                let result = self.visit(next, h, o);
                o.pop();
                h.pop();
                result?;
            }
        }
        Ok(())
    }
}

/// Enumerates the joint `p(z, o) = Π π*(a_i | h_i) ν(e_i | h_i, a_i)` and,
/// when `q_out` is given, the support of `q(z, o) = Π ζ(a_i | h_i) q(e_i | h_i, a_i)`.
pub(crate) fn enumerate_joint<P: PerceptPredictor, Q: PerceptPredictor>(
    env: &P,
    q_out: Option<&Q>,
    h: &History,
    k: usize,
    pi_star: &dyn ActionLaw,
    zeta: &dyn ActionLaw,
) -> Result<JointEnumeration> {
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    let num_actions = env.num_actions();
    check_enumeration(num_actions, env.percepts().len(), k)?;
    if let Some(q) = q_out {
        if q.num_actions() != num_actions || q.percepts() != env.percepts() {
            return Err(Error::config(
                "q_outputs",
                "alphabet differs from the environment",
            ));
        }
    }
    let mut walker = Walker {
        env,
        q_out,
        pi_star,
        zeta,
        k,
        leaves: Vec::new(),
        kl_sum: 0.0,
    };
    let root = Node {
        env_cursor: Some(env.cursor(h)?),
        q_cursor: match q_out {
            Some(q) => Some(q.cursor(h)?),
            None => None,
        },
        z: 0,
        pi_star: 1.0,
        zeta: 1.0,
        env: 1.0,
        q_out: 1.0,
    };
    let mut scratch = h.clone();
    walker.visit(root, &mut scratch, &mut Vec::with_capacity(k))?;

    let mut input_marginal = vec![0.0; num_actions.pow(k as u32)];
    for leaf in &walker.leaves {
        input_marginal[leaf.z] += leaf.p();
    }
    Ok(JointEnumeration {
        leaves: walker.leaves,
        kl_sum: walker.kl_sum,
        input_marginal,
    })
}

/// Terms of the product-of-policies decomposition, all in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `E[Σ_i KL(π*_i ‖ ζ_i)]`.
    pub kl_sum_term: f64,
    /// `E[ln Π π* - ln p(z)]`.
    pub pseudo_mi: f64,
    /// `I(z; o)` of the joint.
    pub true_mi: f64,
    /// `E[ln Π ζ - ln p(z)]`.
    pub variational_empowerment: f64,
    pub residual_identity: f64,
}

pub(crate) fn decomposition_from(joint: &JointEnumeration) -> Result<DecompositionReport> {
    let mut output_marginal: HashMap<&[usize], f64> = HashMap::new();
    for leaf in &joint.leaves {
        *output_marginal.entry(&leaf.o).or_default() += leaf.p();
    }
    let mut pseudo_mi = 0.0;
    let mut true_mi = 0.0;
    let mut ve = 0.0;
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
        let ln_pz = joint.input_marginal[leaf.z].ln();
        pseudo_mi += p * (leaf.pi_star.ln() - ln_pz);
        ve += p * (leaf.zeta.ln() - ln_pz);
        true_mi += p * (p.ln() - ln_pz - output_marginal[leaf.o.as_slice()].ln());
    }
    Ok(DecompositionReport {
        kl_sum_term: joint.kl_sum,
        pseudo_mi,
        true_mi: true_mi.max(0.0),
        variational_empowerment: ve,
        residual_identity: (ve - (pseudo_mi - joint.kl_sum)).abs(),
    })
}

/// Exact decomposition report at `h` over a `k`-step block.
pub fn decomposition_report<P: PerceptPredictor>(
    env: &P,
    h: &History,
    k: usize,
    pi_star: &dyn ActionLaw,
    zeta: &dyn ActionLaw,
) -> Result<DecompositionReport> {
    let joint = enumerate_joint::<P, EnvironmentModel>(env, None, h, k, pi_star, zeta)?;
    decomposition_from(&joint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env_core::{make_env, EnvSpec};
    use crate::self_aixi::{make_policy, PolicySpec};

    fn bsc_mi(eps: f64) -> f64 {
        std::f64::consts::LN_2 + eps * eps.ln() + (1.0 - eps) * (1.0 - eps).ln()
    }

    #[test]
    fn deterministic_channel_is_identity() {
        let env = make_env(&EnvSpec::BernoulliBandit {
            probabilities: vec![0.0, 1.0],
        })
        .unwrap();
        let ch = build_channel(&env, &History::new(), 1).unwrap();
        assert_eq!(ch.matrix(), &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(ch.num_inputs(), 2);
    }

    #[test]
    fn indifferent_channel_has_equal_rows() {
        let env = make_env(&EnvSpec::BernoulliBandit {
            probabilities: vec![0.3, 0.3, 0.3],
        })
        .unwrap();
        let ch = build_channel(&env, &History::new(), 2).unwrap();
        assert_eq!(ch.num_inputs(), 9);
        assert!(ch.matrix().iter().all(|r| r == &ch.matrix()[0]));
        let cap = channel_capacity(&ch, 1e-9, 100).unwrap();
        assert!(cap.capacity.abs() < 1e-12);
    }

    #[test]
    fn rows_sum_to_one() {
        let env = make_env(&EnvSpec::NoisyGrid { size: 2, slip: 0.2 }).unwrap();
        let ch = build_channel(&env, &History::new(), 2).unwrap();
        for row in ch.matrix() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mutual_information_examples() {
        let id = Channel::from_matrix(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!((mutual_information(&id, &uniform(3)) - 3f64.ln()).abs() < 1e-15);
        let constant = Channel::from_matrix(vec![vec![0.4, 0.6], vec![0.4, 0.6]]).unwrap();
        assert_eq!(mutual_information(&constant, &[0.2, 0.8]), 0.0);
        let bsc = Channel::binary_symmetric(0.1).unwrap();
        let mi = mutual_information(&bsc, &[0.5, 0.5]);
        assert!((mi - bsc_mi(0.1)).abs() < 1e-15);
        assert!((mi - 0.368064).abs() < 1e-6);
    }

    #[test]
    fn capacity_examples() {
        let mut rows = vec![vec![0.0; 4]; 4];
        for (i, r) in rows.iter_mut().enumerate() {
            r[i] = 1.0;
        }
        let noiseless = Channel::from_matrix(rows).unwrap();
        let cap = channel_capacity(&noiseless, 1e-9, 10_000).unwrap();
        assert!((cap.capacity - 4f64.ln()).abs() < 1e-9);

        let bsc = Channel::binary_symmetric(0.1).unwrap();
        let cap = channel_capacity(&bsc, 1e-9, 10_000).unwrap();
        assert!((cap.capacity - bsc_mi(0.1)).abs() < 1e-9);
        assert!(cap.residual < 1e-9);
    }

    #[test]
    fn capacity_ignores_duplicate_inputs() {
        let ch = Channel::from_matrix(vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let cap = channel_capacity(&ch, 1e-12, 10_000).unwrap();
        assert!((cap.capacity - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn capacity_reports_non_convergence() {
        let ch =
            Channel::from_matrix(vec![vec![0.9, 0.1], vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        match channel_capacity(&ch, 0.0, 3) {
            Err(Error::Convergence {
                iterations,
                lower,
                upper,
            }) => {
                assert_eq!(iterations, 3);
                assert!(lower <= upper);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variational_bound_is_tight_at_the_posterior() {
        let id = Channel::from_matrix(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = uniform(2);
        let q = Decoder::posterior(&id, &p);
        let ve = variational_empowerment(&id, &p, &q).unwrap();
        assert!((ve - std::f64::consts::LN_2).abs() < 1e-15);

        let bad = Decoder::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            variational_empowerment(&id, &p, &bad),
            Err(Error::NegativeInfinity(_))
        ));
    }

    #[test]
    fn product_policy_examples() {
        let h = History::new();
        let z = [ActionId::new(1), ActionId::new(0)];
        let o = [Percept::new(0, 0.0).unwrap(), Percept::new(1, 1.0).unwrap()];
        let uniform_policy = make_policy(&PolicySpec::Uniform, 2).unwrap();
        assert_eq!(
            product_policy_prob(&uniform_policy, &h, &z, &o).unwrap(),
            0.25
        );
        let reactive = make_policy(
            &PolicySpec::Reactive {
                initial: vec![0.0, 1.0],
                by_observation: vec![vec![1.0, 0.0], vec![0.5, 0.5]],
            },
            2,
        )
        .unwrap();
        assert_eq!(product_policy_prob(&reactive, &h, &z, &o).unwrap(), 1.0);
        assert!(product_policy_prob(&reactive, &h, &z, &o[..1]).is_err());
    }

    #[test]
    fn equal_policies_have_no_kl_term() {
        let env = make_env(&EnvSpec::BernoulliBandit {
            probabilities: vec![0.2, 0.7],
        })
        .unwrap();
        let pi = make_policy(
            &PolicySpec::Fixed {
                probabilities: vec![0.3, 0.7],
            },
            2,
        )
        .unwrap();
        let r = decomposition_report(&env, &History::new(), 2, &pi, &pi).unwrap();
        assert_eq!(r.kl_sum_term, 0.0);
        assert!((r.variational_empowerment - r.pseudo_mi).abs() < 1e-15);
        assert!(r.residual_identity < 1e-12);
        assert!(r.pseudo_mi <= r.true_mi + 1e-9);
    }

    #[test]
    fn enumeration_guard() {
        assert!(check_enumeration(16, 16, 2).is_ok());
        assert!(check_enumeration(10, 10, 3).is_ok());
        assert!(matches!(
            check_enumeration(16, 16, 3),
            Err(Error::Size {
                requested: 16_777_216,
                ..
            })
        ));
        assert!(check_enumeration(2, 2, 200).is_err());
    }
}
