//! Random instances and brute-force reference computations.
//!
//! The oracles replay whole histories through `EnvironmentModel::percept_prob`
//! and weight hypotheses by their joint likelihood from the prior, so they
//! share no code with the cursor-based recursions they check.

use std::collections::HashMap;

use aixi_core::{
    ActionId, ActionLaw, EnvironmentClass, EnvironmentModel, History, Percept, Result,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random distribution; with `sparse`, entries are zeroed with
/// probability 1/3 (at least one entry stays positive).
pub fn random_distribution(rng: &mut impl Rng, n: usize, sparse: bool) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n)
        .map(|_| {
            if sparse && rng.gen_bool(1.0 / 3.0) {
                0.0
            } else {
                rng.gen_range(0.05..1.0)
            }
        })
        .collect();
    if p.iter().all(|&x| x == 0.0) {
        p[rng.gen_range(0..n)] = 1.0;
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let drift = 1.0 - p.iter().sum::<f64>();
    let i = (0..n).find(|&i| p[i] > 0.0).unwrap();
    p[i] += drift;
    p
}

/// `n` distinct percepts with observation `i` and a reward on a 0.1 grid.
pub fn random_percepts(rng: &mut impl Rng, n: usize) -> Vec<Percept> {
    (0..n)
        .map(|i| Percept::new(i, rng.gen_range(0..=10) as f64 / 10.0).unwrap())
        .collect()
}

pub fn random_env(
    rng: &mut impl Rng,
    num_actions: usize,
    percepts: &[Percept],
    max_states: usize,
) -> EnvironmentModel {
    let states = rng.gen_range(1..=max_states);
    let e = percepts.len();
    let law = (0..states)
        .map(|_| {
            (0..num_actions)
                .map(|_| random_distribution(rng, e, true))
                .collect()
        })
        .collect();
    let successor = (0..states)
        .map(|_| {
            (0..num_actions)
                .map(|_| (0..e).map(|_| rng.gen_range(0..states)).collect())
                .collect()
        })
        .collect();
    EnvironmentModel::from_tables("random", num_actions, percepts.to_vec(), 0, law, successor)
        .unwrap()
}

pub fn random_class(
    rng: &mut impl Rng,
    models: usize,
    num_actions: usize,
    num_percepts: usize,
    max_states: usize,
) -> EnvironmentClass {
    let percepts = random_percepts(rng, num_percepts);
    let envs = (0..models)
        .map(|_| random_env(rng, num_actions, &percepts, max_states))
        .collect();
    EnvironmentClass::new(envs, random_distribution(rng, models, false)).unwrap()
}

/// [`random_class`] with every size drawn uniformly from `1..=max`.
pub fn random_class_upto(
    rng: &mut impl Rng,
    max_models: usize,
    max_actions: usize,
    max_percepts: usize,
    max_states: usize,
) -> EnvironmentClass {
    let models = rng.gen_range(1..=max_models);
    let actions = rng.gen_range(1..=max_actions);
    let percepts = rng.gen_range(1..=max_percepts);
    random_class(rng, models, actions, percepts, max_states)
}

/// [`random_history`] with a length drawn from `0..=max_len`.
pub fn random_history_upto(rng: &mut impl Rng, env: &EnvironmentModel, max_len: usize) -> History {
    let len = rng.gen_range(0..=max_len);
    random_history(rng, env, len)
}

/// Samples `len` steps from `env` with uniformly random actions.
pub fn random_history(rng: &mut impl Rng, env: &EnvironmentModel, len: usize) -> History {
    let mut h = History::new();
    for _ in 0..len {
        let a = ActionId::new(rng.gen_range(0..env.num_actions()));
        let dist = env.percept_distribution(&h, a).unwrap();
        let mut u: f64 = rng.gen();
        let mut e = dist.len() - 1;
        for (i, p) in dist.iter().enumerate() {
            if u < *p {
                e = i;
                break;
            }
            u -= p;
        }
        while dist[e] == 0.0 {
            e -= 1;
        }
        h = h.extend(a, env.percepts()[e]);
    }
    h
}

/// A history-dependent policy whose distribution at each history is drawn
/// from a generator seeded by the history, then floored.
#[derive(Clone, Debug)]
pub struct RandomLaw {
    pub seed: u64,
    pub num_actions: usize,
    pub floor: f64,
    pub sparse: bool,
}

impl RandomLaw {
    fn key(&self, h: &History) -> u64 {
        let mut key = self.seed ^ 0x9e37_79b9_7f4a_7c15;
        for (a, e) in h.steps() {
            for x in [a.index() as u64, e.observation as u64, e.reward.to_bits()] {
                key = (key ^ x).wrapping_mul(0x1000_0000_01b3).rotate_left(29);
            }
        }
        key
    }
}

impl ActionLaw for RandomLaw {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn action_distribution(&self, h: &History) -> Result<Vec<f64>> {
        let mut r = rng(self.key(h));
        let p = random_distribution(&mut r, self.num_actions, self.sparse);
        let n = self.num_actions as f64;
        Ok(p.iter()
            .map(|x| (1.0 - self.floor * n) * x + self.floor)
            .collect())
    }
}

/// What generates percepts: one model or a Bayes mixture with a prior.
#[derive(Clone, Copy)]
pub enum Source<'a> {
    Model(&'a EnvironmentModel),
    Mixture(&'a EnvironmentClass, &'a [f64]),
}

fn model_joint(m: &EnvironmentModel, steps: &[(ActionId, Percept)]) -> f64 {
    let mut h = History::new();
    let mut p = 1.0;
    for (a, e) in steps {
        p *= m.percept_prob(&h, *a, e).unwrap();
        h = h.extend(*a, *e);
    }
    p
}

impl Source<'_> {
    pub fn num_actions(&self) -> usize {
        match self {
            Source::Model(m) => m.num_actions(),
            Source::Mixture(c, _) => c.num_actions(),
        }
    }

    pub fn percepts(&self) -> &[Percept] {
        match self {
            Source::Model(m) => m.percepts(),
            Source::Mixture(c, _) => c.percepts(),
        }
    }

    /// Probability of every percept in `steps` given its actions.
    pub fn joint(&self, steps: &[(ActionId, Percept)]) -> f64 {
        match self {
            Source::Model(m) => model_joint(m, steps),
            Source::Mixture(c, prior) => c
                .models()
                .iter()
                .zip(prior.iter())
                .map(|(m, w)| w * model_joint(m, steps))
                .sum(),
        }
    }

    /// Probability of the percepts of `suffix` given `h` and its actions.
    /// A single model multiplies the suffix factors only, so `h` need not be
    /// possible under it.
    pub fn conditional(&self, h: &History, suffix: &[(ActionId, Percept)]) -> f64 {
        match self {
            Source::Model(m) => {
                let mut hist = h.clone();
                let mut p = 1.0;
                for (a, e) in suffix {
                    p *= m.percept_prob(&hist, *a, e).unwrap();
                    hist = hist.extend(*a, *e);
                }
                p
            }
            Source::Mixture(..) => {
                let mut all = h.steps().to_vec();
                all.extend_from_slice(suffix);
                self.joint(&all) / self.joint(h.steps())
            }
        }
    }
}

fn with_step(h: &History, a: ActionId, e: Percept) -> History {
    h.extend(a, e)
}

/// `Q*(h, a)` for every action from the definition
/// `max_a Σ_e ξ(e | ·)(r + γ V)` with ξ recomputed from joint likelihoods.
pub fn expectimax_oracle(source: Source, h: &History, horizon: usize, gamma: f64) -> Vec<f64> {
    let base = source.joint(h.steps());
    (0..source.num_actions())
        .map(|a| q_joint(source, h, base, ActionId::new(a), horizon, gamma))
        .collect()
}

fn q_joint(source: Source, h: &History, base: f64, a: ActionId, depth: usize, gamma: f64) -> f64 {
    let mut total = 0.0;
    for e in source.percepts() {
        let next = with_step(h, a, *e);
        let joint = source.joint(next.steps());
        if joint == 0.0 {
            continue;
        }
        let mut v = e.reward;
        if depth > 1 {
            v += gamma
                * (0..source.num_actions())
                    .map(|b| q_joint(source, &next, joint, ActionId::new(b), depth - 1, gamma))
                    .fold(f64::NEG_INFINITY, f64::max);
        }
        total += joint / base * v;
    }
    total
}

/// `Q*(h, a)` as the best expected return over every deterministic
/// history-dependent policy for the remaining steps. Returns `None` when
/// there are more than `limit` policies.
pub fn policy_tree_oracle(
    source: Source,
    h: &History,
    horizon: usize,
    gamma: f64,
    limit: u64,
) -> Option<Vec<f64>> {
    let a = source.num_actions() as u64;
    let e = source.percepts().len() as u64;
    let nodes: u32 = (1..horizon as u32).map(|i| e.pow(i) as u32).sum();
    let trees = a.checked_pow(nodes)?;
    if trees > limit {
        return None;
    }
    let mut best = vec![f64::NEG_INFINITY; source.num_actions()];
    let mut choice = vec![0usize; nodes as usize];
    for (first, slot) in best.iter_mut().enumerate() {
        for t in 0..trees {
            let mut x = t;
            for c in choice.iter_mut() {
                *c = (x % a) as usize;
                x /= a;
            }
            let v = tree_return(source, h, first, &choice, horizon, gamma);
            if v > *slot {
                *slot = v;
            }
        }
    }
    Some(best)
}

/// Expected discounted return of the tree policy, by summing over all
/// percept sequences. Node `j` at depth `d` is indexed by the percept
/// indices seen so far.
fn tree_return(
    source: Source,
    h: &History,
    first: usize,
    choice: &[usize],
    horizon: usize,
    gamma: f64,
) -> f64 {
    let e = source.percepts().len();
    let base = source.joint(h.steps());
    let mut total = 0.0;
    for seq in 0..e.pow(horizon as u32) {
        let mut es = Vec::with_capacity(horizon);
        let mut x = seq;
        for _ in 0..horizon {
            es.push(x % e);
            x /= e;
        }
        let mut steps = h.steps().to_vec();
        let mut ret = 0.0;
        let mut offset = 0;
        let mut node = 0;
        for (d, &ei) in es.iter().enumerate() {
            let action = if d == 0 { first } else { choice[offset + node] };
            if d > 0 {
                offset += e.pow(d as u32);
            }
            node = node * e + ei;
            let percept = source.percepts()[ei];
            steps.push((ActionId::new(action), percept));
            ret += gamma.powi(d as i32) * percept.reward;
        }
        let joint = source.joint(&steps);
        if joint > 0.0 {
            total += joint / base * ret;
        }
    }
    total
}

/// Expected discounted return of `law` over `horizon` steps after `h`,
/// optionally forcing the first action, by enumerating every trajectory.
pub fn policy_value_oracle(
    law: &dyn ActionLaw,
    source: Source,
    h: &History,
    first: Option<ActionId>,
    horizon: usize,
    gamma: f64,
) -> f64 {
    let base = source.joint(h.steps());
    let mut total = 0.0;
    let mut stack = vec![(h.clone(), 1.0f64, 0.0f64, 0usize)];
    while let Some((hist, action_prob, ret, depth)) = stack.pop() {
        if depth == horizon {
            let joint = source.joint(hist.steps());
            total += action_prob * joint / base * ret;
            continue;
        }
        let dist = law.action_distribution(&hist).unwrap();
        for (a, pa) in dist.iter().enumerate() {
            let pa = match (depth, first) {
                (0, Some(f)) => {
                    if f.index() == a {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => *pa,
            };
            if pa == 0.0 {
                continue;
            }
            for e in source.percepts() {
                let next = with_step(&hist, ActionId::new(a), *e);
                if source.joint(next.steps()) == 0.0 {
                    continue;
                }
                let r = ret + gamma.powi(depth as i32) * e.reward;
                stack.push((next, action_prob * pa, r, depth + 1));
            }
        }
    }
    total
}

/// One `(z, o)` trajectory of the brute-force joint.
#[derive(Clone, Debug)]
pub struct JointEntry {
    pub z: Vec<usize>,
    pub o: Vec<usize>,
    pub pi_star: f64,
    pub zeta: f64,
    pub env: f64,
    pub q_out: f64,
    /// `Σ_i KL(π*_i ‖ ζ_i)` along this trajectory.
    pub kl_path: f64,
}

impl JointEntry {
    pub fn p(&self) -> f64 {
        self.pi_star * self.env
    }

    pub fn q(&self) -> f64 {
        self.zeta * self.q_out
    }
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| x * (x / y).ln())
        .sum()
}

/// Every `(z, o)` pair in `A^k × E^k` with nonzero `p` or `q`.
pub fn joint_table(
    source: Source,
    q_out: Option<Source>,
    h: &History,
    k: usize,
    pi_star: &dyn ActionLaw,
    zeta: &dyn ActionLaw,
) -> Vec<JointEntry> {
    let a = source.num_actions();
    let e = source.percepts().len();
    let mut out = Vec::new();
    for zi in 0..a.pow(k as u32) {
        for oi in 0..e.pow(k as u32) {
            let z: Vec<usize> = (0..k).map(|i| zi / a.pow((k - 1 - i) as u32) % a).collect();
            let o: Vec<usize> = (0..k).map(|i| oi / e.pow((k - 1 - i) as u32) % e).collect();
            let mut hist = h.clone();
            let mut entry = JointEntry {
                z: z.clone(),
                o: o.clone(),
                pi_star: 1.0,
                zeta: 1.0,
                env: 1.0,
                q_out: 1.0,
                kl_path: 0.0,
            };
            let mut suffix = Vec::new();
            for i in 0..k {
                let ps = pi_star.action_distribution(&hist).unwrap();
                let zs = zeta.action_distribution(&hist).unwrap();
                entry.kl_path += kl(&ps, &zs);
                entry.pi_star *= ps[z[i]];
                entry.zeta *= zs[z[i]];
                let step = (ActionId::new(z[i]), source.percepts()[o[i]]);
                suffix.push(step);
                hist = hist.extend(step.0, step.1);
            }
            entry.env = source.conditional(h, &suffix);
            if let Some(q) = q_out {
                entry.q_out = q.conditional(h, &suffix);
            }
            if entry.p() > 0.0 || (q_out.is_some() && entry.q() > 0.0) {
                out.push(entry);
            }
        }
    }
    out
}

/// Information quantities of a [`joint_table`], straight from their
/// defining sums.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSummary {
    pub kl_sum: f64,
    pub pseudo_mi: f64,
    pub true_mi: f64,
    pub variational_empowerment: f64,
    pub fep_regularization: f64,
    pub predictive_error: f64,
    pub joint_kl: f64,
    pub reverse_kl: Option<f64>,
}

pub fn summarize(table: &[JointEntry]) -> JointSummary {
    let mut pz: HashMap<&[usize], f64> = HashMap::new();
    let mut po: HashMap<&[usize], f64> = HashMap::new();
    for t in table {
        *pz.entry(&t.z).or_default() += t.p();
        *po.entry(&t.o).or_default() += t.p();
    }
    let mut s = JointSummary {
        kl_sum: 0.0,
        pseudo_mi: 0.0,
        true_mi: 0.0,
        variational_empowerment: 0.0,
        fep_regularization: 0.0,
        predictive_error: 0.0,
        joint_kl: 0.0,
        reverse_kl: Some(0.0),
    };
    for t in table {
        let p = t.p();
        let q = t.q();
        if p > 0.0 {
            let lz = pz[t.z.as_slice()].ln();
            s.kl_sum += p * t.kl_path;
            s.pseudo_mi += p * (t.pi_star.ln() - lz);
            s.true_mi += p * (p / (pz[t.z.as_slice()] * po[t.o.as_slice()])).ln();
            s.variational_empowerment += p * (t.zeta.ln() - lz);
            s.fep_regularization -= p * (t.zeta / pz[t.z.as_slice()]).ln();
            s.predictive_error -= p * t.q_out.ln();
            s.joint_kl += p * (p / q).ln();
        }
        if q > 0.0 {
            s.reverse_kl = match s.reverse_kl {
                Some(acc) if p > 0.0 => Some(acc + q * (q / p).ln()),
                _ => None,
            };
        }
    }
    s
}
