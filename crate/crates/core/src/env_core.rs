//! Finite action/percept alphabets, interaction histories and exact
//! environment models.
//!
//! Environments are history-based: the probability of the next percept is a
//! function of the full interleaved history and the current action. The
//! builtin builders realize that function with a small state machine whose
//! state is recovered by replaying the history, so every query is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{check_distribution, NORMALIZATION_TOL};

/// Upper bound on the action alphabet.
pub const MAX_ACTIONS: usize = 16;
/// Upper bound on the observation alphabet.
pub const MAX_OBSERVATIONS: usize = 16;

/// Index of an action in an alphabet of at most [`MAX_ACTIONS`] symbols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(u8);

impl ActionId {
    /// # Panics
    /// If `index >= MAX_ACTIONS`.
    pub fn new(index: usize) -> Self {
        assert!(index < MAX_ACTIONS, "action index {index} out of range");
        ActionId(index as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Joint observation/reward symbol emitted by an environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Percept {
    pub observation: u8,
    pub reward: f64,
}

impl Percept {
    pub fn new(observation: usize, reward: f64) -> Result<Self> {
        if observation >= MAX_OBSERVATIONS {
            return Err(Error::config(
                "observation",
                format!("{observation} exceeds the cap of {MAX_OBSERVATIONS}"),
            ));
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::config(
                "reward",
                format!("{reward} is outside [0, 1]"),
            ));
        }
        Ok(Percept {
            observation: observation as u8,
            reward,
        })
    }
}

/// Interleaved action/percept sequence. Extension returns a new value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    steps: Vec<(ActionId, Percept)>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[(ActionId, Percept)] {
        &self.steps
    }

    pub fn last(&self) -> Option<&(ActionId, Percept)> {
        self.steps.last()
    }

    pub fn last_observation(&self) -> Option<u8> {
        self.steps.last().map(|(_, e)| e.observation)
    }

    /// `h ⊕ (a, e)`.
    pub fn extend(&self, action: ActionId, percept: Percept) -> History {
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.extend_from_slice(&self.steps);
        steps.push((action, percept));
        History { steps }
    }

    pub(crate) fn push(&mut self, action: ActionId, percept: Percept) {
        self.steps.push((action, percept));
    }

    pub(crate) fn pop(&mut self) {
        self.steps.pop();
    }
}

/// Free-function form of [`History::extend`].
pub fn extend_history(h: &History, action: ActionId, percept: Percept) -> History {
    h.extend(action, percept)
}

/// Exact environment model backed by a finite state machine.
///
/// `law[s][a]` is the percept distribution in state `s` under action `a` and
/// `successor[s][a][e]` the state reached after emitting percept `e`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentModel {
    name: String,
    num_actions: usize,
    percepts: Vec<Percept>,
    initial_state: usize,
    law: Vec<Vec<Vec<f64>>>,
    successor: Vec<Vec<Vec<usize>>>,
}

impl EnvironmentModel {
    pub fn from_tables(
        name: impl Into<String>,
        num_actions: usize,
        percepts: Vec<Percept>,
        initial_state: usize,
        law: Vec<Vec<Vec<f64>>>,
        successor: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if num_actions == 0 || num_actions > MAX_ACTIONS {
            return Err(Error::config(
                "num_actions",
                format!("{num_actions} is outside 1..={MAX_ACTIONS}"),
            ));
        }
        if percepts.is_empty() {
            return Err(Error::config("percepts", "alphabet is empty"));
        }
        for (i, p) in percepts.iter().enumerate() {
            Percept::new(p.observation as usize, p.reward)?;
            if percepts[..i].contains(p) {
                return Err(Error::config(
                    "percepts",
                    format!("duplicate percept {p:?}"),
                ));
            }
        }
        let states = law.len();
        if states == 0 || successor.len() != states {
            return Err(Error::config("law", "state tables are empty or misaligned"));
        }
        if initial_state >= states {
            return Err(Error::config("initial_state", "out of range"));
        }
        for s in 0..states {
            if law[s].len() != num_actions || successor[s].len() != num_actions {
                return Err(Error::config(
                    "law",
                    format!("state {s} does not list every action"),
                ));
            }
            for a in 0..num_actions {
                if law[s][a].len() != percepts.len() || successor[s][a].len() != percepts.len() {
                    return Err(Error::config(
                        "law",
                        format!("state {s}, action {a} does not cover the percept alphabet"),
                    ));
                }
                check_distribution(&law[s][a], "law")?;
                if successor[s][a].iter().any(|&n| n >= states) {
                    return Err(Error::config("successor", "state index out of range"));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            num_actions,
            percepts,
            initial_state,
            law,
            successor,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn percepts(&self) -> &[Percept] {
        &self.percepts
    }

    pub fn num_states(&self) -> usize {
        self.law.len()
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn percept_index(&self, percept: &Percept) -> Option<usize> {
        self.percepts.iter().position(|p| p == percept)
    }

    pub fn check_action(&self, action: ActionId) -> Result<()> {
        if action.index() >= self.num_actions {
            return Err(Error::config(
                "action",
                format!(
                    "action {} is outside the alphabet of {} actions of `{}`",
                    action.index(),
                    self.num_actions,
                    self.name
                ),
            ));
        }
        Ok(())
    }

    /// Replays `h` and returns the internal state it leads to.
    pub fn state_after(&self, h: &History) -> Result<usize> {
        let mut state = self.initial_state;
        for (a, e) in h.steps() {
            self.check_action(*a)?;
            let idx = self.percept_index(e).ok_or_else(|| {
                Error::config(
                    "history",
                    format!("percept {e:?} not in the alphabet of `{}`", self.name),
                )
            })?;
            state = self.successor[state][a.index()][idx];
        }
        Ok(state)
    }

    pub fn distribution_at(&self, state: usize, action: ActionId) -> &[f64] {
        &self.law[state][action.index()]
    }

    pub fn successor(&self, state: usize, action: ActionId, percept: usize) -> usize {
        self.successor[state][action.index()][percept]
    }

    /// `ν(· | h, a)` over [`Self::percepts`].
    pub fn percept_distribution(&self, h: &History, action: ActionId) -> Result<Vec<f64>> {
        self.check_action(action)?;
        let state = self.state_after(h)?;
        Ok(self.law[state][action.index()].clone())
    }

    /// Probability of one percept; zero for percepts outside the alphabet.
    pub fn percept_prob(&self, h: &History, action: ActionId, percept: &Percept) -> Result<f64> {
        let dist = self.percept_distribution(h, action)?;
        Ok(self.percept_index(percept).map_or(0.0, |i| dist[i]))
    }

    /// True when every reachable law row is one-hot.
    pub fn is_deterministic(&self) -> bool {
        self.law
            .iter()
            .flatten()
            .all(|row| row.iter().filter(|&&p| p > 0.0).count() == 1)
    }

    pub(crate) fn same_alphabet(&self, other: &EnvironmentModel) -> bool {
        self.num_actions == other.num_actions && self.percepts == other.percepts
    }
}

/// Finite hypothesis class with a strictly positive prior.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentClass {
    models: Vec<EnvironmentModel>,
    prior: Vec<f64>,
}

impl EnvironmentClass {
    pub fn new(models: Vec<EnvironmentModel>, prior: Vec<f64>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::config("models", "class needs at least one model"));
        }
        if prior.len() != models.len() {
            return Err(Error::config(
                "prior",
                format!("{} weights for {} models", prior.len(), models.len()),
            ));
        }
        if prior.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::config("prior", "weights must be strictly positive"));
        }
        check_distribution(&prior, "prior")?;
        if let Some(m) = models.iter().find(|m| !m.same_alphabet(&models[0])) {
            return Err(Error::config(
                "models",
                format!(
                    "`{}` does not share the alphabet of `{}`",
                    m.name(),
                    models[0].name()
                ),
            ));
        }
        Ok(Self { models, prior })
    }

    pub fn uniform(models: Vec<EnvironmentModel>) -> Result<Self> {
        let n = models.len().max(1);
        Self::new(models, vec![1.0 / n as f64; n])
    }

    pub fn models(&self) -> &[EnvironmentModel] {
        &self.models
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn num_actions(&self) -> usize {
        self.models[0].num_actions()
    }

    pub fn percepts(&self) -> &[Percept] {
        self.models[0].percepts()
    }
}

/// Descriptor for the builtin environments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    /// One arm per entry; arm `i` pays reward 1 (observation 1) with the
    /// given probability and reward 0 (observation 0) otherwise.
    BernoulliBandit { probabilities: Vec<f64> },
    /// `next[s][a]` is the successor state and `rewards[s][a]` the reward of
    /// taking `a` in `s`. The observation is the successor state.
    DeterministicChain {
        next: Vec<Vec<usize>>,
        rewards: Vec<Vec<f64>>,
    },
    /// A start cell that opens onto a low-control room (action 0) and a
    /// high-control room (action 1).
    TwoRoom {
        branch_high: usize,
        branch_low: usize,
        reward_high: f64,
        reward_low: f64,
    },
    /// `size × size` grid, four moves, goal in the far corner.
    NoisyGrid { size: usize, slip: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvClassSpec {
    pub models: Vec<EnvSpec>,
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
}

/// Builds one of the builtin environments.
pub fn make_env(spec: &EnvSpec) -> Result<EnvironmentModel> {
    match spec {
        EnvSpec::BernoulliBandit { probabilities } => bernoulli_bandit(probabilities),
        EnvSpec::DeterministicChain { next, rewards } => deterministic_chain(next, rewards),
        EnvSpec::TwoRoom {
            branch_high,
            branch_low,
            reward_high,
            reward_low,
        } => two_room(*branch_high, *branch_low, *reward_high, *reward_low),
        EnvSpec::NoisyGrid { size, slip } => noisy_grid(*size, *slip),
    }
}

/// Builds a hypothesis class; a missing prior means uniform.
pub fn make_env_class(spec: &EnvClassSpec) -> Result<EnvironmentClass> {
    let models = spec
        .models
        .iter()
        .map(make_env)
        .collect::<Result<Vec<_>>>()?;
    match &spec.prior {
        Some(prior) => EnvironmentClass::new(models, prior.clone()),
        None => EnvironmentClass::uniform(models),
    }
}

fn bernoulli_bandit(probabilities: &[f64]) -> Result<EnvironmentModel> {
    if probabilities.is_empty() || probabilities.len() > MAX_ACTIONS {
        return Err(Error::config(
            "probabilities",
            format!("need 1..={MAX_ACTIONS} arms, got {}", probabilities.len()),
        ));
    }
    if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::config(
            "probabilities",
            format!("{p} is outside [0, 1]"),
        ));
    }
    let percepts = vec![Percept::new(0, 0.0)?, Percept::new(1, 1.0)?];
    let law = vec![probabilities.iter().map(|&p| vec![1.0 - p, p]).collect()];
    let successor = vec![vec![vec![0, 0]; probabilities.len()]];
    let name = format!("bernoulli_bandit{probabilities:?}");
    EnvironmentModel::from_tables(name, probabilities.len(), percepts, 0, law, successor)
}

fn deterministic_chain(next: &[Vec<usize>], rewards: &[Vec<f64>]) -> Result<EnvironmentModel> {
    let states = next.len();
    if states == 0 || states > MAX_OBSERVATIONS {
        return Err(Error::config(
            "next",
            format!("need 1..={MAX_OBSERVATIONS} states, got {states}"),
        ));
    }
    if rewards.len() != states {
        return Err(Error::config("rewards", "one row per state required"));
    }
    let num_actions = next[0].len();
    for s in 0..states {
        if next[s].len() != num_actions || rewards[s].len() != num_actions {
            return Err(Error::config(
                "next",
                format!("row {s} has the wrong number of actions"),
            ));
        }
        if next[s].iter().any(|&n| n >= states) {
            return Err(Error::config(
                "next",
                format!("row {s} names an unknown state"),
            ));
        }
    }
    let mut percepts = Vec::new();
    for s in 0..states {
        for a in 0..num_actions {
            let p = Percept::new(next[s][a], rewards[s][a]).map_err(|e| match e {
                Error::Config { message, .. } => Error::config("rewards", message),
                other => other,
            })?;
            if !percepts.contains(&p) {
                percepts.push(p);
            }
        }
    }
    percepts.sort_by(|x, y| {
        x.observation
            .cmp(&y.observation)
            .then(x.reward.total_cmp(&y.reward))
    });
    let mut law = vec![vec![vec![0.0; percepts.len()]; num_actions]; states];
    let mut successor = vec![vec![vec![0; percepts.len()]; num_actions]; states];
    for s in 0..states {
        for a in 0..num_actions {
            let emitted = Percept {
                observation: next[s][a] as u8,
                reward: rewards[s][a],
            };
            let idx = percepts.iter().position(|p| *p == emitted).unwrap();
            law[s][a][idx] = 1.0;
            for (e, p) in percepts.iter().enumerate() {
                successor[s][a][e] = p.observation as usize;
            }
        }
    }
    EnvironmentModel::from_tables(
        "deterministic_chain",
        num_actions,
        percepts,
        0,
        law,
        successor,
    )
}

/// Observations: 0 is the start cell, `1..=low` the low-room cells and
/// `low+1..=low+high` the high-room cells. Rooms are absorbing; inside a
/// room action `i` moves to cell `min(i, branch - 1)`. At the start, action 0
/// enters the low room, action 1 the high room, other actions stay put.
fn two_room(
    branch_high: usize,
    branch_low: usize,
    reward_high: f64,
    reward_low: f64,
) -> Result<EnvironmentModel> {
    if branch_high == 0 {
        return Err(Error::config("branch_high", "must be at least 1"));
    }
    if branch_low == 0 {
        return Err(Error::config("branch_low", "must be at least 1"));
    }
    if 1 + branch_low + branch_high > MAX_OBSERVATIONS {
        return Err(Error::config(
            "branch_high",
            format!("1 + branch_low + branch_high exceeds {MAX_OBSERVATIONS} observations"),
        ));
    }
    if !(0.0..=1.0).contains(&reward_high) {
        return Err(Error::config("reward_high", "outside [0, 1]"));
    }
    if !(0.0..=1.0).contains(&reward_low) {
        return Err(Error::config("reward_low", "outside [0, 1]"));
    }
    let num_actions = branch_high.max(branch_low).max(2);
    let low_cell = |i: usize| 1 + i.min(branch_low - 1);
    let high_cell = |i: usize| 1 + branch_low + i.min(branch_high - 1);

    let mut percepts = vec![Percept::new(0, 0.0)?];
    percepts.extend((0..branch_low).map(|i| Percept::new(low_cell(i), reward_low).unwrap()));
    percepts.extend((0..branch_high).map(|i| Percept::new(high_cell(i), reward_high).unwrap()));
    let n = percepts.len();

    const START: usize = 0;
    const LOW: usize = 1;
    const HIGH: usize = 2;
    let one_hot = |obs: usize| {
        let mut row = vec![0.0; n];
        row[obs] = 1.0;
        row
    };
    let mut law: Vec<Vec<Vec<f64>>> = (0..3).map(|_| Vec::with_capacity(num_actions)).collect();
    for a in 0..num_actions {
        law[START].push(match a {
            0 => one_hot(low_cell(0)),
            1 => one_hot(high_cell(0)),
            _ => one_hot(0),
        });
        law[LOW].push(one_hot(low_cell(a)));
        law[HIGH].push(one_hot(high_cell(a)));
    }
    // Percept indices coincide with observations, so the successor state is
    // a function of the emitted observation alone.
    let room_of = |obs: usize| match obs {
        0 => START,
        o if o <= branch_low => LOW,
        _ => HIGH,
    };
    let row: Vec<usize> = (0..n).map(room_of).collect();
    let successor = vec![vec![row; num_actions]; 3];
    let name = format!("two_room(high={branch_high}, low={branch_low})");
    EnvironmentModel::from_tables(name, num_actions, percepts, START, law, successor)
}

fn noisy_grid(size: usize, slip: f64) -> Result<EnvironmentModel> {
    if !(2..=4).contains(&size) {
        return Err(Error::config("size", format!("{size} is outside 2..=4")));
    }
    if !(0.0..=1.0).contains(&slip) {
        return Err(Error::config("slip", format!("{slip} is outside [0, 1]")));
    }
    let cells = size * size;
    let goal = cells - 1;
    let percepts: Vec<Percept> = (0..cells)
        .map(|c| Percept::new(c, if c == goal { 1.0 } else { 0.0 }))
        .collect::<Result<_>>()?;
    // up, down, left, right; bumping into a wall stays in place
    let step = |cell: usize, dir: usize| {
        let (r, c) = (cell / size, cell % size);
        match dir {
            0 if r > 0 => cell - size,
            1 if r + 1 < size => cell + size,
            2 if c > 0 => cell - 1,
            3 if c + 1 < size => cell + 1,
            _ => cell,
        }
    };
    let mut law = vec![vec![vec![0.0; cells]; 4]; cells];
    for (cell, rows) in law.iter_mut().enumerate() {
        for (a, row) in rows.iter_mut().enumerate() {
            row[step(cell, a)] += 1.0 - slip;
            for dir in 0..4 {
                row[step(cell, dir)] += slip / 4.0;
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                row.iter_mut().for_each(|p| *p /= total);
            }
        }
    }
    let successor = vec![vec![(0..cells).collect(); 4]; cells];
    EnvironmentModel::from_tables(
        format!("noisy_grid({size})"),
        4,
        percepts,
        0,
        law,
        successor,
    )
}

/// A history-dependent action distribution, e.g. a policy or a mixture policy.
pub trait ActionLaw {
    fn num_actions(&self) -> usize;
    fn action_distribution(&self, h: &History) -> Result<Vec<f64>>;
}

/// An exact sequential percept predictor that can be rolled forward without
/// replaying the whole history at every node.
///
/// Implemented by single models and by Bayes-adaptive mixtures.
pub trait PerceptPredictor {
    type Cursor: Clone;

    fn num_actions(&self) -> usize;
    fn percepts(&self) -> &[Percept];
    fn cursor(&self, h: &History) -> Result<Self::Cursor>;
    /// Distribution over [`Self::percepts`] for `action` at `cursor`.
    fn predict(&self, cursor: &Self::Cursor, action: ActionId) -> Vec<f64>;
    /// Conditions on `(action, percept index)`.
    fn advance(
        &self,
        cursor: &Self::Cursor,
        action: ActionId,
        percept: usize,
    ) -> Result<Self::Cursor>;
}

impl PerceptPredictor for EnvironmentModel {
    type Cursor = usize;

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn percepts(&self) -> &[Percept] {
        &self.percepts
    }

    fn cursor(&self, h: &History) -> Result<usize> {
        self.state_after(h)
    }

    fn predict(&self, cursor: &usize, action: ActionId) -> Vec<f64> {
        self.law[*cursor][action.index()].clone()
    }

    fn advance(&self, cursor: &usize, action: ActionId, percept: usize) -> Result<usize> {
        Ok(self.successor[*cursor][action.index()][percept])
    }
}
