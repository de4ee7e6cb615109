use aixi_core::env_core::{EnvClassSpec, EnvSpec};
use serde::{Deserialize, Serialize};

use crate::config::{Resolved, RunConfig};
use crate::error::HarnessError;
use crate::runner::{run_seeds, StepRecord};

/// Median with linear interpolation; `NaN` for an empty slice.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
}

impl Quantiles {
    fn of(values: &[f64]) -> Self {
        Self {
            q10: quantile(values, 0.1),
            median: median(values),
            q90: quantile(values, 0.9),
        }
    }
}

/// Cross-seed quantiles at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: usize,
    pub value_gap: Quantiles,
    pub kl: Quantiles,
    pub loss_gap: Quantiles,
    pub lambda_kl: Quantiles,
    /// `|loss_gap - λ·KL|`.
    pub loss_lambda_residual: Quantiles,
}

/// Median over seeds of each seed's first- and final-decile mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub first_decile: f64,
    pub final_decile: f64,
    pub decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub lambda: f64,
    pub series: Vec<SeriesPoint>,
    pub value_gap: Trend,
    pub kl: Trend,
    pub loss_gap: Trend,
    pub loss_lambda_residual: Trend,
    /// Medians over seeds of the last step's values.
    pub final_kl: f64,
    pub final_loss_gap: f64,
    pub final_lambda_kl: f64,
    #[serde(skip)]
    pub episodes: Vec<Vec<StepRecord>>,
}

fn trend(episodes: &[Vec<StepRecord>], metric: impl Fn(&StepRecord) -> f64) -> Trend {
    let steps = episodes[0].len();
    let width = (steps / 10).max(1);
    let mean =
        |records: &[StepRecord]| records.iter().map(&metric).sum::<f64>() / records.len() as f64;
    let first: Vec<f64> = episodes.iter().map(|e| mean(&e[..width])).collect();
    let last: Vec<f64> = episodes.iter().map(|e| mean(&e[steps - width..])).collect();
    let (first_decile, final_decile) = (median(&first), median(&last));
    Trend {
        first_decile,
        final_decile,
        decreasing: final_decile <= first_decile,
    }
}

pub fn convergence_experiment(
    cfg: &Resolved,
    seeds: &[u64],
) -> Result<ConvergenceReport, HarnessError> {
    if seeds.len() < 2 {
        return Err(HarnessError::Config(
            "the convergence experiment needs at least two seeds".into(),
        ));
    }
    let episodes = run_seeds(cfg, seeds)?;
    let lambda = cfg.reg.lambda;
    let residual = move |r: &StepRecord| (r.loss_gap - lambda * r.kl_pi_star_zeta).abs();
    let series = (0..cfg.steps)
        .map(|t| {
            let column = |f: &dyn Fn(&StepRecord) -> f64| -> Quantiles {
                Quantiles::of(&episodes.iter().map(|e| f(&e[t])).collect::<Vec<_>>())
            };
            SeriesPoint {
                t,
                value_gap: column(&|r| r.value_gap),
                kl: column(&|r| r.kl_pi_star_zeta),
                loss_gap: column(&|r| r.loss_gap),
                lambda_kl: column(&|r| lambda * r.kl_pi_star_zeta),
                loss_lambda_residual: column(&residual),
            }
        })
        .collect();
    let last = |f: &dyn Fn(&StepRecord) -> f64| {
        median(
            &episodes
                .iter()
                .map(|e| f(e.last().unwrap()))
                .collect::<Vec<_>>(),
        )
    };
    Ok(ConvergenceReport {
        seeds: seeds.to_vec(),
        steps: cfg.steps,
        lambda,
        series,
        value_gap: trend(&episodes, |r| r.value_gap),
        kl: trend(&episodes, |r| r.kl_pi_star_zeta),
        loss_gap: trend(&episodes, |r| r.loss_gap),
        loss_lambda_residual: trend(&episodes, residual),
        final_kl: last(&|r| r.kl_pi_star_zeta),
        final_loss_gap: last(&|r| r.loss_gap),
        final_lambda_kl: last(&|r| lambda * r.kl_pi_star_zeta),
        episodes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub lambda: f64,
    /// Medians over seeds of the last step's values.
    pub final_value_gap: f64,
    pub final_kl: f64,
    pub final_loss_gap: f64,
    /// Fraction of steps whose action differs from the λ = 0 run.
    pub action_divergence: f64,
    #[serde(skip)]
    pub episodes: Vec<Vec<StepRecord>>,
}

pub fn lambda_sweep(
    cfg: &Resolved,
    lambdas: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepResult>, HarnessError> {
    if lambdas.is_empty() {
        return Err(HarnessError::Config("the λ list is empty".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !l.is_finite()) {
        return Err(HarnessError::Config(format!("λ = {bad} is not finite")));
    }
    let with_lambda = |lambda: f64| {
        let mut c = cfg.clone();
        c.reg.lambda = lambda;
        c
    };
    let baseline = run_seeds(&with_lambda(0.0), seeds)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let episodes = run_seeds(&with_lambda(lambda), seeds)?;
            let mut differing = 0usize;
            let mut total = 0usize;
            for (run, base) in episodes.iter().zip(&baseline) {
                for (r, b) in run.iter().zip(base) {
                    total += 1;
                    differing += usize::from(r.action != b.action);
                }
            }
            let last = |f: &dyn Fn(&StepRecord) -> f64| {
                median(
                    &episodes
                        .iter()
                        .map(|e| f(e.last().unwrap()))
                        .collect::<Vec<_>>(),
                )
            };
            Ok(SweepResult {
                lambda,
                final_value_gap: last(&|r| r.value_gap),
                final_kl: last(&|r| r.kl_pi_star_zeta),
                final_loss_gap: last(&|r| r.loss_gap),
                action_divergence: differing as f64 / total as f64,
                episodes,
            })
        })
        .collect()
}

/// One configuration of the two-room decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoCell {
    pub beta: f64,
    pub reward_high: f64,
    pub reward_low: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoRow {
    pub beta: f64,
    pub reward_high: f64,
    pub reward_low: f64,
    pub lambda: f64,
    /// Fraction of seeds whose first action enters the high-control room.
    pub high_fraction: f64,
    pub low_fraction: f64,
    /// `Q_ξ^ζ` at the decision step of the first seed.
    pub q_zeta: Vec<f64>,
    #[serde(skip)]
    pub episodes: Vec<Vec<StepRecord>>,
}

/// Equal rewards without and with the bonus, then a low-room advantage just
/// below and just above `β ln(branch_high / branch_low)`.
pub fn default_demo_cells(cfg: &RunConfig) -> Result<Vec<DemoCell>, HarnessError> {
    let EnvSpec::TwoRoom {
        branch_high,
        branch_low,
        ..
    } = cfg.environment
    else {
        return Err(HarnessError::Config(
            "the demo needs a two_room environment".into(),
        ));
    };
    let beta = if cfg.empowerment.beta > 0.0 {
        cfg.empowerment.beta
    } else {
        0.1
    };
    let threshold = beta * (branch_high as f64 / branch_low as f64).ln();
    let cell = |beta: f64, advantage: f64| DemoCell {
        beta,
        reward_high: 0.5 - advantage / 2.0,
        reward_low: 0.5 + advantage / 2.0,
    };
    Ok(vec![
        cell(0.0, 0.0),
        cell(beta, 0.0),
        cell(beta, 0.5 * threshold),
        cell(beta, 1.5 * threshold),
    ])
}

/// For each cell, replaces the environment and class by the cell's two-room
/// world and records which room each seed enters at the first step.
pub fn power_seeking_demo(
    cfg: &RunConfig,
    seeds: &[u64],
    cells: &[DemoCell],
) -> Result<Vec<DemoRow>, HarnessError> {
    let EnvSpec::TwoRoom {
        branch_high,
        branch_low,
        ..
    } = cfg.environment
    else {
        return Err(HarnessError::Config(
            "the demo needs a two_room environment".into(),
        ));
    };
    cells
        .iter()
        .map(|cell| {
            let env = EnvSpec::TwoRoom {
                branch_high,
                branch_low,
                reward_high: cell.reward_high,
                reward_low: cell.reward_low,
            };
            let mut c = cfg.clone();
            c.environment = env.clone();
            c.env_class = EnvClassSpec {
                models: vec![env],
                prior: None,
            };
            c.empowerment.beta = cell.beta;
            c.run.steps = 1;
            let resolved = c.resolve()?;
            let episodes = run_seeds(&resolved, seeds)?;
            let fraction = |room: usize| {
                episodes.iter().filter(|e| e[0].action == room).count() as f64 / seeds.len() as f64
            };
            Ok(DemoRow {
                beta: cell.beta,
                reward_high: cell.reward_high,
                reward_low: cell.reward_low,
                lambda: resolved.reg.lambda,
                high_fraction: fraction(1),
                low_fraction: fraction(0),
                q_zeta: episodes[0][0].q_zeta.clone(),
                episodes,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert!((quantile(&[0.0, 10.0], 0.1) - 1.0).abs() < 1e-12);
        assert!(median(&[]).is_nan());
    }
}
