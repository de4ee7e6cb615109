use aixi_lab::experiments::{convergence_experiment, lambda_sweep, power_seeking_demo, DemoCell};
use aixi_lab::output::{read_trace, write_trace};
use aixi_lab::{run_episode, run_seeds, HarnessError, RunConfig, StepRecord};
use serde_json::json;

fn bandit(probabilities: &[f64]) -> serde_json::Value {
    json!({"type": "bernoulli_bandit", "probabilities": probabilities})
}

fn two_hypothesis(lambda: f64, steps: usize) -> RunConfig {
    let text = json!({
        "environment": bandit(&[0.3, 0.7]),
        "env_class": {"models": [bandit(&[0.7, 0.3]), bandit(&[0.3, 0.7])], "prior": [0.6, 0.4]},
        "policy_class": {"policies": [
            {"type": "soft_always", "action": 0, "epsilon": 0.01},
            {"type": "soft_always", "action": 1, "epsilon": 0.01},
            {"type": "uniform"}
        ]},
        "planning": {"horizon": 3, "gamma": 0.5},
        "regularization": {"lambda": lambda},
        "run": {"steps": steps, "seeds": [1, 2, 3, 4]}
    });
    RunConfig::from_json(&text.to_string()).unwrap()
}

fn degenerate() -> RunConfig {
    let text = json!({
        "environment": bandit(&[0.2, 0.8]),
        "env_class": {"models": [bandit(&[0.2, 0.8])]},
        "policy_class": {"policies": [{"type": "always", "action": 1}]},
        "planning": {"horizon": 3, "gamma": 0.9},
        "run": {"steps": 25, "seeds": [1, 2, 3]}
    });
    RunConfig::from_json(&text.to_string()).unwrap()
}

fn softmax_entropy(q: &[f64]) -> f64 {
    let max = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = q.iter().map(|x| (x - max).exp()).sum();
    q.iter()
        .map(|x| {
            let p = (x - max).exp() / z;
            if p > 0.0 {
                -p * p.ln()
            } else {
                0.0
            }
        })
        .sum()
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| x * (x / y).ln())
        .sum()
}

#[test]
fn degenerate_mixtures_have_no_value_gap() {
    let cfg = degenerate().resolve().unwrap();
    for record in run_episode(&cfg, 9).unwrap() {
        assert!(
            record.value_gap.abs() < 1e-12,
            "t = {}: {}",
            record.t,
            record.value_gap
        );
        assert_eq!(record.action, 1);
    }
    let report = convergence_experiment(&cfg, &[1, 2, 3]).unwrap();
    for point in &report.series {
        assert!(point.value_gap.q90.abs() < 1e-12 && point.value_gap.q10.abs() < 1e-12);
    }
}

#[test]
fn same_seed_gives_identical_records() {
    let cfg = two_hypothesis(0.1, 30).resolve().unwrap();
    assert_eq!(
        run_episode(&cfg, 42).unwrap(),
        run_episode(&cfg, 42).unwrap()
    );
    assert_ne!(
        run_episode(&cfg, 42).unwrap(),
        run_episode(&cfg, 43).unwrap()
    );
}

#[test]
fn posterior_trajectory_matches_hand_stepped_bayes() {
    let cfg = two_hypothesis(0.1, 5).resolve().unwrap();
    let records = run_episode(&cfg, 7).unwrap();
    assert_eq!(records.len(), 5);
    // Each model pays on arm a with its own probability; start from the prior.
    let pay = [[0.7, 0.3], [0.3, 0.7]];
    let mut w = [0.6, 0.4];
    for r in &records {
        assert!((r.env_posterior[0] - w[0]).abs() < 1e-12, "t = {}", r.t);
        assert!((r.env_posterior[1] - w[1]).abs() < 1e-12, "t = {}", r.t);
        let like = |m: usize| {
            let p = pay[m][r.action];
            if r.percept.observation == 1 {
                p
            } else {
                1.0 - p
            }
        };
        let raw = [w[0] * like(0), w[1] * like(1)];
        let total = raw[0] + raw[1];
        w = [raw[0] / total, raw[1] / total];
    }
}

#[test]
fn recorded_losses_are_consistent() {
    let cfg = two_hypothesis(0.3, 40).resolve().unwrap();
    for r in run_seeds(&cfg, &[1, 2]).unwrap().iter().flatten() {
        let l_aixi = softmax_entropy(&r.q_star);
        let l_self = softmax_entropy(&r.q_zeta) + r.lambda * kl(&r.pi_star, &r.zeta);
        assert!((r.l_aixi - l_aixi).abs() < 1e-9);
        assert!((r.l_self_aixi - l_self).abs() < 1e-9);
        assert!((r.loss_gap - (l_aixi - l_self).abs()).abs() < 1e-9);
        assert!((r.kl_pi_star_zeta - kl(&r.pi_star, &r.zeta)).abs() < 1e-12);
        assert!(r.value_gap >= -1e-9);
        assert!(r.kl_pi_star_zeta >= 0.0);
    }
}

#[test]
fn trace_round_trips_through_the_schema() {
    let cfg = two_hypothesis(-0.2, 12).resolve().unwrap();
    let episodes = run_seeds(&cfg, &[3, 4]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.jsonl");
    write_trace(&path, &episodes).unwrap();
    let back = read_trace(&path).unwrap();
    let flat: Vec<StepRecord> = episodes.into_iter().flatten().collect();
    assert_eq!(back, flat);

    let mut line: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    line.as_object_mut().unwrap().remove("empowerment");
    assert!(serde_json::from_value::<StepRecord>(line).is_err());
}

#[test]
fn zero_lambda_sweep_row_reproduces_baseline() {
    let cfg = two_hypothesis(0.7, 30).resolve().unwrap();
    let seeds = [1, 2, 3];
    let rows = lambda_sweep(&cfg, &[0.0], &seeds).unwrap();
    let mut base = cfg.clone();
    base.reg.lambda = 0.0;
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].episodes, run_seeds(&base, &seeds).unwrap());
    assert_eq!(rows[0].action_divergence, 0.0);
}

#[test]
fn large_lambda_changes_the_action_trace() {
    // Single model paying 0.6 on arm 0 and 0.5 on arm 1, so π* is arm 0 with
    // a Q margin of 0.1. ζ puts 0.9 on arm 1. At λ = 10 the score of arm 1 is
    // Q(1) - 10·ln(1e-6 / 0.9) ≈ Q(1) + 137, far above Q(0) - 10·ln(0.99 / 0.1).
    let text = json!({
        "environment": bandit(&[0.6, 0.5]),
        "env_class": {"models": [bandit(&[0.6, 0.5])]},
        "policy_class": {"policies": [{"type": "fixed", "probabilities": [0.1, 0.9]}]},
        "planning": {"horizon": 2, "gamma": 0.5},
        "run": {"steps": 10, "seeds": [1, 2]}
    });
    let cfg = RunConfig::from_json(&text.to_string())
        .unwrap()
        .resolve()
        .unwrap();
    let rows = lambda_sweep(&cfg, &[0.0, 0.1, 10.0], &[1, 2]).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].episodes.iter().flatten().all(|r| r.action == 0));
    assert!(rows[2].episodes.iter().flatten().all(|r| r.action == 1));
    assert!(rows[2].action_divergence > 0.0);
}

#[test]
fn negative_lambda_runs_are_labeled() {
    let cfg = two_hypothesis(0.0, 8).resolve().unwrap();
    let rows = lambda_sweep(&cfg, &[-0.5, 0.5], &[1, 2]).unwrap();
    assert_eq!(rows[0].lambda, -0.5);
    assert!(rows[0].episodes.iter().flatten().all(|r| r.lambda == -0.5));
    assert!(rows[1].episodes.iter().flatten().all(|r| r.lambda == 0.5));
    assert!(matches!(
        lambda_sweep(&cfg, &[], &[1]),
        Err(HarnessError::Config(_))
    ));
}

#[test]
fn convergence_needs_two_seeds() {
    let cfg = two_hypothesis(0.1, 5).resolve().unwrap();
    assert!(matches!(
        convergence_experiment(&cfg, &[1]),
        Err(HarnessError::Config(_))
    ));
}

#[test]
fn demo_rejects_other_environments() {
    let cells = [DemoCell {
        beta: 0.1,
        reward_high: 0.5,
        reward_low: 0.5,
    }];
    let err = power_seeking_demo(&two_hypothesis(0.0, 5), &[1], &cells).unwrap_err();
    assert!(matches!(err, HarnessError::Config(_)));
}

#[test]
fn demo_bonus_matches_hand_q_values() {
    // Uniform policy, one-step channels: every high-room cell has capacity
    // ln 4 and the low room 0. The bonus is paid on the cell each step lands
    // in, so over horizon 3 entering the high room earns (r + β ln 4)(1 + γ + γ²).
    let text = json!({
        "environment": {"type": "two_room", "branch_high": 4, "branch_low": 1, "reward_high": 0.5, "reward_low": 0.5},
        "env_class": {"models": [{"type": "two_room", "branch_high": 4, "branch_low": 1, "reward_high": 0.5, "reward_low": 0.5}]},
        "policy_class": {"policies": [{"type": "uniform"}]},
        "planning": {"horizon": 3, "gamma": 0.9},
        "regularization": {"lambda": 0.0},
        "run": {"steps": 1, "seeds": [1]}
    });
    let cfg = RunConfig::from_json(&text.to_string()).unwrap();
    let cells = [DemoCell {
        beta: 0.1,
        reward_high: 0.5,
        reward_low: 0.5,
    }];
    let rows = power_seeking_demo(&cfg, &[1, 2, 3], &cells).unwrap();
    let discount = 1.0 + 0.9 + 0.81;
    assert!((rows[0].q_zeta[0] - 0.5 * discount).abs() < 1e-9);
    assert!((rows[0].q_zeta[1] - (0.5 + 0.1 * 4f64.ln()) * discount).abs() < 1e-9);
    assert_eq!(rows[0].high_fraction, 1.0);
}
