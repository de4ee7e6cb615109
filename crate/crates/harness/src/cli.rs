use std::ffi::OsString;
use std::path::{Path, PathBuf};

use aixi_core::bayes::{BayesMixture, MixtureBelief};
use aixi_core::empowerment::{
    build_channel, channel_capacity, Channel, DEFAULT_CAPACITY_TOL, DEFAULT_MAX_ITER,
};
use aixi_core::free_energy::free_energy_report;
use aixi_core::planner::OptimalPolicy;
use aixi_core::self_aixi::{MixturePolicy, PolicyBelief};
use aixi_core::History;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::experiments::{
    convergence_experiment, default_demo_cells, lambda_sweep, power_seeking_demo,
};
use crate::output::{ensure_dir, write_report, write_summary, write_trace, InfoUnit};
use crate::runner::run_seeds;

#[derive(Debug, Parser)]
#[command(
    name = "aixi-lab",
    version,
    about = "Bayes-optimal and self-predictive agents on small environments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one episode per seed and write trace.jsonl and summary.csv.
    Run(CommonArgs),
    /// Cross-seed convergence of the value gap, KL and loss gap.
    Converge(CommonArgs),
    /// Repeat the run for each regularization strength.
    Sweep(SweepArgs),
    /// Two-room decision with and without the empowerment bonus.
    Demo(CommonArgs),
    /// Channel capacity by Blahut-Arimoto.
    Capacity(CapacityArgs),
    /// Free-energy and regularization decompositions at the empty history.
    AuditFe(AuditArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output.dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report information quantities in bits.
    #[arg(long)]
    bits: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    lambdas: Vec<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChannelKind {
    Bsc,
    Noiseless,
    /// The k-step channel of the configured environment at the empty history.
    Env,
}

#[derive(Debug, Args)]
struct CapacityArgs {
    #[arg(long, value_enum)]
    channel: ChannelKind,
    #[arg(long, default_value_t = 0.1)]
    crossover: f64,
    #[arg(long, default_value_t = 2)]
    size: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CAPACITY_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long)]
    bits: bool,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    k: Option<usize>,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("aixi-lab: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run(args) => run(&args),
        Command::Converge(args) => converge(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Demo(args) => demo(&args),
        Command::Capacity(args) => capacity(&args),
        Command::AuditFe(args) => audit(&args),
    }
}

struct Prepared {
    cfg: RunConfig,
    out: PathBuf,
    unit: InfoUnit,
}

fn prepare(args: &CommonArgs) -> Result<Prepared, HarnessError> {
    let cfg = RunConfig::from_path(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let unit = InfoUnit::from_bits_flag(args.bits || cfg.output.bits);
    Ok(Prepared { cfg, out, unit })
}

fn report(out: &Path, value: &impl Serialize) -> Result<(), HarnessError> {
    write_report(&out.join("report.json"), value)
}

fn run(args: &CommonArgs) -> Result<(), HarnessError> {
    let p = prepare(args)?;
    let resolved = p.cfg.resolve()?;
    let episodes = run_seeds(&resolved, &p.cfg.run.seeds)?;
    ensure_dir(&p.out)?;
    write_trace(&p.out.join("trace.jsonl"), &episodes)?;
    write_summary(&p.out.join("summary.csv"), &episodes, p.unit)?;
    println!(
        "{} episodes of {} steps written to {}",
        episodes.len(),
        resolved.steps,
        p.out.display()
    );
    Ok(())
}

fn converge(args: &CommonArgs) -> Result<(), HarnessError> {
    let p = prepare(args)?;
    let resolved = p.cfg.resolve()?;
    let r = convergence_experiment(&resolved, &p.cfg.run.seeds)?;
    ensure_dir(&p.out)?;
    write_trace(&p.out.join("trace.jsonl"), &r.episodes)?;
    write_summary(&p.out.join("summary.csv"), &r.episodes, p.unit)?;
    report(&p.out, &r)?;
    let u = p.unit;
    println!(
        "value gap: first decile {:.6}, final decile {:.6}",
        r.value_gap.first_decile, r.value_gap.final_decile
    );
    println!(
        "final KL {:.6} {s}, loss gap {:.6} {s}, lambda*KL {:.6} {s}",
        u.convert(r.final_kl),
        u.convert(r.final_loss_gap),
        u.convert(r.final_lambda_kl),
        s = u.suffix()
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), HarnessError> {
    let p = prepare(&args.common)?;
    let resolved = p.cfg.resolve()?;
    let results = lambda_sweep(&resolved, &args.lambdas, &p.cfg.run.seeds)?;
    ensure_dir(&p.out)?;
    let episodes: Vec<_> = results.iter().flat_map(|r| r.episodes.clone()).collect();
    write_trace(&p.out.join("trace.jsonl"), &episodes)?;
    write_summary(&p.out.join("summary.csv"), &episodes, p.unit)?;
    report(&p.out, &results)?;
    for r in &results {
        println!(
            "lambda {:>8}: value gap {:.6}, KL {:.6} {}, action divergence {:.4}",
            r.lambda,
            r.final_value_gap,
            p.unit.convert(r.final_kl),
            p.unit.suffix(),
            r.action_divergence
        );
    }
    Ok(())
}

fn demo(args: &CommonArgs) -> Result<(), HarnessError> {
    let p = prepare(args)?;
    let cells = default_demo_cells(&p.cfg)?;
    let rows = power_seeking_demo(&p.cfg, &p.cfg.run.seeds, &cells)?;
    ensure_dir(&p.out)?;
    let episodes: Vec<_> = rows.iter().flat_map(|r| r.episodes.clone()).collect();
    write_trace(&p.out.join("trace.jsonl"), &episodes)?;
    report(&p.out, &rows)?;
    for r in &rows {
        println!(
            "beta {:.4}, rewards high {:.4} low {:.4}: high room {:.2}, low room {:.2}",
            r.beta, r.reward_high, r.reward_low, r.high_fraction, r.low_fraction
        );
    }
    Ok(())
}

fn capacity(args: &CapacityArgs) -> Result<(), HarnessError> {
    let ch = match args.channel {
        ChannelKind::Bsc => {
            Channel::binary_symmetric(args.crossover).map_err(HarnessError::from_config)?
        }
        ChannelKind::Noiseless => {
            if !(1..=16).contains(&args.size) {
                return Err(HarnessError::Config(
                    "`--size` must be between 1 and 16".into(),
                ));
            }
            let rows = (0..args.size)
                .map(|i| {
                    (0..args.size)
                        .map(|j| f64::from(u8::from(i == j)))
                        .collect()
                })
                .collect();
            Channel::from_matrix(rows).map_err(HarnessError::from_config)?
        }
        ChannelKind::Env => {
            let path = args
                .config
                .as_ref()
                .ok_or_else(|| HarnessError::Config("`--channel env` needs `--config`".into()))?;
            let cfg = RunConfig::from_path(path)?;
            let resolved = cfg.resolve()?;
            let k = args.k.unwrap_or(resolved.k);
            build_channel(&resolved.env, &History::new(), k).map_err(HarnessError::from_config)?
        }
    };
    let result = channel_capacity(&ch, args.tol, args.max_iter)?;
    let unit = InfoUnit::from_bits_flag(args.bits);
    println!("{:.6} {}", unit.convert(result.capacity), unit.suffix());
    Ok(())
}

#[derive(Serialize)]
struct AuditReport {
    k: usize,
    unit: &'static str,
    free_energy: aixi_core::FreeEnergyReport,
    regularization: aixi_core::RegularizationReport,
}

fn audit(args: &AuditArgs) -> Result<(), HarnessError> {
    let p = prepare(&args.common)?;
    let resolved = p.cfg.resolve()?;
    let k = args.k.unwrap_or(resolved.k);
    if k == 0 {
        return Err(HarnessError::Config("`--k` must be at least 1".into()));
    }
    let h = History::new();
    let belief = MixtureBelief::prior(&resolved.class);
    let omega = PolicyBelief::prior(&resolved.policies);
    let kappa = resolved.reg.kappa;
    let pi_star = OptimalPolicy::new(&resolved.class, &belief, &h, resolved.params, kappa)?;
    let zeta = MixturePolicy::new(&resolved.policies, &omega, &h, kappa)?;
    let q_out = BayesMixture::new(&resolved.class, &belief)?;
    let fe = free_energy_report(&resolved.env, &h, k, &pi_star, &zeta, &q_out)?;
    let reg = aixi_core::regularization_decomposition(&resolved.env, &h, k, &pi_star, &zeta)?;
    let u = p.unit;
    let fe = aixi_core::FreeEnergyReport {
        predictive_error: u.convert(fe.predictive_error),
        fep_regularization: u.convert(fe.fep_regularization),
        sum: u.convert(fe.sum),
        true_joint_kl: u.convert(fe.true_joint_kl),
        reverse_joint_kl: fe.reverse_joint_kl.map(|x| u.convert(x)),
        approx_residual: u.convert(fe.approx_residual),
    };
    let d = reg.decomposition;
    let regularization = aixi_core::RegularizationReport {
        decomposition: aixi_core::DecompositionReport {
            kl_sum_term: u.convert(d.kl_sum_term),
            pseudo_mi: u.convert(d.pseudo_mi),
            true_mi: u.convert(d.true_mi),
            variational_empowerment: u.convert(d.variational_empowerment),
            residual_identity: u.convert(d.residual_identity),
        },
        fep_regularization: u.convert(reg.fep_regularization),
        regularization_residual: u.convert(reg.regularization_residual),
        sign_flip_residual: u.convert(reg.sign_flip_residual),
    };
    ensure_dir(&p.out)?;
    report(
        &p.out,
        &AuditReport {
            k,
            unit: u.suffix(),
            free_energy: fe.clone(),
            regularization,
        },
    )?;
    println!(
        "free energy {:.6} {s} = predictive error {:.6} + regularization {:.6}; joint KL {:.6}, gap {:.6}",
        fe.sum,
        fe.predictive_error,
        fe.fep_regularization,
        fe.true_joint_kl,
        fe.approx_residual,
        s = u.suffix()
    );
    Ok(())
}
