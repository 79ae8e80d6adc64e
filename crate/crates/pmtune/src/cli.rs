//! Command-line front end.

use std::path::PathBuf;
use std::time::Instant;

use clap::{CommandFactory, Parser, Subcommand};

use crate::config::{
    load_file, resolve, worker_count, Common, ExperimentConfig, MergedConfig, Metadata, Preset,
};
use crate::error::{RunError, RunResult};
use crate::experiments::bvm::BvmConfig;
use crate::experiments::clt::{CltConfig, CltModel};
use crate::experiments::glmm::{Family, GlmmConfig, ProposalFamily};
use crate::experiments::lv::{LvConfig, ResamplingScheme};
use crate::experiments::toy::{ToyBlock, ToyConfig};
use crate::experiments::tune::{CellMethod, TuneConfig};
use crate::experiments::{Experiment, IatMethod};
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(
    name = "pmtune",
    version,
    about = "Tuning experiments for pseudo-marginal Metropolis-Hastings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (default: PMTUNE_WORKERS, then all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Output directory (default: out/<command>).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// JSON config file, or a metadata.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Budget preset the config file and flags are applied on top of.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid search over (ell, sigma) for the limiting chain.
    Tune(TuneArgs),
    /// Toy model: pseudo-marginal versus limiting chain.
    Toy(ToyArgs),
    /// Random-intercept GLMM sweep over the number of samples.
    Glmm(GlmmArgs),
    /// Lotka-Volterra particle-count sweep.
    Lv(LvArgs),
    /// Noise distribution as the data size grows.
    Clt(CltArgs),
    /// Posterior versus its Gaussian approximation.
    Bvm(BvmArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Tune(_) => TuneConfig::COMMAND,
            Self::Toy(_) => ToyConfig::COMMAND,
            Self::Glmm(_) => GlmmConfig::COMMAND,
            Self::Lv(_) => LvConfig::COMMAND,
            Self::Clt(_) => CltConfig::COMMAND,
            Self::Bvm(_) => BvmConfig::COMMAND,
        }
    }
}

/// Flags of one subcommand, applied over the resolved config.
trait Overrides<C> {
    fn apply(&self, cfg: &mut C) -> RunResult<()>;
}

macro_rules! set {
    ($cfg:ident, $args:ident: $($field:ident),*) => {
        $(if let Some(v) = $args.$field.clone() {
            $cfg.$field = v.into();
        })*
    };
}

#[derive(Debug, clap::Args)]
pub struct TuneArgs {
    /// Parameter dimension.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub ell_min: Option<f64>,
    #[arg(long)]
    pub ell_max: Option<f64>,
    #[arg(long)]
    pub ell_step: Option<f64>,
    #[arg(long)]
    pub sigma_min: Option<f64>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    #[arg(long)]
    pub sigma_step: Option<f64>,
    /// Chain length per replicate.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<CellMethod>,
    /// Evaluate only (--ell, --sigma).
    #[arg(long)]
    pub single_cell: bool,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl Overrides<TuneConfig> for TuneArgs {
    fn apply(&self, cfg: &mut TuneConfig) -> RunResult<()> {
        set!(cfg, self: ell_min, ell_max, ell_step, sigma_min, sigma_max, sigma_step, m, replicates, method);
        if self.d.is_some() {
            cfg.d = self.d;
        }
        if self.ell.is_some() {
            cfg.ell = self.ell;
        }
        if self.sigma.is_some() {
            cfg.sigma = self.sigma;
        }
        cfg.single_cell |= self.single_cell;
        Ok(())
    }
}

#[derive(Debug, clap::Args)]
pub struct ToyArgs {
    /// Data size; replaces the preset blocks together with --n.
    #[arg(long = "T", alias = "t")]
    pub t: Option<usize>,
    /// Comma-separated sample sizes for --T.
    #[arg(long = "n", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub sigma_reps: Option<usize>,
    #[arg(long, value_enum)]
    pub iat_method: Option<IatMethod>,
}

impl Overrides<ToyConfig> for ToyArgs {
    fn apply(&self, cfg: &mut ToyConfig) -> RunResult<()> {
        set!(cfg, self: m, ell, sigma_reps, iat_method);
        match (self.t, &self.n_list) {
            (Some(t), Some(n)) => {
                cfg.blocks = vec![ToyBlock {
                    t,
                    n_list: n.clone(),
                }];
            }
            (None, None) => {}
            _ => return Err(RunError::config("--T and --n must be given together")),
        }
        Ok(())
    }
}

#[derive(Debug, clap::Args)]
pub struct GlmmArgs {
    /// Number of clusters.
    #[arg(long = "T", alias = "t")]
    pub t: Option<usize>,
    /// Observations per cluster.
    #[arg(long = "J", alias = "j")]
    pub j: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Comma-separated sample sizes; overrides --sigma-targets.
    #[arg(long = "n", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub sigma_targets: Option<Vec<f64>>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long, value_enum)]
    pub proposal: Option<ProposalFamily>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub proposal_scale: Option<f64>,
    #[arg(long)]
    pub n_ref: Option<usize>,
    #[arg(long)]
    pub pilot_m: Option<usize>,
    #[arg(long)]
    pub pilot_n: Option<usize>,
    #[arg(long)]
    pub sigma_reps: Option<usize>,
    #[arg(long, value_enum)]
    pub iat_method: Option<IatMethod>,
}

impl Overrides<GlmmConfig> for GlmmArgs {
    fn apply(&self, cfg: &mut GlmmConfig) -> RunResult<()> {
        set!(cfg, self: t, j, p, family, sigma_targets, m, ell, proposal, nu, proposal_scale, n_ref, pilot_m, pilot_n, sigma_reps, iat_method);
        if self.n_list.is_some() {
            cfg.n_list = self.n_list.clone();
        }
        Ok(())
    }
}

#[derive(Debug, clap::Args)]
pub struct LvArgs {
    /// Last observation time.
    #[arg(long)]
    pub t_max: Option<usize>,
    /// Comma-separated particle counts.
    #[arg(long = "n", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub pilot_m: Option<usize>,
    #[arg(long)]
    pub pilot_n: Option<usize>,
    #[arg(long)]
    pub sigma_reps: Option<usize>,
    #[arg(long, value_enum)]
    pub resampling: Option<ResamplingScheme>,
}

impl Overrides<LvConfig> for LvArgs {
    fn apply(&self, cfg: &mut LvConfig) -> RunResult<()> {
        set!(cfg, self: t_max, n_list, m, ell, pilot_m, pilot_n, sigma_reps, resampling);
        Ok(())
    }
}

#[derive(Debug, clap::Args)]
pub struct CltArgs {
    #[arg(long, value_enum)]
    pub model: Option<CltModel>,
    /// Comma-separated data sizes.
    #[arg(long = "T", alias = "t", value_delimiter = ',')]
    pub t_list: Option<Vec<usize>>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Comma-separated evaluation points.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub theta: Option<Vec<f64>>,
}

impl Overrides<CltConfig> for CltArgs {
    fn apply(&self, cfg: &mut CltConfig) -> RunResult<()> {
        set!(cfg, self: model, t_list, gamma, reps, theta);
        Ok(())
    }
}

#[derive(Debug, clap::Args)]
pub struct BvmArgs {
    /// Prior standard deviation.
    #[arg(long, conflicts_with = "flat")]
    pub sigma0: Option<f64>,
    /// Use a flat prior.
    #[arg(long)]
    pub flat: bool,
    /// Comma-separated data sizes.
    #[arg(long = "T", alias = "t", value_delimiter = ',')]
    pub t_list: Option<Vec<usize>>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_bar: Option<f64>,
}

impl Overrides<BvmConfig> for BvmArgs {
    fn apply(&self, cfg: &mut BvmConfig) -> RunResult<()> {
        set!(cfg, self: t_list, theta_bar);
        if let Some(s) = self.sigma0 {
            cfg.sigma0_sq = Some(s * s);
        }
        if self.flat {
            cfg.sigma0_sq = None;
        }
        Ok(())
    }
}

/// Resolved settings of one invocation.
#[derive(Clone, Debug)]
pub struct Resolved<C> {
    pub common: Common,
    pub config: C,
}

fn resolve_with<C: ExperimentConfig, A: Overrides<C>>(
    cli: &Cli,
    args: &A,
) -> RunResult<Resolved<C>> {
    let file = cli
        .config
        .as_deref()
        .map(|p| load_file(p, C::COMMAND))
        .transpose()?;
    let (mut common, mut config) = resolve::<C>(cli.preset, file)?;
    if let Some(s) = cli.seed {
        common.seed = s;
    }
    if cli.workers.is_some() {
        common.workers = cli.workers;
    }
    if let Some(d) = &cli.output_dir {
        common.output_dir = d.clone();
    }
    args.apply(&mut config)?;
    config.validate()?;
    Ok(Resolved { common, config })
}

/// Runs `config` on a pool of the configured size and writes its outputs
/// and `metadata.json`. Returns the output directory.
pub fn execute<C: Experiment>(r: &Resolved<C>) -> RunResult<OutputDir> {
    let workers = worker_count(&r.common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::config(format!("cannot start {workers} workers: {e}")))?;
    let start = Instant::now();
    let out = pool.install(|| r.config.run(r.common.seed))?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let dir = OutputDir::create(&r.common.output_dir)?;
    C::write(&out, &dir)?;
    let meta = Metadata {
        command: C::COMMAND,
        config: MergedConfig {
            common: &r.common,
            experiment: &r.config,
        },
        version: env!("CARGO_PKG_VERSION"),
        workers,
        wall_time_s,
        notes: Vec::new(),
    };
    dir.write_json("metadata.json", &meta)?;
    Ok(dir)
}

fn dispatch(cli: &Cli) -> RunResult<OutputDir> {
    match &cli.command {
        Command::Tune(a) => execute(&resolve_with::<TuneConfig, _>(cli, a)?),
        Command::Toy(a) => execute(&resolve_with::<ToyConfig, _>(cli, a)?),
        Command::Glmm(a) => execute(&resolve_with::<GlmmConfig, _>(cli, a)?),
        Command::Lv(a) => execute(&resolve_with::<LvConfig, _>(cli, a)?),
        Command::Clt(a) => execute(&resolve_with::<CltConfig, _>(cli, a)?),
        Command::Bvm(a) => execute(&resolve_with::<BvmConfig, _>(cli, a)?),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(dir) => {
            println!("wrote {}", dir.path().display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let RunError::Config(_) = e {
                let mut cmd = Cli::command();
                if let Some(sub) = cmd.find_subcommand_mut(cli.command.name()) {
                    let mut sub = sub
                        .clone()
                        .bin_name(format!("pmtune {}", cli.command.name()));
                    eprintln!("\n{}", sub.render_usage());
                }
            }
            e.exit_code()
        }
    }
}
