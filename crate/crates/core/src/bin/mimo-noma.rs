use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mimo_noma::channel::{CsiModel, Fading, SystemDims};
use mimo_noma::codec::presets;
use mimo_noma::exit::{
    decoder_exit_curve, decoding_threshold, ebn0_db_to_sigma, info_grid, run_exit_recursion, write_curve_csv,
    AnalyticDecoder, ExitModel, FeedbackInfo, FeedbackVariance, Interference, McExitConfig, ThresholdWindow,
};
use mimo_noma::optimizer::{optimize_degree_distribution, OptimizerConfig};
use mimo_noma::sim::{mimo_noma_capacity_limit, parse_grid, run_ber_simulation, CodeParamsSpec, CodeSpec, SimConfig};
use mimo_noma::{Error, Result};

#[derive(Parser)]
#[command(name = "mimo-noma", version, about = "Coded MIMO-NOMA analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the variance-transfer recursion at one Eb/N0 and dump the trajectory.
    Exit(ExitArgs),
    /// Bisect the decoding threshold of a code.
    Threshold(ThresholdArgs),
    /// Search for a degree distribution with an open tunnel at a noise level.
    Optimize(OptimizeArgs),
    /// Monte-Carlo bit error rate of the iterative receiver.
    Ber(BerArgs),
    /// Gaussian-input sum-capacity limit in Eb/N0.
    Capacity(CapacityArgs),
    /// List the built-in codes.
    Presets,
}

/// Code and system selection shared by several commands.
#[derive(Args)]
struct CodeArgs {
    /// Built-in code name (see `presets`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML simulation configuration naming or describing the code.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of users (defaults to the code's design value).
    #[arg(short = 'K', long = "users")]
    k: Option<usize>,
    /// Number of receive antennas (defaults to the code's design value).
    #[arg(short = 'M', long = "antennas")]
    m: Option<usize>,
}

impl CodeArgs {
    fn sim_config(&self) -> Result<SimConfig> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(name), None) => SimConfig::for_preset(name),
            (None, Some(path)) => SimConfig::from_toml(&read(path)?)?,
            _ => return Err(Error::Config("exactly one of --preset or --config is required".into())),
        };
        if self.k.is_some() {
            cfg.k = self.k;
        }
        if self.m.is_some() {
            cfg.m = self.m;
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FeedbackArg {
    Extrinsic,
    APosteriori,
}

#[derive(Clone, Copy, ValueEnum)]
enum InterferenceArg {
    LargeSystem,
    ExcludeSelf,
}

#[derive(Args)]
struct ModelArgs {
    /// Information fed back from the decoders to the detector.
    #[arg(long, value_enum, default_value = "a-posteriori")]
    feedback: FeedbackArg,
    /// Interference count in the detector variance transfer.
    #[arg(long, value_enum, default_value = "exclude-self")]
    interference: InterferenceArg,
    /// Estimate fed-back variances with this many Monte-Carlo samples.
    #[arg(long, value_name = "SAMPLES")]
    mc_variance: Option<usize>,
    /// Seed of the Monte-Carlo variance and curve estimates.
    #[arg(long, default_value_t = 0)]
    mc_seed: u64,
}

impl ModelArgs {
    fn model(&self) -> ExitModel {
        let mut m = ExitModel {
            feedback: match self.feedback {
                FeedbackArg::Extrinsic => FeedbackInfo::Extrinsic,
                FeedbackArg::APosteriori => FeedbackInfo::APosteriori,
            },
            interference: match self.interference {
                InterferenceArg::LargeSystem => Interference::LargeSystem,
                InterferenceArg::ExcludeSelf => Interference::ExcludeSelf,
            },
            ..ExitModel::default()
        };
        if let Some(samples) = self.mc_variance {
            m.variance = FeedbackVariance::MonteCarlo { samples, seed: self.mc_seed };
        }
        m
    }
}

#[derive(Args)]
struct ExitArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Eb/N0 in dB.
    #[arg(long, allow_hyphen_values = true)]
    ebn0: f64,
    /// Trajectory CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the decoder transfer curve to this CSV.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Measure the decoder curve by simulation with this information length.
    #[arg(long, value_name = "INFO_LEN")]
    monte_carlo: Option<usize>,
    /// Decoder activations per measured curve point.
    #[arg(long, default_value_t = 1)]
    activations: usize,
    /// Points of the decoder curve.
    #[arg(long, default_value_t = 41)]
    curve_points: usize,
}

#[derive(Args)]
struct ThresholdArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Search window `lo:hi` in dB.
    #[arg(long, default_value = "-15:5", allow_hyphen_values = true)]
    window: String,
    /// Bisection resolution in dB.
    #[arg(long, default_value_t = 0.01)]
    resolution: f64,
    /// Result CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// TOML optimizer configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sigma_n: Option<f64>,
    #[arg(short = 'K', long = "users")]
    k: Option<usize>,
    #[arg(short = 'M', long = "antennas")]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    model: ModelArgs,
    /// Where to write the resulting code as a loadable configuration.
    #[arg(long, default_value = "optimized.toml")]
    out: PathBuf,
    /// Search log CSV.
    #[arg(long, default_value = "optimize_log.csv")]
    log: PathBuf,
}

#[derive(Args)]
struct BerArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Eb/N0 grid, `start:stop:step` or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    ebn0: Option<String>,
    #[arg(long)]
    info_len: Option<usize>,
    #[arg(long)]
    tau_max: Option<usize>,
    #[arg(long)]
    max_frames: Option<usize>,
    /// Bit errors after which a point stops (0 disables).
    #[arg(long)]
    max_errors: Option<u64>,
    /// Minimum information bits per point.
    #[arg(long)]
    min_bits: Option<u64>,
    /// Block fading with this coherence length (fast fading otherwise).
    #[arg(long)]
    block: Option<usize>,
    /// Channel-estimation error variance.
    #[arg(long)]
    csi_error: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Result CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Per-user rate; defaults to the code rate.
    #[arg(long)]
    rate: Option<f64>,
    /// Channel draws.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Result CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn exit_cmd(a: &ExitArgs) -> Result<()> {
    let resolved = a.code.sim_config()?.resolve()?;
    let model = a.model.model();
    let rate = resolved.params.rate();
    let sigma_n = ebn0_db_to_sigma(a.ebn0, rate);
    let traj = match a.monte_carlo {
        Some(info_len) => {
            let cfg =
                McExitConfig { info_len, activations: a.activations, feedback: model.feedback, seed: a.model.mc_seed };
            let curve = decoder_exit_curve(&resolved.params, &info_grid(a.curve_points, 0.999), &cfg)?;
            if let Some(p) = &a.curve {
                write_curve_csv(&curve, BufWriter::new(File::create(p)?))?;
            }
            run_exit_recursion(&curve, resolved.dims, sigma_n, &model)?
        }
        None => {
            let dec = AnalyticDecoder::new(&resolved.params, model.feedback);
            if let Some(p) = &a.curve {
                let curve = dec.curve(&info_grid(a.curve_points, 0.999))?;
                write_curve_csv(&curve, BufWriter::new(File::create(p)?))?;
            }
            run_exit_recursion(&dec, resolved.dims, sigma_n, &model)?
        }
    };
    traj.write_csv(output(&a.out)?)?;
    eprintln!(
        "{:?} after {} iterations at {} dB (sigma_n = {sigma_n:.4}, rate = {rate:.4})",
        traj.verdict,
        traj.iterations_used(),
        a.ebn0
    );
    Ok(())
}

fn threshold_cmd(a: &ThresholdArgs) -> Result<()> {
    let resolved = a.code.sim_config()?.resolve()?;
    let bounds: Vec<f64> = a.window.split(':').filter_map(|s| s.trim().parse().ok()).collect();
    let [lo, hi] = bounds[..] else {
        return Err(Error::Config(format!("malformed window `{}`", a.window)));
    };
    let window = ThresholdWindow { lo_db: lo, hi_db: hi, resolution_db: a.resolution, ..Default::default() };
    let r = decoding_threshold(&resolved.params, resolved.dims, &window, &a.model.model())?;
    let mut wr = csv::Writer::from_writer(output(&a.out)?);
    wr.write_record(["code", "K", "M", "rate", "threshold_db", "bracket_lo_db", "bracket_hi_db", "sigma_n"])?;
    let name = resolved.preset.map_or("custom", |p| p.name);
    wr.serialize((
        name,
        resolved.dims.k(),
        resolved.dims.m(),
        r.rate,
        r.threshold_db,
        r.bracket_db.0,
        r.bracket_db.1,
        r.sigma_n,
    ))?;
    wr.flush()?;
    Ok(())
}

fn optimize_cmd(a: &OptimizeArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => toml::from_str::<OptimizerConfig>(&read(p)?)?,
        None => OptimizerConfig::default(),
    };
    if let Some(s) = a.sigma_n {
        cfg.sigma_n = s;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(m) = a.m {
        cfg.m = m;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let report = optimize_degree_distribution(&cfg, &a.model.model())?;
    report.write_log_csv(BufWriter::new(File::create(&a.log)?))?;
    let mut out = SimConfig::for_code(CodeSpec::Params(CodeParamsSpec::from_params(&report.params)));
    out.k = Some(cfg.k);
    out.m = Some(cfg.m);
    out.q_max = cfg.q_max;
    std::fs::write(&a.out, out.to_toml()?)?;
    eprintln!(
        "rate {:.4}, design {:.3} dB, threshold {}, min gap {:.2e}",
        report.rate,
        report.design_ebn0_db,
        report.threshold_db.map_or("n/a".to_string(), |t| format!("{t:.3} dB")),
        report.min_gap
    );
    if !report.feasible {
        return Err(Error::Infeasible("no code with an open tunnel was found".into()));
    }
    Ok(())
}

fn ber_cmd(a: &BerArgs) -> Result<()> {
    let mut cfg = a.code.sim_config()?;
    if let Some(g) = &a.ebn0 {
        cfg.ebn0_grid = parse_grid(g)?;
    }
    macro_rules! set {
        ($($f:ident => $g:ident),*) => { $(if let Some(v) = a.$f { cfg.$g = v; })* };
    }
    set!(info_len => info_len, tau_max => tau_max, max_frames => max_frames, max_errors => max_bit_errors,
        min_bits => min_bits, seed => seed);
    if let Some(l) = a.block {
        cfg.fading = Fading::Block(l);
    }
    if let Some(v) = a.csi_error {
        cfg.csi = CsiModel::new(v).map_err(|e| Error::Config(e.to_string()))?;
    }
    let result = run_ber_simulation(&cfg)?;
    result.write_csv(output(&a.out)?)?;
    Ok(())
}

fn capacity_cmd(a: &CapacityArgs) -> Result<()> {
    let (dims, rate) = match (&a.code.preset, &a.code.config) {
        (None, None) => {
            let (Some(k), Some(m), Some(rate)) = (a.code.k, a.code.m, a.rate) else {
                return Err(Error::Config("give --preset/--config, or -K, -M and --rate".into()));
            };
            (SystemDims::new(k, m).map_err(|e| Error::Config(e.to_string()))?, rate)
        }
        _ => {
            let r = a.code.sim_config()?.resolve()?;
            (r.dims, a.rate.unwrap_or(r.params.rate()))
        }
    };
    let r = mimo_noma_capacity_limit(dims, rate, a.samples, a.seed)?;
    let mut wr = csv::Writer::from_writer(output(&a.out)?);
    wr.write_record(["K", "M", "rate", "ebn0_db", "sigma_n", "std_error_db", "samples"])?;
    wr.serialize((dims.k(), dims.m(), rate, r.ebn0_db, r.sigma_n, r.std_error_db, r.samples))?;
    wr.flush()?;
    Ok(())
}

fn presets_cmd() -> Result<()> {
    let mut wr = csv::Writer::from_writer(io::stdout().lock());
    wr.write_record([
        "name",
        "q",
        "alpha",
        "K",
        "M",
        "rate",
        "reference_threshold_db",
        "reference_capacity_db",
        "description",
    ])?;
    for p in presets::all() {
        wr.serialize((
            p.name,
            p.q,
            p.alpha,
            p.k,
            p.m,
            p.params().rate(),
            p.reference_threshold_db,
            p.reference_capacity_db,
            p.description,
        ))?;
    }
    wr.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Exit(a) => exit_cmd(a),
        Command::Threshold(a) => threshold_cmd(a),
        Command::Optimize(a) => optimize_cmd(a),
        Command::Ber(a) => ber_cmd(a),
        Command::Capacity(a) => capacity_cmd(a),
        Command::Presets => presets_cmd(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
