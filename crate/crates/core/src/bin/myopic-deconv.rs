use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use myopic_deconv::analysis::SweepParam;
use myopic_deconv::config::ExperimentConfig;
use myopic_deconv::pipeline;
use myopic_deconv::Result;

#[derive(Parser)]
#[command(version, about = "Myopic unsupervised Wiener-Hunt deconvolution by Gibbs sampling")]
struct Cli {
    /// Print the default experiment configuration and exit.
    #[arg(long)]
    print_default_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Common {
    /// Configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides one configuration key, e.g. `--set mode=non-myopic`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::parse(&fs::read_to_string(p)?)?,
            None => ExperimentConfig::default(),
        };
        for o in &self.overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| myopic_deconv::Error::Config(format!("override {o:?} is not KEY=VALUE")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw a phantom (or load --from-image), blur it and add noise.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Grayscale PGM or float image used instead of a prior draw.
        #[arg(long)]
        from_image: Option<PathBuf>,
    },
    /// Run the sampler on a data image.
    Deconvolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
    },
    /// Error indices and radial spectra of an estimate against the truth.
    Evaluate {
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Wiener-Hunt error as one parameter runs over a grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// gamma_eps, gamma_1, w_alpha, w_beta or phi.
        #[arg(long)]
        param: String,
        /// `lo:hi:n`, `log:lo:hi:n` or a comma-separated list.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Deconvolution summary whose posterior means set the other parameters.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Cross-check the spectral computations against dense matrices.
    OracleCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        side: usize,
        #[arg(long, default_value_t = 20)]
        instances: usize,
    },
}

fn run(cli: Cli) -> Result<bool> {
    if cli.print_default_config {
        print!("{}", ExperimentConfig::default().emit());
        return Ok(true);
    }
    let Some(command) = cli.command else {
        eprintln!("no command given, see --help");
        return Ok(false);
    };
    match command {
        Command::Simulate { common, from_image } => {
            let mut cfg = common.load()?;
            if from_image.is_some() {
                cfg.input_image = from_image;
            }
            let sim = pipeline::cmd_simulate(&cfg)?;
            println!("wrote truth and data ({0}x{0}) to {1}", sim.truth.side(), cfg.out_dir.display());
        }
        Command::Deconvolve { common, data } => {
            let cfg = common.load()?;
            let d = pipeline::cmd_deconvolve(&cfg, &data)?;
            print!("{}", d.summary.to_text());
            if !d.output.chains.converged {
                eprintln!("warning: stopped at max_iters before reaching the convergence threshold");
            }
        }
        Command::Evaluate { estimate, truth, data, bins, out } => {
            let ev = pipeline::cmd_evaluate(&estimate, &truth, &data, bins, &out)?;
            println!("error_data = {}", ev.error_data);
            println!("error_estimate = {}", ev.error_estimate);
        }
        Command::Sweep { common, param, grid, data, truth, summary } => {
            let cfg = common.load()?;
            let param = SweepParam::parse(&param)?;
            let grid = pipeline::parse_grid(&grid)?;
            let curve = pipeline::cmd_sweep(&cfg, param, &grid, &data, &truth, summary.as_deref())?;
            println!("best {} = {} (error {})", param.name(), curve.best_value(), curve.best_error());
        }
        Command::OracleCheck { seed, side, instances } => {
            let report = pipeline::cmd_oracle_check(seed, side, instances)?;
            for c in &report.checks {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                println!("{status} {:<50} worst {:.3e} (tol {:.0e})", c.name, c.worst, c.tolerance);
            }
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
