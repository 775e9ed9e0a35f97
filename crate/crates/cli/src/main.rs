use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use treentropy::rates::{
    predict, run_experiment, ConfigOverrides, ExperimentConfig, Family, Law, Mode, PredictParams, TreeChoice, Verdict,
};

#[derive(Parser)]
#[command(name = "treentropy", version, about = "Covering and entropy rate experiments for summation operators on trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact order and bracketed ball covering numbers over an eps sweep.
    Covering(RunArgs),
    /// Biased-tree nets against exact order covering numbers.
    Biased(RunArgs),
    /// Level-arithmetic log-count brackets on the binary tree.
    BinaryLog(RunArgs),
    /// Small-deviation Monte Carlo against the covering exponent.
    Gaussian(RunArgs),
    /// Cross-module invariants on random small instances.
    OpChecks(RunArgs),
    /// Predicted exponents for a parameter set.
    Predict(PredictArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TreeArg {
    Path,
    Binary,
    Moderate,
    Biased,
}

impl From<TreeArg> for TreeChoice {
    fn from(t: TreeArg) -> Self {
        match t {
            TreeArg::Path => TreeChoice::Path,
            TreeArg::Binary => TreeChoice::Binary,
            TreeArg::Moderate => TreeChoice::Moderate,
            TreeArg::Biased => TreeChoice::Biased,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Polynomial,
    Exponential,
}

impl From<LawArg> for Law {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Polynomial => Law::Polynomial,
            LawArg::Exponential => Law::Exponential,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON file with the same keys as the flags (snake_case); flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    tree: Option<TreeArg>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long, value_enum)]
    law: Option<LawArg>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    eps_start: Option<f64>,
    #[arg(long)]
    eps_ratio: Option<f64>,
    #[arg(long)]
    eps_count: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    exact_limit: Option<usize>,
    /// Fixed c*; omitted means the doubling search.
    #[arg(long)]
    c_star: Option<f64>,
    /// Random instances for op-checks.
    #[arg(long)]
    instances: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            tree: self.tree.map(Into::into),
            lambda: self.lambda,
            depth: self.depth,
            law: self.law.map(Into::into),
            gamma: self.gamma,
            q: self.q,
            eps_start: self.eps_start,
            eps_ratio: self.eps_ratio,
            eps_count: self.eps_count,
            exact_limit: self.exact_limit,
            c_star: self.c_star,
            samples: self.samples,
            seed: self.seed,
            instances: self.instances,
            out: self.out.clone(),
            ..ConfigOverrides::default()
        }
    }
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, value_enum)]
    tree: TreeArg,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "polynomial")]
    law: LawArg,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
}

fn run(mode: Mode, args: &RunArgs) -> Result<ExitCode> {
    let file = match &args.config {
        Some(p) => ConfigOverrides::read(p).with_context(|| format!("reading config {}", p.display()))?,
        None => ConfigOverrides::default(),
    };
    if let Some(m) = file.mode {
        if m != mode {
            bail!("config file is for mode {:?}, command asks for {:?}", m, mode);
        }
    }
    let config = ExperimentConfig::resolve(mode, &[&file, &args.overrides()]);
    let report = run_experiment(&config).with_context(|| format!("{} experiment failed", mode.name()))?;
    for c in &report.comparisons {
        match (c.target, c.rel_error) {
            (Some(t), Some(r)) => println!(
                "{:<32} measured {:.4} target {:.4} rel.err {:.3} {}",
                c.name,
                c.measured,
                t,
                r,
                if c.passed { "ok" } else { "FAIL" }
            ),
            _ => println!("{:<32} violations {} {}", c.name, c.measured, if c.passed { "ok" } else { "FAIL" }),
        }
    }
    for f in &report.fits {
        match (&f.fit, &f.error) {
            (Some(fit), _) => println!("fit {:<28} a {:.4} b {:.4} r2 {:.4}", f.name, fit.a, fit.b, fit.r_squared),
            (None, Some(e)) => println!("fit {:<28} unavailable: {e}", f.name),
            _ => {}
        }
    }
    println!("verdict {:?}", report.verdict);
    for p in &report.files {
        println!("wrote {}", p.display());
    }
    Ok(if report.verdict == Verdict::Fail { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn family(tree: TreeArg, lambda: f64) -> Result<Family> {
    Ok(match tree {
        TreeArg::Path => Family::Moderate { lambda: 0.0 },
        TreeArg::Binary => Family::Binary,
        TreeArg::Moderate => Family::Moderate { lambda },
        TreeArg::Biased => {
            if lambda.fract() != 0.0 || lambda < 1.0 {
                bail!("biased trees need a positive integer lambda, got {lambda}");
            }
            Family::Biased { lambda: lambda as u32 }
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Covering(a) => run(Mode::Covering, a),
        Command::Biased(a) => run(Mode::Biased, a),
        Command::BinaryLog(a) => run(Mode::BinaryLog, a),
        Command::Gaussian(a) => run(Mode::Gaussian, a),
        Command::OpChecks(a) => run(Mode::OperatorChecks, a),
        Command::Predict(a) => family(a.tree, a.lambda).and_then(|family| {
            let p = predict(PredictParams { family, law: a.law.into(), q: a.q, gamma: a.gamma })?;
            println!("{}", serde_json::to_string_pretty(&p)?);
            Ok(ExitCode::SUCCESS)
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
