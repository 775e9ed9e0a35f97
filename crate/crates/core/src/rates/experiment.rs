//! Config-driven experiments: sweeps, fits, predictions and report files.

use super::fit::{fit_covering, fit_log_points, fit_points, fit_small_deviation, FitModel, FitOptions, RateFit, Series};
use super::predict::{predict, CoveringShape, Family, Law, PredictParams, RatePrediction};
use crate::checks::{run_operator_checks, CheckOptions, CheckResult};
use crate::covering::{covering_profile, greedy_order_net, min_order_net, CoveringProfile, ProfileOptions, EXACT_CANDIDATE_LIMIT};
use crate::error::{Error, Result};
use crate::gaussian::{CovCheck, GaussianRun};
use crate::metric::{DecayProfile, MetricEvaluator};
use crate::nets::{biased_net, binary_lognet_counts};
use crate::tree::{NodeId, Tree};
use crate::weights::{WeightLaw, WeightSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const TOL_COVERING: f64 = 0.15;
pub const TOL_BIASED: f64 = 0.15;
pub const TOL_BINARY_LOG: f64 = 0.20;
pub const TOL_GAUSSIAN: f64 = 0.25;
/// Covariance checks pass within this many standard errors.
pub const COV_SE: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Covering,
    Biased,
    BinaryLog,
    Gaussian,
    OperatorChecks,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Covering => "covering",
            Mode::Biased => "biased",
            Mode::BinaryLog => "binary-log",
            Mode::Gaussian => "gaussian",
            Mode::OperatorChecks => "op-checks",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeChoice {
    Path,
    Binary,
    Moderate,
    Biased,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub kind: TreeChoice,
    pub lambda: f64,
    /// Materialized depth; `None` picks it from the smallest `eps`.
    pub depth: Option<u32>,
}

/// `alpha = law(gamma)`, `sigma = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub law: Law,
    pub gamma: f64,
    pub q: f64,
}

/// `start * ratio^k` for `k < count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl EpsGrid {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.start * self.ratio.powi(k as i32)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start > 0.0 && self.start.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps start must be positive, got {}", self.start)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::InvalidParameter(format!("eps ratio must lie in (0, 1), got {}", self.ratio)));
        }
        if self.count == 0 {
            return Err(Error::InvalidParameter("eps grid needs at least one point".into()));
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.start * self.ratio.powi(self.count as i32 - 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub tree: TreeSpec,
    pub weights: WeightSpec,
    pub eps: EpsGrid,
    /// Covering grid of the gaussian mode; `eps` is then the small-deviation grid.
    pub cover_eps: Option<EpsGrid>,
    pub exact_limit: usize,
    pub c_star: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Random instances for operator checks.
    pub instances: usize,
    pub out: PathBuf,
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl ExperimentConfig {
    pub fn defaults(mode: Mode) -> Self {
        let poly = |gamma| WeightSpec { law: Law::Polynomial, gamma, q: 2.0 };
        let grid = |start, count| EpsGrid { start, ratio: SQRT_HALF, count };
        let base = ExperimentConfig {
            mode,
            tree: TreeSpec { kind: TreeChoice::Moderate, lambda: 1.0, depth: None },
            weights: poly(2.5),
            eps: grid(0.15, 12),
            cover_eps: None,
            exact_limit: EXACT_CANDIDATE_LIMIT,
            c_star: None,
            samples: 100_000,
            seed: 1,
            instances: 50,
            out: PathBuf::from("out"),
        };
        match mode {
            Mode::Covering | Mode::OperatorChecks => base,
            Mode::Biased => ExperimentConfig { tree: TreeSpec { kind: TreeChoice::Biased, ..base.tree }, ..base },
            Mode::BinaryLog => ExperimentConfig {
                tree: TreeSpec { kind: TreeChoice::Binary, lambda: 1.0, depth: Some(20) },
                weights: poly(3.0),
                eps: grid(0.25, 21),
                ..base
            },
            Mode::Gaussian => ExperimentConfig {
                tree: TreeSpec { kind: TreeChoice::Biased, lambda: 1.0, depth: Some(140) },
                eps: EpsGrid { start: 2.0, ratio: 0.85, count: 20 },
                cover_eps: Some(grid(0.8, 16)),
                ..base
            },
        }
    }

    /// Defaults for `mode` with each override applied in order.
    pub fn resolve(mode: Mode, overrides: &[&ConfigOverrides]) -> Self {
        let mut c = ExperimentConfig::defaults(mode);
        for o in overrides {
            o.apply(&mut c);
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.eps.validate()?;
        if let Some(g) = &self.cover_eps {
            g.validate()?;
        }
        let w = &self.weights;
        if !(w.q > 1.0 && w.q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must lie in (1, inf), got {}", w.q)));
        }
        let gamma_ok = match w.law {
            Law::Polynomial => w.gamma > 1.0,
            Law::Exponential => w.gamma > 0.0,
        };
        if !(gamma_ok && w.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma {} outside the range of the {:?} law", w.gamma, w.law)));
        }
        if !(self.tree.lambda > 0.0 && self.tree.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.tree.lambda)));
        }
        if self.tree.kind == TreeChoice::Biased && self.tree.lambda.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!("biased trees need an integer lambda, got {}", self.tree.lambda)));
        }
        if let Some(c) = self.c_star {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("c* must be positive, got {c}")));
            }
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(self)?)))
    }
}

/// Partial configuration, as read from a JSON file or command-line flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigOverrides {
    /// Informational; the caller chooses the mode.
    pub mode: Option<Mode>,
    pub tree: Option<TreeChoice>,
    pub lambda: Option<f64>,
    pub depth: Option<u32>,
    pub law: Option<Law>,
    pub gamma: Option<f64>,
    pub q: Option<f64>,
    pub eps_start: Option<f64>,
    pub eps_ratio: Option<f64>,
    pub eps_count: Option<usize>,
    pub cover_eps_start: Option<f64>,
    pub cover_eps_ratio: Option<f64>,
    pub cover_eps_count: Option<usize>,
    pub exact_limit: Option<usize>,
    pub c_star: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub instances: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn apply(&self, c: &mut ExperimentConfig) {
        fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        set(&mut c.tree.kind, &self.tree);
        set(&mut c.tree.lambda, &self.lambda);
        if self.depth.is_some() {
            c.tree.depth = self.depth;
        }
        set(&mut c.weights.law, &self.law);
        set(&mut c.weights.gamma, &self.gamma);
        set(&mut c.weights.q, &self.q);
        set(&mut c.eps.start, &self.eps_start);
        set(&mut c.eps.ratio, &self.eps_ratio);
        set(&mut c.eps.count, &self.eps_count);
        if self.cover_eps_start.is_some() || self.cover_eps_ratio.is_some() || self.cover_eps_count.is_some() {
            let g = c.cover_eps.get_or_insert(c.eps);
            set(&mut g.start, &self.cover_eps_start);
            set(&mut g.ratio, &self.cover_eps_ratio);
            set(&mut g.count, &self.cover_eps_count);
        }
        set(&mut c.exact_limit, &self.exact_limit);
        if self.c_star.is_some() {
            c.c_star = self.c_star;
        }
        set(&mut c.samples, &self.samples);
        set(&mut c.seed, &self.seed);
        set(&mut c.instances, &self.instances);
        set(&mut c.out, &self.out);
    }
}

/// A measured value against its target, or a boolean check when `target` is
/// absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub measured: f64,
    pub target: Option<f64>,
    pub rel_error: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl Comparison {
    fn rate(name: &str, measured: f64, target: f64, tolerance: f64) -> Self {
        let rel = (measured - target).abs() / target.abs();
        Comparison {
            name: name.into(),
            measured,
            target: Some(target),
            rel_error: Some(rel),
            tolerance: Some(tolerance),
            passed: rel <= tolerance,
        }
    }

    /// `measured` counts violations.
    fn check(name: &str, violations: u64) -> Self {
        Comparison {
            name: name.into(),
            measured: violations as f64,
            target: None,
            rel_error: None,
            tolerance: None,
            passed: violations == 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: Option<RateFit>,
    pub error: Option<String>,
}

impl NamedFit {
    fn of(name: &str, r: Result<RateFit>) -> Self {
        match r {
            Ok(f) => NamedFit { name: name.into(), fit: Some(f), error: None },
            Err(e) => NamedFit { name: name.into(), fit: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Critical or unsupported parameters: fits are reported, not judged.
    ReportOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mode: Mode,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    /// Materialized tree size, when a tree was built.
    pub nodes: Option<usize>,
    pub depth: Option<u32>,
    pub fits: Vec<NamedFit>,
    pub prediction: Option<RatePrediction>,
    pub prediction_error: Option<String>,
    pub comparisons: Vec<Comparison>,
    pub checks: Vec<CheckResult>,
    pub covariance: Vec<CovCheck>,
    pub verdict: Verdict,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        Ok(ExperimentReport {
            mode: config.mode,
            config: config.clone(),
            config_hash: config.hash()?,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            nodes: None,
            depth: None,
            fits: Vec::new(),
            prediction: None,
            prediction_error: None,
            comparisons: Vec::new(),
            checks: Vec::new(),
            covariance: Vec::new(),
            verdict: Verdict::Pass,
            files: Vec::new(),
        })
    }

    fn set_prediction(&mut self, r: Result<RatePrediction>) {
        match r {
            Ok(p) => self.prediction = Some(p),
            Err(e) => self.prediction_error = Some(e.to_string()),
        }
    }

    fn fit(&self, name: &str) -> Option<&RateFit> {
        self.fits.iter().find(|f| f.name == name).and_then(|f| f.fit.as_ref())
    }

    fn finish(&mut self) {
        let judged = self.prediction.as_ref().is_some_and(|p| !p.critical) || self.mode == Mode::OperatorChecks;
        self.verdict = if self.comparisons.iter().any(|c| !c.passed) {
            Verdict::Fail
        } else if judged {
            Verdict::Pass
        } else {
            Verdict::ReportOnly
        };
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }
}

fn family_of(tree: &TreeSpec) -> Family {
    match tree.kind {
        TreeChoice::Path => Family::Moderate { lambda: 0.0 },
        TreeChoice::Binary => Family::Binary,
        TreeChoice::Moderate => Family::Moderate { lambda: tree.lambda },
        TreeChoice::Biased => Family::Biased { lambda: tree.lambda as u32 },
    }
}

fn params_of(c: &ExperimentConfig) -> PredictParams {
    PredictParams { family: family_of(&c.tree), law: c.weights.law, q: c.weights.q, gamma: c.weights.gamma }
}

fn weight_law(spec: &WeightSpec) -> WeightLaw<f64> {
    match spec.law {
        Law::Polynomial => WeightLaw::polynomial(spec.gamma),
        Law::Exponential => WeightLaw::exponential(spec.gamma),
    }
}

fn decay_profile(spec: &WeightSpec) -> Result<DecayProfile<f64>> {
    match spec.law {
        Law::Polynomial => DecayProfile::polynomial(spec.gamma, 1.0),
        Law::Exponential => DecayProfile::exponential(spec.gamma, 1.0),
    }
}

/// Smallest `n >= 1` with `Phi(n) <= eps^q`.
pub fn first_level_below(profile: &DecayProfile<f64>, q: f64, eps: f64) -> u64 {
    let y = eps.powf(q);
    let mut n = profile.Phi_inv(y).ceil().max(1.0) as u64;
    while n > 1 && profile.Phi((n - 1) as f64) <= y {
        n -= 1;
    }
    while profile.Phi(n as f64) > y {
        n += 1;
    }
    n
}

const DEFAULT_BINARY_DEPTH: u32 = 16;

/// Depth to materialize: the configured one, or one past `n_1` at the
/// smallest `eps` so that every net level exists.
fn tree_depth(c: &ExperimentConfig, eps_min: f64) -> Result<u32> {
    if let Some(d) = c.tree.depth {
        return Ok(d);
    }
    if c.tree.kind == TreeChoice::Binary {
        return Ok(DEFAULT_BINARY_DEPTH);
    }
    let n1 = first_level_below(&decay_profile(&c.weights)?, c.weights.q, eps_min);
    u32::try_from(n1 + 1).map_err(|_| Error::InvalidParameter(format!("eps {eps_min} needs depth {n1}")))
}

fn build_tree(spec: &TreeSpec, depth: u32) -> Result<Tree> {
    match spec.kind {
        TreeChoice::Path => Tree::path(depth as usize + 1),
        TreeChoice::Binary => Tree::binary(depth),
        TreeChoice::Moderate => Tree::moderate(spec.lambda, depth),
        TreeChoice::Biased => Tree::biased(spec.lambda as u32, depth),
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

/// Two whitespace-separated columns per line.
fn write_dat(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {header}")?;
    for (x, y) in rows {
        writeln!(w, "{x} {y}")?;
    }
    w.flush()?;
    Ok(())
}

fn primary_model(pred: Option<&RatePrediction>) -> FitModel {
    match pred.and_then(|p| p.covering) {
        Some(c) if c.shape == CoveringShape::Stretched => FitModel::Stretched,
        _ => FitModel::Power { log_term: false },
    }
}

fn predicted_a(pred: Option<&RatePrediction>) -> Option<f64> {
    pred.and_then(|p| p.covering).map(|c| c.a)
}

/// Runs the experiment and writes `<mode>.csv`, `<mode>.json` and, for rate
/// modes, `<mode>.dat` into `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    std::fs::create_dir_all(&config.out)?;
    let mut report = ExperimentReport::new(config)?;
    match config.mode {
        Mode::Covering => run_covering(config, &mut report)?,
        Mode::Biased => run_biased(config, &mut report)?,
        Mode::BinaryLog => run_binary_log(config, &mut report)?,
        Mode::Gaussian => run_gaussian(config, &mut report)?,
        Mode::OperatorChecks => run_checks(config, &mut report)?,
    }
    report.finish();
    let json = config.out.join(format!("{}.json", config.mode.name()));
    report.files.push(json.clone());
    std::fs::write(&json, serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

fn out_file(c: &ExperimentConfig, report: &mut ExperimentReport, suffix: &str) -> PathBuf {
    let p = c.out.join(format!("{}{suffix}", c.mode.name()));
    report.files.push(p.clone());
    p
}

fn write_profile_csv(path: &Path, profile: &CoveringProfile) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["epsilon", "ball_lower", "ball_upper", "ball_exact", "order"])?;
    for c in &profile.counts {
        w.write_record([
            c.epsilon.to_string(),
            c.ball.lower().to_string(),
            c.ball.upper().to_string(),
            c.ball.exact().is_some().to_string(),
            c.order.upper().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn run_covering(c: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    report.set_prediction(predict(params_of(c)));
    let depth = tree_depth(c, c.eps.min())?;
    let tree = build_tree(&c.tree, depth)?;
    let ws = WeightSystem::assign(&tree, &weight_law(&c.weights), &WeightLaw::constant(1.0), c.weights.q)?;
    let me = MetricEvaluator::new(&tree, &ws)?;
    report.nodes = Some(tree.len());
    report.depth = Some(depth);
    let profile = covering_profile(&me, &c.eps.values(), ProfileOptions { exact_limit: c.exact_limit, ..ProfileOptions::default() })?;
    write_profile_csv(&out_file(c, report, ".csv"), &profile)?;
    let model = primary_model(report.prediction.as_ref());
    let opts = FitOptions::default();
    let order = fit_covering(&profile, Series::Order, model, &opts)?;
    let dat: Vec<(f64, f64)> = profile
        .counts
        .iter()
        .map(|p| (-p.epsilon.ln(), log_y(model, (p.order.upper() as f64).ln())))
        .collect();
    write_dat(&out_file(c, report, ".dat"), "log(1/eps) model-scale order count", &dat)?;
    report.fits.push(NamedFit::of("order", Ok(order)));
    report.fits.push(NamedFit::of("ball", fit_covering(&profile, Series::Ball, model, &opts)));
    if let (Some(a), Some(f)) = (predicted_a(report.prediction.as_ref()), report.fit("order")) {
        report.comparisons.push(Comparison::rate("covering_exponent", f.a, a, TOL_COVERING));
    }
    Ok(())
}

/// `log N` or `log log N`, matching the fitted model.
fn log_y(model: FitModel, log_n: f64) -> f64 {
    match model {
        FitModel::Stretched => log_n.ln(),
        FitModel::Power { .. } => log_n,
    }
}

#[derive(Serialize)]
struct BiasedRow {
    epsilon: f64,
    order_exact: u64,
    biased_net: u64,
    verified: bool,
    c_star: f64,
    n1: u64,
    j_max: usize,
    lemma_failures: usize,
}

fn run_biased(c: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    if c.tree.kind != TreeChoice::Biased || c.weights.law != Law::Polynomial {
        return Err(Error::InvalidParameter("biased mode needs a biased tree with polynomial weights".into()));
    }
    report.set_prediction(predict(params_of(c)));
    let eps = c.eps.values();
    let depth = tree_depth(c, c.eps.min())?;
    let n1 = first_level_below(&decay_profile(&c.weights)?, c.weights.q, c.eps.min());
    if n1 >= depth as u64 {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} is too shallow: the net at eps = {} needs level n_1 = {n1}",
            c.eps.min()
        )));
    }
    let tree = build_tree(&c.tree, depth)?;
    let ws = WeightSystem::assign(&tree, &weight_law(&c.weights), &WeightLaw::constant(1.0), c.weights.q)?;
    let me = MetricEvaluator::new(&tree, &ws)?;
    report.nodes = Some(tree.len());
    report.depth = Some(depth);
    let mut rows = Vec::with_capacity(eps.len());
    for &e in &eps {
        let exact = min_order_net(&me, e)?;
        let (spec, cert) = biased_net(&me, c.weights.gamma, e, c.c_star)?;
        rows.push(BiasedRow {
            epsilon: e,
            order_exact: exact.len() as u64,
            biased_net: spec.size,
            verified: cert.verified && exact.verified,
            c_star: spec.c_star,
            n1: spec.n[0],
            j_max: spec.j_max,
            lemma_failures: spec.lemma_failures.len(),
        });
    }
    let mut w = csv_writer(&out_file(c, report, ".csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let opts = FitOptions::default();
    let model = FitModel::Power { log_term: false };
    let exact: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, r.order_exact as f64)).collect();
    let net: Vec<(f64, f64)> = rows.iter().map(|r| (r.epsilon, r.biased_net as f64)).collect();
    let dat: Vec<(f64, f64)> = exact.iter().map(|&(e, n)| (-e.ln(), n.ln())).collect();
    write_dat(&out_file(c, report, ".dat"), "log(1/eps) log(order covering number)", &dat)?;
    let order = fit_points(&exact, model, &opts)?;
    report.fits.push(NamedFit::of("order", Ok(order)));
    report.fits.push(NamedFit::of("biased_net", fit_points(&net, model, &opts)));
    if let (Some(a), Some(f)) = (predicted_a(report.prediction.as_ref()), report.fit("order")) {
        report.comparisons.push(Comparison::rate("covering_exponent", f.a, a, TOL_BIASED));
    }
    report.comparisons.push(Comparison::check("unverified_nets", rows.iter().filter(|r| !r.verified).count() as u64));
    Ok(())
}

fn run_binary_log(c: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    if c.weights.law != Law::Polynomial {
        return Err(Error::InvalidParameter("binary-log mode needs polynomial weights".into()));
    }
    let params = PredictParams { family: Family::Binary, ..params_of(c) };
    report.set_prediction(predict(params));
    let eps = c.eps.values();
    let counts = binary_lognet_counts(c.weights.gamma, c.weights.q, &eps)?;
    let crossed = counts.iter().filter(|x| x.log_upper < x.log_lower).count() as u64;
    let opts = FitOptions::default();
    let upper: Vec<(f64, f64)> = counts.iter().map(|x| (x.epsilon, x.log_upper)).collect();
    let lower: Vec<(f64, f64)> = counts.iter().map(|x| (x.epsilon, x.log_lower)).collect();
    let up_fit = fit_log_points(&upper, FitModel::Stretched, &opts)?;
    report.fits.push(NamedFit::of("log_upper", Ok(up_fit)));
    report.fits.push(NamedFit::of("log_lower", fit_log_points(&lower, FitModel::Stretched, &opts)));
    if let (Some(a), Some(f)) = (predicted_a(report.prediction.as_ref()), report.fit("log_upper")) {
        report.comparisons.push(Comparison::rate("stretched_exponent", f.a, a, TOL_BINARY_LOG));
    }
    report.comparisons.push(Comparison::check("upper_below_lower", crossed));

    // materialized cross-check on the truncated binary tree
    let mut truncated = vec![(None, None); counts.len()];
    if let Some(depth) = c.tree.depth.filter(|&d| d > 0) {
        let tree = Tree::binary(depth)?;
        let ws = WeightSystem::assign(&tree, &weight_law(&c.weights), &WeightLaw::constant(1.0), c.weights.q)?;
        let me = MetricEvaluator::new(&tree, &ws)?;
        report.nodes = Some(tree.len());
        report.depth = Some(depth);
        let profile = decay_profile(&c.weights)?;
        let mut bad = 0u64;
        for (i, x) in counts.iter().enumerate() {
            let exact = min_order_net(&me, x.epsilon)?;
            let greedy = greedy_order_net(&me, x.epsilon)?;
            let (ln_exact, ln_greedy) = ((exact.len() as f64).ln(), (greedy.len() as f64).ln());
            let slack = 1e-9;
            // the level lower bound only uses levels present in the truncation
            let top = profile.phi_inv((2.0 * x.epsilon).powf(c.weights.q));
            let lower_ok = !(top.floor() <= depth as f64) || x.log_lower_levels <= ln_exact + slack;
            let ok = exact.verified
                && greedy.verified
                && ln_exact <= x.log_upper + slack
                && ln_exact <= ln_greedy + slack
                && lower_ok;
            bad += u64::from(!ok);
            truncated[i] = (Some(exact.len() as u64), Some(greedy.len() as u64));
        }
        report.comparisons.push(Comparison::check("truncated_cross_check", bad));
    }
    let mut w = csv_writer(&out_file(c, report, ".csv"))?;
    w.write_record([
        "epsilon",
        "log_upper",
        "log_lower",
        "log_lower_chain",
        "log_lower_levels",
        "net_levels",
        "chain_m",
        "truncated_exact",
        "truncated_greedy",
    ])?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for (x, t) in counts.iter().zip(&truncated) {
        w.write_record([
            x.epsilon.to_string(),
            x.log_upper.to_string(),
            x.log_lower.to_string(),
            opt(x.log_lower_chain.map(|v| v.to_string())),
            x.log_lower_levels.to_string(),
            x.net_levels.to_string(),
            x.chain_m.to_string(),
            opt(t.0.map(|v| v.to_string())),
            opt(t.1.map(|v| v.to_string())),
        ])?;
    }
    w.flush()?;
    let dat: Vec<(f64, f64)> = counts.iter().map(|x| (-x.epsilon.ln(), x.log_upper.ln())).collect();
    write_dat(&out_file(c, report, ".dat"), "log(1/eps) log(log upper count)", &dat)?;
    Ok(())
}

/// Node pairs for the covariance check: the root, a sibling pair and random
/// pairs among the first nodes.
fn covariance_pairs(tree: &Tree, seed: u64, count: usize) -> Vec<(NodeId, NodeId)> {
    let n = tree.len();
    let mut pairs = vec![(NodeId(0), NodeId(0))];
    if n >= 3 {
        pairs.push((NodeId(1), NodeId(2)));
    }
    let span = n.min(512) as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    for _ in 0..count {
        pairs.push((NodeId(rng.random_range(0..span)), NodeId(rng.random_range(0..span))));
    }
    pairs
}

fn run_gaussian(c: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let cover_grid = c.cover_eps.unwrap_or(c.eps);
    report.set_prediction(predict(params_of(c)));
    let depth = tree_depth(c, cover_grid.min())?;
    let tree = build_tree(&c.tree, depth)?;
    let ws = WeightSystem::assign(&tree, &weight_law(&c.weights), &WeightLaw::constant(1.0), c.weights.q)?;
    let me = MetricEvaluator::new(&tree, &ws)?;
    report.nodes = Some(tree.len());
    report.depth = Some(depth);
    let run = GaussianRun::new(&tree, &ws, c.seed, c.samples, c.eps.values())?;
    let profile = covering_profile(&me, &cover_grid.values(), ProfileOptions { exact_limit: c.exact_limit, ..ProfileOptions::default() })?;
    write_profile_csv(&out_file(c, report, "_cover.csv"), &profile)?;
    let est = run.small_deviation();
    est.write_csv(BufWriter::new(File::create(out_file(c, report, ".csv"))?))?;
    let model = FitModel::Power { log_term: false };
    let opts = FitOptions::default();
    let cover = fit_covering(&profile, Series::Order, model, &opts)?;
    let sd = fit_small_deviation(&est, model, &opts)?;
    let dat: Vec<(f64, f64)> =
        est.points.iter().filter_map(|p| p.minus_log_p.filter(|&m| m > 0.0).map(|m| (-p.epsilon.ln(), m.ln()))).collect();
    write_dat(&out_file(c, report, ".dat"), "log(1/eps) log(-log p)", &dat)?;
    report.comparisons.push(Comparison::rate("small_deviation_vs_covering", sd.a, cover.a, TOL_GAUSSIAN));
    report.fits.push(NamedFit::of("order", Ok(cover)));
    report.fits.push(NamedFit::of("small_deviation", Ok(sd)));
    report.covariance = run.covariance_check(&covariance_pairs(&tree, c.seed, 10));
    let off = report.covariance.iter().filter(|k| !(k.z.abs() <= COV_SE)).count() as u64;
    report.comparisons.push(Comparison::check("covariance_outside_3se", off));
    Ok(())
}

fn run_checks(c: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let r = run_operator_checks(&CheckOptions { seed: c.seed, instances: c.instances, ..CheckOptions::default() })?;
    let mut w = csv_writer(&out_file(c, report, ".csv"))?;
    for k in &r.checks {
        w.serialize(k)?;
    }
    w.flush()?;
    for k in &r.checks {
        report.comparisons.push(Comparison::check(&k.name, k.violations));
    }
    report.checks = r.checks;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let p = std::env::temp_dir().join(format!("treentropy-{name}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&p);
        p
    }

    #[test]
    fn overrides_apply_in_order() {
        let file = ConfigOverrides::from_json(r#"{"gamma": 3.0, "eps_count": 5, "seed": 9}"#).unwrap();
        let flags = ConfigOverrides { seed: Some(4), ..Default::default() };
        let c = ExperimentConfig::resolve(Mode::Covering, &[&file, &flags]);
        assert_eq!((c.weights.gamma, c.eps.count, c.seed), (3.0, 5, 4));
        assert!(ConfigOverrides::from_json(r#"{"gama": 3.0}"#).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(EpsGrid { start: 0.5, ratio: 1.0, count: 3 }.validate().is_err());
        assert!(EpsGrid { start: 0.5, ratio: 0.5, count: 0 }.validate().is_err());
        let g = EpsGrid { start: 0.5, ratio: 0.5, count: 3 };
        assert_eq!(g.values(), vec![0.5, 0.25, 0.125]);
        assert_eq!(g.min(), 0.125);
    }

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig::defaults(Mode::Biased);
        let mut b = a.clone();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn one_point_grid_is_refused() {
        let mut c = ExperimentConfig::defaults(Mode::Covering);
        c.eps.count = 1;
        c.out = tmp("one-point");
        assert!(matches!(run_experiment(&c), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn small_covering_run_writes_files() {
        let mut c = ExperimentConfig::defaults(Mode::Covering);
        c.tree = TreeSpec { kind: TreeChoice::Moderate, lambda: 1.0, depth: Some(300) };
        c.eps = EpsGrid { start: 0.3, ratio: SQRT_HALF, count: 10 };
        c.out = tmp("covering");
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.files.len(), 3);
        assert!(r.files.iter().all(|f| f.exists()));
        assert_eq!(r.config_hash.len(), 64);
        assert!(r.fit("order").is_some());
    }

    #[test]
    fn first_level_matches_scan() {
        let p = DecayProfile::polynomial(2.5, 1.0).unwrap();
        for eps in [0.3, 0.05, 0.004] {
            let n = first_level_below(&p, 2.0, eps);
            let y = eps * eps;
            assert!(p.Phi(n as f64) <= y && (n == 1 || p.Phi((n - 1) as f64) > y));
        }
    }
}
