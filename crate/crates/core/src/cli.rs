//! Batch command-line surface.
//!
//! Exit codes: 0 success, 1 invalid input or config, 2 numerical failure,
//! 3 a bound row of an audit failed.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::distributions as dist;
use crate::estimators::{self, design_matrices, improved_with, phi_matrices, preliminary_with};
use crate::experiments::{self, AuditReport, GeoVariant, SufficiencyConfig, WhiteNoiseTransform};
use crate::gaussian_states::{bracket_lambda, entropy_symbol_bound, pinsker_trace_bound, relative_entropy, GaussState};
use crate::harness::{mc_collect, normality_check, McSummary, NormalityThresholds, RngStream};
use crate::measurement::{block_sampler, block_scheme, sample_pi_blocks_with};
use crate::spectral::{membership, DensityJson, ParameterSpace, RealParam, SpaceKind, SpectralDensity};
use crate::toeplitz::{
    circulant_eigs, circulant_from_density, eigen_bracket_check, principal_submatrix, toeplitz_circulant_gap,
    toeplitz_from_density, MatrixJson, SymbolMatrix, Tag,
};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_AUDIT_FAIL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qsts", version, about = "Quantum stationary Gaussian time series: symbols, entropies, sampling, estimators and audits")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Group,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Emit errors as one JSON object on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
    /// Cap on worker threads; output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Omit the timestamp field from JSON output.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Master seed; overrides QSTS_SEED and the config file.
    #[arg(long, global = true, env = "QSTS_SEED")]
    pub seed: Option<u64>,
    /// JSON run configuration supplying defaults for unset flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Config file schema. Unknown keys are rejected before any computation.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub density: Option<DensitySource>,
    pub alpha: Option<f64>,
    pub d: Option<usize>,
    #[serde(rename = "M")]
    pub big_m: Option<f64>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Either a shorthand/path string or inline coefficients.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum DensitySource {
    Spec(String),
    Inline(DensityJson),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Subcommand)]
pub enum Group {
    /// Spectral densities.
    #[command(subcommand)]
    Density(DensityCmd),
    /// Toeplitz and circulant symbol matrices.
    #[command(subcommand)]
    Symbol(SymbolCmd),
    /// Gaussian states given by their symbols.
    #[command(subcommand)]
    State(StateCmd),
    /// Geometric and negative-binomial laws.
    #[command(subcommand)]
    Dist(DistCmd),
    /// Classical and quantum simulators.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Estimators from simulated measurement data.
    #[command(subcommand)]
    Estimate(EstimateCmd),
    /// Finite-n audits of the distance bounds.
    #[command(subcommand)]
    Audit(AuditCmd),
    /// Monte Carlo suites.
    #[command(subcommand)]
    Mc(McCmd),
}

#[derive(Debug, Args, Clone)]
pub struct DensityArg {
    /// `const:<v>`, `cos:<a0>,<a1>` (a0 + a1 cos ω) or a density JSON file.
    #[arg(long)]
    pub density: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum DensityCmd {
    /// Evaluate a(ω) = a_0 + 2 Re Σ_k a_k e^{ikω} at given points or on a uniform grid.
    Eval {
        #[command(flatten)]
        density: DensityArg,
        /// Evaluation points (comma separated).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        omega: Vec<f64>,
        /// Uniform grid size on [−π, π) when no points are given.
        #[arg(long, default_value_t = 16)]
        grid: usize,
    },
    /// Sobolev seminorm Σ|k|^{2α}|a_k|², full norm, L² norm, extrema.
    Norms {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Membership in a parameter space: Sobolev ball with a ≥ 1 + 1/M (theta1),
    /// or finite-dimensional coefficient ball with a ≥ 1 + 1/M (theta2, theta2prime).
    Membership {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long, value_enum, default_value = "theta2")]
        space: SpaceArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long = "M")]
        big_m: Option<f64>,
        #[arg(long, default_value_t = crate::spectral::DEFAULT_GRID)]
        grid: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpaceArg {
    Theta1,
    Theta2,
    Theta2prime,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum KindArg {
    Toeplitz,
    Circulant,
}

#[derive(Debug, Subcommand)]
pub enum SymbolCmd {
    /// Toeplitz A_n(a) with entries a_{k−j}, or circulant Ã_m(a) with the
    /// folded first row (a_0, a_1, …, a_h, a_{−h}, …, a_{−1}).
    Build {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "toeplitz")]
        kind: KindArg,
    },
    /// Eigenvalues of a symbol (matrix JSON or built from a density); for a
    /// circulant, Σ_k C[0][k] e^{iω_j k} at the Fourier frequencies.
    Eigs {
        #[command(flatten)]
        density: DensityArg,
        /// Matrix JSON file instead of a density.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "toeplitz")]
        kind: KindArg,
    },
    /// Squared Hilbert–Schmidt distance between A_n(a) and the n×n section of
    /// Ã_m(a), against the bound 4(m − n + 1)^{1−2α} M.
    Gap {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Sobolev radius; defaults to the density's own norm.
        #[arg(long = "M")]
        big_m: Option<f64>,
    },
    /// Check inf a ≤ λ_min(A_n) ≤ λ_max(A_n) ≤ sup a.
    Bracket {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Args, Clone)]
pub struct PairArgs {
    /// Density of the first state.
    #[arg(long)]
    pub a1: String,
    /// Density of the second state.
    #[arg(long)]
    pub a2: String,
    #[arg(long)]
    pub n: Option<usize>,
    /// Use the n×n section of Ã_m(a2) for the second state.
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum StateCmd {
    /// Relative entropy S(A_n(a1) ‖ A_n(a2)) from Tr[Q_1(log R_1 − log R_2)]
    /// plus log-determinant terms, with R = (A − I)(A + I)^{−1}.
    Entropy(PairArgs),
    /// Pinsker trace-distance bound (2S)^{1/2}.
    Pinsker(PairArgs),
    /// Local bound S ≤ ‖R_1 − R_2‖₂²/δ, δ = min((1 − λ)/2, (1 − λ)³/(8λ)).
    Bound(PairArgs),
}

#[derive(Debug, Subcommand)]
pub enum DistCmd {
    /// Squared Hellinger distance 2(1 − BC) between Geo(p(a1)) and Geo(p(a2))
    /// with p(a) = (a − 1)/(a + 1), its bound (a1 − a2)²/((a1 − 1)(a2 − 1)),
    /// and the negative-binomial size bound 1 − Γ((r1 + r2)/2)/(Γ(r1)Γ(r2))^{1/2}.
    Hellinger {
        #[arg(long)]
        a1: f64,
        #[arg(long)]
        a2: f64,
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        #[arg(long, default_value_t = 1.0)]
        r2: f64,
    },
    /// Chernoff exponent: log of Σ_k q0(k)^t q1(k)^{1−t} for geometric laws
    /// (classical) or the symbol-level quantum form, at t or minimised over t.
    Chernoff {
        #[arg(long)]
        a0: String,
        #[arg(long)]
        a1: String,
        #[arg(long)]
        quantum: bool,
        #[arg(long)]
        classical: bool,
        /// Evaluate at t instead of minimising over (0, 1).
        #[arg(long)]
        t: Option<f64>,
    },
    /// Variance-stabilising map arccosh a and its derivative (a² − 1)^{−1/2}.
    Varstab {
        #[arg(long)]
        a: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimulateCmd {
    /// Geometric regression X_j ~ Geo(p(J_{j,n})) with cell averages J, or at points a(t_{j,n}).
    Geo {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value = "averages")]
        variant: VariantArg,
    },
    /// White noise dY = arccosh a(ω)dω + (2π/n)^{1/2} dW(ω), or the local form
    /// dY = a dω + (2π/n)^{1/2}(a0² − 1)^{1/2} dW.
    Wn {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        n: Option<usize>,
        /// Number of grid cells on [−π, π] (at least 64).
        #[arg(long, default_value_t = 256)]
        l: usize,
        /// Centring density for the local form.
        #[arg(long)]
        a0: Option<String>,
    },
    /// Block measurement of number operators on r blocks of A_m(a), m = 2⌊ln n/2⌋ + 1.
    Measure {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Averages,
    Points,
}

#[derive(Debug, Args, Clone)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub density: DensityArg,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum EstimateCmd {
    /// Preliminary estimator θ̂ = m^{−1/2} F W′ Π̄ from simulated block data.
    Prelim(EstimateArgs),
    /// One-step weighted least squares θ̃ = (W′Δ^{−1}W)^{−1}W′Δ^{−1}Π̄ (rescaled by F),
    /// with Δ evaluated at the preliminary estimate on the same sample.
    Onestep(EstimateArgs),
    /// Nonparametric estimate â = Σ_{|j|≤d_n} θ̂_j ψ_j from one block of n modes (n odd).
    Nonparam(EstimateArgs),
}

#[derive(Debug, Subcommand)]
pub enum AuditCmd {
    /// Hellinger sums circulant-vs-averages and points-vs-averages over odd n,
    /// the negative-binomial size gap, and the sufficiency test.
    Chain {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long, value_delimiter = ',', default_values_t = vec![65usize, 129, 257, 513])]
        n: Vec<usize>,
        /// Skip the Monte Carlo sufficiency row.
        #[arg(long)]
        no_sufficiency: bool,
    },
    /// A_n(a) against the section of Ã_m(a): HS gap bound, relative entropy,
    /// Pinsker bound, local entropy bound and monotonicity along the m ladder.
    State {
        #[command(flatten)]
        density: DensityArg,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Chi-square test that the sum of k iid NB(1/k, p) is Geo(p).
    Sufficiency {
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 50_000)]
        draws: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum McCmd {
    /// Normality of (rm)^{1/2}(θ̃ − θ) against Φ_θ^{−1}: Frobenius and per-coordinate KS checks.
    Normality {
        #[command(flatten)]
        est: EstimateArgs,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Mean and covariance of θ̂ over replicates, compared with θ and Φ⁰/(rm).
    Moments {
        #[command(flatten)]
        est: EstimateArgs,
        #[arg(long)]
        replicates: Option<usize>,
        /// Emit raw replicates as CSV rows (replicate, coordinate, value).
        #[arg(long)]
        raw: bool,
    },
}

/// Parse `const:<v>`, `cos:<a0>,<a1>` or a density JSON path.
pub fn parse_density(spec: &str) -> Result<SpectralDensity> {
    let num = |s: &str| -> Result<f64> {
        s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number '{s}' in density '{spec}'")))
    };
    if let Some(v) = spec.strip_prefix("const:") {
        return Ok(SpectralDensity::constant(num(v)?));
    }
    if let Some(v) = spec.strip_prefix("cos:") {
        let parts: Vec<&str> = v.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidInput(format!("cos shorthand needs two values: '{spec}'")));
        }
        return Ok(SpectralDensity::cosine(num(parts[0])?, num(parts[1])?));
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::InvalidInput(format!("density '{spec}' is neither shorthand nor a readable file: {e}")))?;
    let doc: DensityJson = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("density file {spec}: {e}")))?;
    SpectralDensity::from_json(&doc)
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    timestamp: bool,
    format: Format,
}

impl Ctx {
    fn density(&self, arg: &DensityArg) -> Result<SpectralDensity> {
        match (&arg.density, &self.cfg.density) {
            (Some(s), _) => parse_density(s),
            (None, Some(DensitySource::Spec(s))) => parse_density(s),
            (None, Some(DensitySource::Inline(doc))) => SpectralDensity::from_json(doc),
            (None, None) => Err(Error::InvalidInput("no density given (--density or config)".into())),
        }
    }

    fn density_id(&self, arg: &DensityArg) -> String {
        match (&arg.density, &self.cfg.density) {
            (Some(s), _) | (None, Some(DensitySource::Spec(s))) => s.clone(),
            _ => "inline".into(),
        }
    }

    fn n(&self, v: Option<usize>) -> Result<usize> {
        v.or(self.cfg.n).ok_or_else(|| Error::InvalidInput("missing n".into()))
    }

    fn d(&self, v: Option<usize>) -> usize {
        v.or(self.cfg.d).unwrap_or(1)
    }

    fn alpha(&self, v: Option<f64>) -> f64 {
        v.or(self.cfg.alpha).unwrap_or(1.0)
    }

    fn replicates(&self, v: Option<usize>) -> usize {
        v.or(self.cfg.replicates).unwrap_or(1000)
    }

    /// JSON envelope with the optional timestamp.
    fn envelope(&self, command: &str, mut body: Value) -> Value {
        if let Value::Object(ref mut map) = body {
            map.insert("command".into(), json!(command));
            map.insert("seed".into(), json!(self.seed));
            if self.timestamp {
                let t = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                map.insert("timestamp".into(), json!(t));
            }
        }
        body
    }
}

/// Command output: CSV text or a JSON value, plus the audit verdict.
struct Output {
    text: String,
    audit_failed: bool,
}

fn csv_of(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn f(v: f64) -> String {
    experiments::format_float(v)
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Key/value table as CSV or JSON.
fn table(ctx: &Ctx, command: &str, pairs: Vec<(&str, Value)>) -> Result<Output> {
    let text = match ctx.format {
        Format::Json => {
            let map: serde_json::Map<String, Value> = pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            json_text(&ctx.envelope(command, Value::Object(map)))
        }
        Format::Csv => {
            let rows = pairs
                .into_iter()
                .map(|(k, v)| {
                    let s = match v {
                        Value::Number(n) => n.as_f64().map(f).unwrap_or_else(|| n.to_string()),
                        Value::String(s) => s,
                        other => other.to_string(),
                    };
                    vec![k.to_string(), s]
                })
                .collect();
            csv_of(&["quantity", "value"], rows)?
        }
    };
    Ok(Output { text, audit_failed: false })
}

fn audit_output(ctx: &Ctx, command: &str, rep: &AuditReport, density_id: &str) -> Result<Output> {
    let text = match ctx.format {
        Format::Csv => {
            let mut buf = vec![];
            rep.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv output is UTF-8")
        }
        Format::Json => json_text(&ctx.envelope(command, json!({ "density": density_id, "rows": rep.rows, "pass": rep.all_pass() }))),
    };
    Ok(Output { text, audit_failed: !rep.all_pass() })
}

fn build_symbol(a: &SpectralDensity, n: usize, kind: KindArg) -> Result<SymbolMatrix> {
    match kind {
        KindArg::Toeplitz => toeplitz_from_density(a, n),
        KindArg::Circulant => circulant_from_density(a, n),
    }
}

fn pair_states(ctx: &Ctx, p: &PairArgs) -> Result<(GaussState, GaussState)> {
    let n = ctx.n(p.n)?;
    let a1 = parse_density(&p.a1)?;
    let a2 = parse_density(&p.a2)?;
    let s1 = GaussState::new(toeplitz_from_density(&a1, n)?)?;
    let s2 = match p.m.or(ctx.cfg.m) {
        Some(m) => GaussState::new(principal_submatrix(&circulant_from_density(&a2, m)?, n)?)?,
        None => GaussState::new(toeplitz_from_density(&a2, n)?)?,
    };
    Ok((s1, s2))
}

fn constant_value(a: &SpectralDensity, what: &str) -> Result<f64> {
    if a.k_max() == 0 {
        Ok(a.coeff(0).re)
    } else {
        Err(Error::InvalidInput(format!("classical Chernoff needs a constant {what}")))
    }
}

fn true_theta(a: &SpectralDensity, d: usize) -> Result<RealParam> {
    if a.k_max() > d {
        return Err(Error::InvalidInput(format!("density has lags beyond d = {d}")));
    }
    RealParam::from_density(a, d)
}

/// Preliminary (and optionally one-step) estimate on one simulated sample.
fn estimate_once(a: &SpectralDensity, n: usize, d: usize, stream: RngStream, onestep: bool) -> Result<(RealParam, usize, usize)> {
    let scheme = block_scheme(n, d)?;
    let sampler = block_sampler(a, scheme.m)?;
    let draw = sample_pi_blocks_with(&sampler, scheme.r, stream);
    let dm = design_matrices(scheme.m, d, None)?;
    let pre = preliminary_with(&dm, &draw.pi_bar)?;
    let est = if onestep {
        let dm1 = design_matrices(scheme.m, d, Some(&pre))?;
        improved_with(&dm1, &draw.pi_bar)?
    } else {
        pre
    };
    Ok((est, scheme.m, scheme.r))
}

fn estimate_json(ctx: &Ctx, command: &str, theta: &RealParam, n: usize, m: usize, r: usize) -> Output {
    let v = ctx.envelope(command, json!({ "theta": theta.theta, "d": theta.d, "n": n, "m": m, "r": r }));
    Output { text: json_text(&v), audit_failed: false }
}

fn run_density(ctx: &Ctx, cmd: &DensityCmd) -> Result<Output> {
    match cmd {
        DensityCmd::Eval { density, omega, grid } => {
            let a = ctx.density(density)?;
            let pts = if omega.is_empty() { crate::spectral::uniform_grid(*grid) } else { omega.clone() };
            let rows: Vec<Vec<String>> = pts.iter().map(|&w| vec![f(w), f(a.eval(w))]).collect();
            match ctx.format {
                Format::Csv => Ok(Output { text: csv_of(&["omega", "value"], rows)?, audit_failed: false }),
                Format::Json => {
                    let vals: Vec<f64> = pts.iter().map(|&w| a.eval(w)).collect();
                    Ok(Output { text: json_text(&ctx.envelope("density eval", json!({ "omega": pts, "value": vals }))), audit_failed: false })
                }
            }
        }
        DensityCmd::Norms { density, alpha } => {
            let a = ctx.density(density)?;
            let al = ctx.alpha(*alpha);
            let (semi, norm) = a.sobolev_norm(al);
            let (wmin, vmin) = a.global_min(crate::spectral::DEFAULT_GRID);
            let (wmax, vmax) = a.global_max(crate::spectral::DEFAULT_GRID);
            table(
                ctx,
                "density norms",
                vec![
                    ("alpha", json!(al)),
                    ("sobolev_seminorm_sq", json!(semi)),
                    ("sobolev_norm_sq", json!(norm)),
                    ("l2_norm_sq", json!(a.l2_norm_sq())),
                    ("min_omega", json!(wmin)),
                    ("min_value", json!(vmin)),
                    ("max_omega", json!(wmax)),
                    ("max_value", json!(vmax)),
                ],
            )
        }
        DensityCmd::Membership { density, space, alpha, d, big_m, grid } => {
            let a = ctx.density(density)?;
            let m = big_m.or(ctx.cfg.big_m).ok_or_else(|| Error::InvalidInput("missing M".into()))?;
            let kind = match space {
                SpaceArg::Theta1 => SpaceKind::Theta1 { alpha: ctx.alpha(*alpha), m },
                SpaceArg::Theta2 => SpaceKind::Theta2 { d: ctx.d(*d), m },
                SpaceArg::Theta2prime => SpaceKind::Theta2Prime { d: ctx.d(*d), m },
            };
            let res = membership(&a, &ParameterSpace::with_grid(kind, *grid))?;
            table(
                ctx,
                "density membership",
                vec![
                    ("member", json!(res.member)),
                    ("min_omega", json!(res.minimum.0)),
                    ("min_value", json!(res.minimum.1)),
                    ("violation", json!(res.violation.map(|v| format!("{v:?}")).unwrap_or_else(|| "none".into()))),
                ],
            )
        }
    }
}

fn run_symbol(ctx: &Ctx, cmd: &SymbolCmd) -> Result<Output> {
    match cmd {
        SymbolCmd::Build { density, n, kind } => {
            let s = build_symbol(&ctx.density(density)?, ctx.n(*n)?, *kind)?;
            Ok(Output { text: json_text(&serde_json::to_value(s.to_json())?), audit_failed: false })
        }
        SymbolCmd::Eigs { density, matrix, n, kind } => {
            let s = match matrix {
                Some(p) => {
                    let doc: MatrixJson = serde_json::from_str(&std::fs::read_to_string(p)?)
                        .map_err(|e| Error::InvalidInput(format!("matrix file {}: {e}", p.display())))?;
                    SymbolMatrix::from_json(&doc)?
                }
                None => build_symbol(&ctx.density(density)?, ctx.n(*n)?, *kind)?,
            };
            let ev = if s.tag() == Tag::Circulant { circulant_eigs(&s)? } else { s.eigenvalues()? };
            match ctx.format {
                Format::Csv => {
                    let rows = ev.iter().enumerate().map(|(i, &v)| vec![i.to_string(), f(v)]).collect();
                    Ok(Output { text: csv_of(&["index", "eigenvalue"], rows)?, audit_failed: false })
                }
                Format::Json => Ok(Output { text: json_text(&ctx.envelope("symbol eigs", json!({ "eigenvalues": ev }))), audit_failed: false }),
            }
        }
        SymbolCmd::Gap { density, n, m, alpha, big_m } => {
            let a = ctx.density(density)?;
            let n = ctx.n(*n)?;
            let m = m.or(ctx.cfg.m).unwrap_or_else(|| experiments::companion_m(n));
            let al = ctx.alpha(*alpha);
            let bm = big_m.or(ctx.cfg.big_m).unwrap_or_else(|| a.sobolev_norm(al).1);
            let g = toeplitz_circulant_gap(&a, n, m, al, bm)?;
            table(
                ctx,
                "symbol gap",
                vec![
                    ("n", json!(n)),
                    ("m", json!(m)),
                    ("hs_sq", json!(g.hs_sq)),
                    ("hs_sq_lag_sum", json!(g.hs_sq_lag_sum)),
                    ("bound", json!(g.bound)),
                    ("holds", json!(g.hs_sq <= g.bound + experiments::BOUND_SLACK)),
                ],
            )
        }
        SymbolCmd::Bracket { density, n } => {
            let b = eigen_bracket_check(&ctx.density(density)?, ctx.n(*n)?)?;
            table(ctx, "symbol bracket", vec![("report", serde_json::to_value(format!("{b:?}"))?)])
        }
    }
}

fn run_state(ctx: &Ctx, cmd: &StateCmd) -> Result<Output> {
    match cmd {
        StateCmd::Entropy(p) => {
            let (s1, s2) = pair_states(ctx, p)?;
            let s = relative_entropy(&s1, &s2)?;
            scalar(ctx, "state entropy", "relative_entropy", s)
        }
        StateCmd::Pinsker(p) => {
            let (s1, s2) = pair_states(ctx, p)?;
            let b = pinsker_trace_bound(&s1, &s2)?;
            scalar(ctx, "state pinsker", "trace_distance_bound", b)
        }
        StateCmd::Bound(p) => {
            let (s1, s2) = pair_states(ctx, p)?;
            let lambda = bracket_lambda(&s1, &s2, 1e-9)?;
            let r = entropy_symbol_bound(&s1, &s2, lambda)?;
            table(
                ctx,
                "state bound",
                vec![
                    ("lambda", json!(r.lambda)),
                    ("delta", json!(r.delta)),
                    ("relative_entropy", json!(r.s)),
                    ("h_hs", json!(r.h_hs)),
                    ("h_op", json!(r.h_op)),
                    ("a_hs", json!(r.a_hs)),
                    ("a_op", json!(r.a_op)),
                    ("applies", json!(r.applies)),
                    ("holds", json!(r.holds)),
                    ("symbol_form_holds", json!(r.symbol_form_holds)),
                ],
            )
        }
    }
}

/// A single number: bare value in CSV mode, keyed object in JSON mode.
fn scalar(ctx: &Ctx, command: &str, key: &str, v: f64) -> Result<Output> {
    let text = match ctx.format {
        Format::Csv => format!("{}\n", f(v)),
        Format::Json => json_text(&ctx.envelope(command, json!({ key: v }))),
    };
    Ok(Output { text, audit_failed: false })
}

fn run_dist(ctx: &Ctx, cmd: &DistCmd) -> Result<Output> {
    match cmd {
        DistCmd::Hellinger { a1, a2, r1, r2 } => {
            let h = dist::hellinger_geo(*a1, *a2)?;
            table(
                ctx,
                "dist hellinger",
                vec![
                    ("h2_geo", json!(h.h2_exact)),
                    ("h2_geo_bound", json!(h.h2_bound)),
                    ("nb_prob_bound", json!(dist::hellinger_nb_bound_prob(*r1, *a1, *a2)?)),
                    ("nb_size_bound", json!(dist::hellinger_nb_bound_size(*r1, *r2)?)),
                ],
            )
        }
        DistCmd::Chernoff { a0, a1, quantum, classical, t } => {
            let d0 = parse_density(a0)?;
            let d1 = parse_density(a1)?;
            let (want_q, want_c) = if !quantum && !classical { (true, false) } else { (*quantum, *classical) };
            let mut pairs = vec![];
            if want_q {
                let v = match t {
                    Some(t) => dist::chernoff_quantum(&d0, &d1, *t)?,
                    None => dist::chernoff_quantum_inf(&d0, &d1)?.value,
                };
                pairs.push(("quantum", json!(v)));
            }
            if want_c {
                let (c0, c1) = (constant_value(&d0, "a0")?, constant_value(&d1, "a1")?);
                let v = match t {
                    Some(t) => dist::chernoff_geo(c0, c1, *t)?,
                    None => dist::chernoff_geo_inf(c0, c1)?.value,
                };
                pairs.push(("classical", json!(v)));
            }
            table(ctx, "dist chernoff", pairs)
        }
        DistCmd::Varstab { a } => table(
            ctx,
            "dist varstab",
            vec![
                ("arccosh", json!(dist::varstab_arccosh(*a)?)),
                ("derivative", json!(dist::varstab_derivative(*a)?)),
                ("ode_residual", json!(dist::varstab_ode_residual(*a)?)),
            ],
        ),
    }
}

fn run_simulate(ctx: &Ctx, cmd: &SimulateCmd) -> Result<Output> {
    let stream = RngStream::new(ctx.seed, 0);
    match cmd {
        SimulateCmd::Geo { density, n, variant } => {
            let v = match variant {
                VariantArg::Averages => GeoVariant::Averages,
                VariantArg::Points => GeoVariant::Points,
            };
            let x = experiments::simulate_geo_regression(&ctx.density(density)?, ctx.n(*n)?, v, stream)?;
            let rows = x.iter().enumerate().map(|(j, v)| vec![(j + 1).to_string(), v.to_string()]).collect();
            Ok(Output { text: csv_of(&["j", "x"], rows)?, audit_failed: false })
        }
        SimulateCmd::Wn { density, n, l, a0 } => {
            let a = ctx.density(density)?;
            let base = a0.as_deref().map(parse_density).transpose()?;
            let tr = if base.is_some() { WhiteNoiseTransform::Local } else { WhiteNoiseTransform::Arccosh };
            let p = experiments::simulate_white_noise(&a, ctx.n(*n)?, *l, tr, base.as_ref(), 1.0, stream)?;
            let rows = (0..p.increments.len())
                .map(|i| vec![i.to_string(), f(p.grid[i]), f(p.increments[i]), f(p.cumulative[i + 1])])
                .collect();
            Ok(Output { text: csv_of(&["i", "omega", "increment", "cumulative"], rows)?, audit_failed: false })
        }
        SimulateCmd::Measure { density, n, d } => {
            let a = ctx.density(density)?;
            let scheme = block_scheme(ctx.n(*n)?, ctx.d(*d))?;
            let sampler = block_sampler(&a, scheme.m)?;
            let draw = sample_pi_blocks_with(&sampler, scheme.r, stream);
            let mut head = json!({
                "seed": ctx.seed, "n": scheme.n, "d": scheme.d, "m": scheme.m, "r": scheme.r,
                "density": ctx.density_id(density),
            });
            if ctx.timestamp {
                head = ctx.envelope("simulate measure", head);
            }
            let h = ((scheme.m - 1) / 2) as i64;
            let rows = draw
                .blocks
                .iter()
                .enumerate()
                .flat_map(|(b, blk)| blk.iter().enumerate().map(move |(j, v)| vec![b.to_string(), (j as i64 - h).to_string(), v.to_string()]))
                .collect();
            let text = format!("{}\n{}", serde_json::to_string(&head)?, csv_of(&["block", "j", "N"], rows)?);
            Ok(Output { text, audit_failed: false })
        }
    }
}

fn run_estimate(ctx: &Ctx, cmd: &EstimateCmd) -> Result<Output> {
    let stream = RngStream::new(ctx.seed, 0);
    match cmd {
        EstimateCmd::Prelim(e) | EstimateCmd::Onestep(e) => {
            let onestep = matches!(cmd, EstimateCmd::Onestep(_));
            let a = ctx.density(&e.density)?;
            let n = ctx.n(e.n)?;
            let (t, m, r) = estimate_once(&a, n, ctx.d(e.d), stream, onestep)?;
            Ok(estimate_json(ctx, if onestep { "estimate onestep" } else { "estimate prelim" }, &t, n, m, r))
        }
        EstimateCmd::Nonparam(e) => {
            let a = ctx.density(&e.density)?;
            let n = ctx.n(e.n)?;
            let d_n = e.d.or(ctx.cfg.d).unwrap_or(((n as f64).sqrt() / 2.0).floor() as usize);
            let sampler = block_sampler(&a, n)?;
            let draw = sample_pi_blocks_with(&sampler, 1, stream);
            let (t, est) = estimators::nonparametric_estimate(&draw.pi_bar, d_n)?;
            let v = ctx.envelope(
                "estimate nonparam",
                json!({ "theta": t.theta, "d": t.d, "n": n, "m": n, "r": 1, "l2_error_sq": estimators::l2_error_sq(&est, &a) }),
            );
            Ok(Output { text: json_text(&v), audit_failed: false })
        }
    }
}

fn run_audit(ctx: &Ctx, cmd: &AuditCmd) -> Result<Output> {
    match cmd {
        AuditCmd::Chain { density, n, no_sufficiency } => {
            let a = ctx.density(density)?;
            let suff = (!no_sufficiency).then(|| SufficiencyConfig { seed: ctx.seed, ..SufficiencyConfig::default() });
            let rep = experiments::audit_hellinger_chain(&a, n, suff)?;
            audit_output(ctx, "audit chain", &rep, &ctx.density_id(density))
        }
        AuditCmd::State { density, n, m, alpha } => {
            let a = ctx.density(density)?;
            let n = ctx.n(*n)?;
            let ladder = if !m.is_empty() {
                m.clone()
            } else if let Some(m) = ctx.cfg.m {
                vec![m]
            } else {
                experiments::default_ladder(n)
            };
            let rep = experiments::audit_state_approximation(&a, n, &ladder, ctx.alpha(*alpha))?;
            audit_output(ctx, "audit state", &rep, &ctx.density_id(density))
        }
        AuditCmd::Sufficiency { k, p, draws } => {
            let t = experiments::nb_sufficiency_test(*k, *p, *draws, RngStream::new(ctx.seed, 0))?;
            let mut rep = AuditReport::default();
            rep.push_pvalue("nb_sufficiency_chi2_pvalue", *draws, *k, t.p_value, experiments::SUFFICIENCY_ALPHA);
            audit_output(ctx, "audit sufficiency", &rep, "none")
        }
    }
}

fn run_mc(ctx: &Ctx, cmd: &McCmd) -> Result<Output> {
    match cmd {
        McCmd::Normality { est, replicates } => {
            let a = ctx.density(&est.density)?;
            let n = ctx.n(est.n)?;
            let d = ctx.d(est.d);
            let theta = true_theta(&a, d)?;
            let scheme = block_scheme(n, d)?;
            let scale = ((scheme.r * scheme.m) as f64).sqrt();
            let samples = mc_collect(ctx.replicates(*replicates), ctx.seed, |s| {
                let (t, _, _) = estimate_once(&a, n, d, s, true)?;
                Ok(t.theta.iter().zip(&theta.theta).map(|(x, y)| scale * (x - y)).collect())
            })?;
            let target = phi_matrices(&theta)?
                .phi
                .try_inverse()
                .ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
            let rep = normality_check(&samples, &target, NormalityThresholds::default())?;
            let v = ctx.envelope("mc normality", serde_json::to_value(&rep)?);
            Ok(Output { text: json_text(&v), audit_failed: false })
        }
        McCmd::Moments { est, replicates, raw } => {
            let a = ctx.density(&est.density)?;
            let n = ctx.n(est.n)?;
            let d = ctx.d(est.d);
            let theta = true_theta(&a, d)?;
            let scheme = block_scheme(n, d)?;
            let samples = mc_collect(ctx.replicates(*replicates), ctx.seed, |s| Ok(estimate_once(&a, n, d, s, false)?.0.theta))?;
            if *raw {
                let rows = samples
                    .iter()
                    .enumerate()
                    .flat_map(|(i, s)| s.iter().enumerate().map(move |(j, v)| vec![(i + 1).to_string(), (j as i64 - d as i64).to_string(), f(*v)]))
                    .collect();
                return Ok(Output { text: csv_of(&["replicate", "coordinate", "value"], rows)?, audit_failed: false });
            }
            let summary = McSummary::from_samples(&samples, ctx.seed)?;
            let phi0 = phi_matrices(&theta)?.phi0 / (scheme.r * scheme.m) as f64;
            let phi0_rows: Vec<Vec<f64>> = (0..phi0.nrows()).map(|i| phi0.row(i).iter().copied().collect()).collect();
            let v = ctx.envelope(
                "mc moments",
                json!({ "summary": summary, "theta": theta.theta, "phi0_over_rm": phi0_rows, "m": scheme.m, "r": scheme.r }),
            );
            Ok(Output { text: json_text(&v), audit_failed: false })
        }
    }
}

fn dispatch(ctx: &Ctx, cmd: &Group) -> Result<Output> {
    match cmd {
        Group::Density(c) => run_density(ctx, c),
        Group::Symbol(c) => run_symbol(ctx, c),
        Group::State(c) => run_state(ctx, c),
        Group::Dist(c) => run_dist(ctx, c),
        Group::Simulate(c) => run_simulate(ctx, c),
        Group::Estimate(c) => run_estimate(ctx, c),
        Group::Audit(c) => run_audit(ctx, c),
        Group::Mc(c) => run_mc(ctx, c),
    }
}

/// Exit code of an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INVALID
    }
}

fn report_error(json_errors: bool, e: &Error) {
    let code = exit_code(e);
    if json_errors {
        eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code }));
    } else {
        eprintln!("qsts: error: {e}");
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.global.seed.or(cfg.seed).unwrap_or(0),
        timestamp: !cli.global.no_timestamp,
        format: cli.global.format.or(cfg.format).unwrap_or(Format::Csv),
        cfg,
    };
    match cli.global.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&ctx, &cli.command))
        }
        None => dispatch(&ctx, &cli.command),
    }
}

/// Parse `argv`, run, write the output and return the exit code.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let json_errors = cli.global.json_errors;
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            report_error(json_errors, &e);
            return exit_code(&e);
        }
    };
    let out_path = cli.global.out.clone();
    let written = match out_path {
        Some(p) => std::fs::write(&p, out.text.as_bytes()).map_err(Error::from),
        None => std::io::stdout().write_all(out.text.as_bytes()).map_err(Error::from),
    };
    if let Err(e) = written {
        report_error(json_errors, &e);
        return EXIT_INVALID;
    }
    if out.audit_failed {
        EXIT_AUDIT_FAIL
    } else {
        EXIT_OK
    }
}
