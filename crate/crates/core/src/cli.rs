//! Command-line front end.
//!
//! Every subcommand has a flat set of parameters. Values are resolved as
//! built-in default, then the `--config` file, then explicit flags. The
//! resolved set is written as a TOML manifest next to the CSV; feeding that
//! manifest back through `--config` reproduces the CSV byte for byte.
//!
//! Exit codes: 0 success, 1 validation failure or runtime error, 2 usage
//! error (bad flags, malformed config or model strings).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bounds::{dominance_check, rate_fit, rate_fit_estimates, BoundInputs};
use crate::csvio::{fmt_f64, CsvTable};
use crate::dependence::{
    exact_coefficient, mc_coefficient, tau1_lsv_empirical, CoefficientKind, LsvTauConfig,
};
use crate::empirical::{default_grid, iid_l2_moment, replicate_field_norms, CdfSpec, DEFAULT_GRID_POINTS};
use crate::error::{Error, Result};
use crate::frechet::{verify_frechet, LambdaCheckConfig, PsiFunctional, SmoothTestFunction};
use crate::gaussian::{covariance_exact, covariance_from_paths, FeatureMap, GaussianSampler, Taper};
use crate::generators::{FiniteMarkov, IidModel, LsvModel, Marginal, ProcessModel};
use crate::mc::{replicate_values, MeanEstimate};
use crate::measure::DiscreteMeasure;
use crate::metrics::{delta_n_grid, wasserstein_rate_target, wasserstein_samples, Certification, FieldBuilder};
use crate::rng::derive_seed;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const FRECHET_TOL: [f64; 3] = [1e-5, 1e-5, 1e-4];
const DEFAULT_LSV_CALIBRATION: usize = 100_000;

/// Generates the flag struct (all optional) and the resolved parameter
/// struct (defaults filled in) for one subcommand.
macro_rules! params {
    ($args:ident => $res:ident { $( $(#[$attr:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)? }) => {
        #[derive(Debug, Clone, Default, clap::Args, Serialize)]
        pub struct $args {
            $(
                $(#[$attr])*
                #[arg(long)]
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $res {
            $( pub $field: $ty, )*
        }

        impl Default for $res {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }
    };
}

params!(VerifyArgs => VerifyParams {
    /// Exponent p of L^p(μ).
    p: f64 = 3.0,
    /// Power q of ψ_p^q.
    q: f64 = 3.0,
    /// Random (point, directions) draws.
    trials: usize = 20,
    seed: u64 = 7,
});

params!(CoeffsArgs => CoeffsParams {
    /// Finite chain: two-state:a=…, three-state, iid:rademacher.
    model: String = "two-state:a=0.75".into(),
    /// Comma-separated coefficient names.
    kinds: String = "tau1,gamma_tilde".into(),
    /// Largest lag k.
    kmax: usize = 10,
    delta: f64 = 1.0,
    /// Truncation of the auxiliary lag in sup-type coefficients.
    max_lag: usize = 64,
    /// Monte Carlo cross-check samples per entry (0 disables).
    mc_samples: usize = 0,
    seed: u64 = 1,
});

params!(WassersteinArgs => WassersteinParams {
    model: String = "iid:rademacher".into(),
    /// Sample sizes, e.g. 64,128,...,4096.
    ns: String = "64,128,...,1024".into(),
    reps: usize = 10_000,
    /// Order of the distance.
    p: f64 = 3.0,
    seed: u64 = 1,
    /// CSV file with a `value` column; with `b`, compares two samples.
    a: String = String::new(),
    b: String = String::new(),
});

params!(DeltaArgs => DeltaParams {
    model: String = "iid:rademacher".into(),
    /// Test function: abs3, square, psi:p=…,q=….
    f: String = "abs3".into(),
    ns: String = "64,256,1024".into(),
    reps: usize = 10_000,
    delta: f64 = 1.0,
    m: f64 = 0.0,
    /// Use the empirical distribution field instead of the scalar sum.
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    field: bool = false,
    /// Grid for μ: a:b:cells, or auto.
    #[arg(allow_hyphen_values = true)]
    grid: String = "auto".into(),
    /// Calibration run length for F (0 uses the analytic F).
    n_cal: usize = 0,
    /// Skip the smooth-class certification of f.
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    waive_cert: bool = false,
    seed: u64 = 1,
});

params!(RateArgs => RateParams {
    model: String = "iid:rademacher".into(),
    f: String = "abs3".into(),
    ns: String = "64,128,...,4096".into(),
    reps: usize = 100_000,
    delta: f64 = 1.0,
    m: f64 = 0.0,
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    field: bool = false,
    #[arg(allow_hyphen_values = true)]
    grid: String = "auto".into(),
    n_cal: usize = 0,
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    waive_cert: bool = false,
    seed: u64 = 1,
});

params!(BoundArgs => BoundParams {
    model: String = "iid:rademacher".into(),
    f: String = "abs3".into(),
    ns: String = "64,128,...,4096".into(),
    reps: usize = 10_000,
    delta: f64 = 1.0,
    m: f64 = 0.0,
    /// Coefficients are computed exactly up to this lag.
    kmax: usize = 32,
    max_lag: usize = 64,
    #[arg(num_args = 0..=1, default_missing_value = "true")]
    waive_cert: bool = false,
    seed: u64 = 1,
});

params!(EmpiricalArgs => EmpiricalParams {
    model: String = "iid:uniform".into(),
    n: usize = 1000,
    reps: usize = 1000,
    p: f64 = 2.0,
    #[arg(allow_hyphen_values = true)]
    grid: String = "auto".into(),
    n_cal: usize = 0,
    seed: u64 = 1,
});

params!(LsvTauArgs => LsvTauParams {
    gamma: f64 = 0.25,
    /// Lags k.
    ks: String = "1,2,...,64".into(),
    bins: usize = 64,
    n_mc: usize = 100_000,
    seed: u64 = 1,
});

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form Fréchet derivatives of ψ_p^q against finite differences.
    VerifyFrechet(VerifyArgs),
    /// Exact dependence coefficients of a finite chain.
    Coeffs(CoeffsArgs),
    /// Wasserstein distance between S_n/√n and its Gaussian limit.
    Wasserstein(WassersteinArgs),
    /// Monte Carlo Δ_n(f) on a grid of n.
    Delta(DeltaArgs),
    /// Δ_n(f) with a log-log rate fit.
    Rate(RateArgs),
    /// Measured Δ_n(f) against the explicit bound.
    Bound(BoundArgs),
    /// Per-replicate norms of the empirical distribution field.
    Empirical(EmpiricalArgs),
    /// Binned τ₁ estimates for the LSV map.
    LsvTau(LsvTauArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::VerifyFrechet(_) => "verify-frechet",
            Command::Coeffs(_) => "coeffs",
            Command::Wasserstein(_) => "wasserstein",
            Command::Delta(_) => "delta",
            Command::Rate(_) => "rate",
            Command::Bound(_) => "bound",
            Command::Empirical(_) => "empirical",
            Command::LsvTau(_) => "lsv-tau",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cltlab", version, about = "Convergence rates in the CLT for dependent sequences: experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat TOML file of parameters; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path (default: <subcommand>.csv).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Also write a matplotlib script next to the CSV.
    #[arg(long, global = true)]
    plot_script: bool,
}

/// What a subcommand produced.
struct Outcome {
    table: CsvTable,
    summary: Vec<String>,
    pass: bool,
    plot: Plot,
}

#[derive(Clone, Copy)]
enum Plot {
    LogLog { x: &'static str, y: &'static str },
    Histogram { column: &'static str },
    Lines { x: &'static str, y: &'static str },
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn read_config(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path)?;
    text.parse::<toml::Table>()
        .map_err(|e| usage(format!("malformed config {}: {e}", path.display())))
}

/// Defaults ← config file ← flags.
fn resolve<A: Serialize, R: Serialize + for<'de> Deserialize<'de> + Default>(
    sub: &str,
    flags: &A,
    file: Option<&toml::Table>,
) -> Result<(R, Option<PathBuf>)> {
    let mut merged = toml::Table::new();
    let mut out = None;
    if let Some(file) = file {
        for (k, v) in file {
            match k.as_str() {
                "subcommand" => {
                    if v.as_str() != Some(sub) {
                        return Err(usage(format!("config is for subcommand {v}, not {sub}")));
                    }
                }
                "out" => {
                    out = Some(PathBuf::from(
                        v.as_str().ok_or_else(|| usage("config key 'out' must be a string"))?,
                    ));
                }
                _ => {
                    merged.insert(k.clone(), v.clone());
                }
            }
        }
    }
    let flag_table = toml::Table::try_from(flags).map_err(|e| usage(format!("cannot encode flags: {e}")))?;
    for (k, v) in flag_table {
        merged.insert(k, v);
    }
    let resolved: R = merged
        .try_into()
        .map_err(|e| usage(format!("invalid parameters for {sub}: {e}")))?;
    Ok((resolved, out))
}

/// Parse a plain list or `a,b,...,end`. The expansion is geometric when
/// `b/a` is an integer ratio and `end` lies on that progression, otherwise
/// arithmetic with step `b−a`.
pub fn parse_grid_list(s: &str) -> Result<Vec<usize>> {
    let tokens: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let mut out: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i] == "..." {
            if out.len() < 2 || i + 1 >= tokens.len() {
                return Err(usage(format!("'...' needs two terms before and one after in '{s}'")));
            }
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let end: usize = tokens[i + 1]
                .parse()
                .map_err(|_| usage(format!("bad list entry '{}'", tokens[i + 1])))?;
            if a == 0 || b <= a {
                return Err(usage(format!("'...' needs an increasing start in '{s}'")));
            }
            let geometric = b % a == 0 && {
                let mut v = b;
                while v < end {
                    v *= b / a;
                }
                v == end
            };
            let mut next = if geometric { b * (b / a) } else { b + (b - a) };
            while next < end {
                out.push(next);
                next = if geometric { next * (b / a) } else { next + (b - a) };
            }
            out.push(end);
            i += 2;
            continue;
        }
        out.push(
            tokens[i]
                .parse()
                .map_err(|_| usage(format!("bad list entry '{}'", tokens[i])))?,
        );
        i += 1;
    }
    if out.is_empty() {
        return Err(usage("empty list"));
    }
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!("list '{s}' must be strictly increasing")));
    }
    Ok(out)
}

fn kv_params(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| usage(format!("expected key=value, got '{t}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad number in '{t}'")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn get(params: &[(String, f64)], key: &str, spec: &str) -> Result<f64> {
    params
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| usage(format!("'{spec}' needs {key}=…")))
}

/// `iid:rademacher`, `iid:normal`, `iid:uniform[:a=…,b=…]`,
/// `two-state:a=…`, `three-state`, `lsv:gamma=…[,burn_in=…]`.
pub fn parse_model(s: &str) -> Result<ProcessModel> {
    let (family, rest) = s.split_once(':').unwrap_or((s, ""));
    let model = match family {
        "iid" => {
            let (law, args) = rest.split_once(':').unwrap_or((rest, ""));
            let marginal = match law {
                "rademacher" => Marginal::Rademacher,
                "normal" => Marginal::StandardNormal,
                "uniform" => {
                    let kv = kv_params(args)?;
                    let a = get(&kv, "a", s).unwrap_or(0.0);
                    let b = get(&kv, "b", s).unwrap_or(1.0);
                    Marginal::uniform(a, b)?
                }
                _ => return Err(usage(format!("unknown i.i.d. law '{law}' in model '{s}'"))),
            };
            ProcessModel::Iid(IidModel::new(marginal))
        }
        "two-state" => ProcessModel::Markov(FiniteMarkov::two_state(get(&kv_params(rest)?, "a", s)?)?),
        "three-state" => ProcessModel::Markov(FiniteMarkov::reference_three_state()),
        "lsv" => {
            let kv = kv_params(rest)?;
            let gamma = get(&kv, "gamma", s)?;
            match get(&kv, "burn_in", s) {
                Ok(b) => ProcessModel::Lsv(LsvModel::new(
                    gamma,
                    b as usize,
                    crate::generators::LsvInit::UlamDensity {
                        m_bins: crate::generators::DEFAULT_ULAM_BINS,
                    },
                )?),
                Err(_) => ProcessModel::Lsv(LsvModel::with_defaults(gamma)?),
            }
        }
        _ => return Err(usage(format!("unknown model '{s}'"))),
    };
    Ok(model)
}

/// `abs3` (|x|³/6), `square` (x²), `psi:p=…,q=…[,scale=…]`.
pub fn parse_test_function(s: &str) -> Result<SmoothTestFunction> {
    let (name, rest) = s.split_once(':').unwrap_or((s, ""));
    match name {
        "abs3" => Ok(SmoothTestFunction::abs_cube()),
        "square" => Ok(SmoothTestFunction::square()),
        "psi" => {
            let kv = kv_params(rest)?;
            let scale = get(&kv, "scale", s).unwrap_or(1.0);
            SmoothTestFunction::psi(get(&kv, "p", s)?, get(&kv, "q", s)?, scale)
        }
        _ => Err(usage(format!("unknown test function '{s}'"))),
    }
}

fn finite_chain(model: &ProcessModel) -> Result<FiniteMarkov> {
    match model {
        ProcessModel::Markov(c) => Ok(c.clone()),
        ProcessModel::Iid(m) => match &m.marginal {
            Marginal::Rademacher => FiniteMarkov::iid(vec![-1.0, 1.0], vec![0.5, 0.5]),
            Marginal::Discrete { atoms, probs } => FiniteMarkov::iid(atoms.clone(), probs.clone()),
            _ => Err(usage("exact coefficients need a finite state space")),
        },
        ProcessModel::Lsv(_) => Err(usage("exact coefficients need a finite chain; use lsv-tau for the LSV map")),
    }
}

fn scalar_variance(model: &ProcessModel) -> Result<f64> {
    Ok(covariance_exact(model, &FeatureMap::Scalar)?.matrix[(0, 0)])
}

fn parse_measure(grid: &str, model: &ProcessModel, seed: u64) -> Result<Arc<DiscreteMeasure>> {
    if grid == "auto" {
        let probe = model.simulate(10_000, derive_seed(seed, 0x9121))?;
        return default_grid(&probe.values, DEFAULT_GRID_POINTS);
    }
    let parts: Vec<&str> = grid.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("grid must be a:b:cells or auto, got '{grid}'")));
    }
    let a: f64 = parts[0].parse().map_err(|_| usage(format!("bad grid start '{}'", parts[0])))?;
    let b: f64 = parts[1].parse().map_err(|_| usage(format!("bad grid end '{}'", parts[1])))?;
    let m: usize = parts[2].parse().map_err(|_| usage(format!("bad grid size '{}'", parts[2])))?;
    Ok(Arc::new(DiscreteMeasure::lebesgue(a, b, m)?.with_truncation(a, b)))
}

fn cdf_for(model: &ProcessModel, n_cal: usize, seed: u64) -> Result<CdfSpec> {
    if n_cal > 0 {
        CdfSpec::calibrate(model, n_cal, derive_seed(seed, 0xCA11))
    } else {
        CdfSpec::for_model(model)
    }
}

/// Builder and Gaussian limit for a Δ_n experiment.
fn delta_setup(
    model: &ProcessModel,
    field: bool,
    grid: &str,
    n_cal: usize,
    seed: u64,
) -> Result<(FieldBuilder, GaussianSampler, Vec<(String, String)>)> {
    if !field {
        let g = GaussianSampler::scalar(scalar_variance(model)?)?;
        return Ok((FieldBuilder::Scalar, g, vec![("builder".into(), "scalar".into())]));
    }
    let mu = parse_measure(grid, model, seed)?;
    let cdf = cdf_for(model, n_cal, seed)?;
    let feature = FeatureMap::Indicator(mu.clone());
    let (cov, source) = match covariance_exact(model, &feature) {
        Ok(c) => (c, "exact".to_string()),
        Err(_) => {
            let len = if n_cal > 0 { n_cal } else { DEFAULT_LSV_CALIBRATION };
            let path = model.simulate(len, derive_seed(seed, 0xC0F))?;
            let f = cdf.on_grid(&mu)?;
            let c = covariance_from_paths(&[path.values], &feature, None, Taper::Bartlett, Some(&f))?;
            let desc = format!("bartlett lag window {:?} on {len} steps", c.lag_window);
            (c, desc)
        }
    };
    let g = GaussianSampler::new(&cov);
    let meta = vec![
        ("builder".into(), "empirical field".into()),
        ("grid_points".into(), mu.len().to_string()),
        ("cdf".into(), cdf.source()),
        ("covariance".into(), source),
        ("psd_clipped".into(), g.report().clipped.to_string()),
    ];
    Ok((FieldBuilder::Empirical { mu, cdf }, g, meta))
}

fn certification(waive: bool, delta: f64, m: f64) -> Certification {
    if waive {
        Certification::Waived
    } else {
        Certification::Check(LambdaCheckConfig::new(delta, m))
    }
}

fn run_verify(p: &VerifyParams) -> Result<Outcome> {
    let psi = PsiFunctional::new(p.p, p.q)?;
    let v = verify_frechet(&psi, p.trials, p.seed)?;
    let mut t = CsvTable::new(["trial", "order", "grid_points", "closed_form", "finite_difference", "rel_error"]);
    for (i, m) in v.max_rel.iter().enumerate() {
        t.meta(format!("max_rel_error_order{}", i + 1), fmt_f64(*m));
    }
    for r in &v.rows {
        t.push_row(vec![
            r.trial.to_string(),
            r.order.to_string(),
            r.grid_points.to_string(),
            fmt_f64(r.closed),
            fmt_f64(r.fd),
            fmt_f64(r.rel_error),
        ]);
    }
    let pass = v.max_rel.iter().zip(FRECHET_TOL).all(|(e, tol)| *e <= tol);
    Ok(Outcome {
        table: t,
        summary: vec![format!(
            "max relative FD error: order1 {:.3e}, order2 {:.3e}, order3 {:.3e} (tolerances 1e-5, 1e-5, 1e-4)",
            v.max_rel[0], v.max_rel[1], v.max_rel[2]
        )],
        pass,
        plot: Plot::Lines { x: "trial", y: "rel_error" },
    })
}

fn run_coeffs(p: &CoeffsParams) -> Result<Outcome> {
    let model = parse_model(&p.model)?;
    let chain = finite_chain(&model)?;
    let kinds: Vec<CoefficientKind> = p
        .kinds
        .split(',')
        .map(|k| CoefficientKind::parse(k.trim()).map_err(|_| usage(format!("unknown coefficient kind '{k}'"))))
        .collect::<Result<_>>()?;
    let mut header = vec!["k", "kind", "value", "provenance", "argmax_lag"];
    if p.mc_samples > 0 {
        header.extend(["mc_value", "mc_stderr"]);
    }
    let mut t = CsvTable::new(header);
    t.meta("model", &p.model);
    t.meta("delta", fmt_f64(p.delta));
    t.meta("max_lag", p.max_lag.to_string());
    for (ki, kind) in kinds.iter().enumerate() {
        for k in 1..=p.kmax {
            let at = exact_coefficient(&chain, *kind, k, p.delta, p.max_lag)?;
            let mut row = vec![
                k.to_string(),
                kind.name().to_string(),
                fmt_f64(at.value.max(0.0)),
                "exact".to_string(),
                at.lag.map(|l| l.to_string()).unwrap_or_default(),
            ];
            if p.mc_samples > 0 {
                let s = derive_seed(p.seed, (ki * 10_000 + k) as u64);
                let mc = mc_coefficient(&chain, *kind, k, p.delta, &at, p.mc_samples, s)?;
                row.push(fmt_f64(mc.value));
                row.push(fmt_f64(mc.stderr));
            }
            t.push_row(row);
        }
    }
    Ok(Outcome {
        summary: vec![format!("{} coefficient rows for {}", t.rows.len(), p.model)],
        table: t,
        pass: true,
        plot: Plot::LogLog { x: "k", y: "value" },
    })
}

fn read_value_column(path: &str) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    CsvTable::parse(&text)?.f64_column("value")
}

fn run_wasserstein(p: &WassersteinParams) -> Result<Outcome> {
    if !p.a.is_empty() || !p.b.is_empty() {
        if p.a.is_empty() || p.b.is_empty() {
            return Err(usage("two-sample mode needs both --a and --b"));
        }
        let (xa, xb) = (read_value_column(&p.a)?, read_value_column(&p.b)?);
        let w = wasserstein_samples(&xa, &xb, p.p)?;
        let mut t = CsvTable::new(["size_a", "size_b", "p", "value"]);
        t.meta("a", &p.a);
        t.meta("b", &p.b);
        t.push_row(vec![xa.len().to_string(), xb.len().to_string(), fmt_f64(p.p), fmt_f64(w)]);
        return Ok(Outcome {
            table: t,
            summary: vec![format!("W_{} = {w:.6e}", p.p)],
            pass: true,
            plot: Plot::Lines { x: "size_a", y: "value" },
        });
    }
    let model = parse_model(&p.model)?;
    let ns = parse_grid_list(&p.ns)?;
    let center = model
        .mean()
        .ok_or_else(|| usage(format!("{} has no closed-form mean", p.model)))?;
    let g = GaussianSampler::scalar(scalar_variance(&model)?)?;
    let gseed = derive_seed(p.seed, 0x6A05);
    let gs = replicate_values(p.reps, gseed, |rng| {
        let mut v = [0.0];
        g.sample_into(rng, &mut v);
        v[0]
    });
    let mut t = CsvTable::new(["n", "value", "reps", "seed"]);
    t.meta("model", &p.model);
    t.meta("p", fmt_f64(p.p));
    let mut values = Vec::with_capacity(ns.len());
    for &n in &ns {
        let xs = replicate_values(p.reps, derive_seed(p.seed, n as u64), |rng| {
            let mut y = vec![0.0; n];
            model.fill(rng, &mut y);
            y.iter().map(|v| v - center).sum::<f64>() / (n as f64).sqrt()
        });
        let w = wasserstein_samples(&xs, &gs, p.p)?;
        values.push(w);
        t.push_row(vec![n.to_string(), fmt_f64(w), p.reps.to_string(), p.seed.to_string()]);
    }
    let mut summary = Vec::new();
    if p.p > 2.0 && p.p <= 3.0 {
        let target = wasserstein_rate_target(p.p - 2.0);
        t.meta("target_slope", fmt_f64(target));
        summary.push(format!("reference slope {target:.4}"));
    }
    if let Ok(fit) = rate_fit(&ns, &values) {
        t.meta("fitted_slope", fmt_f64(fit.slope));
        t.meta("slope_stderr", fmt_f64(fit.slope_stderr));
        summary.push(format!("fitted slope {:.4} ± {:.4}", fit.slope, fit.slope_stderr));
    }
    Ok(Outcome {
        table: t,
        summary,
        pass: true,
        plot: Plot::LogLog { x: "n", y: "value" },
    })
}

#[allow(clippy::too_many_arguments)]
fn delta_table(
    model_spec: &str,
    f_spec: &str,
    ns: &[usize],
    reps: usize,
    delta: f64,
    m: f64,
    field: bool,
    grid: &str,
    n_cal: usize,
    waive: bool,
    seed: u64,
    value_column: &'static str,
) -> Result<(CsvTable, Vec<crate::metrics::DeltaEstimate>)> {
    let model = parse_model(model_spec)?;
    let f = parse_test_function(f_spec)?;
    let (builder, g, meta) = delta_setup(&model, field, grid, n_cal, seed)?;
    let est = delta_n_grid(&f, &model, &builder, ns, reps, &g, seed, &certification(waive, delta, m))?;
    let mut t = CsvTable::new(["n", value_column, "stderr", "reps", "seed"]);
    t.meta("model", model_spec);
    t.meta("f", f.label());
    for (k, v) in meta {
        t.meta(k, v);
    }
    t.meta(
        "certification",
        match est[0].certificate {
            Some(c) => format!("checked: holder ratio {}, norm at zero {}", fmt_f64(c.max_ratio), fmt_f64(c.norm_at_zero)),
            None => "waived".into(),
        },
    );
    t.meta("gaussian_seed", est[0].gaussian_seed.to_string());
    for e in &est {
        t.push_row(vec![
            e.n.to_string(),
            fmt_f64(e.value),
            fmt_f64(e.stderr),
            e.reps.to_string(),
            e.seed.to_string(),
        ]);
    }
    Ok((t, est))
}

fn run_delta(p: &DeltaParams) -> Result<Outcome> {
    let ns = parse_grid_list(&p.ns)?;
    let (t, est) = delta_table(
        &p.model, &p.f, &ns, p.reps, p.delta, p.m, p.field, &p.grid, p.n_cal, p.waive_cert, p.seed, "value",
    )?;
    Ok(Outcome {
        summary: est
            .iter()
            .map(|e| format!("n = {:>6}: Δ_n = {:.4e} ± {:.1e}", e.n, e.value, e.stderr))
            .collect(),
        table: t,
        pass: true,
        plot: Plot::LogLog { x: "n", y: "value" },
    })
}

fn run_rate(p: &RateParams) -> Result<Outcome> {
    let ns = parse_grid_list(&p.ns)?;
    let (mut t, est) = delta_table(
        &p.model, &p.f, &ns, p.reps, p.delta, p.m, p.field, &p.grid, p.n_cal, p.waive_cert, p.seed, "delta_hat",
    )?;
    let fit = rate_fit_estimates(&est)?;
    t.meta("fitted_slope", fmt_f64(fit.slope));
    t.meta("slope_stderr", fmt_f64(fit.slope_stderr));
    t.meta("r_squared", fmt_f64(fit.r_squared));
    t.meta("reference_slope", fmt_f64(-p.delta / 2.0));
    Ok(Outcome {
        table: t,
        summary: vec![format!(
            "fitted slope {:.4} ± {:.4} (R² {:.3}); reference −δ/2 = {:.4}",
            fit.slope,
            fit.slope_stderr,
            fit.r_squared,
            -p.delta / 2.0
        )],
        pass: true,
        plot: Plot::LogLog { x: "n", y: "delta_hat" },
    })
}

fn run_bound(p: &BoundParams) -> Result<Outcome> {
    let model = parse_model(&p.model)?;
    let f = parse_test_function(&p.f)?;
    let ns = parse_grid_list(&p.ns)?;
    let inputs = BoundInputs::exact_scalar(&model, p.delta, p.m, p.kmax, p.max_lag)?;
    let g = GaussianSampler::scalar(inputs.eg2)?;
    let rep = dominance_check(&inputs, &f, &model, &ns, p.reps, &g, p.seed, &certification(p.waive_cert, p.delta, p.m))?;
    let mut t = rep.to_csv();
    t.meta("model", &p.model);
    t.meta("f", f.label());
    t.meta("delta", fmt_f64(p.delta));
    t.meta("M", fmt_f64(p.m));
    t.meta("lambda", fmt_f64(inputs.lambda));
    t.meta("eg2", fmt_f64(inputs.eg2));
    t.meta("moment_x", fmt_f64(inputs.moment_x));
    t.meta("moment_g", fmt_f64(inputs.moment_g));
    t.meta("kmax", p.kmax.to_string());
    t.meta("seed", p.seed.to_string());
    t.meta("pass", rep.pass.to_string());
    let worst = rep
        .rows
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        table: t,
        summary: vec![format!(
            "dominance {}: smallest slack {worst:.4e} over {} grid points",
            if rep.pass { "holds" } else { "FAILS" },
            rep.rows.len()
        )],
        pass: rep.pass,
        plot: Plot::LogLog { x: "n", y: "delta_hat" },
    })
}

fn run_empirical(p: &EmpiricalParams) -> Result<Outcome> {
    let model = parse_model(&p.model)?;
    let mu = parse_measure(&p.grid, &model, p.seed)?;
    let cdf = cdf_for(&model, p.n_cal, p.seed)?;
    let norms = replicate_field_norms(&model, &cdf, &mu, p.n, p.p, p.reps, p.seed)?;
    let mut t = CsvTable::new(["rep", "norm"]);
    t.meta("model", &p.model);
    t.meta("n", p.n.to_string());
    t.meta("p", fmt_f64(p.p));
    t.meta("grid_points", mu.len().to_string());
    t.meta("cdf", cdf.source());
    let sq: Vec<f64> = norms.iter().map(|v| v.powf(p.p)).collect();
    let est = MeanEstimate::from_values(&sq);
    t.meta("mean_norm_pow_p", fmt_f64(est.mean));
    t.meta("stderr", fmt_f64(est.stderr));
    let mut summary = vec![format!("mean ‖G_n‖_p^p = {:.6} ± {:.1e}", est.mean, est.stderr)];
    if p.p == 2.0 && matches!(model, ProcessModel::Iid(_)) {
        let target = iid_l2_moment(&cdf, &mu)?;
        t.meta("iid_l2_moment", fmt_f64(target));
        summary.push(format!("i.i.d. closed form ∫F(1−F)dμ = {target:.6}"));
    }
    for (i, v) in norms.iter().enumerate() {
        t.push_row(vec![i.to_string(), fmt_f64(*v)]);
    }
    Ok(Outcome {
        table: t,
        summary,
        pass: true,
        plot: Plot::Histogram { column: "norm" },
    })
}

fn run_lsv_tau(p: &LsvTauParams) -> Result<Outcome> {
    let ks = parse_grid_list(&p.ks)?;
    let res = tau1_lsv_empirical(&LsvTauConfig::new(p.gamma, ks.clone(), p.bins, p.n_mc, p.seed))?;
    let seq = &res.sequence;
    let mut t = CsvTable::new(["k", "value", "stderr"]);
    t.meta("gamma", fmt_f64(p.gamma));
    t.meta("bins", p.bins.to_string());
    t.meta("n_mc", p.n_mc.to_string());
    t.meta("seed", p.seed.to_string());
    t.meta("sparse_bins", res.sparse_bins.to_string());
    let se = seq.stderr.clone().unwrap_or_else(|| vec![0.0; seq.len()]);
    for i in 0..seq.len() {
        t.push_row(vec![seq.ks[i].to_string(), fmt_f64(seq.values[i]), fmt_f64(se[i])]);
    }
    let mut summary = Vec::new();
    if let Ok(fit) = rate_fit(&seq.ks, &seq.values) {
        t.meta("fitted_slope", fmt_f64(fit.slope));
        summary.push(format!("log-log slope {:.4} ± {:.4}", fit.slope, fit.slope_stderr));
    }
    Ok(Outcome {
        table: t,
        summary,
        pass: true,
        plot: Plot::LogLog { x: "k", y: "value" },
    })
}

fn plot_script(csv: &Path, plot: Plot) -> String {
    let name = csv.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let body = match plot {
        Plot::LogLog { x, y } => format!("plt.loglog(cols['{x}'], cols['{y}'], 'o-')\nplt.xlabel('{x}')\nplt.ylabel('{y}')\n"),
        Plot::Lines { x, y } => format!("plt.plot(cols['{x}'], cols['{y}'], '.')\nplt.xlabel('{x}')\nplt.ylabel('{y}')\n"),
        Plot::Histogram { column } => format!("plt.hist(cols['{column}'], bins=50)\nplt.xlabel('{column}')\n"),
    };
    format!(
        "import csv\nimport os\n\nimport matplotlib.pyplot as plt\n\n\
         path = os.path.join(os.path.dirname(os.path.abspath(__file__)), '{name}')\n\
         with open(path) as fh:\n    rows = list(csv.reader(line for line in fh if not line.startswith('#')))\n\
         header, data = rows[0], rows[1:]\n\
         cols = {{h: [float(r[i]) if r[i] not in ('', 'exact') else float('nan') for r in data] for i, h in enumerate(header) if h not in ('kind', 'provenance')}}\n\
         {body}plt.title('{name}')\nplt.savefig(path.rsplit('.', 1)[0] + '.png', dpi=150)\n"
    )
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.toml")
}

fn write_outputs(sub: &str, resolved: &impl Serialize, out: &Path, outcome: &Outcome, plot: bool) -> Result<()> {
    std::fs::write(out, outcome.table.render())?;
    let mut manifest = toml::Table::new();
    manifest.insert("subcommand".into(), toml::Value::String(sub.into()));
    manifest.insert("out".into(), toml::Value::String(out.display().to_string()));
    let params = toml::Table::try_from(resolved).map_err(|e| usage(format!("cannot encode manifest: {e}")))?;
    manifest.extend(params);
    let text = format!(
        "# cltlab {} run manifest; rerun with: cltlab {sub} --config <this file>\n{}",
        env!("CARGO_PKG_VERSION"),
        toml::to_string(&manifest).map_err(|e| usage(format!("cannot encode manifest: {e}")))?
    );
    std::fs::write(manifest_path(out), text)?;
    if plot {
        std::fs::write(out.with_extension("plot.py"), plot_script(out, outcome.plot))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let file = cli.config.as_deref().map(read_config).transpose()?;
    let file = file.as_ref();
    let sub = cli.command.name();
    macro_rules! go {
        ($args:expr, $params:ty, $runner:ident) => {{
            let (resolved, cfg_out): ($params, _) = resolve(sub, $args, file)?;
            let out = cli
                .out
                .clone()
                .or(cfg_out)
                .unwrap_or_else(|| PathBuf::from(format!("{sub}.csv")));
            let outcome = $runner(&resolved)?;
            write_outputs(sub, &resolved, &out, &outcome, cli.plot_script)?;
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("wrote {} and {}", out.display(), manifest_path(&out).display());
            Ok(outcome.pass)
        }};
    }
    match &cli.command {
        Command::VerifyFrechet(a) => go!(a, VerifyParams, run_verify),
        Command::Coeffs(a) => go!(a, CoeffsParams, run_coeffs),
        Command::Wasserstein(a) => go!(a, WassersteinParams, run_wasserstein),
        Command::Delta(a) => go!(a, DeltaParams, run_delta),
        Command::Rate(a) => go!(a, RateParams, run_rate),
        Command::Bound(a) => go!(a, BoundParams, run_bound),
        Command::Empirical(a) => go!(a, EmpiricalParams, run_empirical),
        Command::LsvTau(a) => go!(a, LsvTauParams, run_lsv_tau),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(usage("--jobs must be at least 1")),
        Some(j) => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(usage(format!("cannot start {j} workers: {e}"))),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("validation failed");
            EXIT_FAILURE
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}
