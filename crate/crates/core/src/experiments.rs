//! Experiment driver: validated configuration, seed streams, parallel
//! execution and deterministic CSV/JSON artifacts.
//!
//! Output bytes depend only on the configuration (thread count excluded),
//! so wall time is reported on the side, in `<output>.timing.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::combinatorics::{count_asymptotic, count_c_n1, TupleDomain};
use crate::empirics::{
    abs_quantile, conditional_tail_check, extremal_index_blocks, rho_block_mc, scaling_sweep,
    BlockScheme, RhoMode, SweepConfig,
};
use crate::intersection::{Regime, TailIndex};
use crate::limit::{
    limit_constant, regime_report, sample_z, LimitMaxLaw, DEFAULT_L_CAP, DEFAULT_Q_TRUNCATION,
};
use crate::model::{
    default_truncation, evaluate_path, evaluate_truncated_path, sample_environment,
    truncation_sweep, ModelParams,
};
use crate::renewal::{renewal_mass, RenewalLaw, RenewalTables};
use crate::{Error, Result};

/// Identifier of the random stream construction, recorded in every output.
pub const RNG_ID: &str = "chacha20/rand_chacha-0.9/seed_from_u64(seed)+set_stream(index)";

/// Environment variable holding the default thread count.
pub const THREADS_ENV: &str = "STABLE_REGEN_THREADS";

/// Independent stream `index` of the master seed: ChaCha20 keyed by
/// `seed_from_u64(master)`, with `index` as the 64-bit stream id.
pub fn seed_stream(master: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Constants,
    SimulatePath,
    MaxLaw,
    ScalingSweep,
    ExtremalIndex,
    TailProcess,
    Counts,
    Diagnostics,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Everything a run depends on. `threads` is excluded from the echo since
/// results do not depend on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub alpha: f64,
    pub beta: TailIndex,
    pub p: u32,
    pub n: Option<u64>,
    #[serde(default)]
    pub n_grid: Vec<u64>,
    pub replicates: usize,
    pub seed: u64,
    pub block_length: Option<u64>,
    pub truncation: Option<usize>,
    pub k_cap: Option<f64>,
    pub x_quantile: f64,
    pub m: usize,
    pub mc_samples: usize,
    pub q_truncation: usize,
    /// Emit per-`k` rows in `simulate-path` (otherwise a summary row).
    #[serde(default)]
    pub export_path: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
    #[serde(skip)]
    pub threads: usize,
}

impl ExperimentConfig {
    /// Defaults for everything except the subcommand and the model indices.
    pub fn new(subcommand: Subcommand, alpha: f64, beta: TailIndex, p: u32) -> Self {
        ExperimentConfig {
            subcommand,
            alpha,
            beta,
            p,
            n: None,
            n_grid: Vec::new(),
            replicates: 100,
            seed: 0,
            block_length: None,
            truncation: None,
            k_cap: None,
            x_quantile: 0.995,
            m: 3,
            mc_samples: 100_000,
            q_truncation: DEFAULT_Q_TRUNCATION,
            export_path: false,
            output: None,
            format: Format::Csv,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::limit::check_alpha(self.alpha)?;
        if self.p == 0 {
            return Err(Error::invalid("p", "must be at least 1"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates", "must be at least 1"));
        }
        if !(self.x_quantile > 0.0 && self.x_quantile < 1.0) {
            return Err(Error::invalid("x_quantile", "must lie in (0,1)"));
        }
        if self.n == Some(0) || self.n_grid.contains(&0) {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if self.k_cap.is_some_and(|k| !(k >= 0.0)) {
            return Err(Error::invalid("K", "must be non-negative"));
        }
        if self.q_truncation == 0 {
            return Err(Error::invalid("q_truncation", "must be at least 1"));
        }
        let needs_n = matches!(
            self.subcommand,
            Subcommand::SimulatePath | Subcommand::TailProcess | Subcommand::Diagnostics
        );
        if needs_n && self.n.is_none() {
            return Err(Error::invalid("n", "required by this subcommand"));
        }
        if self.subcommand == Subcommand::ScalingSweep && self.n_grid.len() < 4 {
            return Err(Error::invalid("n_grid", "scaling-sweep needs at least 4 points"));
        }
        if self.subcommand == Subcommand::ExtremalIndex && self.grid().is_empty() {
            return Err(Error::invalid("n", "extremal-index needs n or n_grid"));
        }
        Ok(())
    }

    /// `n_grid`, or `[n]` when no grid was given.
    pub fn grid(&self) -> Vec<u64> {
        if self.n_grid.is_empty() {
            self.n.into_iter().collect()
        } else {
            self.n_grid.clone()
        }
    }

    fn law(&self) -> Result<RenewalLaw> {
        RenewalLaw::default_law(self.beta.value())
    }

    /// Thread count after consulting [`THREADS_ENV`]; `0` means rayon's
    /// default.
    pub fn effective_threads(&self) -> usize {
        if self.threads > 0 {
            return self.threads;
        }
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    }
}

/// Header block of every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub regime: Regime,
    pub config: ExperimentConfig,
    /// Subcommand-specific summary values.
    pub summary: BTreeMap<String, Value>,
}

/// A finished run: meta block plus a rectangular table.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub meta: Meta,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

fn render_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => {
            if n.is_f64() {
                format!("{:.16e}", n.as_f64().unwrap())
            } else {
                n.to_string()
            }
        }
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(render_cell).collect::<Vec<_>>().join(";"),
        Value::Object(_) => v.to_string(),
    }
}

/// Finite floats become numbers; non-finite ones their string spelling.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(x.to_string()))
}

impl Artifact {
    pub fn to_csv(&self) -> Result<String> {
        let mut s = String::new();
        let m = &self.meta;
        writeln!(s, "# tool: {} {}", m.tool, m.version).unwrap();
        writeln!(s, "# rng: {}", m.rng).unwrap();
        writeln!(s, "# seed: {}", m.seed).unwrap();
        writeln!(s, "# regime: {}", m.regime).unwrap();
        writeln!(s, "# config: {}", serde_json::to_string(&m.config)?).unwrap();
        writeln!(s, "# summary: {}", serde_json::to_string(&m.summary)?).unwrap();
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(render_cell).collect();
            writeln!(s, "{}", cells.join(",")).unwrap();
        }
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .cloned()
                        .zip(r.iter().cloned())
                        .collect(),
                )
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({ "meta": self.meta, "rows": rows }))?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Recovers the configuration echoed in a CSV or JSON artifact.
pub fn parse_config_echo(text: &str) -> Result<ExperimentConfig> {
    if let Some(line) = text.lines().find_map(|l| l.strip_prefix("# config: ")) {
        return Ok(serde_json::from_str(line)?);
    }
    let v: Value = serde_json::from_str(text)?;
    Ok(serde_json::from_value(v["meta"]["config"].clone())?)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Outcome of [`run`]: the rendered artifact and the wall time.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub artifact: Artifact,
    pub rendered: String,
    pub wall_seconds: f64,
}

/// Validates, computes on a dedicated thread pool, renders and (when an
/// output path is configured) writes the artifact plus its timing sidecar.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.effective_threads())
        .build()
        .map_err(|e| Error::ResourceLimit(format!("thread pool: {e}")))?;
    let artifact = pool.install(|| compute(config))?;
    let rendered = artifact.render(config.format)?;
    let wall_seconds = start.elapsed().as_secs_f64();
    if let Some(path) = &config.output {
        write_atomic(path, rendered.as_bytes())?;
        let mut side = path.clone().into_os_string();
        side.push(".timing.json");
        let timing = serde_json::to_string(&json!({ "wall_seconds": wall_seconds }))?;
        write_atomic(Path::new(&side), timing.as_bytes())?;
    }
    Ok(RunOutcome {
        artifact,
        rendered,
        wall_seconds,
    })
}

/// Computes the artifact for a validated configuration on the current pool.
pub fn compute(cfg: &ExperimentConfig) -> Result<Artifact> {
    let mut summary = BTreeMap::new();
    let (columns, rows) = match cfg.subcommand {
        Subcommand::Constants => constants(cfg, &mut summary)?,
        Subcommand::SimulatePath => simulate_path(cfg, &mut summary)?,
        Subcommand::MaxLaw => max_law(cfg, &mut summary)?,
        Subcommand::ScalingSweep => sweep(cfg, &mut summary)?,
        Subcommand::ExtremalIndex => extremal(cfg, &mut summary)?,
        Subcommand::TailProcess => tail_process(cfg, &mut summary)?,
        Subcommand::Counts => counts(cfg, &mut summary)?,
        Subcommand::Diagnostics => diagnostics(cfg, &mut summary)?,
    };
    Ok(Artifact {
        meta: Meta {
            tool: "stable-regen".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            rng: RNG_ID.into(),
            seed: cfg.seed,
            regime: cfg.beta.regime(cfg.p),
            config: cfg.clone(),
            summary,
        },
        columns: columns.into_iter().map(String::from).collect(),
        rows,
    })
}

type Table = (Vec<&'static str>, Vec<Vec<Value>>);
type Summary = BTreeMap<String, Value>;

fn opt(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

fn constants(cfg: &ExperimentConfig, _: &mut Summary) -> Result<Table> {
    let r = regime_report(cfg.alpha, cfg.beta, cfg.p, &cfg.law()?, cfg.q_truncation)?;
    let columns = vec![
        "alpha", "beta", "p", "regime", "beta_q", "beta_p", "p_prime", "q_beta_p", "q_frak",
        "q_frak_lower", "q_frak_upper", "d_shape", "c_frak", "extremal_index",
    ];
    let row = vec![
        num(r.alpha),
        Value::String(r.beta.to_string()),
        json!(r.p),
        Value::String(r.regime.to_string()),
        Value::Array(r.beta_q.iter().map(|&b| num(b)).collect()),
        num(r.beta_p),
        json!(r.p_prime),
        r.q_beta_p.map(|q| json!(q)).unwrap_or(Value::Null),
        opt(r.q_frak),
        opt(r.q_frak_bracket.map(|b| b.0)),
        opt(r.q_frak_bracket.map(|b| b.1)),
        opt(r.d_shape),
        num(r.c_frak),
        opt(r.extremal_index),
    ];
    Ok((columns, vec![row]))
}

fn model_setup(cfg: &ExperimentConfig, n: u64) -> Result<(ModelParams, RenewalLaw, RenewalTables)> {
    let law = cfg.law()?;
    let tables = RenewalTables::stationary(&law, n as usize)?;
    let l = cfg.truncation.unwrap_or_else(|| default_truncation(&tables, n));
    let params = ModelParams::new(cfg.alpha, cfg.beta, cfg.p, n, l, cfg.seed)?;
    Ok((params, law, tables))
}

fn simulate_path(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Table> {
    let n = cfg.n.unwrap();
    let (params, law, tables) = model_setup(cfg, n)?;
    let mut rng = seed_stream(cfg.seed, 0);
    let env = sample_environment(&params, &law, &tables, &mut rng)?;
    let path = evaluate_path(&env, &params, &tables)?;
    let truncated = match cfg.k_cap {
        Some(k) => Some(evaluate_truncated_path(&env, &params, &tables, k)?),
        None => None,
    };
    summary.insert("environment".into(), serde_json::to_value(env.summary())?);
    summary.insert("truncation".into(), json!(params.truncation));
    summary.insert("max".into(), num(path.max()));
    if !cfg.export_path {
        let nonzero = path.values.iter().filter(|&&x| x != 0.0).count();
        let cols = vec!["n", "l", "max", "min", "nonzero", "max_truncated"];
        let row = vec![
            json!(n),
            json!(params.truncation),
            num(path.max()),
            num(path.values.iter().copied().fold(f64::INFINITY, f64::min)),
            json!(nonzero),
            opt(truncated.as_ref().map(|t| t.max())),
        ];
        return Ok((cols, vec![row]));
    }
    let rows = (1..=n)
        .map(|k| {
            vec![
                json!(k),
                num(path.value(k)),
                json!(path.coverage(k).len()),
                opt(truncated.as_ref().map(|t| t.value(k))),
            ]
        })
        .collect();
    Ok((vec!["k", "x", "coverage", "x_truncated"], rows))
}

/// Limit law of `M_n/c_n`; the super-critical branch draws `mc_samples`
/// copies of `𝔠^{1/α}Z` on streams `0..mc_samples` of `seed`.
pub fn limit_law_for(cfg: &ExperimentConfig, law: &RenewalLaw) -> Result<LimitMaxLaw> {
    let constant = if cfg.beta.regime(cfg.p) == Regime::SubCritical {
        let tables = renewal_mass(law, cfg.q_truncation)?;
        crate::limit::limit_constant_with(cfg.beta, cfg.p, law, &tables, cfg.q_truncation)?
    } else {
        limit_constant(cfg.beta, cfg.p, law, 0)?
    };
    if constant.regime != Regime::SuperCritical {
        return Ok(LimitMaxLaw::Frechet {
            c_frak: constant.value,
            alpha: cfg.alpha,
        });
    }
    let scale = constant.value.powf(1.0 / cfg.alpha);
    let l_cap = cfg.truncation.unwrap_or(DEFAULT_L_CAP);
    let mut samples = (0..cfg.mc_samples.max(1))
        .into_par_iter()
        .map(|i| {
            let mut rng = seed_stream(cfg.seed, i as u64);
            sample_z(cfg.alpha, cfg.beta, cfg.p, l_cap, &mut rng).map(|s| scale * s.z)
        })
        .collect::<Result<Vec<f64>>>()?;
    samples.sort_by(f64::total_cmp);
    Ok(LimitMaxLaw::Empirical { samples })
}

fn max_law(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Table> {
    let law = cfg.law()?;
    let lim = limit_law_for(cfg, &law)?;
    let (lo, hi) = (lim.quantile(0.01).max(1e-300), lim.quantile(0.99));
    let points = 64;
    let rows = (0..points)
        .map(|i| {
            let x = lo * (hi / lo).powf(i as f64 / (points - 1) as f64);
            vec![num(x), num(lim.cdf(x))]
        })
        .collect();
    if let LimitMaxLaw::Frechet { c_frak, .. } = lim {
        summary.insert("c_frak".into(), num(c_frak));
    }
    Ok((vec!["x", "cdf"], rows))
}

fn sweep(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Table> {
    let law = cfg.law()?;
    let lim = limit_law_for(cfg, &law)?;
    let res = scaling_sweep(
        &SweepConfig {
            alpha: cfg.alpha,
            beta: cfg.beta,
            p: cfg.p,
            n_grid: cfg.n_grid.clone(),
            replicates: cfg.replicates,
            seed: cfg.seed,
            truncation: cfg.truncation,
        },
        Some(&lim),
    )?;
    summary.insert("slope".into(), num(res.slope));
    summary.insert("normalized_cov".into(), num(res.normalized_cov));
    let rows = res
        .rows
        .iter()
        .map(|r| {
            vec![
                json!(r.n),
                json!(r.replicates),
                num(r.median_max),
                num(r.c_n),
                num(r.normalized),
                opt(r.ks),
            ]
        })
        .collect();
    Ok((
        vec!["n", "replicates", "median_max", "c_n", "normalized", "ks"],
        rows,
    ))
}

fn extremal(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Table> {
    let law = cfg.law()?;
    let theory = match cfg.beta.regime(cfg.p) {
        Regime::SubCritical => {
            let tables = renewal_mass(&law, cfg.q_truncation)?;
            let c = crate::limit::limit_constant_with(cfg.beta, cfg.p, &law, &tables, cfg.q_truncation)?;
            Some(c.terminating.unwrap().estimate * c.shape.unwrap())
        }
        Regime::Critical => Some(0.0),
        Regime::SuperCritical => None,
    };
    summary.insert("theta_theory".into(), opt(theory));
    let mut rows = Vec::new();
    for (g, n) in cfg.grid().into_iter().enumerate() {
        let (params, law, tables) = model_setup(cfg, n)?;
        let scheme = match cfg.block_length {
            Some(d) => BlockScheme::new(n, d)?,
            None => BlockScheme::default_for(params.regime(), n, cfg.p)?,
        };
        let stats = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| {
                let mut rng = seed_stream(cfg.seed, crate::empirics::sweep_stream_index(g, r));
                let env = sample_environment(&params, &law, &tables, &mut rng)?;
                let path = evaluate_path(&env, &params, &tables)?;
                let u = abs_quantile(&path.values, cfg.x_quantile);
                let e = extremal_index_blocks(&path.values, &scheme, u);
                Ok((u, e.map_or((0, 0), |e| (e.exceedances, e.blocks_hit))))
            })
            .collect::<Result<Vec<_>>>()?;
        let exc: u64 = stats.iter().map(|s| s.1 .0).sum();
        let hit: u64 = stats.iter().map(|s| s.1 .1).sum();
        let mut us: Vec<f64> = stats.iter().map(|s| s.0).collect();
        us.sort_by(f64::total_cmp);
        let theta = (exc > 0).then(|| hit as f64 / exc as f64);
        rows.push(vec![
            json!(n),
            json!(scheme.d),
            num(crate::special::quantile_sorted(&us, 0.5)),
            json!(exc),
            json!(hit),
            opt(theta),
            opt(theory),
        ]);
    }
    Ok((
        vec!["n", "d", "u", "exceedances", "blocks_hit", "theta_hat", "theta_theory"],
        rows,
    ))
}

fn tail_process(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Table> {
    let (params, law, tables) = model_setup(cfg, cfg.n.unwrap())?;
    let rep = conditional_tail_check(&params, &law, &tables, cfg.x_quantile, cfg.m, cfg.replicates)?;
    summary.insert("tv".into(), num(rep.tv));
    summary.insert("exceedances".into(), json!(rep.exceedances));
    let rows = rep
        .patterns
        .iter()
        .map(|p| {
            vec![
                json!(p.sign),
                Value::String(p.support.clone()),
                num(p.empirical),
                num(p.theoretical),
            ]
        })
        .collect();
    Ok((vec!["sign", "support", "empirical", "theoretical"], rows))
}

fn counts(cfg: &ExperimentConfig, _: &mut Summary) -> Result<Table> {
    let mut rows: Vec<Vec<Value>> = [1e3, 1e4, 1e5, 1e6]
        .par_iter()
        .map(|&x| {
            let exact = TupleDomain::new(cfg.p, x, None)?.count();
            let asym = count_asymptotic(x, cfg.p);
            Ok(vec![
                json!("D"),
                num(x),
                json!(exact),
                num(asym),
                num(exact as f64 / asym),
            ])
        })
        .collect::<Result<_>>()?;
    if cfg.beta.regime(cfg.p) != Regime::SuperCritical {
        let law = cfg.law()?;
        let k = cfg.k_cap.unwrap_or(1.0);
        let grid = cfg.grid();
        let n_max = grid.iter().copied().max().unwrap_or(0);
        let tables = RenewalTables::stationary(&law, n_max as usize)?;
        let more = grid
            .par_iter()
            .map(|&n| {
                let c = count_c_n1(cfg.alpha, cfg.beta, cfg.p, n, &law, &tables, k)?;
                Ok(vec![
                    json!("C_n1"),
                    json!(n),
                    json!(c.exact),
                    num(c.asymptotic),
                    num(c.ratio()),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(more);
    }
    Ok((vec!["kind", "arg", "exact", "asymptotic", "ratio"], rows))
}

fn diagnostics(cfg: &ExperimentConfig, summary: &mut Summary) -> Result<Table> {
    let n = cfg.n.unwrap();
    let (params, law, tables) = model_setup(cfg, n)?;
    let grid: Vec<usize> = (0..4).map(|j| params.truncation << j).collect();
    let reps = truncation_sweep(&params, &law, &tables, cfg.replicates, &grid)?;
    let mut rows: Vec<Vec<Value>> = reps
        .iter()
        .map(|r| {
            vec![
                json!("truncation"),
                json!(r.l),
                num(r.median),
                num(r.q90),
                num(r.max),
                Value::Null,
                Value::Null,
                Value::Null,
            ]
        })
        .collect();
    if let Some(l) = crate::model::recommend_truncation(&reps, 0.01) {
        summary.insert("recommended_l".into(), json!(l));
    }
    if params.regime() != Regime::SuperCritical {
        let scheme = match cfg.block_length {
            Some(d) => BlockScheme::new(n, d)?,
            None => BlockScheme::default_for(params.regime(), n, cfg.p)?,
        };
        let q = if params.regime() == Regime::SubCritical {
            let t = renewal_mass(&law, cfg.q_truncation)?;
            let c = crate::limit::limit_constant_with(cfg.beta, cfg.p, &law, &t, cfg.q_truncation)?;
            Some(c.terminating.unwrap().estimate)
        } else {
            None
        };
        let trials = cfg.mc_samples.max(1000);
        let rho = rho_block_mc(
            cfg.beta, cfg.p, &law, &tables, &scheme, trials, cfg.seed, RhoMode::Conditioned, q,
        )?;
        rows.push(vec![
            json!("rho"),
            json!(scheme.d),
            Value::Null,
            Value::Null,
            Value::Null,
            num(rho.rho_hat),
            num(rho.se),
            num(rho.asymptotic),
        ]);
    }
    Ok((
        vec!["kind", "l_or_d", "median_gap", "q90_gap", "max_gap", "rho_hat", "rho_se", "rho_asymptotic"],
        rows,
    ))
}
