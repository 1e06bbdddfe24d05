//! Command-line front end: flag and config-file resolution, command dispatch
//! and artifact writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chain::{self, Truncation};
use crate::design::{self, Method, ORACLE_TOL};
use crate::error::{invalid, LabError, Result};
use crate::hitting::{self, Guard};
use crate::io::{Document, Format, Table, TOOL, VERSION};
use crate::laws::{make_target, DiscreteLaw, FamilyParams, PositiveMeasure, Target};
use crate::montecarlo::{self, Kernel, SimConfig, Start};
use crate::special::{critical_d, exp_neg_gamma};

#[derive(Debug, Parser)]
#[command(name = "lamperti", version, about = "Numerical laboratory for maximal branching (Lamperti) chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design the branching cdf F for a target law or measure.
    Design(Opts),
    /// Build the truncated chain on {1..N} and check its structure.
    Build(Opts),
    /// Classify the chain driven by the designed branching law.
    Classify(Opts),
    /// Hitting-time analysis of state N.
    Hitting(Opts),
    /// Quasi-stationary analysis of the chain killed at N.
    Qsd(Opts),
    /// Simulate the chain.
    Simulate(Opts),
    /// Run the whole pipeline and write every artifact into --out.
    Report(Opts),
}

impl Command {
    fn parts(&self) -> (&'static str, &Opts) {
        match self {
            Command::Design(o) => ("design", o),
            Command::Build(o) => ("build", o),
            Command::Classify(o) => ("classify", o),
            Command::Hitting(o) => ("hitting", o),
            Command::Qsd(o) => ("qsd", o),
            Command::Simulate(o) => ("simulate", o),
            Command::Report(o) => ("report", o),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Opts {
    /// Flat TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Number of states of the truncated chain.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub jmax: Option<u64>,
    /// series | bisection | both
    #[arg(long)]
    pub method: Option<String>,
    /// renorm | lump
    #[arg(long)]
    pub truncation: Option<String>,
    /// delta1 | geometric-tilt:z | file:path
    #[arg(long)]
    pub pi0: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<String>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Record hypothesis violations instead of failing.
    #[arg(long)]
    #[serde(default)]
    pub forced: bool,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long = "burn-in")]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u32>,
    /// Initial state of simulations.
    #[arg(long)]
    pub x0: Option<u64>,
}

impl Opts {
    fn overlay(self, file: Opts) -> Opts {
        Opts {
            config: None,
            family: self.family.or(file.family),
            p: self.p.or(file.p),
            q: self.q.or(file.q),
            alpha: self.alpha.or(file.alpha),
            beta: self.beta.or(file.beta),
            lambda: self.lambda.or(file.lambda),
            n: self.n.or(file.n),
            jmax: self.jmax.or(file.jmax),
            method: self.method.or(file.method),
            truncation: self.truncation.or(file.truncation),
            pi0: self.pi0.or(file.pi0),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            format: self.format.or(file.format),
            forced: self.forced || file.forced,
            steps: self.steps.or(file.steps),
            burn_in: self.burn_in.or(file.burn_in),
            replicas: self.replicas.or(file.replicas),
            x0: self.x0.or(file.x0),
        }
    }
}

/// Fully resolved configuration, recorded in every artifact.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub family: Option<String>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub jmax: u64,
    pub method: String,
    pub truncation: String,
    pub pi0: String,
    pub seed: u64,
    pub out: Option<String>,
    pub format: String,
    pub forced: bool,
    pub steps: u64,
    pub burn_in: u64,
    pub replicas: u32,
    pub x0: u64,
}

impl RunConfig {
    pub fn resolve(command: &str, opts: &Opts) -> Result<Self> {
        let mut o = opts.clone();
        if let Some(path) = &opts.config {
            let text = fs::read_to_string(path)?;
            let file: Opts = toml::from_str(&text).map_err(|e| LabError::Parse(format!("{}: {e}", path.display())))?;
            o = o.overlay(file);
        }
        let cfg = RunConfig {
            command: command.into(),
            family: o.family,
            p: o.p,
            q: o.q,
            alpha: o.alpha,
            beta: o.beta,
            lambda: o.lambda,
            n: o.n,
            jmax: o.jmax.unwrap_or(20),
            method: o.method.unwrap_or_else(|| "both".into()),
            truncation: o.truncation.unwrap_or_else(|| "renorm".into()),
            pi0: o.pi0.unwrap_or_else(|| "delta1".into()),
            seed: o.seed.unwrap_or(1),
            out: o.out,
            format: o.format.unwrap_or_else(|| "csv".into()),
            forced: o.forced,
            steps: o.steps.unwrap_or(100_000),
            burn_in: o.burn_in.unwrap_or(1000),
            replicas: o.replicas.unwrap_or(1),
            x0: o.x0.unwrap_or(1),
        };
        cfg.method()?;
        cfg.truncation()?;
        cfg.format()?;
        if cfg.n == Some(0) {
            return invalid("N must be at least 1");
        }
        Ok(cfg)
    }

    fn method(&self) -> Result<Method> {
        self.method.parse()
    }

    fn truncation(&self) -> Result<Truncation> {
        self.truncation.parse()
    }

    pub fn format(&self) -> Result<Format> {
        self.format.parse()
    }

    fn params(&self) -> FamilyParams {
        FamilyParams {
            p: self.p,
            q: self.q,
            alpha: self.alpha,
            beta: self.beta,
            lambda: self.lambda,
            n: self.n.map(|n| n as u64),
        }
    }

    fn family(&self) -> Result<&str> {
        let f = self.family.as_deref().ok_or_else(|| LabError::InvalidArgument("missing --family".into()))?;
        Ok(f.strip_suffix("-design").unwrap_or(f))
    }

    fn target(&self) -> Result<Target> {
        make_target(self.family()?, &self.params())
    }

    fn states(&self) -> Result<usize> {
        self.n.ok_or_else(|| LabError::InvalidArgument(format!("command '{}' needs --N", self.command)))
    }

    fn meta(&self, with_generator: bool) -> Vec<(String, Value)> {
        let mut m = vec![
            ("tool".to_string(), json!(TOOL)),
            ("version".to_string(), json!(VERSION)),
            ("command".to_string(), json!(self.command)),
            ("config".to_string(), serde_json::to_value(self).expect("config serializes")),
            ("seed".to_string(), json!(self.seed)),
        ];
        if with_generator {
            m.push(("generator".to_string(), json!(montecarlo::GENERATOR)));
        }
        m
    }
}

/// Branching law whose chain the target family describes.
fn branching_law(target: &Target) -> Result<DiscreteLaw> {
    match target {
        Target::Law(l) => DiscreteLaw::designed_for(l),
        Target::Measure(PositiveMeasure::Counting) => Ok(DiscreteLaw::counting_branch()),
        Target::Measure(PositiveMeasure::Linear) => Ok(DiscreteLaw::linear_branch()),
        Target::Measure(PositiveMeasure::Harmonic) => Ok(DiscreteLaw::harmonic_branch()),
        Target::Measure(PositiveMeasure::Law(l)) => DiscreteLaw::designed_for(l),
        Target::Measure(m) => invalid(format!("no branching law for measure {}", m.label())),
    }
}

/// Target restricted to `{1..N}`.
fn truncated_target(cfg: &RunConfig) -> Result<Vec<f64>> {
    let n = cfg.states()?;
    match cfg.target()? {
        Target::Law(l) => chain::truncate_target(&l, n, cfg.truncation()?),
        Target::Measure(m) => {
            if cfg.truncation()? == Truncation::Lump && !m.summable() {
                return invalid("lump truncation needs a summable measure");
            }
            let mut v: Vec<f64> = (1..=n as u64).map(|k| m.delta(k)).collect();
            if cfg.truncation()? == Truncation::Lump {
                v[n - 1] = m.partial_sum(u64::MAX >> 1) - m.partial_sum(n as u64 - 1);
            }
            let s: f64 = v.iter().sum();
            Ok(v.into_iter().map(|x| x / s).collect())
        }
    }
}

struct BuiltChain {
    tm: chain::TransitionMatrix,
    pi: Vec<f64>,
    target: Vec<f64>,
}

fn built_chain(cfg: &RunConfig) -> Result<BuiltChain> {
    let target = truncated_target(cfg)?;
    let table = design::design_branching_finite(&target)?;
    let tm = chain::build_transition(table.states())?.with_stationary()?;
    let pi = tm.stationary()?;
    Ok(BuiltChain { tm, pi, target })
}

fn parse_pi0(choice: &str, pi: &[f64]) -> Result<Vec<f64>> {
    let n = pi.len();
    if choice == "delta1" {
        return Ok(hitting::delta_one(n));
    }
    if let Some(z) = choice.strip_prefix("geometric-tilt:") {
        let z: f64 = z.parse().map_err(|_| LabError::InvalidArgument(format!("bad tilt '{z}'")))?;
        return hitting::geometric_tilt(pi, z);
    }
    if let Some(path) = choice.strip_prefix("file:") {
        let text = fs::read_to_string(path)?;
        let v: Vec<f64> = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| LabError::Parse(format!("'{t}': {e}"))))
            .collect::<Result<_>>()?;
        if v.len() != n {
            return invalid(format!("initial vector in {path} has {} entries, expected {n}", v.len()));
        }
        return Ok(v);
    }
    invalid(format!("unknown --pi0 '{choice}' (delta1, geometric-tilt:z, file:path)"))
}

pub fn design_doc(cfg: &RunConfig) -> Result<Document> {
    let target = cfg.target()?;
    let method = cfg.method()?;
    let table = match &target {
        Target::Law(l) => design::design_branching(l, cfg.jmax, method)?,
        Target::Measure(m) => design::design_from_measure(m, cfg.jmax, method)?,
    };
    let mut doc = Document::new("design", cfg.meta(false));
    doc.result("target", target.label())
        .result("method", method.name())
        .result("j_max", table.j_max())
        .result("max_discrepancy", table.max_discrepancy)
        .result("oracle_tolerance", ORACLE_TOL)
        .result("accelerated_points", table.accelerated)
        .result("dominates_target", table.dominates_target());
    let js: Vec<u64> = (0..=table.j_max()).collect();
    let mut t = Table::new("design")
        .column("j", js)
        .column("F", table.f.clone())
        .column("F_inf", table.f_inf.clone())
        .column("tail", table.tail.clone());
    if let Some(s) = &table.series {
        let disc: Vec<Option<f64>> = s.iter().zip(&table.f).map(|(a, f)| a.map(|x| (x - f).abs())).collect();
        t = t.column("F_series", s.clone()).column("discrepancy", disc);
    }
    let family = cfg.family()?;
    if design::CLOSED_FORMS.contains(&family) {
        let cf = design::closed_form_design(family, &cfg.params(), cfg.jmax)?;
        let worst = cf.iter().zip(&table.f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        doc.result("closed_form_discrepancy", worst);
        t = t.column("F_closed_form", cf);
    }
    doc.table(t);
    Ok(doc)
}

pub fn build_doc(cfg: &RunConfig) -> Result<Document> {
    let mut guard = Guard { forced: cfg.forced, notes: Vec::new() };
    let c = built_chain(cfg)?;
    let n = c.tm.n;
    let sm = chain::is_stochastically_monotone(&c.tm.p);
    let tp2 = chain::is_tp2(&c.tm.pc);
    guard.require(sm, || "built matrix is not stochastically monotone".into())?;
    guard.require(tp2, || "cumulated matrix is not TP2".into())?;
    let residual = chain::stationarity_residual(&c.tm.p, &c.pi);
    let round_trip = c.pi.iter().zip(&c.target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    guard.require(round_trip <= 1e-9, || format!("stationary vector misses the target by {round_trip:e}"))?;
    let kirchhoff = if n <= 12 {
        let k = chain::kirchhoff_vector(&c.tm.p)?;
        let e = k.iter().zip(&c.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        guard.require(e <= 1e-8, || format!("Kirchhoff minors miss the stationary vector by {e:e}"))?;
        Some(e)
    } else {
        None
    };
    let reversed_sm = if c.pi.iter().all(|x| *x > 0.0) {
        Some(chain::is_stochastically_monotone(&chain::time_reverse(&c.tm.p, &c.pi)?))
    } else {
        None
    };
    let worst = chain::worst_state_stats(&c.tm, &c.pi).ok();
    let mut doc = Document::new("build", cfg.meta(false));
    doc.result("N", n)
        .result("stochastically_monotone", sm)
        .result("tp2", tp2)
        .result("stationarity_residual", residual)
        .result("round_trip_error", round_trip)
        .result("kirchhoff_error", kirchhoff);
    match reversed_sm {
        Some(b) => doc.result("time_reversed_monotone", b),
        None => doc.result("time_reversed_monotone", crate::io::Cell::Missing),
    };
    if let Some(w) = worst {
        doc.result("mean_return_1", w.mean_return)
            .result("mean_positive_excursion", w.mean_positive_excursion)
            .result("occupation_rho", w.occupation_rho);
    }
    for (k, note) in guard.notes.iter().enumerate() {
        doc.result(&format!("note.{k}"), note.as_str());
    }
    let states: Vec<u64> = (1..=n as u64).collect();
    doc.table(
        Table::new("states")
            .column("state", states.clone())
            .column("F", c.tm.f[1..].to_vec())
            .column("pi", c.pi.clone())
            .column("target", c.target.clone()),
    );
    let mut pt = Table::new("P").column("i", states);
    for j in 0..n {
        pt = pt.column(&format!("P_{}", j + 1), (0..n).map(|i| c.tm.p[(i, j)]));
    }
    doc.table(pt);
    Ok(doc)
}

pub fn classify_doc(cfg: &RunConfig) -> Result<Document> {
    let target = cfg.target()?;
    let nu = branching_law(&target)?;
    let c = chain::classify(&nu)?;
    let foster = chain::foster_drift_threshold(&nu, 1024);
    let mut doc = Document::new("classify", cfg.meta(false));
    doc.result("target", target.label())
        .result("verdict", c.verdict.name())
        .result("limit_estimate", c.limit_estimate)
        .result("d_estimate", c.d_estimate)
        .result("margin", c.margin)
        .result("critical_limit", exp_neg_gamma())
        .result("critical_d", critical_d())
        .result("foster_threshold", foster.map(|i| i as f64));
    doc.table(
        Table::new("grid")
            .column("i", c.grid.iter().map(|g| g.0))
            .column("i_tail", c.grid.iter().map(|g| g.1)),
    );
    Ok(doc)
}

fn state_list(n: usize) -> Vec<u64> {
    (1..=n as u64).collect()
}

pub fn hitting_doc(cfg: &RunConfig) -> Result<Document> {
    let c = built_chain(cfg)?;
    let pi0 = parse_pi0(&cfg.pi0, &c.pi)?;
    let mut guard = Guard { forced: cfg.forced, notes: Vec::new() };
    let r = hitting::hitting_report(&c.tm, &pi0, &mut guard)?;
    let mut doc = Document::new("hitting", cfg.meta(false));
    doc.result("N", r.n_states)
        .result("n_max", r.n_max)
        .result("brown_condition", r.brown_condition)
        .result("tau_convention", "tau = 0 for mass started at N")
        .result("mean_T", r.mean_t)
        .result("mean_T_fundamental", r.mean_t_forms.fundamental_form)
        .result("mean_T_printed", r.mean_t_forms.printed_form)
        .result("mean_tau_pi0", r.mean_tau_pi0)
        .result("mean_tau_piN", r.mean_tau_pin)
        .result("second_moment_tau_piN", r.second_moment_tau_pin)
        .result("rho_N", r.rho_n)
        .result("rho_pgf", r.rho_pgf)
        .result("u_limit", r.u_limit)
        .result("exp_bound_piN", r.exp_bound_pin)
        .result("exp_bound_piN_w", r.exp_bound.bound_pin_w)
        .result("exp_bound_pi0", r.exp_bound_pi0)
        .result("observed_sup_piN", r.exp_bound.observed_pin)
        .result("observed_sup_pi0", r.exp_bound.observed_pi0)
        .result("convolution_residual", r.convolution_residual)
        .result("pgf_residual", r.pgf_residual)
        .result("factorization_residual", r.factorization_residual);
    for (k, note) in r.notes.iter().enumerate() {
        doc.result(&format!("note.{k}"), note.as_str());
    }
    doc.table(
        Table::new("sequences")
            .column("n", 0..=r.n_max)
            .column("T_cdf", r.t_cdf)
            .column("sep", r.sep)
            .column("W1_tail", r.w1_tail)
            .column("tau_tail_pi0", r.tau_tail_pi0)
            .column("tau_tail_piN", r.tau_tail_pin),
    );
    let m = c.tm.n - 1;
    doc.table(
        Table::new("qsd")
            .column("state", state_list(m))
            .column("mu", r.qsd_mu)
            .column("phi", r.qsd_phi),
    );
    Ok(doc)
}

pub fn qsd_doc(cfg: &RunConfig) -> Result<Document> {
    let c = built_chain(cfg)?;
    let pi0 = parse_pi0(&cfg.pi0, &c.pi)?;
    let mut guard = Guard { forced: cfg.forced, notes: Vec::new() };
    let q = hitting::qsd(&c.tm)?;
    guard.require((q.rho - q.rho_pgf).abs() <= 1e-10, || {
        format!("eigenvalue {} and pgf value {} disagree", q.rho, q.rho_pgf)
    })?;
    let u = hitting::tail_ratio_limit(&c.tm, &pi0, &q, &mut guard)?;
    let mut rates = Vec::new();
    for i in 1..c.tm.n {
        match hitting::decay_rate(&c.tm, i, q.rho) {
            Ok(d) => rates.push(Some(d)),
            Err(LabError::CapBreached(msg)) => {
                guard.notes.push(format!("decay rate from state {i}: {msg}"));
                rates.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let m = c.tm.n - 1;
    let mut doc = Document::new("qsd", cfg.meta(false));
    doc.result("N", c.tm.n)
        .result("rho_N", q.rho)
        .result("rho_pgf", q.rho_pgf)
        .result("eigen_residual", q.residual)
        .result("u_limit", u);
    for (k, note) in guard.notes.iter().enumerate() {
        doc.result(&format!("note.{k}"), note.as_str());
    }
    doc.table(
        Table::new("qsd")
            .column("state", state_list(m))
            .column("mu", q.mu)
            .column("phi", q.phi)
            .column("decay_n", rates.iter().map(|r| r.map(|d| d.n as f64)))
            .column("decay_estimate", rates.iter().map(|r| r.map(|d| d.estimate)))
            .column("decay_rel_error", rates.iter().map(|r| r.map(|d| d.rel_error))),
    );
    Ok(doc)
}

pub fn simulate_doc(cfg: &RunConfig) -> Result<Document> {
    let sim = SimConfig::new(cfg.seed, cfg.steps, cfg.burn_in, cfg.replicas, Start::State(cfg.x0))?;
    let mut doc = Document::new("simulate", cfg.meta(true));
    let (kernel, reference, f1, top) = match cfg.n {
        Some(_) => {
            let c = built_chain(cfg)?;
            let f1 = c.tm.f[1];
            (Kernel::table(&c.tm.f[1..])?, Some(c.pi), Some(f1), Some(c.tm.n as u64))
        }
        None => {
            let target = cfg.target()?;
            let nu = branching_law(&target)?;
            let reference = match &target {
                Target::Law(l) => Some((1..=montecarlo::MAX_TRACKED).map(|j| l.pmf(j)).collect()),
                _ => None,
            };
            let f1 = nu.cdf(1);
            (Kernel::Law(nu), reference, Some(f1), None)
        }
    };
    let s = montecarlo::simulate(&kernel, &sim, top)?;
    doc.result("samples", s.samples)
        .result("replicas", cfg.replicas as u64)
        .result("diverged_replicas", s.diverged_replicas as u64)
        .result("return_time_convention", "first return, n >= 1")
        .result("mean_state", s.mean_state)
        .result("mean_state_stderr", s.mean_state_stderr)
        .result("untracked_fraction", s.untracked_fraction)
        .result("fraction_in_1", s.excursion.fraction_in_1)
        .result("fraction_in_1_stderr", s.excursion.fraction_stderr)
        .result("cycles", s.excursion.cycles)
        .result("mean_return_1", s.excursion.mean_return)
        .result("mean_return_1_stderr", s.excursion.mean_return_stderr);
    if let (Some(r), Some(f1)) = (&reference, f1) {
        doc.result("rho_theory", f1 * r[0]);
    }
    let width = s.occupation.len();
    let mut t = Table::new("occupation")
        .column("state", state_list(width))
        .column("occupation", s.occupation.clone())
        .column("stderr", s.occupation_stderr.clone());
    if let Some(r) = &reference {
        t = t.column("pi", (0..width).map(|k| r.get(k).copied()));
    }
    doc.table(t);
    if !s.hit_times.is_empty() {
        doc.table(Table::new("first_passage_to_N").column("time", s.hit_times.clone()));
    }
    Ok(doc)
}

fn write_doc(doc: &Document, format: Format, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => {
            let mut f = fs::File::create(p)?;
            doc.write(&mut f, format)?;
            f.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            doc.write(&mut lock, format)?;
        }
    }
    Ok(())
}

fn plot_doc(cfg: &RunConfig, kind: &str, table: Table) -> Document {
    let mut d = Document::new(kind, cfg.meta(false));
    d.table(table);
    d
}

fn column(doc: &Document, table: &str, name: &str) -> Vec<crate::io::Cell> {
    doc.tables
        .iter()
        .find(|t| t.name == table)
        .and_then(|t| t.columns.iter().find(|(n, _)| n == name))
        .map(|(_, v)| v.clone())
        .unwrap_or_default()
}

/// Every artifact of the pipeline, written into the `--out` directory.
pub fn report(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = PathBuf::from(cfg.out.as_deref().ok_or_else(|| LabError::InvalidArgument("report needs --out DIR".into()))?);
    fs::create_dir_all(&dir)?;
    let format = cfg.format()?;
    let ext = format.extension();
    let n = cfg.states()?;
    let mut written = Vec::new();
    let mut emit = |name: &str, doc: &Document, fmt: Format| -> Result<()> {
        let path = dir.join(name);
        write_doc(doc, fmt, Some(&path))?;
        written.push(path);
        Ok(())
    };
    let mut design_cfg = cfg.clone();
    if design_cfg.jmax < n as u64 {
        design_cfg.jmax = n as u64;
    }
    let design = design_doc(&design_cfg)?;
    emit(&format!("design.{ext}"), &design, format)?;
    let build = build_doc(cfg)?;
    emit(&format!("build.{ext}"), &build, format)?;
    let countable = match cfg.target()? {
        Target::Law(l) => !l.is_finite_support(),
        Target::Measure(_) => true,
    };
    if countable {
        emit(&format!("classify.{ext}"), &classify_doc(cfg)?, format)?;
    }
    let hitting = hitting_doc(cfg)?;
    emit(&format!("hitting.{ext}"), &hitting, format)?;
    emit(&format!("qsd.{ext}"), &qsd_doc(cfg)?, format)?;
    emit(&format!("simulate.{ext}"), &simulate_doc(cfg)?, format)?;
    let seq = |name: &str| column(&hitting, "sequences", name);
    emit(
        "plot_sep.csv",
        &plot_doc(cfg, "plot.sep", Table::new("sep").column("n", seq("n")).column("sep", seq("sep"))),
        Format::Csv,
    )?;
    emit(
        "plot_tau.csv",
        &plot_doc(
            cfg,
            "plot.tau",
            Table::new("tau")
                .column("n", seq("n"))
                .column("tau_tail_pi0", seq("tau_tail_pi0"))
                .column("tau_tail_piN", seq("tau_tail_piN")),
        ),
        Format::Csv,
    )?;
    emit(
        "plot_cdf.csv",
        &plot_doc(
            cfg,
            "plot.cdf",
            Table::new("cdf")
                .column("j", column(&design, "design", "j"))
                .column("F", column(&design, "design", "F"))
                .column("F_inf", column(&design, "design", "F_inf")),
        ),
        Format::Csv,
    )?;
    Ok(written)
}

pub fn run(command: &str, cfg: &RunConfig) -> Result<()> {
    let format = cfg.format()?;
    let doc = match command {
        "design" => design_doc(cfg)?,
        "build" => build_doc(cfg)?,
        "classify" => classify_doc(cfg)?,
        "hitting" => hitting_doc(cfg)?,
        "qsd" => qsd_doc(cfg)?,
        "simulate" => simulate_doc(cfg)?,
        "report" => {
            for p in report(cfg)? {
                println!("{}", p.display());
            }
            return Ok(());
        }
        other => return invalid(format!("unknown command '{other}'")),
    };
    write_doc(&doc, format, cfg.out.as_deref().map(Path::new))
}

/// Parse the process arguments, run, and return the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (name, opts) = cli.command.parts();
    let result = RunConfig::resolve(name, opts).and_then(|cfg| run(name, &cfg));
    match result {
        Ok(()) => 0,
        Err(LabError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
