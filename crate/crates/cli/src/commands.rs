use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use pareto_precoding::baselines::{
    allocate_power, global_scale, slnr_precoder, uniform_kappa, water_fill_kappa, zero_forcing, PowerAllocation,
};
use pareto_precoding::channel::{
    default_beta, gen_gaussian, gen_svd_decay, load_channel, noise_from_chi, save_channel, toy_channel, BetaMode,
    ChannelInstance, DecayLaw,
};
use pareto_precoding::metrics::{check_feasible, gains, link_metrics, LinkMetrics, DEFAULT_FEASIBILITY_TOL};
use pareto_precoding::pareto::{
    iteration_stats as run_iteration_stats, linear_fit, refine_fixed_updates, refine_mu, sample_surface,
    PointStatus, RefineConfig, RefineOutcome, SurfacePoint,
};
use pareto_precoding::precoder::{load_precoder, save_precoder, Precoder};
use pareto_precoding::random::{stream_rng, uniform_simplex};
use pareto_precoding::verify::{
    full_power_condition, identity_augmented_full_krank, improvement_direction, line_improve, unit_eigenvalue_check,
};
use pareto_precoding::Error as CoreError;

use crate::error::{CliError, CliResult};
use crate::output::{emit, indexed, json, num, Csv, Format};
use crate::{
    BaselineArgs, BetaModeArg, GenChannelArgs, IterationStatsArgs, Method, OutputArgs, ParetoArgs, RefineArgs,
    SurfaceArgs, SweepArgs, VerifyArgs,
};

impl From<BetaModeArg> for BetaMode {
    fn from(m: BetaModeArg) -> Self {
        match m {
            BetaModeArg::UnitPerAntenna => BetaMode::UnitPerAntenna,
            BetaModeArg::UnitTotal => BetaMode::UnitTotal,
        }
    }
}

impl RefineArgs {
    fn config(&self) -> RefineConfig {
        RefineConfig { delta: self.delta, max_iter: self.max_iter, mu_min: self.mu_min }
    }
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn parse_size(s: &str) -> CliResult<(usize, usize)> {
    let (a, b) = s
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| input(format!("size '{s}' must look like MTXxMUE")))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| input(format!("bad size '{s}'")));
    Ok((parse(a)?, parse(b)?))
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| input(format!("bad {what} value '{t}'"))))
        .collect()
}

fn parse_law(s: &str) -> CliResult<DecayLaw> {
    s.parse().map_err(CliError::Input)
}

fn write_output(text: String, out: &OutputArgs) -> CliResult<()> {
    emit(&text, out.out.as_deref())
}

fn save(p: &Precoder, path: Option<&Path>) -> CliResult<()> {
    if let Some(path) = path {
        save_precoder(p, path)?;
    }
    Ok(())
}

fn nan_vec(n: usize) -> Vec<f64> {
    vec![f64::NAN; n]
}

pub fn gen_channel(a: GenChannelArgs) -> CliResult<()> {
    let h = if let Some(dims) = &a.gaussian {
        gen_gaussian(dims[0], dims[1], a.seed)
    } else if let Some(decay) = &a.svd_decay {
        let law = parse_law(&decay[0])?;
        let dim = |t: &str| t.parse::<usize>().map_err(|_| input(format!("bad dimension '{t}'")));
        gen_svd_decay(dim(&decay[1])?, dim(&decay[2])?, law, a.seed)?
    } else {
        toy_channel().h().clone()
    };
    let (m_tx, m_ue) = h.shape();
    let omega = match (&a.chi, &a.omega) {
        (Some(chi), _) => noise_from_chi(&h, *chi),
        (None, Some(w)) if w.len() == 1 => vec![w[0]; m_ue],
        (None, Some(w)) if w.len() == m_ue => w.clone(),
        (None, Some(w)) => return Err(input(format!("--omega needs 1 or {m_ue} values, got {}", w.len()))),
        (None, None) => vec![1.0; m_ue],
    };
    let c = ChannelInstance::new(h, omega, default_beta(m_tx, a.beta_mode.into()))?;
    save_channel(&c, &a.out)?;
    println!("m_tx={m_tx} m_ue={m_ue} frobenius={}", num(c.h().frobenius_norm()));
    Ok(())
}

#[derive(Serialize)]
struct BaselineReport {
    method: &'static str,
    alloc: String,
    /// Column power shares of the final precoder.
    kappa: Vec<f64>,
    sinr: Vec<f64>,
    db: Vec<f64>,
    mean_db: f64,
    throughput: f64,
    row_power: Vec<f64>,
}

fn column_shares(p: &Precoder) -> Vec<f64> {
    let cp = p.column_power();
    let total: f64 = cp.iter().sum();
    cp.iter().map(|x| x / total).collect()
}

/// ZF water-filling column shares, mapped onto the columns of `p0`.
fn waterfill_on(c: &ChannelInstance, p0: &Precoder, budget: f64) -> CliResult<PowerAllocation> {
    let zf = zero_forcing(c.h())?;
    let wf = water_fill_kappa(&zf, c.omega(), budget)?;
    let shares = column_shares(&allocate_power(&zf, &wf.allocation, c.beta())?);
    Ok(PowerAllocation::from_power_shares(p0, &shares)?)
}

fn baseline_precoder(c: &ChannelInstance, method: Method, alloc: &str, budget: Option<f64>) -> CliResult<Precoder> {
    let p0 = match method {
        Method::Zf => zero_forcing(c.h())?,
        Method::Slnr => slnr_precoder(c.h(), c.omega())?,
    };
    let budget = budget.unwrap_or_else(|| c.beta().iter().sum());
    let p = match alloc {
        "uniform" => allocate_power(&p0, &uniform_kappa(&p0)?, c.beta())?,
        "global" => global_scale(&p0, c.beta())?,
        "waterfill" => allocate_power(&p0, &waterfill_on(c, &p0, budget)?, c.beta())?,
        other => {
            let list = other
                .strip_prefix("kappa=")
                .ok_or_else(|| input(format!("unknown allocation '{other}' (uniform, waterfill, global, kappa=...)")))?;
            let shares = parse_list(list, "kappa")?;
            if shares.len() != c.m_ue() {
                return Err(input(format!("kappa needs {} values, got {}", c.m_ue(), shares.len())));
            }
            allocate_power(&p0, &PowerAllocation::from_power_shares(&p0, &shares)?, c.beta())?
        }
    };
    Ok(p)
}

pub fn baseline(a: BaselineArgs) -> CliResult<()> {
    let c = load_channel(&a.channel)?;
    let p = baseline_precoder(&c, a.method, &a.alloc, a.budget)?;
    save(&p, a.save_precoder.as_deref())?;
    let m = link_metrics(&c, &p)?;
    let report = BaselineReport {
        method: match a.method {
            Method::Zf => "zf",
            Method::Slnr => "slnr",
        },
        alloc: a.alloc.clone(),
        kappa: column_shares(&p),
        db: m.per_user_db(),
        mean_db: m.mean_db(),
        throughput: m.throughput(),
        row_power: p.row_power(),
        sinr: m.sinr,
    };
    let text = match a.output.format {
        Format::Json => json(&report),
        Format::Csv => {
            let (m_ue, m_tx) = (c.m_ue(), c.m_tx());
            let mut header = vec!["method".to_string(), "alloc".to_string()];
            header.extend(indexed("kappa", m_ue));
            header.extend(indexed("sinr", m_ue));
            header.extend(indexed("db", m_ue));
            header.extend(["mean_db".to_string(), "throughput".to_string()]);
            header.extend(indexed("rowpow", m_tx));
            let mut csv = Csv::new(header);
            let alloc_label = if report.alloc.starts_with("kappa=") { "kappa" } else { report.alloc.as_str() };
            let mut row = vec![report.method.to_string(), alloc_label.to_string()];
            row.extend(report.kappa.iter().map(|&x| num(x)));
            row.extend(report.sinr.iter().map(|&x| num(x)));
            row.extend(report.db.iter().map(|&x| num(x)));
            row.extend([num(report.mean_db), num(report.throughput)]);
            row.extend(report.row_power.iter().map(|&x| num(x)));
            csv.push(row);
            csv.render()
        }
    };
    write_output(text, &a.output)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IterMode {
    Updates(usize),
    Converge,
}

fn parse_iters(s: &str) -> CliResult<IterMode> {
    if s == "converge" {
        return Ok(IterMode::Converge);
    }
    s.parse()
        .map(IterMode::Updates)
        .map_err(|_| input(format!("--iters must be a non-negative integer or 'converge', got '{s}'")))
}

fn parse_lambdas(words: &[String], m_ue: usize, seed: u64) -> CliResult<Vec<Vec<f64>>> {
    match words {
        [s] if s == "uniform" => Ok(vec![vec![1.0 / m_ue as f64; m_ue]]),
        [s, n] if s == "random" => {
            let n: usize = n.parse().map_err(|_| input(format!("bad random count '{n}'")))?;
            Ok((0..n).map(|i| uniform_simplex(m_ue, &mut stream_rng(seed, i as u64))).collect())
        }
        [list] => {
            let l = parse_list(list, "lambda")?;
            if l.len() != m_ue {
                return Err(input(format!("lambda needs {m_ue} values, got {}", l.len())));
            }
            Ok(vec![l])
        }
        _ => Err(input("--lambda expects 'uniform', 'L1,L2,...' or 'random N'")),
    }
}

#[derive(Serialize)]
struct TraceJson {
    iterations: usize,
    converged: bool,
    final_mu: Vec<f64>,
    alpha_history: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ParetoRow {
    lambda: Vec<f64>,
    sinr: Vec<f64>,
    db: Vec<f64>,
    mean_db: f64,
    iters: usize,
    converged: bool,
    status: String,
    error: Option<String>,
    min_alpha: f64,
    max_alpha: f64,
    trace: Option<TraceJson>,
}

impl ParetoRow {
    fn failed(lambda: Vec<f64>, e: CoreError) -> Self {
        let m = lambda.len();
        Self {
            lambda,
            sinr: nan_vec(m),
            db: nan_vec(m),
            mean_db: f64::NAN,
            iters: 0,
            converged: false,
            status: "failed".into(),
            error: Some(e.to_string()),
            min_alpha: f64::NAN,
            max_alpha: f64::NAN,
            trace: None,
        }
    }

    fn from_outcome(lambda: Vec<f64>, out: &RefineOutcome, m: &LinkMetrics, mode: IterMode) -> Self {
        let (min_alpha, max_alpha) = out.trace.alpha_range();
        let status = match (mode, out.trace.converged) {
            (IterMode::Converge, false) => "no-convergence",
            _ => "ok",
        };
        Self {
            lambda,
            sinr: m.sinr.clone(),
            db: m.per_user_db(),
            mean_db: m.mean_db(),
            iters: out.trace.iterations,
            converged: out.trace.converged,
            status: status.into(),
            error: None,
            min_alpha,
            max_alpha,
            trace: Some(TraceJson {
                iterations: out.trace.iterations,
                converged: out.trace.converged,
                final_mu: out.trace.final_mu.clone(),
                alpha_history: out.trace.alpha_history.clone(),
            }),
        }
    }

    fn from_point(p: SurfacePoint) -> Self {
        let db = pareto_precoding::metrics::per_user_db(&p.sinr);
        let (status, error) = match &p.status {
            PointStatus::Failed(msg) => ("failed".to_string(), Some(msg.clone())),
            s => (s.label().to_string(), None),
        };
        Self {
            converged: p.status == PointStatus::Converged,
            lambda: p.lambda,
            sinr: p.sinr,
            db,
            mean_db: p.mean_db,
            iters: p.iterations,
            status,
            error,
            min_alpha: p.min_alpha,
            max_alpha: p.max_alpha,
            trace: None,
        }
    }
}

fn refine(c: &ChannelInstance, lambda: &[f64], mode: IterMode, cfg: &RefineConfig) -> pareto_precoding::Result<RefineOutcome> {
    match mode {
        IterMode::Converge => refine_mu(c, lambda, cfg),
        IterMode::Updates(n) => refine_fixed_updates(c, lambda, n, cfg),
    }
}

fn pareto_csv(rows: &[ParetoRow], m_ue: usize) -> String {
    let mut header: Vec<String> = indexed("lambda", m_ue).collect();
    header.extend(indexed("sinr", m_ue));
    header.extend(indexed("db", m_ue));
    header.extend(["mean_db", "iters", "converged", "status", "min_alpha", "max_alpha"].map(String::from));
    let mut csv = Csv::new(header);
    for r in rows {
        let mut row: Vec<String> = r.lambda.iter().map(|&x| num(x)).collect();
        row.extend(r.sinr.iter().map(|&x| num(x)));
        row.extend(r.db.iter().map(|&x| num(x)));
        row.extend([
            num(r.mean_db),
            r.iters.to_string(),
            r.converged.to_string(),
            r.status.clone(),
            num(r.min_alpha),
            num(r.max_alpha),
        ]);
        csv.push(row);
    }
    csv.render()
}

/// Numeric failure when every row failed, or when convergence was requested
/// and no row converged.
fn pareto_outcome(rows: &[ParetoRow], require_convergence: bool) -> CliResult<()> {
    if rows.is_empty() {
        return Ok(());
    }
    if rows.iter().all(|r| r.status == "failed") {
        return Err(CliError::Numeric("every weight vector failed".into()));
    }
    if require_convergence && !rows.iter().any(|r| r.converged) {
        return Err(CliError::Numeric("no weight vector converged".into()));
    }
    Ok(())
}

pub fn pareto(a: ParetoArgs) -> CliResult<()> {
    let c = load_channel(&a.channel)?;
    let cfg = a.refine.config();
    cfg.validate(c.m_tx())?;
    let mode = parse_iters(&a.iters)?;
    let lambdas = parse_lambdas(&a.lambda, c.m_ue(), a.seed)?;
    if a.save_precoder.is_some() && lambdas.len() != 1 {
        return Err(input("--save-precoder needs a single weight vector"));
    }
    let results: Vec<(ParetoRow, Option<Precoder>)> = lambdas
        .into_par_iter()
        .map(|lambda| {
            let out = refine(&c, &lambda, mode, &cfg).and_then(|o| link_metrics(&c, &o.precoder).map(|m| (o, m)));
            match out {
                Ok((o, m)) => (ParetoRow::from_outcome(lambda, &o, &m, mode), Some(o.precoder)),
                Err(e) => (ParetoRow::failed(lambda, e), None),
            }
        })
        .collect();
    if let Some(path) = &a.save_precoder {
        if let Some(p) = &results[0].1 {
            save(p, Some(path))?;
        }
    }
    let rows: Vec<ParetoRow> = results.into_iter().map(|(r, _)| r).collect();
    let text = match a.output.format {
        Format::Json => json(&rows),
        Format::Csv => pareto_csv(&rows, c.m_ue()),
    };
    write_output(text, &a.output)?;
    pareto_outcome(&rows, mode == IterMode::Converge)
}

pub fn surface(a: SurfaceArgs) -> CliResult<()> {
    let c = load_channel(&a.channel)?;
    let cfg = a.refine.config();
    cfg.validate(c.m_tx())?;
    let rows: Vec<ParetoRow> = sample_surface(&c, a.points, a.seed, &cfg).into_iter().map(ParetoRow::from_point).collect();
    let text = match a.output.format {
        Format::Json => json(&rows),
        Format::Csv => pareto_csv(&rows, c.m_ue()),
    };
    write_output(text, &a.output)?;
    pareto_outcome(&rows, true)
}

const REFERENCES: [(&str, Method, &str); 4] = [
    ("zf_uniform", Method::Zf, "uniform"),
    ("zf_waterfill", Method::Zf, "waterfill"),
    ("slnr_uniform", Method::Slnr, "uniform"),
    ("slnr_waterfill", Method::Slnr, "waterfill"),
];

#[derive(Serialize)]
struct ReferenceCell {
    name: &'static str,
    mean_db: f64,
    g_avg: f64,
    g_min: f64,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepRow {
    m_tx: usize,
    m_ue: usize,
    law: String,
    chi: f64,
    seed: u64,
    iters: usize,
    converged: bool,
    status: String,
    error: Option<String>,
    mean_db: f64,
    references: Vec<ReferenceCell>,
}

fn sweep_cell(
    (m_tx, m_ue): (usize, usize),
    law: DecayLaw,
    chi: f64,
    seed: u64,
    beta: BetaMode,
    cfg: &RefineConfig,
) -> SweepRow {
    let mut row = SweepRow {
        m_tx,
        m_ue,
        law: law.to_string(),
        chi,
        seed,
        iters: 0,
        converged: false,
        status: "failed".into(),
        error: None,
        mean_db: f64::NAN,
        references: REFERENCES
            .iter()
            .map(|(name, _, _)| ReferenceCell { name, mean_db: f64::NAN, g_avg: f64::NAN, g_min: f64::NAN, error: None })
            .collect(),
    };
    let pareto = gen_svd_decay(m_tx, m_ue, law, seed)
        .and_then(|h| {
            let omega = noise_from_chi(&h, chi);
            ChannelInstance::new(h, omega, default_beta(m_tx, beta))
        })
        .and_then(|c| {
            let lambda = vec![1.0 / m_ue as f64; m_ue];
            let out = refine_mu(&c, &lambda, cfg)?;
            let m = link_metrics(&c, &out.precoder)?;
            Ok((c, out, m))
        });
    let (c, out, m) = match pareto {
        Ok(v) => v,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.iters = out.trace.iterations;
    row.converged = out.trace.converged;
    row.status = if out.trace.converged { "ok" } else { "no-convergence" }.into();
    row.mean_db = m.mean_db();
    for (cell, (_, method, alloc)) in row.references.iter_mut().zip(REFERENCES) {
        let r = baseline_precoder(&c, method, alloc, None)
            .and_then(|p| Ok(link_metrics(&c, &p)?))
            .and_then(|rm| Ok((rm.mean_db(), gains(&m, &rm)?)));
        match r {
            Ok((db, (g_avg, g_min))) => {
                cell.mean_db = db;
                cell.g_avg = g_avg;
                cell.g_min = g_min;
            }
            Err(e) => cell.error = Some(e.to_string()),
        }
    }
    row
}

pub fn sweep(a: SweepArgs) -> CliResult<()> {
    let law = parse_law(&a.law)?;
    let sizes: Vec<(usize, usize)> = a.sizes_list.iter().map(|s| parse_size(s)).collect::<CliResult<_>>()?;
    let cfg = a.refine.config();
    for &(m_tx, _) in &sizes {
        cfg.validate(m_tx)?;
    }
    let mut cells = Vec::new();
    for &size in &sizes {
        for &chi in &a.chi_list {
            for s in 0..a.seeds {
                cells.push((size, chi, a.seed + s));
            }
        }
    }
    let beta: BetaMode = a.beta_mode.into();
    let rows: Vec<SweepRow> =
        cells.into_par_iter().map(|(size, chi, seed)| sweep_cell(size, law, chi, seed, beta, &cfg)).collect();
    let text = match a.output.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut header: Vec<String> =
                ["m_tx", "m_ue", "law", "chi", "seed", "iters", "converged", "status", "mean_db_pareto"]
                    .map(String::from)
                    .to_vec();
            for (name, _, _) in REFERENCES {
                header.push(format!("mean_db_{name}"));
            }
            for (name, _, _) in REFERENCES {
                header.push(format!("g_avg_{name}"));
                header.push(format!("g_min_{name}"));
            }
            let mut csv = Csv::new(header);
            for r in &rows {
                let mut row = vec![
                    r.m_tx.to_string(),
                    r.m_ue.to_string(),
                    r.law.clone(),
                    num(r.chi),
                    r.seed.to_string(),
                    r.iters.to_string(),
                    r.converged.to_string(),
                    r.status.clone(),
                    num(r.mean_db),
                ];
                row.extend(r.references.iter().map(|x| num(x.mean_db)));
                for x in &r.references {
                    row.push(num(x.g_avg));
                    row.push(num(x.g_min));
                }
                csv.push(row);
            }
            csv.render()
        }
    };
    write_output(text, &a.output)?;
    if !rows.is_empty() && rows.iter().all(|r| r.status == "failed") {
        return Err(CliError::Numeric("every sweep cell failed".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct StatJson {
    m_tx: usize,
    m_ue: usize,
    delta: f64,
    trials: usize,
    mean: f64,
    stddev: f64,
    not_converged: usize,
    failed: usize,
}

#[derive(Serialize)]
struct FitJson {
    m_tx: usize,
    m_ue: usize,
    /// Mean iterations against `ln(1/delta)`.
    slope: f64,
    intercept: f64,
    correlation: f64,
}

#[derive(Serialize)]
struct StatsReport {
    stats: Vec<StatJson>,
    fits: Vec<FitJson>,
}

pub fn iteration_stats(a: IterationStatsArgs) -> CliResult<()> {
    let sizes: Vec<(usize, usize)> = a.sizes.iter().map(|s| parse_size(s)).collect::<CliResult<_>>()?;
    for &d in &a.deltas {
        if !(d > 0.0 && d < 1.0) {
            return Err(input(format!("delta must lie in (0, 1), got {d}")));
        }
    }
    for &(m_tx, m_ue) in &sizes {
        if m_tx <= m_ue || m_ue == 0 {
            return Err(input(format!("size {m_tx}x{m_ue} needs m_tx > m_ue > 0")));
        }
    }
    let stats = run_iteration_stats(&sizes, &a.deltas, a.trials, a.seed);
    let fits = sizes
        .iter()
        .filter_map(|&(m_tx, m_ue)| {
            let (x, y): (Vec<f64>, Vec<f64>) = stats
                .iter()
                .filter(|s| (s.m_tx, s.m_ue) == (m_tx, m_ue))
                .map(|s| ((1.0 / s.delta).ln(), s.mean))
                .unzip();
            linear_fit(&x, &y).map(|f| FitJson {
                m_tx,
                m_ue,
                slope: f.slope,
                intercept: f.intercept,
                correlation: f.correlation,
            })
        })
        .collect();
    let report = StatsReport {
        stats: stats
            .iter()
            .map(|s| StatJson {
                m_tx: s.m_tx,
                m_ue: s.m_ue,
                delta: s.delta,
                trials: s.trials,
                mean: s.mean,
                stddev: s.stddev,
                not_converged: s.not_converged,
                failed: s.failed,
            })
            .collect(),
        fits,
    };
    let text = match a.output.format {
        Format::Json => json(&report),
        Format::Csv => {
            let header = ["m_tx", "m_ue", "delta", "trials", "mean", "stddev", "not_converged", "failed"]
                .map(String::from)
                .to_vec();
            let mut csv = Csv::new(header);
            for s in &report.stats {
                csv.push(vec![
                    s.m_tx.to_string(),
                    s.m_ue.to_string(),
                    num(s.delta),
                    s.trials.to_string(),
                    num(s.mean),
                    num(s.stddev),
                    s.not_converged.to_string(),
                    s.failed.to_string(),
                ]);
            }
            csv.render()
        }
    };
    write_output(text, &a.output)
}

#[derive(Serialize)]
struct VerifyReport {
    m_tx: usize,
    m_ue: usize,
    feasible: bool,
    row_power: Vec<f64>,
    sinr: Vec<f64>,
    mean_db: f64,
    full_power_values: Vec<f64>,
    full_power_threshold: f64,
    full_power_flag: bool,
    unit_eigenvalue_distance: Option<f64>,
    slack_rows: Vec<usize>,
    tight_rows: Vec<usize>,
    /// found | none | no-slack-row | rank-deficient
    improvement: &'static str,
    residual: Option<f64>,
    step: Option<f64>,
    improved_sinr: Option<Vec<f64>>,
    /// `None` when the column-subset search exceeds the limit.
    kruskal_full: Option<bool>,
}

pub fn verify(a: VerifyArgs) -> CliResult<()> {
    let c = load_channel(&a.channel)?;
    let p = load_precoder(&a.precoder)?;
    if p.m_tx() != c.m_tx() || p.m_ue() != c.m_ue() {
        return Err(input(format!(
            "precoder is {}x{} but the channel is {}x{}",
            p.m_tx(),
            p.m_ue(),
            c.m_tx(),
            c.m_ue()
        )));
    }
    let m = link_metrics(&c, &p)?;
    let feas = check_feasible(&p, c.beta(), DEFAULT_FEASIBILITY_TOL);
    let fpc = full_power_condition(&m);
    let unit = unit_eigenvalue_check(&c, &p).ok().map(|u| u.min_distance);
    let power = p.row_power();
    let (slack_rows, tight_rows): (Vec<usize>, Vec<usize>) =
        (0..c.m_tx()).partition(|&i| power[i] < c.beta()[i] * (1.0 - a.slack_tol));
    let (improvement, residual, step, improved_sinr) = match improvement_direction(&c, &p, a.slack_tol) {
        Ok(cert) => match line_improve(&c, &p, &cert, a.upsilon)? {
            Some(li) => ("found", Some(cert.residual), Some(li.step), Some(li.sinr)),
            None => ("none", Some(cert.residual), None, None),
        },
        Err(CoreError::NoSlackRow) => ("no-slack-row", None, None, None),
        Err(CoreError::RankDeficient) => ("rank-deficient", None, None, None),
        Err(e) => return Err(e.into()),
    };
    let kruskal_full = identity_augmented_full_krank(c.h(), a.kruskal_limit);
    let report = VerifyReport {
        m_tx: c.m_tx(),
        m_ue: c.m_ue(),
        feasible: feas.feasible,
        row_power: power,
        mean_db: m.mean_db(),
        sinr: m.sinr.clone(),
        full_power_values: fpc.values,
        full_power_threshold: fpc.threshold,
        full_power_flag: fpc.flag,
        unit_eigenvalue_distance: unit,
        slack_rows,
        tight_rows,
        improvement,
        residual,
        step,
        improved_sinr,
        kruskal_full,
    };
    let text = match a.output.format {
        Format::Json => json(&report),
        Format::Csv => verify_csv(&report),
    };
    write_output(text, &a.output)
}

fn verify_csv(r: &VerifyReport) -> String {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_else(|| "NA".into());
    let rows_list = |v: &[usize]| v.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ");
    let mut csv = Csv::new(vec!["quantity".into(), "value".into()]);
    let mut put = |k: String, v: String| csv.push(vec![k, v]);
    put("feasible".into(), r.feasible.to_string());
    for (name, x) in indexed("rowpow", r.m_tx).zip(&r.row_power) {
        put(name, num(*x));
    }
    for (name, x) in indexed("sinr", r.m_ue).zip(&r.sinr) {
        put(name, num(*x));
    }
    put("mean_db".into(), num(r.mean_db));
    for (name, x) in indexed("full_power_value", r.m_ue).zip(&r.full_power_values) {
        put(name, num(*x));
    }
    put("full_power_threshold".into(), num(r.full_power_threshold));
    put("full_power_flag".into(), r.full_power_flag.to_string());
    put("unit_eigenvalue_distance".into(), opt(r.unit_eigenvalue_distance));
    put("slack_rows".into(), rows_list(&r.slack_rows));
    put("tight_rows".into(), rows_list(&r.tight_rows));
    put("improvement".into(), r.improvement.into());
    put("residual".into(), opt(r.residual));
    put("step".into(), opt(r.step));
    put(
        "kruskal_full".into(),
        r.kruskal_full.map(|b| b.to_string()).unwrap_or_else(|| "undetermined".into()),
    );
    csv.render()
}
