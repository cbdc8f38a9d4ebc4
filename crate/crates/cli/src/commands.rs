use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use parmor_core::analysis::generators::{gen_bench, BenchSpec};
use parmor_core::analysis::moments::{oracle_moments, MomentEntry, ORACLE_LIMIT};
use parmor_core::analysis::montecarlo::{monte_carlo_poles, Variation};
use parmor_core::analysis::poles::{dominant_poles, paired_relative_errors, PoleSet};
use parmor_core::analysis::sweep::{log_grid, sweep, sweep_compare, sweep_full, Response};
use parmor_core::numkern::stats;
use parmor_core::reducers::{
    grid_samples, low_rank_column_count, multi_point_column_count, single_point_column_count,
    verify_moment_preservation, PreservationReport,
};
use parmor_core::sysmodel::ReducedModel;
use parmor_core::{load, Engine, ParameterPoint, ParametricSystem, ReductionSpec};

use crate::config::merge;
use crate::error::{input, CliError, CliResult};
use crate::io::Run;
use crate::Common;

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

fn load_system(run: &mut Run, path: &Path) -> CliResult<ParametricSystem> {
    let text = run.read(path)?;
    load(&text).map_err(|e| match e {
        e if e.is_numerical() => CliError::from(e),
        e => CliError::Input(format!("{}: {e}", path.display())),
    })
}

fn load_model(run: &mut Run, path: &Path, sys: &ParametricSystem) -> CliResult<ReducedModel> {
    let text = run.read(path)?;
    let model = ReducedModel::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let want = sys.fingerprint();
    let got = &model.provenance.system_fingerprint;
    if *got != want || model.m() != sys.m() || model.n_p() != sys.n_p() {
        return input(format!(
            "{} was reduced from a different system (model fingerprint {got}, netlist fingerprint {want})",
            path.display()
        ));
    }
    Ok(model)
}

fn point(text: Option<&str>, sys: &ParametricSystem) -> CliResult<ParameterPoint> {
    Ok(ParameterPoint::parse(text.unwrap_or(""), &sys.params)?)
}

/// `a:b:N` → `N` log-spaced frequencies from `10^a` to `10^b` Hz.
pub fn parse_flog(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Input(format!("--flog expects a:b:N, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() || a > b {
        return Err(bad());
    }
    Ok(log_grid(a, b, n))
}

fn parse_response(text: Option<&str>) -> CliResult<Response> {
    match text.unwrap_or("transfer") {
        "transfer" | "h" => Ok(Response::Transfer),
        "admittance" | "y" => Ok(Response::Admittance),
        other => input(format!("unknown response `{other}` (transfer or admittance)")),
    }
}

/// `i,j`, 1-based.
fn parse_entry(text: Option<&str>) -> CliResult<Option<(usize, usize)>> {
    let Some(t) = text else { return Ok(None) };
    let bad = || CliError::Input(format!("--entry expects i,j (1-based), got `{t}`"));
    let (i, j) = t.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok(Some((i - 1, j - 1)))
}

fn config_value<T: Serialize>(opts: &T) -> CliResult<serde_json::Value> {
    Ok(serde_json::to_value(opts)?)
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenOpts {
    /// Ladder nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Mesh rows.
    #[arg(long)]
    pub rows: Option<usize>,
    /// Mesh columns.
    #[arg(long)]
    pub cols: Option<usize>,
    /// Bus lines.
    #[arg(long)]
    pub lines: Option<usize>,
    /// Bus segments per line.
    #[arg(long)]
    pub segs: Option<usize>,
    /// Tree depth in levels below the root.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Tree children per node (default 2).
    #[arg(long)]
    pub fanout: Option<usize>,
    /// RC segments per tree edge (default 1).
    #[arg(long)]
    pub segs_per_edge: Option<usize>,
    /// Port count for ladders and meshes.
    #[arg(long)]
    pub ports: Option<usize>,
    /// Number of variational parameters.
    #[arg(long)]
    pub params: Option<usize>,
    /// Generator seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// rc_ladder, rc_mesh, coupled_rlc_bus or rc_tree.
    pub kind: String,
    #[command(flatten)]
    pub opts: GenOpts,
}

fn bench_spec(kind: &str, o: &GenOpts) -> CliResult<BenchSpec> {
    let need = |v: Option<usize>, flag: &str| -> CliResult<usize> {
        match v {
            Some(x) if x > 0 => Ok(x),
            Some(_) => input(format!("--{flag} must be positive")),
            None => input(format!("{kind} needs --{flag}")),
        }
    };
    let seed = o.seed.unwrap_or(0);
    let params = o.params.unwrap_or(0);
    let ports = o.ports.unwrap_or(1);
    if ports == 0 {
        return input("--ports must be positive");
    }
    Ok(match kind {
        "rc_ladder" => BenchSpec::RcLadder {
            n: need(o.n, "n")?,
            ports,
            params,
            seed,
        },
        "rc_mesh" => BenchSpec::RcMesh {
            rows: need(o.rows, "rows")?,
            cols: need(o.cols, "cols")?,
            ports,
            params,
            seed,
        },
        "coupled_rlc_bus" => BenchSpec::CoupledRlcBus {
            lines: need(o.lines.or(Some(2)), "lines")?,
            segs: need(o.segs, "segs")?,
            params,
            seed,
        },
        "rc_tree" => BenchSpec::RcTree {
            depth: need(o.depth, "depth")?,
            fanout: need(o.fanout.or(Some(2)), "fanout")?,
            segs_per_edge: need(o.segs_per_edge.or(Some(1)), "segs-per-edge")?,
            params,
            seed,
        },
        other => return input(format!("unknown bench kind `{other}`")),
    })
}

pub fn gen(args: &GenArgs, c: &Common) -> CliResult<()> {
    let mut run = Run::new("gen", c.out.clone());
    if let Some(p) = &c.config {
        run.note_input(p)?;
    }
    let opts = merge(&args.opts, c.config.as_deref())?;
    let spec = bench_spec(&args.kind, &opts)?;
    let text = gen_bench(&spec);
    eprintln!("{}: {} unknowns", args.kind, spec.unknown_count());
    run.emit(&text)?;
    run.finish(serde_json::to_value(&spec)?, opts.seed.or(Some(0)), stats::global())
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceOpts {
    /// prima, single_point, multi_point or low_rank.
    #[arg(long)]
    pub engine: Option<Engine>,
    /// s-moment order.
    #[arg(long)]
    pub k: Option<usize>,
    /// Per-parameter order cap (single_point).
    #[arg(long)]
    pub k_param: Option<usize>,
    /// Total-degree cap (single_point).
    #[arg(long)]
    pub total_order: Option<usize>,
    /// Multi-point sample, `p1=v,p2=v`; repeatable.
    #[arg(long = "sample")]
    pub sample: Vec<String>,
    /// Multi-point grid over ranges, `p1=lo:hi,p2=lo:hi`: all corners plus the center.
    #[arg(long)]
    pub grid: Option<String>,
    /// Explicit multi-point samples (config files only).
    #[arg(skip)]
    pub samples: Option<Vec<ParameterPoint>>,
    /// SVD rank per sensitivity matrix (low_rank).
    #[arg(long = "rank")]
    pub svd_rank: Option<usize>,
    /// Use the smaller variant without transposed Krylov blocks (low_rank).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub simplified: Option<bool>,
    /// Relative deflation tolerance for the basis.
    #[arg(long)]
    pub defl_tol: Option<f64>,
    /// Seed for the randomized SVD.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra probe vectors in the truncated SVD.
    #[arg(long)]
    pub svd_oversample: Option<usize>,
    /// Subspace iterations in the truncated SVD.
    #[arg(long)]
    pub svd_power_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    pub netlist: PathBuf,
    #[command(flatten)]
    pub opts: ReduceOpts,
}

fn parse_grid(text: &str, sys: &ParametricSystem) -> CliResult<Vec<ParameterPoint>> {
    let mut ranges = vec![(0.0, 0.0); sys.n_p()];
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let bad = || CliError::Input(format!("--grid expects name=lo:hi, got `{item}`"));
        let (name, range) = item.split_once('=').ok_or_else(bad)?;
        let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
        let idx = sys
            .params
            .iter()
            .position(|p| p == name.trim())
            .ok_or_else(|| CliError::Input(format!("unknown parameter `{name}`")))?;
        ranges[idx] = (
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        );
    }
    let mut pts: Vec<ParameterPoint> = Vec::new();
    for p in grid_samples(&ranges) {
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    Ok(pts)
}

fn reduction_spec(o: &ReduceOpts, sys: &ParametricSystem) -> CliResult<ReductionSpec> {
    let mut spec = ReductionSpec::default();
    if let Some(e) = o.engine {
        spec.engine = e;
    }
    spec.k = o.k.unwrap_or(spec.k);
    spec.k_param = o.k_param;
    spec.total_order = o.total_order;
    spec.svd_rank = o.svd_rank.unwrap_or(spec.svd_rank);
    spec.simplified = o.simplified.unwrap_or(false);
    spec.defl_tol = o.defl_tol.unwrap_or(spec.defl_tol);
    spec.seed = o.seed.unwrap_or(0);
    spec.svd_oversample = o.svd_oversample.unwrap_or(spec.svd_oversample);
    spec.svd_power_iters = o.svd_power_iters.unwrap_or(spec.svd_power_iters);
    spec.samples = if !o.sample.is_empty() {
        o.sample.iter().map(|s| point(Some(s), sys)).collect::<CliResult<_>>()?
    } else if let Some(g) = &o.grid {
        parse_grid(g, sys)?
    } else {
        o.samples.clone().unwrap_or_default()
    };
    spec.validate(sys.n_p())?;
    Ok(spec)
}

/// Closed-form pre-deflation column count for `spec`.
fn column_bound(spec: &ReductionSpec, m: usize, n_p: usize) -> usize {
    match spec.engine {
        Engine::Prima => (spec.k + 1) * m,
        Engine::SinglePoint => single_point_column_count(m, n_p, spec),
        Engine::MultiPoint => multi_point_column_count(m, spec.k, spec.samples.len()),
        Engine::LowRank => {
            low_rank_column_count(spec.k, m, &vec![(spec.svd_rank, spec.svd_rank); n_p], spec.simplified)
        }
    }
}

pub fn reduce(args: &ReduceArgs, c: &Common) -> CliResult<()> {
    let mut run = Run::new("reduce", c.out.clone());
    if let Some(p) = &c.config {
        run.note_input(p)?;
    }
    let opts = merge(&args.opts, c.config.as_deref())?;
    let sys = load_system(&mut run, &args.netlist)?;
    let spec = reduction_spec(&opts, &sys)?;
    let red = parmor_core::reduce(&sys, &spec)?;
    for w in &red.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "engine={} n={} q={} pre-deflation columns={} bound={} factorizations={}",
        spec.engine.name(),
        sys.n(),
        red.model.q(),
        red.pre_deflation_columns,
        column_bound(&spec, sys.m(), sys.n_p()),
        red.stats.factorizations
    );
    run.emit(&red.model.to_json()?)?;
    run.finish(serde_json::to_value(&spec)?, Some(spec.seed), red.stats)
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOpts {
    /// Reduced model to evaluate instead of the full system.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Parameter point, `p1=v,p2=v`; unlisted parameters are 0.
    #[arg(long)]
    pub p: Option<String>,
    /// Frequency grid `a:b:N`, N log-spaced points from 10^a to 10^b Hz.
    #[arg(long)]
    pub flog: Option<String>,
    /// transfer (H) or admittance (Y = H⁻¹).
    #[arg(long)]
    pub response: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub netlist: PathBuf,
    #[command(flatten)]
    pub opts: EvalOpts,
}

fn flog_or_default(text: Option<&str>) -> CliResult<Vec<f64>> {
    parse_flog(text.unwrap_or("6:11:200"))
}

pub fn eval(args: &EvalArgs, c: &Common) -> CliResult<()> {
    let mut run = Run::new("eval", c.out.clone());
    if let Some(p) = &c.config {
        run.note_input(p)?;
    }
    let opts = merge(&args.opts, c.config.as_deref())?;
    let sys = load_system(&mut run, &args.netlist)?;
    let p = point(opts.p.as_deref(), &sys)?;
    let freqs = flog_or_default(opts.flog.as_deref())?;
    let response = parse_response(opts.response.as_deref())?;
    let values = match &opts.model {
        Some(path) => {
            let model = load_model(&mut run, path, &sys)?;
            sweep(&model, &p, &freqs, response)?
        }
        None => sweep_full(&sys, &p, &freqs, response)?,
    };
    let m = sys.m();
    let mut out = String::from("freq_hz");
    for i in 1..=m {
        for j in 1..=m {
            let _ = write!(out, ",re_{i}{j},im_{i}{j}");
        }
    }
    out.push('\n');
    for (f, h) in freqs.iter().zip(&values) {
        let _ = write!(out, "{f:e}");
        for i in 0..m {
            for j in 0..m {
                let _ = write!(out, ",{:e},{:e}", h[(i, j)].re, h[(i, j)].im);
            }
        }
        out.push('\n');
    }
    run.emit(&out)?;
    run.finish(config_value(&opts)?, None, stats::global())
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolesOpts {
    /// Reduced model whose poles are compared with the full system.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Parameter point, `p1=v,p2=v`; unlisted parameters are 0.
    #[arg(long)]
    pub p: Option<String>,
    /// Number of dominant (smallest-magnitude) poles.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PolesArgs {
    pub netlist: PathBuf,
    #[command(flatten)]
    pub opts: PolesOpts,
}

#[derive(Serialize)]
struct PolesOut {
    schema_version: u32,
    dominance: &'static str,
    p: ParameterPoint,
    full: PoleSet,
    model: Option<PoleSet>,
    relative_errors: Option<Vec<f64>>,
}

pub fn poles(args: &PolesArgs, c: &Common) -> CliResult<()> {
    let mut run = Run::new("poles", c.out.clone());
    if let Some(p) = &c.config {
        run.note_input(p)?;
    }
    let opts = merge(&args.opts, c.config.as_deref())?;
    let sys = load_system(&mut run, &args.netlist)?;
    let p = point(opts.p.as_deref(), &sys)?;
    let count = opts.count.unwrap_or(5);
    let full = dominant_poles(&sys, &p, count)?;
    let (model, relative_errors) = match &opts.model {
        Some(path) => {
            let model = load_model(&mut run, path, &sys)?;
            let ps = dominant_poles(&model, &p, 2 * count)?;
            let errs = paired_relative_errors(&full.poles, &ps.poles);
            (Some(ps), Some(errs))
        }
        None => (None, None),
    };
    if !full.complete {
        eprintln!("warning: only {} finite poles", full.poles.len());
    }
    let out = PolesOut {
        schema_version: OUTPUT_SCHEMA_VERSION,
        dominance: "smallest magnitude",
        p,
        full,
        model,
        relative_errors,
    };
    run.emit(&serde_json::to_string_pretty(&out)?)?;
    run.finish(config_value(&opts)?, None, stats::global())
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsOpts {
    /// Highest total order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Low-rank model whose moment-preservation property is checked.
    #[arg(long)]
    pub check_model: Option<PathBuf>,
    /// Exit with code 4 when the check fails.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub strict: Option<bool>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    pub netlist: PathBuf,
    #[command(flatten)]
    pub opts: MomentsOpts,
}

#[derive(Serialize)]
struct MomentsOut {
    schema_version: u32,
    order: usize,
    /// Output moments `Lᵀ·M`, indexed `(k_s, k_1, …)`.
    moments: Vec<MomentEntry>,
    check: Option<PreservationReport>,
}

pub fn moments(args: &MomentsArgs, c: &Common) -> CliResult<()> {
    let mut run = Run::new("moments", c.out.clone());
    if let Some(p) = &c.config {
        run.note_input(p)?;
    }
    let opts = merge(&args.opts, c.config.as_deref())?;
    let sys = load_system(&mut run, &args.netlist)?;
    let order = opts.order.unwrap_or(3);
    let dense = sys.to_dense(ORACLE_LIMIT)?;
    let table = oracle_moments(&dense, order)?.output(&dense.l);
    let check = match &opts.check_model {
        Some(path) => {
            let model = load_model(&mut run, path, &sys)?;
            if model.provenance.engine != Engine::LowRank.name() {
                return input(format!(
                    "{}: the moment check needs a low_rank model, got {}",
                    path.display(),
                    model.provenance.engine
                ));
            }
            let rep = verify_moment_preservation(&sys, &model, order)?;
            eprintln!(
                "order {order}: nearby vs reduced {:.3e}, original vs reduced {:.3e}, original vs nearby {:.3e}: {}",
                rep.nearby_vs_reduced,
                rep.original_vs_reduced,
                rep.original_vs_nearby,
                if rep.holds { "holds" } else { "VIOLATED" }
            );
            Some(rep)
        }
        None => None,
    };
    let violated = check.as_ref().is_some_and(|r| !r.holds);
    let out = MomentsOut {
        schema_version: OUTPUT_SCHEMA_VERSION,
        order,
        moments: table.to_entries(),
        check,
    };
    run.emit(&serde_json::to_string_pretty(&out)?)?;
    run.finish(config_value(&opts)?, None, stats::global())?;
    if violated && opts.strict.unwrap_or(false) {
        return Err(CliError::Invariant(
            "reduced model does not preserve the moments of the low-rank system".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McOpts {
    /// Maximum variation in percent, taken as 3σ of a normal distribution
    /// truncated at ±3σ, for every parameter.
    #[arg(long)]
    pub sigma_pct: Option<f64>,
    /// Monte Carlo draws (default 200).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Dominant poles compared per sample.
    #[arg(long)]
    pub poles: Option<usize>,
    /// Seed for the parameter draws.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the JSON summary (histogram, max and mean error) here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    pub netlist: PathBuf,
    pub model: PathBuf,
    #[command(flatten)]
    pub opts: McOpts,
}

pub fn mc(args: &McArgs, c: &Common) -> CliResult<()> {
    let mut run = Run::new("mc", c.out.clone());
    if let Some(p) = &c.config {
        run.note_input(p)?;
    }
    let opts = merge(&args.opts, c.config.as_deref())?;
    let sys = load_system(&mut run, &args.netlist)?;
    let model = load_model(&mut run, &args.model, &sys)?;
    let pct = opts.sigma_pct.unwrap_or(30.0);
    if !(0.0..100.0).contains(&pct) {
        return input("--sigma-pct must lie in [0, 100)");
    }
    let seed = opts.seed.unwrap_or(0);
    let variation = Variation::three_sigma(&vec![pct / 100.0; sys.n_p()]);
    let r = monte_carlo_poles(
        &sys,
        &model,
        &variation,
        opts.samples.unwrap_or(200),
        opts.poles.unwrap_or(5),
        seed,
    )?;
    eprintln!(
        "{} samples ({} skipped): max pole error {:.3e}, mean {:.3e}",
        r.samples.len(),
        r.skipped.len(),
        r.max_error,
        r.mean_error
    );
    run.emit(&r.to_csv())?;
    if let Some(path) = &opts.summary {
        #[derive(Serialize)]
        struct Summary<'a> {
            schema_version: u32,
            variation: &'a Variation,
            pole_count: usize,
            samples: usize,
            skipped: &'a [usize],
            max_error: f64,
            mean_error: f64,
            histogram: &'a parmor_core::analysis::montecarlo::Histogram,
        }
        let s = Summary {
            schema_version: OUTPUT_SCHEMA_VERSION,
            variation: &variation,
            pole_count: r.pole_count,
            samples: r.samples.len(),
            skipped: &r.skipped,
            max_error: r.max_error,
            mean_error: r.mean_error,
            histogram: &r.histogram,
        };
        run.emit_to(path, &serde_json::to_string_pretty(&s)?)?;
    }
    run.finish(config_value(&opts)?, Some(seed), stats::global())
}

#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareOpts {
    /// Parameter point, `p1=v,p2=v`; unlisted parameters are 0.
    #[arg(long)]
    pub p: Option<String>,
    /// Frequency grid `a:b:N` (default 6:11:200).
    #[arg(long)]
    pub flog: Option<String>,
    /// transfer (H) or admittance (Y = H⁻¹).
    #[arg(long)]
    pub response: Option<String>,
    /// Compare one matrix entry `i,j` (1-based) instead of the whole matrix.
    #[arg(long)]
    pub entry: Option<String>,
    /// Also write the JSON summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub netlist: PathBuf,
    #[arg(required = true)]
    pub models: Vec<PathBuf>,
    #[command(flatten)]
    pub opts: CompareOpts,
}

pub fn compare(args: &CompareArgs, c: &Common) -> CliResult<()> {
    let mut run = Run::new("compare", c.out.clone());
    if let Some(p) = &c.config {
        run.note_input(p)?;
    }
    let opts = merge(&args.opts, c.config.as_deref())?;
    let sys = load_system(&mut run, &args.netlist)?;
    let p = point(opts.p.as_deref(), &sys)?;
    let freqs = flog_or_default(opts.flog.as_deref())?;
    let response = parse_response(opts.response.as_deref())?;
    let entry = parse_entry(opts.entry.as_deref())?;
    let mut models = Vec::with_capacity(args.models.len());
    for path in &args.models {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "model".into());
        models.push((name, load_model(&mut run, path, &sys)?));
    }
    let refs: Vec<(&str, &ReducedModel)> = models.iter().map(|(n, m)| (n.as_str(), m)).collect();
    let r = sweep_compare(&sys, &refs, &p, &freqs, response, entry)?;
    for m in &r.models {
        eprintln!(
            "{}: q={} max relative magnitude error {:.3e} at {:.3e} Hz",
            m.name, m.q, m.max_rel_error, m.worst_freq_hz
        );
    }
    run.emit(&r.to_csv())?;
    if let Some(path) = &opts.summary {
        run.emit_to(path, &serde_json::to_string_pretty(&r)?)?;
    }
    run.finish(config_value(&opts)?, None, stats::global())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flog_parsing() {
        let g = parse_flog("0:2:3").unwrap();
        assert_eq!(g, vec![1.0, 10.0, 100.0]);
        assert!(parse_flog("0:2").is_err());
        assert!(parse_flog("2:0:5").is_err());
        assert!(parse_flog("0:1:0").is_err());
    }

    #[test]
    fn entry_is_one_based() {
        assert_eq!(parse_entry(Some("1,2")).unwrap(), Some((0, 1)));
        assert!(parse_entry(Some("0,1")).is_err());
        assert_eq!(parse_entry(None).unwrap(), None);
    }

    #[test]
    fn grid_dedupes_unlisted_parameters() {
        let sys = load(".param p1 p2\nP1 1 0\nR1 1 0 1 SENSG p1=0.1\nC1 1 0 1 SENSC p2=0.1").unwrap();
        let pts = parse_grid("p1=-0.3:0.3", &sys).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.contains(&ParameterPoint(vec![0.0, 0.0])));
    }

    #[test]
    fn bench_spec_requires_sizes() {
        assert!(bench_spec("rc_ladder", &GenOpts::default()).is_err());
        assert!(bench_spec("rc_blob", &GenOpts::default()).is_err());
        let o = GenOpts {
            n: Some(3),
            ..Default::default()
        };
        assert_eq!(bench_spec("rc_ladder", &o).unwrap().unknown_count(), 3);
    }
}
