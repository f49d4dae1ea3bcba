//! Experiment runner: dispatches a config to its mode, replicates on a
//! worker pool with per-replicate substreams, and writes CSV / JSON
//! artifacts plus a [`RunSummary`] with pass/fail verdicts.
//!
//! Artifacts (all under the output directory):
//!
//! | mode                | files                                                       |
//! |---------------------|-------------------------------------------------------------|
//! | `poisson_check`     | `reports.csv`, `summary.json`                               |
//! | `oracle_validation` | `oracle_frequencies.csv`, `pipeline_sizes.csv`, `summary.json` |
//! | `scaling`           | `scaling.csv`, `summary.json`                               |
//! | `trajectory`        | `trajectory.csv`, `deviations.csv`, `summary.json`          |
//!
//! Wall-clock timings go to `timings.txt`, which is the only output that
//! is not byte-identical across repeated runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use pairlab_core::degree::{self, DegreeSequence};
use pairlab_core::diagnostics::{self, MIN_POISSON_SAMPLES};
use pairlab_core::exploration;
use pairlab_core::pairing::{self, ComponentReport, PointSpace};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{substream, DegreeSpec, ExperimentConfig, Mode};
use crate::formats::{self, TRACE_HEADER};
use crate::stats;

/// Per-rank sampler verdicts are emitted only up to this many pairings;
/// larger instances are judged by the chi-squared test alone.
pub const MAX_PER_PAIRING_VERDICTS: usize = 16;

/// Default output directory when neither config nor CLI names one.
pub const DEFAULT_OUTPUT_DIR: &str = "pairlab-out";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub cell: String,
    /// How `observed` is compared: `"abs_diff"` (|observed - expected| <=
    /// tolerance), `"at_most"` (observed <= tolerance) or `"at_least"`.
    pub rule: &'static str,
    pub observed: f64,
    pub expected: Option<f64>,
    pub tolerance: f64,
    /// Distance to the failure boundary; negative when failing.
    pub margin: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn within(name: &str, cell: &str, observed: f64, expected: f64, tolerance: f64) -> Self {
        let margin = tolerance - (observed - expected).abs();
        Self {
            name: name.into(),
            cell: cell.into(),
            rule: "abs_diff",
            observed,
            expected: Some(expected),
            tolerance,
            margin,
            pass: margin >= 0.0,
        }
    }

    pub fn at_most(name: &str, cell: &str, observed: f64, bound: f64) -> Self {
        let margin = bound - observed;
        Self {
            name: name.into(),
            cell: cell.into(),
            rule: "at_most",
            observed,
            expected: None,
            tolerance: bound,
            margin,
            pass: margin >= 0.0,
        }
    }

    pub fn at_least(name: &str, cell: &str, observed: f64, bound: f64) -> Self {
        let margin = observed - bound;
        Self {
            name: name.into(),
            cell: cell.into(),
            rule: "at_least",
            observed,
            expected: None,
            tolerance: bound,
            margin,
            pass: margin >= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: String,
    pub stats: Value,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub tool: &'static str,
    pub version: &'static str,
    pub mode: Mode,
    pub seed: u64,
    pub config_hash: String,
    pub config: Value,
    pub cells: Vec<CellSummary>,
    pub verdicts: Vec<Verdict>,
    pub all_pass: bool,
    /// Seconds per cell; written to `timings.txt`, not to `summary.json`.
    #[serde(skip)]
    pub wall_clock: Vec<(String, f64)>,
    #[serde(skip)]
    pub output_dir: PathBuf,
}

impl RunSummary {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn cell(&self, name: &str) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.cell == name)
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    out: PathBuf,
    pool: rayon::ThreadPool,
    cells: Vec<CellSummary>,
    verdicts: Vec<Verdict>,
    wall_clock: Vec<(String, f64)>,
}

impl Ctx<'_> {
    /// Runs `f(replicate)` for every replicate on the pool; results come
    /// back in replicate order whatever the scheduling.
    fn replicate<T, F>(&self, count: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u32) -> T + Sync + Send,
    {
        let count = u32::try_from(count).expect("replicate count fits in u32");
        self.pool.install(|| (0..count).into_par_iter().map(&f).collect())
    }

    fn csv(&self, name: &str, header: &str) -> Result<BufWriter<fs::File>> {
        let path = self.out.join(name);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", formats::provenance_line(&self.hash, self.cfg.seed))?;
        writeln!(w, "{header}")?;
        Ok(w)
    }

    fn cell_error(&mut self, cell: &str, err: impl std::fmt::Display) {
        self.cells.push(CellSummary {
            cell: cell.into(),
            stats: Value::Null,
            error: Some(err.to_string()),
        });
        self.verdicts.push(Verdict::at_most("cell_completed", cell, 1.0, 0.0));
    }

    fn timed<T>(&mut self, cell: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.wall_clock.push((cell.into(), start.elapsed().as_secs_f64()));
        out
    }
}

/// Runs the experiment and writes its artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let out = cfg
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers())
        .build()
        .context("building worker pool")?;
    let mut ctx = Ctx {
        cfg,
        hash: cfg.hash(),
        out: out.clone(),
        pool,
        cells: Vec::new(),
        verdicts: Vec::new(),
        wall_clock: Vec::new(),
    };
    match cfg.mode {
        Mode::PoissonCheck => poisson_mode(&mut ctx)?,
        Mode::OracleValidation => oracle_mode(&mut ctx)?,
        Mode::Scaling => scaling_mode(&mut ctx)?,
        Mode::Trajectory => trajectory_mode(&mut ctx)?,
    }
    let all_pass = ctx.verdicts.iter().all(|v| v.pass);
    let summary = RunSummary {
        tool: "pairlab",
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode,
        seed: cfg.seed,
        config_hash: ctx.hash,
        config: cfg.echo(),
        cells: ctx.cells,
        verdicts: ctx.verdicts,
        all_pass,
        wall_clock: ctx.wall_clock,
        output_dir: out.clone(),
    };
    let mut json = serde_json::to_string_pretty(&summary)?;
    json.push('\n');
    fs::write(out.join("summary.json"), json)?;
    let mut timings = String::new();
    for (cell, secs) in &summary.wall_clock {
        writeln!(timings, "{cell}\t{secs:.3}s").unwrap();
    }
    fs::write(out.join("timings.txt"), timings)?;
    Ok(summary)
}

fn degree_spec(cfg: &ExperimentConfig) -> &DegreeSpec {
    cfg.degrees.as_ref().expect("validated: degrees present outside scaling mode")
}

fn sigma_tolerance(sigma: f64, variance_of_mean: f64) -> f64 {
    sigma * variance_of_mean.max(0.0).sqrt()
}

fn poisson_mode(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let cell = "poisson";
    let seq = match degree_spec(cfg).build(&cfg.base_dir) {
        Ok(seq) => seq,
        Err(e) => {
            ctx.cell_error(cell, e);
            return Ok(());
        }
    };
    let space = PointSpace::new(&seq);
    let nu = seq.distribution().nu();
    let seed = cfg.seed;
    let reports: Vec<ComponentReport> = ctx.timed(cell, |ctx| {
        ctx.replicate(cfg.replicates, |r| {
            let p = pairing::sample_pairing(&space, &mut substream(seed, 0, r));
            pairing::project_components(&p)
        })
    });

    let mut w = ctx.csv("reports.csv", "replicate,loops,parallel_pairs,simple,largest,components")?;
    for (r, rep) in reports.iter().enumerate() {
        writeln!(
            w,
            "{r},{},{},{},{},{}",
            rep.loops,
            rep.parallel_pairs,
            u8::from(rep.simple),
            rep.largest,
            rep.component_sizes.len()
        )?;
    }
    w.flush()?;

    let st = match diagnostics::poisson_limit_check(&reports, nu) {
        Ok(st) => st,
        Err(e) => {
            ctx.cell_error(cell, e);
            return Ok(());
        }
    };
    let t = &cfg.tolerances;
    let nf = st.samples as f64;
    let tol_x = t.loops_abs.unwrap_or_else(|| sigma_tolerance(t.sigma, st.var_loops / nf));
    let tol_y = t.parallel_abs.unwrap_or_else(|| sigma_tolerance(t.sigma, st.var_parallel / nf));
    let p0 = st.expected_simple();
    let tol_p = t.simple_abs.unwrap_or_else(|| sigma_tolerance(t.sigma, p0 * (1.0 - p0) / nf));
    ctx.verdicts.extend([
        Verdict::within("mean_loops", cell, st.mean_loops, st.expected_loops(), tol_x),
        Verdict::within("mean_parallel_pairs", cell, st.mean_parallel, st.expected_parallel(), tol_y),
        Verdict::within("p_simple", cell, st.p_simple, p0, tol_p),
        Verdict::within("loops_parallel_correlation", cell, st.correlation, 0.0, t.sigma / nf.sqrt()),
    ]);
    ctx.cells.push(CellSummary {
        cell: cell.into(),
        stats: json!({
            "n": seq.n(),
            "two_m": seq.two_m(),
            "nu": nu,
            "samples": st.samples,
            "mean_loops": st.mean_loops,
            "var_loops": st.var_loops,
            "mean_parallel_pairs": st.mean_parallel,
            "var_parallel_pairs": st.var_parallel,
            "p_simple": st.p_simple,
            "correlation": st.correlation,
            "expected_loops": st.expected_loops(),
            "expected_parallel_pairs": st.expected_parallel(),
            "expected_p_simple": p0,
            "z_loops": st.z_loops,
            "z_parallel_pairs": st.z_parallel,
            "z_p_simple": st.z_simple,
            "z_correlation": st.z_correlation,
        }),
        error: None,
    });
    Ok(())
}

/// Exact law of a per-pairing statistic over all pairings.
fn exact_law<F: Fn(&pairing::Pairing<'_>) -> u64>(all: &[pairing::Pairing<'_>], f: F) -> BTreeMap<u64, f64> {
    empirical_law(all.iter().map(f), all.len())
}

fn empirical_law(values: impl Iterator<Item = u64>, total: usize) -> BTreeMap<u64, f64> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect()
}

fn law_json(law: &BTreeMap<u64, f64>) -> Value {
    Value::Object(law.iter().map(|(k, v)| (k.to_string(), json!(v))).collect())
}

fn sizes_key(sizes: &[u32]) -> String {
    sizes.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
}

fn oracle_mode(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let seq = match degree_spec(cfg).build(&cfg.base_dir) {
        Ok(seq) => seq,
        Err(e) => {
            ctx.cell_error("sampler", e);
            return Ok(());
        }
    };
    let space = PointSpace::new(&seq);
    let t = cfg.tolerances.clone();
    let seed = cfg.seed;
    let reps = cfg.replicates;
    let nf = reps as f64;

    let enumerated: Option<Vec<pairing::Pairing<'_>>> = pairing::enumerate_pairings(&space, t.enumeration_cap)
        .ok()
        .map(Iterator::collect);

    // Sampler against enumeration.
    let cell = "sampler";
    match &enumerated {
        Some(all) => {
            let draws: Vec<(u64, u64, u64, bool)> = ctx.timed(cell, |ctx| {
                ctx.replicate(reps, |r| {
                    let p = pairing::sample_pairing(&space, &mut substream(seed, 0, r));
                    let rep = pairing::project_components(&p);
                    (p.rank(), rep.loops, rep.parallel_pairs, rep.simple)
                })
            });
            let k = all.len();
            let mut hits = vec![0u64; k];
            for d in &draws {
                hits[d.0 as usize] += 1;
            }
            let uniform = 1.0 / k as f64;
            let mut w = ctx.csv("oracle_frequencies.csv", "rank,pairs,count,frequency,expected")?;
            for (rank, p) in all.iter().enumerate() {
                let pairs = p.pairs().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" ");
                writeln!(w, "{rank},{pairs},{},{},{uniform}", hits[rank], hits[rank] as f64 / nf)?;
            }
            w.flush()?;

            let fit = stats::goodness_of_fit(&hits, &vec![uniform; k]);
            ctx.verdicts.push(Verdict::at_least("sampler_chi2_p_value", cell, fit.p_value, t.significance));
            let binom_tol = |p: f64| sigma_tolerance(t.sigma, p * (1.0 - p) / nf);
            if k <= MAX_PER_PAIRING_VERDICTS {
                for (rank, &h) in hits.iter().enumerate() {
                    ctx.verdicts.push(Verdict::within(
                        &format!("pairing_{rank}_frequency"),
                        cell,
                        h as f64 / nf,
                        uniform,
                        binom_tol(uniform),
                    ));
                }
            }

            let exact_x = exact_law(all, pairing::count_loops);
            let exact_y = exact_law(all, pairing::count_parallel_pairs);
            let exact_simple = all.iter().filter(|p| pairing::project_components(p).simple).count() as f64 / k as f64;
            let seen_x = empirical_law(draws.iter().map(|d| d.1), draws.len());
            let seen_y = empirical_law(draws.iter().map(|d| d.2), draws.len());
            let seen_simple = draws.iter().filter(|d| d.3).count() as f64 / nf;
            for (label, exact, seen) in [("loops", &exact_x, &seen_x), ("parallel_pairs", &exact_y, &seen_y)] {
                let keys: BTreeSet<u64> = exact.keys().chain(seen.keys()).copied().collect();
                for key in keys {
                    let p = exact.get(&key).copied().unwrap_or(0.0);
                    let q = seen.get(&key).copied().unwrap_or(0.0);
                    ctx.verdicts.push(Verdict::within(&format!("p_{label}_eq_{key}"), cell, q, p, binom_tol(p)));
                }
            }
            ctx.verdicts.push(Verdict::within("p_simple", cell, seen_simple, exact_simple, binom_tol(exact_simple)));
            ctx.cells.push(CellSummary {
                cell: cell.into(),
                stats: json!({
                    "pairings": k,
                    "draws": reps,
                    "chi2": fit,
                    "exact_loops_law": law_json(&exact_x),
                    "exact_parallel_pairs_law": law_json(&exact_y),
                    "exact_p_simple": exact_simple,
                    "sampled_loops_law": law_json(&seen_x),
                    "sampled_parallel_pairs_law": law_json(&seen_y),
                    "sampled_p_simple": seen_simple,
                }),
                error: None,
            });
        }
        None => ctx.cells.push(CellSummary {
            cell: cell.into(),
            stats: json!({
                "skipped": format!("m = {} exceeds enumeration cap {}", seq.m(), t.enumeration_cap),
            }),
            error: None,
        }),
    }

    // Exploration decomposition against full-pairing projection.
    let cell = "pipelines";
    let (explored, projected): (Vec<Vec<u32>>, Vec<Vec<u32>>) = ctx.timed(cell, |ctx| {
        let a = ctx.replicate(reps, |r| {
            exploration::largest_component_via_exploration(&space, &mut substream(seed, 1, r))
                .report()
                .component_sizes
        });
        let b = ctx.replicate(reps, |r| {
            pairing::project_components(&pairing::sample_pairing(&space, &mut substream(seed, 2, r))).component_sizes
        });
        (a, b)
    });
    let mut table: BTreeMap<Vec<u32>, (u64, u64)> = BTreeMap::new();
    for s in &explored {
        table.entry(s.clone()).or_default().0 += 1;
    }
    for s in &projected {
        table.entry(s.clone()).or_default().1 += 1;
    }
    let exact_sizes: Option<BTreeMap<Vec<u32>, f64>> = enumerated.as_ref().map(|all| {
        let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for p in all {
            *counts.entry(pairing::project_components(p).component_sizes).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / all.len() as f64))
            .collect::<BTreeMap<_, _>>()
    });
    if let Some(exact) = &exact_sizes {
        for key in exact.keys() {
            table.entry(key.clone()).or_default();
        }
    }
    let mut w = ctx.csv("pipeline_sizes.csv", "sizes,exploration,projection,exact_probability")?;
    for (sizes, (a, b)) in &table {
        let exact = exact_sizes
            .as_ref()
            .map(|e| e.get(sizes).copied().unwrap_or(0.0).to_string())
            .unwrap_or_default();
        writeln!(w, "{},{a},{b},{exact}", sizes_key(sizes))?;
    }
    w.flush()?;
    let a: Vec<u64> = table.values().map(|v| v.0).collect();
    let b: Vec<u64> = table.values().map(|v| v.1).collect();
    let test = stats::two_sample(&a, &b);
    ctx.verdicts.push(Verdict::at_least("pipelines_chi2_p_value", cell, test.p_value, t.significance));
    let mut support = Value::Null;
    if let Some(exact) = &exact_sizes {
        let exact_keys: BTreeSet<&Vec<u32>> = exact.keys().collect();
        let seen_a: BTreeSet<&Vec<u32>> = table.iter().filter(|(_, v)| v.0 > 0).map(|(k, _)| k).collect();
        let seen_b: BTreeSet<&Vec<u32>> = table.iter().filter(|(_, v)| v.1 > 0).map(|(k, _)| k).collect();
        ctx.verdicts.push(Verdict::within(
            "exploration_support_equals_exact",
            cell,
            f64::from(u8::from(seen_a == exact_keys)),
            1.0,
            0.0,
        ));
        ctx.verdicts.push(Verdict::within(
            "projection_support_equals_exact",
            cell,
            f64::from(u8::from(seen_b == exact_keys)),
            1.0,
            0.0,
        ));
        support = json!(exact_keys.iter().map(|k| sizes_key(k)).collect::<Vec<_>>());
    }
    ctx.cells.push(CellSummary {
        cell: cell.into(),
        stats: json!({
            "samples_each": reps,
            "categories": table.len(),
            "chi2": test,
            "exact_support": support,
        }),
        error: None,
    });
    Ok(())
}

fn scaling_mode(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let grid = cfg.scaling.clone().expect("validated: scaling grid present");
    let t = cfg.tolerances.clone();
    let seed = cfg.seed;
    let mut w = ctx.csv("scaling.csv", "gamma,n,nu_actual,replicate,largest,normalized,attempts")?;
    // gamma -> [(n, p95, max_degree)]
    let mut per_gamma: Vec<(f64, Vec<(usize, f64, u32)>)> = Vec::new();

    for (gi, &gamma) in grid.gammas.iter().enumerate() {
        let mut rows = Vec::new();
        for (ni, &n) in grid.ns.iter().enumerate() {
            let cell_index = (gi * grid.ns.len() + ni) as u32;
            let cell = format!("gamma={gamma},n={n}");
            let seq = match degree::build_subpower_sequence(n, gamma, grid.c, grid.target_nu) {
                Ok(seq) => seq,
                Err(e) => {
                    ctx.cell_error(&cell, e);
                    continue;
                }
            };
            let space = PointSpace::new(&seq);
            let simple_only = grid.simple_only;
            let max_attempts = t.max_attempts;
            let results: Vec<Result<(u32, u64), pairing::PairingError>> = ctx.timed(&cell, |ctx| {
                ctx.replicate(cfg.replicates, |r| {
                    let mut rng = substream(seed, cell_index, r);
                    let (p, attempts) = if simple_only {
                        pairing::sample_simple_graph(&space, &mut rng, max_attempts)?
                    } else {
                        (pairing::sample_pairing(&space, &mut rng), 1)
                    };
                    Ok((pairing::project_components(&p).largest, attempts))
                })
            });
            let nu = seq.distribution().nu();
            let mut normalized = Vec::new();
            let mut failures = 0u64;
            let mut attempts_total = 0u64;
            for (r, res) in results.iter().enumerate() {
                match res {
                    Ok((largest, attempts)) => {
                        let rec = diagnostics::ScalingRecord::new(&seq, gamma, r as u64, *largest);
                        writeln!(
                            w,
                            "{gamma},{n},{},{r},{},{},{attempts}",
                            rec.nu_actual, rec.largest, rec.normalized
                        )?;
                        normalized.push(rec.normalized);
                        attempts_total += attempts;
                    }
                    Err(_) => failures += 1,
                }
            }
            if normalized.is_empty() {
                ctx.cell_error(&cell, format!("all {failures} replicates failed to produce a simple graph"));
                continue;
            }
            normalized.sort_by(f64::total_cmp);
            let q95 = diagnostics::quantile(&normalized, 0.95);
            let ratio = diagnostics::max_degree_ratio(&seq, gamma);
            let [lo, hi] = t.max_degree_ratio;
            ctx.verdicts.push(Verdict::within(
                "max_degree_ratio",
                &cell,
                ratio,
                0.5 * (lo + hi),
                0.5 * (hi - lo),
            ));
            if failures > 0 {
                ctx.verdicts.push(Verdict::at_most("rejection_failures", &cell, failures as f64, 0.0));
            }
            ctx.cells.push(CellSummary {
                cell: cell.clone(),
                stats: json!({
                    "gamma": gamma,
                    "n": n,
                    "nu": nu,
                    "molloy_reed_sum": seq.distribution().molloy_reed_sum(),
                    "max_degree": seq.max_degree(),
                    "degree_cap": degree::degree_cap(n, gamma, grid.c),
                    "max_degree_ratio": ratio,
                    "replicates": normalized.len(),
                    "rejection_failures": failures,
                    "mean_attempts": attempts_total as f64 / normalized.len() as f64,
                    "normalized_q50": diagnostics::quantile(&normalized, 0.5),
                    "normalized_q95": q95,
                    "normalized_max": normalized[normalized.len() - 1],
                }),
                error: None,
            });
            rows.push((n, q95, seq.max_degree()));
        }
        per_gamma.push((gamma, rows));
    }
    w.flush()?;

    for (gamma, rows) in &per_gamma {
        if rows.len() < 2 {
            continue;
        }
        let cell = format!("gamma={gamma}");
        let max = rows.iter().map(|r| r.1).fold(f64::MIN, f64::max);
        let min = rows.iter().map(|r| r.1).fold(f64::MAX, f64::min);
        ctx.verdicts.push(Verdict::at_most("q95_spread_across_n", &cell, max / min, t.scaling_factor));
        let mut by_n = rows.clone();
        by_n.sort_by_key(|r| r.0);
        let monotone = by_n.windows(2).all(|w| w[0].2 <= w[1].2);
        ctx.verdicts.push(Verdict::within(
            "max_degree_nondecreasing_in_n",
            &cell,
            f64::from(u8::from(monotone)),
            1.0,
            0.0,
        ));
    }
    Ok(())
}

struct TrajectoryReplicate {
    trace: exploration::ExplorationTrace,
    violations: u64,
    /// Max relative error of the one-step martingale identity, and the
    /// number of (state, j) pairs checked.
    martingale_err: f64,
    martingale_checks: u64,
    deviations: Vec<f64>,
}

fn martingale_check(snap: &exploration::ChainSnapshot, max_j: u32) -> (f64, u64) {
    let mut worst = 0.0f64;
    let mut checks = 0;
    let top = max_j.max(snap.inactive_counts.len() as u32);
    for j in 1..top {
        if snap.inactive(j) == 0 {
            continue;
        }
        let (Some(now), Some(next)) = (
            diagnostics::martingale_value(snap, j),
            diagnostics::expected_next_martingale(snap, j),
        ) else {
            continue;
        };
        worst = worst.max(((next - now) / now).abs());
        checks += 1;
    }
    (worst, checks)
}

fn trajectory_mode(ctx: &mut Ctx<'_>) -> Result<()> {
    let cfg = ctx.cfg;
    let cell = "trajectory";
    let seq = match degree_spec(cfg).build(&cfg.base_dir) {
        Ok(seq) => seq,
        Err(e) => {
            ctx.cell_error(cell, e);
            return Ok(());
        }
    };
    let opts = cfg.trajectory.clone();
    let t = cfg.tolerances.clone();
    let root = opts.root.unwrap_or_else(|| seq.argmax_degree());
    if root >= seq.n() {
        ctx.cell_error(cell, format!("root {root} out of range for n = {}", seq.n()));
        return Ok(());
    }
    let space = PointSpace::new(&seq);
    let dist = seq.distribution();
    let seed = cfg.seed;

    let reps: Vec<TrajectoryReplicate> = ctx.timed(cell, |ctx| {
        ctx.replicate(cfg.replicates, |r| {
            let mut rng = substream(seed, 0, r);
            let mut violations = 0u64;
            let mut snaps = Vec::new();
            let start = exploration::start_exploration(&space, root).expect("root in range");
            snaps.push(start.snapshot());
            let trace = exploration::explore_component_with(&space, root, &mut rng, true, |st, _| {
                if !st.conservation_holds() {
                    violations += 1;
                }
                if snaps.len() < opts.martingale_states && st.active() > 0 {
                    snaps.push(st.snapshot());
                }
            })
            .expect("root in range");
            let (mut martingale_err, mut martingale_checks) = (0.0f64, 0);
            for snap in &snaps {
                let (e, c) = martingale_check(snap, 0);
                martingale_err = martingale_err.max(e);
                martingale_checks += c;
            }
            let deviations = (1..=opts.max_j)
                .map(|j| diagnostics::trajectory_deviation(&trace, &dist, j))
                .collect();
            TrajectoryReplicate {
                trace,
                violations,
                martingale_err,
                martingale_checks,
                deviations,
            }
        })
    });

    let mut w = ctx.csv("trajectory.csv", TRACE_HEADER)?;
    for (r, rep) in reps.iter().enumerate().take(opts.export_traces as usize) {
        formats::write_trace_rows(&mut w, &rep.trace.steps, Some(r as u64))?;
    }
    w.flush()?;
    let dev_cols: Vec<String> = (1..=opts.max_j).map(|j| format!("deviation_j{j}")).collect();
    let mut w = ctx.csv(
        "deviations.csv",
        &format!("replicate,root,stop_time,component_size,{}", dev_cols.join(",")),
    )?;
    for (r, rep) in reps.iter().enumerate() {
        let devs: Vec<String> = rep.deviations.iter().map(f64::to_string).collect();
        writeln!(
            w,
            "{r},{root},{},{},{}",
            rep.trace.stop_time,
            rep.trace.component_size,
            devs.join(",")
        )?;
    }
    w.flush()?;

    let mut medians = serde_json::Map::new();
    for (ji, j) in (1..=opts.max_j).enumerate() {
        let mut col: Vec<f64> = reps.iter().map(|rep| rep.deviations[ji]).collect();
        col.sort_by(f64::total_cmp);
        let median = diagnostics::quantile(&col, 0.5);
        medians.insert(j.to_string(), json!(median));
        ctx.verdicts.push(Verdict::at_most(
            &format!("median_deviation_j{j}"),
            cell,
            median,
            t.trajectory_threshold,
        ));
    }

    let traces: Vec<exploration::ExplorationTrace> = reps.iter().map(|rep| rep.trace.clone()).collect();
    let total_steps: u64 = traces.iter().map(|tr| tr.stop_time).sum();
    let violations: u64 = reps.iter().map(|rep| rep.violations).sum();
    ctx.verdicts.push(Verdict::at_most("conservation_violations", cell, violations as f64, 0.0));

    let martingale_err = reps.iter().map(|rep| rep.martingale_err).fold(0.0, f64::max);
    let martingale_checks: u64 = reps.iter().map(|rep| rep.martingale_checks).sum();
    ctx.verdicts.push(Verdict::at_most("martingale_identity_rel_err", cell, martingale_err, t.martingale_rel));

    let drift = diagnostics::drift_estimate(&traces, &dist, opts.window);
    let drift_json = match drift {
        Ok(d) => {
            ctx.verdicts.push(Verdict::within(
                "early_drift",
                cell,
                d.mean_increment,
                d.exact_initial,
                t.sigma * d.std_error,
            ));
            json!({
                "window": opts.window,
                "mean_increment": d.mean_increment,
                "std_error": d.std_error,
                "samples": d.samples,
                "exact_initial": d.exact_initial,
                "nu_minus_one": dist.nu() - 1.0,
            })
        }
        Err(e) => json!({ "error": e.to_string() }),
    };
    let sizes: Vec<f64> = traces.iter().map(|tr| tr.component_size as f64).collect();
    let (mean_size, _) = diagnostics::mean_and_variance(&sizes);
    ctx.cells.push(CellSummary {
        cell: cell.into(),
        stats: json!({
            "n": seq.n(),
            "two_m": seq.two_m(),
            "nu": dist.nu(),
            "root": root,
            "root_degree": seq.degree(root),
            "replicates": reps.len(),
            "total_steps": total_steps,
            "mean_component_size": mean_size,
            "max_stop_time": traces.iter().map(|tr| tr.stop_time).max().unwrap_or(0),
            "median_deviation": medians,
            "conservation_violations": violations,
            "martingale_checks": martingale_checks,
            "martingale_max_rel_err": martingale_err,
            "drift": drift_json,
        }),
        error: None,
    });
    Ok(())
}

/// Dry-run numbers for one degree sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDescription {
    pub cell: String,
    pub n: usize,
    pub two_m: u64,
    pub max_degree: u32,
    pub d_bar: f64,
    pub nu: f64,
    pub molloy_reed_sum: f64,
    /// `floor((c n)^(1/gamma))` when tail parameters are known.
    pub degree_cap: Option<u32>,
    pub subpower_valid: Option<bool>,
    /// `exp(-nu/2 - nu^2/4)`.
    pub predicted_p_simple: f64,
    /// Rough working-set size of one replicate, bytes.
    pub memory_per_worker_bytes: u64,
}

fn describe_sequence(cell: String, seq: &DegreeSequence, params: Option<(f64, f64)>) -> CellDescription {
    let dist = seq.distribution();
    let nu = dist.nu();
    CellDescription {
        cell,
        n: seq.n(),
        two_m: seq.two_m(),
        max_degree: seq.max_degree(),
        d_bar: dist.d_bar(),
        nu,
        molloy_reed_sum: dist.molloy_reed_sum(),
        degree_cap: params.map(|(g, c)| degree::degree_cap(seq.n(), g, c)),
        subpower_valid: params.map(|(g, c)| degree::validate_subpower(seq.degrees(), g, c).is_valid()),
        predicted_p_simple: diagnostics::predicted_simple_probability(nu),
        // owner + mate + pool (2 words) + queue per point; offsets + flags per vertex
        memory_per_worker_bytes: seq.two_m() * 20 + seq.n() as u64 * 13,
    }
}

/// Computes per-cell predictions without sampling.
pub fn describe(cfg: &ExperimentConfig) -> Result<Vec<CellDescription>> {
    if cfg.mode == Mode::Scaling {
        let grid = cfg.scaling.as_ref().expect("validated: scaling grid present");
        let mut out = Vec::new();
        for &gamma in &grid.gammas {
            for &n in &grid.ns {
                let seq = degree::build_subpower_sequence(n, gamma, grid.c, grid.target_nu)
                    .with_context(|| format!("cell gamma={gamma},n={n}"))?;
                out.push(describe_sequence(format!("gamma={gamma},n={n}"), &seq, Some((gamma, grid.c))));
            }
        }
        return Ok(out);
    }
    let spec = degree_spec(cfg);
    let seq = spec.build(&cfg.base_dir)?;
    let params = spec.subpower_params().map(|p| (p.gamma, p.c));
    Ok(vec![describe_sequence("degrees".into(), &seq, params)])
}

/// `MIN_POISSON_SAMPLES` re-exported for config authors.
pub const POISSON_SAMPLE_FLOOR: usize = MIN_POISSON_SAMPLES;

/// Reads every regular file under `dir` (sorted by name) for comparisons.
pub fn read_artifacts(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            out.insert(entry.file_name().to_string_lossy().into_owned(), fs::read(entry.path())?);
        }
    }
    Ok(out)
}
