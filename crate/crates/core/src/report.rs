//! Reported metrics, multi-seed sweeps and plot-ready CSV output.
//!
//! Stored values are fractions; the CSV layer multiplies objective columns by
//! 100 and names them with a `_pct` suffix.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_dataset, preset_family, Family, GenParams};
use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::model::{Instance, Solution};
use crate::objectives::aggregate_norm;
use crate::search::{optimize, Method, SearchConfig, SearchOutcome};

pub const RECORDS_HEADER: &str =
    "family,method,alpha,seed,group,o_pct,q_pct,O_pct,Q_pct,V_pct,pct_changed,moves_applied,moves_evaluated,wall_ms";
pub const AGGREGATES_HEADER: &str = "family,method,alpha,mean_O_pct,se_O_pct,mean_Q_pct,se_Q_pct,mean_V_pct,se_V_pct";

const RECORDS_COMMENT: &str = "# one row per (run, group); *_pct columns are percentages (fraction x 100); \
O/Q/V are the aggregated objectives of the run; pct_changed is the share of all n*k recommendations \
that differ from HSC, in percent; wall_ms is search time in milliseconds";
const AGGREGATES_COMMENT: &str = "# mean and standard error (sample sd / sqrt(#seeds)) over seeds, in percent; \
rows with family `all` average the per-family values";

/// Family name used for cross-family averages.
pub const ALL_FAMILIES: &str = "all";

/// Share of the `n * k` HSC recommendations that no longer appear in
/// `solution`.
pub fn percent_changed(solution: &Solution, hsc: &Solution) -> Result<f64> {
    if solution.num_students() != hsc.num_students() || solution.k() != hsc.k() || solution.num_courses() != hsc.num_courses() {
        return Err(Error::Dimension(format!(
            "cannot compare a {}x{} (k={}) solution with a {}x{} (k={}) one",
            solution.num_students(),
            solution.num_courses(),
            solution.k(),
            hsc.num_students(),
            hsc.num_courses(),
            hsc.k()
        )));
    }
    let changed: usize = hsc
        .lists()
        .iter()
        .enumerate()
        .map(|(i, list)| list.iter().filter(|&&j| !solution.contains(i, j)).count())
        .sum();
    Ok(changed as f64 / (solution.num_students() * solution.k()) as f64)
}

/// Mean and standard error (sample standard deviation over `sqrt(len)`).
/// A single value has zero standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// One search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub family: String,
    pub method: Method,
    pub alpha: f64,
    pub seed: u64,
    pub o: Vec<f64>,
    pub q: Vec<f64>,
    pub big_o: f64,
    pub big_q: f64,
    pub value: f64,
    pub percent_changed: f64,
    pub moves_applied: u64,
    pub moves_evaluated: u64,
    /// NaN when timing was disabled.
    pub wall_ms: f64,
}

impl RunRecord {
    pub fn from_outcome(
        family: &str,
        method: Method,
        seed: u64,
        config: &SearchConfig,
        outcome: &SearchOutcome,
        hsc: &Solution,
        wall_ms: f64,
    ) -> Result<Self> {
        Ok(Self {
            family: family.to_string(),
            method,
            alpha: config.alpha,
            seed,
            o: outcome.vectors.o.clone(),
            q: outcome.vectors.q.clone(),
            big_o: aggregate_norm(&outcome.vectors.o, config.norm)?,
            big_q: aggregate_norm(&outcome.vectors.q, config.norm)?,
            value: outcome.value,
            percent_changed: percent_changed(&outcome.solution, hsc)?,
            moves_applied: outcome.stats.moves_applied,
            moves_evaluated: outcome.stats.moves_evaluated,
            wall_ms,
        })
    }
}

/// Mean and standard error of `O`, `Q` and `V` for one
/// (family, method, alpha) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub family: String,
    pub method: Method,
    pub alpha: f64,
    pub runs: usize,
    pub mean_o: f64,
    pub se_o: f64,
    pub mean_q: f64,
    pub se_q: f64,
    pub mean_v: f64,
    pub se_v: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub records: Vec<RunRecord>,
    /// Per (family, method, alpha), in record order of first appearance.
    pub aggregates: Vec<Aggregate>,
    /// Per (method, alpha), averaged over families.
    pub family_average: Vec<Aggregate>,
}

impl SweepReport {
    /// Builds aggregates from `records`.
    pub fn from_records(records: Vec<RunRecord>) -> Self {
        let mut cells: Vec<((String, Method, u64), Vec<&RunRecord>)> = Vec::new();
        for r in &records {
            let key = (r.family.clone(), r.method, r.alpha.to_bits());
            match cells.iter_mut().find(|(k, _)| *k == key) {
                Some((_, rs)) => rs.push(r),
                None => cells.push((key, vec![r])),
            }
        }
        let aggregates: Vec<Aggregate> = cells
            .iter()
            .map(|((family, method, alpha_bits), rs)| {
                let stat = |f: fn(&RunRecord) -> f64| mean_and_se(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
                let (mean_o, se_o) = stat(|r| r.big_o);
                let (mean_q, se_q) = stat(|r| r.big_q);
                let (mean_v, se_v) = stat(|r| r.value);
                Aggregate {
                    family: family.clone(),
                    method: *method,
                    alpha: f64::from_bits(*alpha_bits),
                    runs: rs.len(),
                    mean_o,
                    se_o,
                    mean_q,
                    se_q,
                    mean_v,
                    se_v,
                }
            })
            .collect();

        let mut by_cell: BTreeMap<(Method, u64), Vec<&Aggregate>> = BTreeMap::new();
        for a in &aggregates {
            by_cell.entry((a.method, a.alpha.to_bits())).or_default().push(a);
        }
        let family_average = by_cell
            .into_iter()
            .map(|((method, alpha_bits), aggs)| {
                let avg = |f: fn(&Aggregate) -> f64| aggs.iter().map(|a| f(a)).sum::<f64>() / aggs.len() as f64;
                Aggregate {
                    family: ALL_FAMILIES.to_string(),
                    method,
                    alpha: f64::from_bits(alpha_bits),
                    runs: aggs.iter().map(|a| a.runs).sum(),
                    mean_o: avg(|a| a.mean_o),
                    se_o: avg(|a| a.se_o),
                    mean_q: avg(|a| a.mean_q),
                    se_q: avg(|a| a.se_q),
                    mean_v: avg(|a| a.mean_v),
                    se_v: avg(|a| a.se_v),
                }
            })
            .collect();
        Self {
            records,
            aggregates,
            family_average,
        }
    }

    pub fn aggregate(&self, family: &str, method: Method, alpha: f64) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.family == family && a.method == method && (a.alpha - alpha).abs() < 1e-12)
    }
}

/// A benchmark family at a given group count, optionally shrunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub groups: usize,
    pub n: Option<usize>,
    pub m: Option<usize>,
}

impl FamilySpec {
    pub fn new(family: Family, groups: usize) -> Self {
        Self {
            family,
            groups,
            n: None,
            m: None,
        }
    }

    pub fn sized(mut self, n: usize, m: usize) -> Self {
        self.n = Some(n);
        self.m = Some(m);
        self
    }

    /// `uni-g2`, `gauss-1-03-g4`, ...
    pub fn name(&self) -> String {
        format!("{}-g{}", self.family, self.groups)
    }

    pub fn params(&self, seed: u64) -> GenParams {
        let mut params = preset_family(self.family, self.groups, seed);
        if let Some(n) = self.n {
            params.n = n;
        }
        if let Some(m) = self.m {
            params.m = m;
            params.buckets = params.buckets.min(m);
        }
        params
    }

    /// The six benchmark families: three difficulty levels with 2 and 4 groups.
    pub fn benchmark_grid() -> Vec<FamilySpec> {
        [2, 4]
            .into_iter()
            .flat_map(|g| Family::ALL.map(|f| FamilySpec::new(f, g)))
            .collect()
    }
}

/// Sweep settings shared by every run; `method` and `alpha` in `search` are
/// overridden per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub search: SearchConfig,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Measure wall time. When off, `wall_ms` is NaN and written as an empty
    /// field, which makes repeated sweeps byte-identical.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            jobs: 0,
            timing: true,
        }
    }
}

/// The standard weight grid `0.1, 0.2, ..., 0.9`.
pub fn alpha_grid() -> Vec<f64> {
    (1..=9).map(|i| f64::from(i) / 10.0).collect()
}

struct Prepared {
    family: usize,
    seed: u64,
    name: String,
    instance: Instance,
    hsc: Solution,
}

/// Runs every (family, method, alpha, seed) combination from the HSC
/// solution. Records come back ordered by family, method, alpha and seed in
/// the order given, independent of `jobs`. `on_record` is called from
/// worker threads as runs finish.
pub fn run_sweep(
    families: &[FamilySpec],
    methods: &[Method],
    alphas: &[f64],
    seeds: &[u64],
    config: &SweepConfig,
    on_record: Option<&(dyn Fn(&RunRecord) + Sync)>,
) -> Result<SweepReport> {
    if families.is_empty() || methods.is_empty() || alphas.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be non-empty".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;

    pool.install(|| {
        let prepared: Vec<Prepared> = families
            .iter()
            .enumerate()
            .flat_map(|(f, spec)| seeds.iter().map(move |&s| (f, spec, s)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(f, spec, seed)| {
                let generated = generate_dataset(&spec.params(seed))?;
                let instance = Instance::with_population_target(generated.dataset, generated.partition)?;
                let hsc = instance.hsc(config.search.k)?;
                Ok(Prepared {
                    family: f,
                    seed,
                    name: spec.name(),
                    instance,
                    hsc,
                })
            })
            .collect::<Result<_>>()?;

        let mut cells = Vec::new();
        for (d, _) in prepared.iter().enumerate() {
            for (mi, &method) in methods.iter().enumerate() {
                for (ai, &alpha) in alphas.iter().enumerate() {
                    cells.push((d, mi, method, ai, alpha));
                }
            }
        }
        let mut keyed: Vec<((usize, usize, usize, usize), RunRecord)> = cells
            .into_par_iter()
            .map(|(d, mi, method, ai, alpha)| {
                let data = &prepared[d];
                let run_config = SearchConfig {
                    method,
                    alpha,
                    ..config.search.clone()
                };
                let start = Instant::now();
                let outcome = optimize(&data.instance, data.hsc.clone(), &run_config)?;
                let wall_ms = if config.timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    f64::NAN
                };
                let record = RunRecord::from_outcome(&data.name, method, data.seed, &run_config, &outcome, &data.hsc, wall_ms)?;
                if let Some(cb) = on_record {
                    cb(&record);
                }
                let seed_pos = seeds.iter().position(|&s| s == data.seed).unwrap_or(0);
                Ok(((data.family, mi, ai, seed_pos), record))
            })
            .collect::<Result<_>>()?;
        keyed.sort_by_key(|(k, _)| *k);
        Ok(SweepReport::from_records(keyed.into_iter().map(|(_, r)| r).collect()))
    })
}

fn pct(x: f64) -> String {
    fmt_f64(x * 100.0)
}

/// Formats the per-group rows of one record.
pub fn record_rows(r: &RunRecord) -> Vec<String> {
    (0..r.o.len())
        .map(|p| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.family,
                r.method,
                fmt_f64(r.alpha),
                r.seed,
                p,
                pct(r.o[p]),
                pct(r.q[p]),
                pct(r.big_o),
                pct(r.big_q),
                pct(r.value),
                pct(r.percent_changed),
                r.moves_applied,
                r.moves_evaluated,
                if r.wall_ms.is_nan() { String::new() } else { fmt_f64(r.wall_ms) }
            )
        })
        .collect()
}

/// Header lines (comment plus column names) of the records CSV.
pub fn records_preamble() -> String {
    format!("{RECORDS_COMMENT}\n{RECORDS_HEADER}\n")
}

fn aggregate_row(a: &Aggregate) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        a.family,
        a.method,
        fmt_f64(a.alpha),
        pct(a.mean_o),
        pct(a.se_o),
        pct(a.mean_q),
        pct(a.se_q),
        pct(a.mean_v),
        pct(a.se_v)
    )
}

fn write_lines(path: &Path, preamble: &str, lines: impl Iterator<Item = String>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = || -> std::io::Result<()> {
        w.write_all(preamble.as_bytes())?;
        for line in lines {
            writeln!(w, "{line}")?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}

/// Writes the records CSV to `records_path` and the aggregates CSV to
/// `aggregates_path`.
pub fn emit_report(report: &SweepReport, records_path: &Path, aggregates_path: &Path) -> Result<()> {
    write_lines(
        records_path,
        &records_preamble(),
        report.records.iter().flat_map(record_rows),
    )?;
    write_lines(
        aggregates_path,
        &format!("{AGGREGATES_COMMENT}\n{AGGREGATES_HEADER}\n"),
        report
            .aggregates
            .iter()
            .chain(&report.family_average)
            .map(aggregate_row),
    )
}

#[derive(Debug, Deserialize)]
struct RecordRow {
    family: String,
    method: Method,
    alpha: f64,
    seed: u64,
    group: usize,
    o_pct: f64,
    q_pct: f64,
    #[serde(rename = "O_pct")]
    big_o_pct: f64,
    #[serde(rename = "Q_pct")]
    big_q_pct: f64,
    #[serde(rename = "V_pct")]
    v_pct: f64,
    pct_changed: f64,
    moves_applied: u64,
    moves_evaluated: u64,
    wall_ms: Option<f64>,
}

/// Parses a records CSV written by [`emit_report`].
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let mut records: Vec<RunRecord> = Vec::new();
    for row in reader.deserialize::<RecordRow>() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let same_run = records.last().is_some_and(|r| {
            r.family == row.family && r.method == row.method && r.alpha == row.alpha && r.seed == row.seed && r.o.len() == row.group
        });
        if !same_run {
            if row.group != 0 {
                return Err(Error::csv(path, format!("run starts at group {}", row.group)));
            }
            records.push(RunRecord {
                family: row.family.clone(),
                method: row.method,
                alpha: row.alpha,
                seed: row.seed,
                o: Vec::new(),
                q: Vec::new(),
                big_o: row.big_o_pct / 100.0,
                big_q: row.big_q_pct / 100.0,
                value: row.v_pct / 100.0,
                percent_changed: row.pct_changed / 100.0,
                moves_applied: row.moves_applied,
                moves_evaluated: row.moves_evaluated,
                wall_ms: row.wall_ms.unwrap_or(f64::NAN),
            });
        }
        let r = records.last_mut().expect("pushed above");
        r.o.push(row.o_pct / 100.0);
        r.q.push(row.q_pct / 100.0);
    }
    Ok(records)
}
