//! Seeded Monte Carlo sweeps over noise level, dimension and band width,
//! with CSV output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use crate::bounds::{eval_bounds, Bound, BoundReport, InstanceResults};
use crate::error::{Error, Result};
use crate::graph::{banded_graph, WeightedGraph};
use crate::solvers::{solve_er, solve_er_normalized, solve_lsp, solve_sdp, SdpResult, SolverResult};
use crate::synth::{apply_noise, build_weights, random_signal, MeasurementSet, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Er,
    Lsp,
    Sdp,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Er, Method::Lsp, Method::Sdp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Er => "er",
            Method::Lsp => "lsp",
            Method::Sdp => "sdp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}' (expected er, lsp or sdp)")))
    }
}

/// 25 log-spaced noise levels from 0.01 to 180 degrees.
pub fn default_alpha_grid() -> Vec<f64> {
    let (lo, hi) = (0.01f64.ln(), 180f64.ln());
    (0..25).map(|k| (lo + (hi - lo) * k as f64 / 24.0).exp()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub delta: usize,
    pub scheme: WeightScheme,
    pub methods: Vec<Method>,
    pub alphas_deg: Vec<f64>,
    pub dims: Vec<usize>,
    pub deltas: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub magnitude_noise_eps: f64,
    /// Noise level of the dimension sweep.
    pub dim_sweep_alpha_deg: f64,
    /// Noise levels evaluated at every band width of the band sweep.
    pub delta_sweep_alphas_deg: Vec<f64>,
    /// Solves per instance and method; the median time is reported.
    pub timing_repeats: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 64,
            delta: 16,
            scheme: WeightScheme::Unit,
            methods: Method::ALL.to_vec(),
            alphas_deg: default_alpha_grid(),
            dims: vec![64, 128, 256, 512],
            deltas: vec![2, 4, 8, 12, 16, 20, 24, 28, 32],
            trials: 30,
            seed: 2020,
            magnitude_noise_eps: 0.0,
            dim_sweep_alpha_deg: 2.0,
            delta_sweep_alphas_deg: vec![0.01, 2.0, 40.0, 90.0],
            timing_repeats: 3,
        }
    }
}

fn check_delta(d: usize, delta: usize) -> Result<()> {
    if d < 3 || delta < 2 || delta > d.div_ceil(2) {
        return Err(Error::InvalidArgument(format!(
            "band width {delta} is not valid for d = {d} (need d >= 3 and 2 <= delta <= {})",
            d.div_ceil(2)
        )));
    }
    Ok(())
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("noise level list is empty".into()));
    }
    match alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        Some(a) => Err(Error::InvalidArgument(format!("noise level {a} must be finite and nonnegative"))),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    fn validate_common(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.timing_repeats == 0 {
            return Err(Error::InvalidArgument("timing repeats must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument("no methods selected".into()));
        }
        for (k, m) in self.methods.iter().enumerate() {
            if self.methods[..k].contains(m) {
                return Err(Error::InvalidArgument(format!("method {m} listed twice")));
            }
        }
        if !(0.0..1.0).contains(&self.magnitude_noise_eps) {
            return Err(Error::InvalidArgument(format!(
                "magnitude noise {} must lie in [0, 1)",
                self.magnitude_noise_eps
            )));
        }
        Ok(())
    }

    fn validate_noise_sweep(&self) -> Result<()> {
        self.validate_common()?;
        check_delta(self.d, self.delta)?;
        check_alphas(&self.alphas_deg)
    }

    fn validate_dim_sweep(&self) -> Result<()> {
        self.validate_common()?;
        if self.dims.is_empty() {
            return Err(Error::InvalidArgument("dimension list is empty".into()));
        }
        if self.dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("dimensions must be strictly increasing".into()));
        }
        for &d in &self.dims {
            check_delta(d, self.delta)?;
        }
        check_alphas(&[self.dim_sweep_alpha_deg])
    }

    fn validate_delta_sweep(&self) -> Result<()> {
        self.validate_common()?;
        if self.deltas.is_empty() {
            return Err(Error::InvalidArgument("band width list is empty".into()));
        }
        for &delta in &self.deltas {
            check_delta(self.d, delta)?;
        }
        check_alphas(&self.delta_sweep_alphas_deg)
    }

    /// Every check the sweeps perform before running.
    pub fn validate(&self) -> Result<()> {
        self.validate_noise_sweep()?;
        self.validate_dim_sweep()?;
        self.validate_delta_sweep()
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-instance seed from the master seed, the sweep coordinates and the trial.
pub fn instance_seed(master: u64, keys: &[f64], trial: usize) -> u64 {
    let mut h = splitmix(master);
    for k in keys {
        h = splitmix(h ^ k.to_bits());
    }
    splitmix(h ^ trial as u64)
}

/// One synthetic problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceSpec {
    pub d: usize,
    pub delta: usize,
    pub scheme: WeightScheme,
    pub alpha_deg: f64,
    pub magnitude_noise_eps: f64,
    pub seed: u64,
}

/// Everything computed for one instance.
#[derive(Debug, Clone)]
pub struct InstanceOutcome {
    pub graph: WeightedGraph,
    pub measurements: MeasurementSet,
    pub er: SolverResult,
    pub lsp: Option<SolverResult>,
    pub sdp: Option<SdpResult>,
    /// Degree-normalized relaxation, computed for unit weights only.
    pub er_normalized: Option<SolverResult>,
    pub report: BoundReport,
    /// Median wall-clock seconds per enabled method.
    pub runtimes: Vec<(Method, f64)>,
}

fn timed<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(T, f64)> {
    let mut times = Vec::with_capacity(repeats);
    let mut out = None;
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        let r = f()?;
        times.push(start.elapsed().as_secs_f64());
        out = Some(r);
    }
    times.sort_by(f64::total_cmp);
    Ok((out.expect("at least one run"), times[times.len() / 2]))
}

/// Generates, solves and evaluates one instance. The eigenvector relaxation
/// always runs because every bound needs its `c_z`.
pub fn run_instance(spec: &InstanceSpec, methods: &[Method], timing_repeats: usize) -> Result<InstanceOutcome> {
    let band = banded_graph(spec.d, spec.delta, None)?;
    let truth = random_signal(spec.d, splitmix(spec.seed ^ 1))?;
    let ms = apply_noise(&truth, &band, spec.alpha_deg, spec.magnitude_noise_eps, splitmix(spec.seed ^ 2))?;
    let g = build_weights(&ms, spec.scheme)?;

    let mut runtimes = Vec::new();
    let (er, t) = timed(if methods.contains(&Method::Er) { timing_repeats } else { 1 }, || solve_er(&g, &ms.noisy))?;
    if methods.contains(&Method::Er) {
        runtimes.push((Method::Er, t));
    }
    let lsp = if methods.contains(&Method::Lsp) {
        let (r, t) = timed(timing_repeats, || solve_lsp(&g, &ms.noisy, None))?;
        runtimes.push((Method::Lsp, t));
        Some(r)
    } else {
        None
    };
    let sdp = if methods.contains(&Method::Sdp) {
        let (r, t) = timed(timing_repeats, || solve_sdp(&g, &ms.noisy))?;
        runtimes.push((Method::Sdp, t));
        Some(r)
    } else {
        None
    };
    let er_normalized = if spec.scheme == WeightScheme::Unit { Some(solve_er_normalized(&g, &ms.noisy)?) } else { None };
    let report = eval_bounds(
        &g,
        spec.scheme,
        &ms,
        InstanceResults { er: &er, lsp: lsp.as_ref(), sdp: sdp.as_ref(), er_normalized: er_normalized.as_ref() },
    )?;
    runtimes.sort_by_key(|&(m, _)| methods.iter().position(|x| *x == m));
    Ok(InstanceOutcome { graph: g, measurements: ms, er, lsp, sdp, er_normalized, report, runtimes })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Trial means at one sweep point. Vectors are aligned with the owning
/// table's `methods` and `bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub keys: Vec<f64>,
    pub errors: Vec<f64>,
    pub bounds: Vec<f64>,
    /// Mean numerical rank of the SDP solution, when SDP ran.
    pub mean_rank: Option<f64>,
    /// Mean `||z||_inf` of the eigenvector relaxation.
    pub mean_sup_norm: f64,
    pub runtimes: Vec<RuntimeStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub key_names: Vec<String>,
    pub methods: Vec<Method>,
    pub bounds: Vec<Bound>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    fn new(key_names: &[&str], cfg: &ExperimentConfig) -> Self {
        Self {
            key_names: key_names.iter().map(|s| s.to_string()).collect(),
            methods: cfg.methods.clone(),
            bounds: Bound::applicable(cfg.scheme),
            rows: Vec::new(),
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = self.key_names.clone();
        h.extend(self.methods.iter().map(|m| format!("err_{m}")));
        h.extend(self.bounds.iter().map(|b| format!("bound_{b}")));
        h.push("mean_rank".into());
        h.push("mean_sup_norm_z".into());
        for m in &self.methods {
            for stat in ["mean", "min", "max"] {
                h.push(format!("runtime_{m}_{stat}"));
            }
        }
        h
    }

    /// Position of an error column in each row's `errors`.
    pub fn method_index(&self, m: Method) -> Option<usize> {
        self.methods.iter().position(|&x| x == m)
    }

    pub fn bound_index(&self, b: Bound) -> Option<usize> {
        self.bounds.iter().position(|&x| x == b)
    }

    /// Column of mean errors for `m` across rows.
    pub fn error_series(&self, m: Method) -> Option<Vec<f64>> {
        let k = self.method_index(m)?;
        Some(self.rows.iter().map(|r| r.errors[k]).collect())
    }

    pub fn bound_series(&self, b: Bound) -> Option<Vec<f64>> {
        let k = self.bound_index(b)?;
        Some(self.rows.iter().map(|r| r.bounds[k]).collect())
    }

    pub fn runtime_series(&self, m: Method) -> Option<Vec<RuntimeStats>> {
        let k = self.method_index(m)?;
        Some(self.rows.iter().map(|r| r.runtimes[k]).collect())
    }
}

fn sweep_point(
    table: &SweepTable,
    keys: Vec<f64>,
    make: impl Fn(usize) -> InstanceSpec,
    trials: usize,
    repeats: usize,
) -> Result<SweepRow> {
    let n = trials as f64;
    let mut errors = vec![0.0; table.methods.len()];
    let mut bounds = vec![0.0; table.bounds.len()];
    let mut rank = 0.0;
    let mut sup = 0.0;
    let mut times: Vec<Vec<f64>> = vec![Vec::with_capacity(trials); table.methods.len()];
    for trial in 0..trials {
        let out = run_instance(&make(trial), &table.methods, repeats)?;
        let r = &out.report;
        for (k, m) in table.methods.iter().enumerate() {
            let dist = match m {
                Method::Er => Some(r.dist_er),
                Method::Lsp => r.dist_lsp,
                Method::Sdp => r.dist_sdp,
            };
            errors[k] += dist.expect("enabled method has a distance");
        }
        for (k, b) in table.bounds.iter().enumerate() {
            bounds[k] += r.get(*b).expect("applicable bound is evaluated");
        }
        if let Some(sdp) = &out.sdp {
            rank += sdp.numerical_rank as f64;
        }
        sup += out.er.sup_norm_z;
        for (m, t) in out.runtimes {
            times[table.method_index(m).expect("enabled method")].push(t);
        }
    }
    // sums first so that constant columns average exactly
    errors.iter_mut().chain(bounds.iter_mut()).for_each(|v| *v /= n);
    let (rank, sup) = (rank / n, sup / n);
    let runtimes = times
        .iter()
        .map(|ts| RuntimeStats {
            mean: ts.iter().sum::<f64>() / ts.len() as f64,
            min: ts.iter().copied().fold(f64::INFINITY, f64::min),
            max: ts.iter().copied().fold(0.0, f64::max),
        })
        .collect();
    Ok(SweepRow {
        keys,
        errors,
        bounds,
        mean_rank: table.methods.contains(&Method::Sdp).then_some(rank),
        mean_sup_norm: sup,
        runtimes,
    })
}

/// One row per noise level at fixed `d` and `delta`.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate_noise_sweep()?;
    let mut table = SweepTable::new(&["alpha_deg"], cfg);
    for &alpha in &cfg.alphas_deg {
        let make = |trial| InstanceSpec {
            d: cfg.d,
            delta: cfg.delta,
            scheme: cfg.scheme,
            alpha_deg: alpha,
            magnitude_noise_eps: cfg.magnitude_noise_eps,
            seed: instance_seed(cfg.seed, &[alpha], trial),
        };
        let row = sweep_point(&table, vec![alpha], make, cfg.trials, cfg.timing_repeats)?;
        table.rows.push(row);
    }
    Ok(table)
}

/// One row per dimension at the fixed noise level `dim_sweep_alpha_deg`.
pub fn run_dim_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate_dim_sweep()?;
    let mut table = SweepTable::new(&["d"], cfg);
    for &d in &cfg.dims {
        let make = |trial| InstanceSpec {
            d,
            delta: cfg.delta,
            scheme: cfg.scheme,
            alpha_deg: cfg.dim_sweep_alpha_deg,
            magnitude_noise_eps: cfg.magnitude_noise_eps,
            seed: instance_seed(cfg.seed, &[d as f64], trial),
        };
        let row = sweep_point(&table, vec![d as f64], make, cfg.trials, cfg.timing_repeats)?;
        table.rows.push(row);
    }
    Ok(table)
}

/// One row per (band width, noise level) pair.
pub fn run_delta_sweep(cfg: &ExperimentConfig) -> Result<SweepTable> {
    cfg.validate_delta_sweep()?;
    let mut table = SweepTable::new(&["delta", "alpha_deg"], cfg);
    for &delta in &cfg.deltas {
        for &alpha in &cfg.delta_sweep_alphas_deg {
            let keys = vec![delta as f64, alpha];
            let make = |trial| InstanceSpec {
                d: cfg.d,
                delta,
                scheme: cfg.scheme,
                alpha_deg: alpha,
                magnitude_noise_eps: cfg.magnitude_noise_eps,
                seed: instance_seed(cfg.seed, &keys, trial),
            };
            let row = sweep_point(&table, keys.clone(), make, cfg.trials, cfg.timing_repeats)?;
            table.rows.push(row);
        }
    }
    Ok(table)
}

/// Shortest decimal that parses back to the same `f64`.
fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// CSV text of a table: header, then one line per row; empty cells for
/// values that were not computed.
pub fn to_csv(table: &SweepTable) -> String {
    let mut out = table.header().join(",");
    out.push('\n');
    for row in &table.rows {
        let mut cells: Vec<String> = Vec::new();
        cells.extend(row.keys.iter().map(|&x| fmt_num(x)));
        cells.extend(row.errors.iter().map(|&x| fmt_num(x)));
        cells.extend(row.bounds.iter().map(|&x| fmt_num(x)));
        cells.push(row.mean_rank.map(fmt_num).unwrap_or_default());
        cells.push(fmt_num(row.mean_sup_norm));
        for s in &row.runtimes {
            cells.extend([fmt_num(s.mean), fmt_num(s.min), fmt_num(s.max)]);
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(table: &SweepTable, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to write".into()));
    }
    let mut f = fs::File::create(path)?;
    f.write_all(to_csv(table).as_bytes())?;
    Ok(())
}

fn csv_err(line: usize, msg: impl fmt::Display) -> Error {
    Error::Csv(format!("line {line}: {msg}"))
}

/// Parses text written by [`to_csv`].
pub fn parse_csv(text: &str) -> Result<SweepTable> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| csv_err(1, "missing header"))?.split(',').collect();
    let mut key_names = Vec::new();
    let mut methods = Vec::new();
    let mut bounds = Vec::new();
    let mut runtime_methods = Vec::new();
    let mut saw_rank = false;
    let mut saw_sup = false;
    for name in &header {
        if let Some(m) = name.strip_prefix("err_") {
            methods.push(m.parse::<Method>().map_err(|e| csv_err(1, e))?);
        } else if let Some(b) = name.strip_prefix("bound_") {
            let b = Bound::ALL.into_iter().find(|x| x.name() == b).ok_or_else(|| csv_err(1, format!("unknown bound {b}")))?;
            bounds.push(b);
        } else if *name == "mean_rank" {
            saw_rank = true;
        } else if *name == "mean_sup_norm_z" {
            saw_sup = true;
        } else if let Some(rest) = name.strip_prefix("runtime_") {
            let m = rest.rsplit_once('_').map(|(m, _)| m).unwrap_or(rest);
            runtime_methods.push(m.parse::<Method>().map_err(|e| csv_err(1, e))?);
        } else if methods.is_empty() && bounds.is_empty() {
            key_names.push(name.to_string());
        } else {
            return Err(csv_err(1, format!("unexpected column {name}")));
        }
    }
    runtime_methods.dedup();
    if !saw_rank || !saw_sup || runtime_methods != methods {
        return Err(csv_err(1, "header does not describe a sweep table"));
    }
    let mut table = SweepTable { key_names, methods, bounds, rows: Vec::new() };
    let expected = table.header();
    if expected.len() != header.len() || expected.iter().zip(&header).any(|(a, b)| a != b) {
        return Err(csv_err(1, "columns are out of order"));
    }
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(csv_err(lineno, format!("expected {} fields, found {}", header.len(), cells.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| csv_err(lineno, format!("'{s}': {e}")));
        let mut it = cells.into_iter();
        let mut take = |k: usize| -> Result<Vec<f64>> { it.by_ref().take(k).map(num).collect() };
        let keys = take(table.key_names.len())?;
        let errors = take(table.methods.len())?;
        let bounds = take(table.bounds.len())?;
        let rank_cell = it.next().expect("length checked");
        let mean_rank = if rank_cell.is_empty() { None } else { Some(num(rank_cell)?) };
        let mean_sup_norm = num(it.next().expect("length checked"))?;
        let flat: Vec<f64> = it.map(num).collect::<Result<_>>()?;
        let runtimes = flat.chunks(3).map(|c| RuntimeStats { mean: c[0], min: c[1], max: c[2] }).collect();
        table.rows.push(SweepRow { keys, errors, bounds, mean_rank, mean_sup_norm, runtimes });
    }
    Ok(table)
}

pub fn read_csv(path: &Path) -> Result<SweepTable> {
    parse_csv(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            d: 12,
            delta: 3,
            alphas_deg: vec![0.0, 5.0],
            dims: vec![8, 12],
            deltas: vec![2, 4],
            trials: 2,
            timing_repeats: 1,
            delta_sweep_alphas_deg: vec![1.0],
            ..Default::default()
        }
    }

    #[test]
    fn alpha_grid_spans_range() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[24] - 180.0).abs() < 1e-10);
    }

    #[test]
    fn seeds_differ_by_coordinate() {
        let a = instance_seed(1, &[2.0], 0);
        assert_ne!(a, instance_seed(1, &[2.0], 1));
        assert_ne!(a, instance_seed(1, &[3.0], 0));
        assert_ne!(a, instance_seed(2, &[2.0], 0));
        assert_eq!(a, instance_seed(1, &[2.0], 0));
    }

    #[test]
    fn zero_noise_row() {
        let t = run_noise_sweep(&small_cfg()).unwrap();
        let row = &t.rows[0];
        assert!(row.errors.iter().all(|&e| e < 1e-7));
        assert_eq!(row.mean_rank, Some(1.0));
        assert_eq!(t.header().len(), 1 + 3 + t.bounds.len() + 9 + 2);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = run_noise_sweep(&small_cfg()).unwrap();
        let back = parse_csv(&to_csv(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn csv_blank_rank_without_sdp() {
        let cfg = ExperimentConfig { methods: vec![Method::Er], scheme: WeightScheme::Amplitude, ..small_cfg() };
        let t = run_delta_sweep(&cfg).unwrap();
        let text = to_csv(&t);
        assert!(text.lines().nth(1).unwrap().contains(",,"));
        assert_eq!(parse_csv(&text).unwrap(), t);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = ExperimentConfig { trials: 0, ..small_cfg() };
        assert!(run_noise_sweep(&bad).is_err());
        let bad = ExperimentConfig { delta: 7, ..small_cfg() };
        assert!(run_noise_sweep(&bad).is_err());
        let bad = ExperimentConfig { methods: vec![Method::Er, Method::Er], ..small_cfg() };
        assert!(run_noise_sweep(&bad).is_err());
        let bad = ExperimentConfig { dims: vec![12, 8], ..small_cfg() };
        assert!(run_dim_sweep(&bad).is_err());
    }
}
