//! End-to-end acceptance run at full experimental scale (d = 64, 30 trials).
//!
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.
//! Build with optimizations; the test profile of this workspace does.

use std::process::ExitCode;
use std::time::Instant;

use phasesync::bounds::{check_proof_inequalities, phase_distance, Bound};
use phasesync::graph::{banded_graph, combinatorial_laplacian, data_laplacian};
use phasesync::harness::{
    run_dim_sweep, run_instance, run_noise_sweep, ExperimentConfig, InstanceSpec, Method, SweepTable,
};
use phasesync::linalg::{second_smallest_eigenvalue, ComplexVector};
use phasesync::solvers::{solve_er, solve_lsp};
use phasesync::synth::{apply_angular_noise, build_weights, random_signal, WeightScheme};
use phasesync::Complex64;
use phasesync_testkit as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SCHEMES: [WeightScheme; 3] = [WeightScheme::Unit, WeightScheme::Amplitude, WeightScheme::SquaredAmplitude];
const ALL_METHODS: [Method; 3] = [Method::Er, Method::Lsp, Method::Sdp];

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn desk_config(scheme: WeightScheme) -> ExperimentConfig {
    ExperimentConfig { d: 64, delta: 16, scheme, trials: 30, ..Default::default() }
}

fn column(table: &SweepTable, m: Method) -> Vec<f64> {
    table.error_series(m).expect("method enabled")
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut num, mut den) = (0.0, 0.0);
    for &(x, y) in points {
        num += (x.ln() - mx) * (y.ln() - my);
        den += (x.ln() - mx).powi(2);
    }
    num / den
}

fn zero_noise_recovery() -> Verdict {
    let mut worst = 0.0_f64;
    let mut ranks = Vec::new();
    for scheme in SCHEMES {
        let cfg = ExperimentConfig { alphas_deg: vec![0.0], timing_repeats: 1, ..desk_config(scheme) };
        let table = run_noise_sweep(&cfg).expect("sweep");
        for m in ALL_METHODS {
            worst = worst.max(column(&table, m)[0]);
        }
        ranks.push(table.rows[0].mean_rank.expect("sdp enabled"));
    }
    let pass = worst <= 1e-6 && ranks.iter().all(|&r| r == 1.0);
    Verdict::new(pass, format!("max mean distance {worst:.2e}, mean SDP ranks {ranks:?}"))
}

/// Randomized instances shared by the dominance, inequality, certificate and
/// `c_z` criteria.
struct Corpus {
    instances: usize,
    bound_checks: usize,
    bound_violations: Vec<String>,
    inequality_checks: usize,
    inequality_violations: Vec<String>,
    certified: usize,
    certificate_violations: Vec<String>,
    cz_checks: usize,
    cz_violations: Vec<String>,
}

fn build_corpus(n: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_5905);
    let mut c = Corpus {
        instances: 0,
        bound_checks: 0,
        bound_violations: Vec::new(),
        inequality_checks: 0,
        inequality_violations: Vec::new(),
        certified: 0,
        certificate_violations: Vec::new(),
        cz_checks: 0,
        cz_violations: Vec::new(),
    };
    for k in 0..n {
        let d = rng.random_range(4..=64usize);
        let delta = rng.random_range(2..=d.div_ceil(2));
        let alpha = (rng.random_range(0.01f64.ln()..=180f64.ln())).exp();
        let scheme = SCHEMES[k % 3];
        let spec = InstanceSpec { d, delta, scheme, alpha_deg: alpha, magnitude_noise_eps: 0.0, seed: rng.random() };
        let tag = format!("#{k} d={d} delta={delta} alpha={alpha:.4} {}", scheme.name());
        let o = run_instance(&spec, &ALL_METHODS, 1).expect("instance");
        c.instances += 1;

        let r = &o.report;
        c.bound_checks += Bound::ALL.iter().filter(|b| r.get(**b).is_some() && r.distance_for(b.target()).is_some()).count();
        for (b, dist, v) in r.violations() {
            c.bound_violations.push(format!("{tag}: {b} {v:.4e} < distance {dist:.4e}"));
        }

        let lsp = o.lsp.as_ref().expect("lsp enabled");
        let mut checks = check_proof_inequalities(&o.graph, &o.measurements, &o.er, lsp).expect("inequalities");
        let chained = 2.0 * r.get(Bound::RemarkRhs).unwrap() / r.spectral_gap.sqrt();
        let weighted = r.get(Bound::WeightedLsp).unwrap();
        let chain_holds = weighted <= chained * (1.0 + 1e-12) + 1e-15;
        c.inequality_checks += checks.len() + 1;
        if !chain_holds {
            c.inequality_violations.push(format!("{tag}: weighted_lsp {weighted:.4e} > chained {chained:.4e}"));
        }
        checks.retain(|ch| !ch.holds);
        for ch in checks {
            c.inequality_violations.push(format!("{tag}: {} {:.4e} > {:.4e}", ch.name, ch.lhs, ch.rhs));
        }

        let sdp = o.sdp.as_ref().expect("sdp enabled");
        if r.tight_sdp() == Some(true) {
            c.certified += 1;
            let gap = phase_distance(&sdp.x_round, &lsp.x_round).expect("same length");
            if sdp.numerical_rank != 1 || gap > 1e-5 {
                c.certificate_violations.push(format!("{tag}: rank {} rounding gap {gap:.2e}", sdp.numerical_rank));
            }
        }

        let upper = (2.0 + 2.0 * d as f64).sqrt();
        for er in std::iter::once(&o.er).chain(o.er_normalized.as_ref()) {
            c.cz_checks += 1;
            if !(er.c_z >= 2.0 - 1e-12 && er.c_z <= upper + 1e-12) {
                c.cz_violations.push(format!("{tag}: c_z {}", er.c_z));
            }
        }
    }
    c
}

fn first_few(v: &[String]) -> String {
    v.iter().take(3).cloned().collect::<Vec<_>>().join("; ")
}

fn naive_bound() -> Verdict {
    let spec = InstanceSpec { d: 64, delta: 16, scheme: WeightScheme::Unit, alpha_deg: 1.0, magnitude_noise_eps: 0.0, seed: 11 };
    let o = run_instance(&spec, &[Method::Er], 1).expect("instance");
    let v = o.report.get(Bound::Naive);
    Verdict::new(v == Some(16.0), format!("naive bound at d=64 is {v:?}"))
}

fn unweighted_figure() -> Verdict {
    let cfg = desk_config(WeightScheme::Unit);
    let start = Instant::now();
    let table = run_noise_sweep(&cfg).expect("sweep");
    let elapsed = start.elapsed().as_secs_f64();
    let alphas: Vec<f64> = table.rows.iter().map(|r| r.keys[0]).collect();
    let er = column(&table, Method::Er);
    let sdp = column(&table, Method::Sdp);

    let worst_ratio = er.iter().zip(&sdp).map(|(a, b)| (a / b - 1.0).abs()).fold(0.0, f64::max);
    let agree = worst_ratio <= 0.2;

    let linear: Vec<(f64, f64)> = alphas.iter().zip(&er).filter(|(a, _)| (0.1..=10.0).contains(*a)).map(|(&a, &e)| (a, e)).collect();
    let slope = loglog_slope(&linear);
    let slope_ok = (0.8..=1.2).contains(&slope);

    let ranks: Vec<f64> = table.rows.iter().map(|r| r.mean_rank.expect("sdp enabled")).collect();
    let low: Vec<f64> = alphas.iter().zip(&ranks).filter(|(a, _)| **a <= 0.1).map(|(_, &r)| r).collect();
    let high: Vec<(f64, f64)> = alphas.iter().zip(&ranks).filter(|(a, _)| **a >= 45.0).map(|(&a, &r)| (a, r)).collect();
    let low_ok = low.iter().all(|&r| r == 1.0);
    let high_ok = high.iter().all(|&(_, r)| r > 1.0);
    let fast = elapsed <= 300.0;

    let high_text: Vec<String> = high.iter().map(|(a, r)| format!("{a:.1}deg:{r:.2}")).collect();
    Verdict::new(
        agree && slope_ok && low_ok && high_ok && fast,
        format!(
            "(a) max |ER/SDP - 1| = {worst_ratio:.3} [{}]; (b) slope {slope:.3} [{}]; (c) rank 1 for alpha <= 0.1 [{}], \
             rank > 1 for alpha >= 45 [{}] ({}); sweep {elapsed:.1}s [{}]",
            ok(agree),
            ok(slope_ok),
            ok(low_ok),
            ok(high_ok),
            high_text.join(" "),
            ok(fast)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "fails"
    }
}

fn weighted_figures() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (scheme, own) in [(WeightScheme::Amplitude, Bound::AmplitudeLsp), (WeightScheme::SquaredAmplitude, Bound::SquaredLsp)] {
        let cfg = ExperimentConfig { timing_repeats: 1, methods: vec![Method::Er, Method::Lsp], ..desk_config(scheme) };
        let table = run_noise_sweep(&cfg).expect("sweep");
        let alphas: Vec<f64> = table.rows.iter().map(|r| r.keys[0]).collect();
        let series = |b: Bound| table.bound_series(b).expect("applicable");
        let (sqrt_est, linear_est) = (series(Bound::SpectralSqrt), series(Bound::SpectralLinear));
        let points: Vec<usize> = (0..alphas.len()).filter(|&i| (0.1..=30.0).contains(&alphas[i])).collect();
        for ours in [Bound::WeightedLsp, own] {
            let v = series(ours);
            let below = points.iter().filter(|&&i| v[i] < sqrt_est[i] && v[i] < linear_est[i]).count();
            let frac = below as f64 / points.len() as f64;
            pass &= frac >= 0.9;
            parts.push(format!("{} {ours} below both earlier bounds at {below}/{} points", scheme.name(), points.len()));
        }

        let cfg = ExperimentConfig { timing_repeats: 1, alphas_deg: vec![1e-3], methods: vec![Method::Er, Method::Sdp], ..desk_config(scheme) };
        let table = run_noise_sweep(&cfg).expect("sweep");
        let rank = table.rows[0].mean_rank.expect("sdp enabled");
        pass &= rank > 1.0;
        parts.push(format!("{} mean SDP rank at 1e-3 deg {rank:.2} [{}]", scheme.name(), ok(rank > 1.0)));
    }
    Verdict::new(pass, parts.join("; "))
}

fn runtime_ordering() -> Verdict {
    let cfg = ExperimentConfig {
        methods: vec![Method::Er, Method::Sdp],
        dims: vec![64, 128, 256, 512],
        dim_sweep_alpha_deg: 2.0,
        ..desk_config(WeightScheme::Unit)
    };
    let table = run_dim_sweep(&cfg).expect("sweep");
    let er = table.runtime_series(Method::Er).expect("er enabled");
    let sdp = table.runtime_series(Method::Sdp).expect("sdp enabled");
    let dims: Vec<f64> = table.rows.iter().map(|r| r.keys[0]).collect();
    let ordered = er.iter().zip(&sdp).all(|(a, b)| a.mean < b.mean);
    let slope = loglog_slope(&dims.iter().zip(&er).map(|(&d, t)| (d, t.mean)).collect::<Vec<_>>());
    let text: Vec<String> = dims
        .iter()
        .zip(er.iter().zip(&sdp))
        .map(|(d, (a, b))| format!("d={d}: ER {:.2}ms SDP {:.2}ms", a.mean * 1e3, b.mean * 1e3))
        .collect();
    Verdict::new(ordered && slope <= 1.6, format!("{}; ER slope {slope:.3}", text.join(", ")))
}

fn small_scale_oracles() -> Verdict {
    let mut worst_eig = 0.0_f64;
    let mut worst_vec = 0.0_f64;
    for d in 4..=8 {
        for scheme in SCHEMES {
            for (k, alpha) in [0.0, 3.0, 30.0, 150.0].into_iter().enumerate() {
                let band = banded_graph(d, 2 + k % (d.div_ceil(2) - 1), None).unwrap();
                let truth = random_signal(d, (d * 10 + k) as u64).unwrap();
                let ms = apply_angular_noise(&truth, &band, alpha, k as u64).unwrap();
                let g = build_weights(&ms, scheme).unwrap();
                let l = data_laplacian(&g, &ms.noisy).unwrap().as_matrix().to_rows();
                let (vals, vecs) = oracle::hermitian_eigh(&l);
                let er = solve_er(&g, &ms.noisy).unwrap();
                let scale = vals.last().unwrap().max(1.0);
                worst_eig = worst_eig.max((er.objective / d as f64 - vals[0]).abs() / scale);
                if vals[1] - vals[0] > 1e-3 * scale {
                    let overlap: Complex64 =
                        vecs[0].iter().zip(er.z.iter()).map(|(a, b)| a.conj() * b / (d as f64).sqrt()).sum();
                    worst_vec = worst_vec.max((1.0 - overlap.norm()).abs());
                }
                let lg = combinatorial_laplacian(&g);
                let gap = second_smallest_eigenvalue(&lg, &ComplexVector::ones(d)).unwrap();
                worst_eig = worst_eig.max((gap - oracle::eigenvalues(&lg.as_matrix().to_rows())[1]).abs() / scale);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_dist = 0.0_f64;
    for _ in 0..25 {
        let d = rng.random_range(2..=8);
        let mut torus = || -> Vec<Complex64> { (0..d).map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect() };
        let (a, b) = (torus(), torus());
        let exact = phase_distance(&a, &b).unwrap();
        worst_dist = worst_dist.max((exact - oracle::grid_phase_distance(&a, &b, 0.01)).abs());
    }

    let mut worst_excess = f64::NEG_INFINITY;
    for scheme in SCHEMES {
        for (k, alpha) in [0.5, 10.0, 60.0, 120.0].into_iter().enumerate() {
            let band = banded_graph(4, 2, None).unwrap();
            let truth = random_signal(4, 500 + k as u64).unwrap();
            let ms = apply_angular_noise(&truth, &band, alpha, 900 + k as u64).unwrap();
            let g = build_weights(&ms, scheme).unwrap();
            let l = data_laplacian(&g, &ms.noisy).unwrap().as_matrix().to_rows();
            let (grid_min, _) = oracle::grid_torus_minimum(&l, 2.0);
            // objective change over half a grid step in every coordinate
            let norm = oracle::spectral_norm(&l);
            let step = 3f64.sqrt() * 2.0 * (1f64.to_radians() / 2.0).sin();
            let slack = 2.0 * norm * 2.0 * step + norm * step * step;
            let lsp = solve_lsp(&g, &ms.noisy, None).unwrap();
            worst_excess = worst_excess.max(lsp.objective - (grid_min + slack));
        }
    }

    let pass = worst_eig <= 1e-8 && worst_vec <= 1e-8 && worst_dist <= 1e-4 && worst_excess <= 0.0;
    Verdict::new(
        pass,
        format!(
            "eigenvalue error {worst_eig:.1e}, eigenvector defect {worst_vec:.1e}, distance vs grid {worst_dist:.1e}, \
             GPM minus (grid + slack) {worst_excess:.2e}"
        ),
    )
}

fn main() -> ExitCode {
    let total = Instant::now();
    let mut verdicts: Vec<(u32, &str, Verdict)> = Vec::new();

    verdicts.push((1, "exact recovery at zero noise", zero_noise_recovery()));

    let corpus = build_corpus(1002);
    verdicts.push((
        2,
        "bound dominance on the randomized corpus",
        Verdict::new(
            corpus.bound_violations.is_empty() && corpus.instances >= 1000,
            format!(
                "{} instances, {} bound checks, {} violations {}",
                corpus.instances,
                corpus.bound_checks,
                corpus.bound_violations.len(),
                first_few(&corpus.bound_violations)
            ),
        ),
    ));
    verdicts.push((
        3,
        "intermediate inequalities on the corpus",
        Verdict::new(
            corpus.inequality_violations.is_empty(),
            format!(
                "{} checks, {} violations {}",
                corpus.inequality_checks,
                corpus.inequality_violations.len(),
                first_few(&corpus.inequality_violations)
            ),
        ),
    ));
    verdicts.push((4, "naive bound constant", naive_bound()));
    verdicts.push((5, "unweighted noise sweep shape", unweighted_figure()));
    verdicts.push((6, "weighted noise sweep shape", weighted_figures()));
    verdicts.push((7, "runtime ordering over dimension", runtime_ordering()));
    verdicts.push((8, "small-scale oracle equivalence", small_scale_oracles()));
    verdicts.push((
        9,
        "tightness certificate consistency",
        Verdict::new(
            corpus.certificate_violations.is_empty(),
            format!(
                "{} certified instances, {} inconsistent {}",
                corpus.certified,
                corpus.certificate_violations.len(),
                first_few(&corpus.certificate_violations)
            ),
        ),
    ));
    verdicts.push((
        10,
        "c_z range",
        Verdict::new(
            corpus.cz_violations.is_empty(),
            format!("{} eigenvector results, {} out of range {}", corpus.cz_checks, corpus.cz_violations.len(), first_few(&corpus.cz_violations)),
        ),
    ));

    verdicts.sort_by_key(|v| v.0);
    let mut failed = 0;
    for (id, name, v) in &verdicts {
        println!("{} criterion {id:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed in {:.1}s", verdicts.len() - failed, total.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
