//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (`harness = false`) so the report is printed even
//! when everything passes.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use ssnmf::analysis::detect_outliers;
use ssnmf::data::{synthetic_outlier, synthetic_three_block};
use ssnmf::linalg::l20_norm;
use ssnmf::metrics::{
    assign_clusters, entropy_metric, nmi, orthogonality_score, purity, LabelVector,
};
use ssnmf::objective::{grad_h, grad_w, objective_value, PenaltyWeight};
use ssnmf::prox::{prox_col_sparse_nonneg, prox_entry_sparse_nonneg, prox_row_sparse_nonneg};
use ssnmf::solver::{
    continuation_solve_observed, init_factors, solve, solve_observed, ModelSpec, SolverConfig,
    Variant,
};
use ssnmf::DenseMatrix;

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

const SEEDS: std::ops::Range<u64> = 0..10;

fn defaults(seed: u64, accelerate: bool) -> SolverConfig {
    SolverConfig {
        seed,
        accelerate,
        ..SolverConfig::default()
    }
}

/// Prox maps reach the brute-force minimum distance to within 1e-12.
fn prox_oracle() -> Outcome {
    let mut rng = rng(0x5eed_0001);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut infeasible = 0;
    for m_idx in 0..200 {
        let rows = rng.gen_range(1..=6);
        let cols = rng.gen_range(1..=4);
        let m = random_matrix(&mut rng, rows, cols, m_idx % 3 == 0);
        for k in 0..=3 {
            let rs = prox_row_sparse_nonneg(&m, k);
            let cs = prox_col_sparse_nonneg(&m, k);
            let es = prox_entry_sparse_nonneg(&m, k);
            let nonneg = |w: &DenseMatrix| w.as_slice().iter().all(|v| *v >= 0.0);
            let col_ok =
                (0..cs.cols()).all(|j| cs.col(j).iter().filter(|v| **v != 0.0).count() <= k);
            let ent_ok = es.as_slice().iter().filter(|v| **v != 0.0).count() <= k;
            if !(nonneg(&rs)
                && nonneg(&cs)
                && nonneg(&es)
                && l20_norm(&rs) <= k
                && col_ok
                && ent_ok)
            {
                infeasible += 1;
            }
            worst = worst
                .max((dist_sq(&m, &rs) - brute_row_sparse(&m, k)).abs())
                .max((dist_sq(&m, &cs) - brute_col_sparse(&m, k)).abs())
                .max((dist_sq(&m, &es) - brute_entry_sparse(&m, k)).abs());
            cases += 3;
        }
    }
    outcome(
        worst <= 1e-12 && infeasible == 0,
        format!("{cases} prox evaluations, max distance gap {worst:.1e}, infeasible outputs {infeasible}"),
    )
}

/// Analytic gradients agree with central differences to 1e-6 relative error.
fn gradients() -> Outcome {
    let mut rng = rng(0x5eed_0002);
    let mut worst: f64 = 0.0;
    for inst in 0..20 {
        let p = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=8);
        let r = rng.gen_range(1..=3);
        let rho = [0.0, 0.5, 2.0][inst % 3];
        let weight = PenaltyWeight::new(rho).unwrap();
        let x = random_nonneg(&mut rng, p, n);
        let w = random_nonneg(&mut rng, p, r);
        let h = random_nonneg(&mut rng, r, n);
        let gh = grad_h(&x, &w, &h, weight).unwrap();
        let gw = grad_w(&x, &w, &h).unwrap();
        let fd_h = finite_difference(&h, |hh| objective_value(&x, &w, hh, weight).unwrap());
        let fd_w = finite_difference(&w, |ww| objective_value(&x, ww, &h, weight).unwrap());
        let rel = |g: &DenseMatrix, fd: &DenseMatrix| {
            dist_sq(g, fd).sqrt()
                / dist_sq(g, &DenseMatrix::zeros(g.rows(), g.cols()))
                    .sqrt()
                    .max(1e-300)
        };
        worst = worst.max(rel(&gh, &fd_h)).max(rel(&gw, &fd_w));
    }
    outcome(
        worst <= 1e-6,
        format!("20 instances, worst relative error {worst:.2e}"),
    )
}

/// No accepted iterate raises the objective by more than 1e-10.
fn monotone_descent() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut iterates = 0;
    for seed in SEEDS {
        let x = synthetic_three_block(seed).x;
        for spec in [
            ModelSpec::new(Variant::OnmfL20Rho, 3, 120).with_rho(0.5),
            ModelSpec::new(Variant::NmfL20, 3, 120),
        ] {
            for accelerate in [false, true] {
                let config = defaults(seed, accelerate);
                let start = init_factors(&x, &spec, &config).unwrap();
                let mut prev = start.objective;
                solve_observed(&x, &spec, start, &config, &mut |row, _, _| {
                    let rise = row.objective - prev;
                    worst = worst.max(rise);
                    if rise > 1e-10 {
                        violations += 1;
                    }
                    prev = row.objective;
                    iterates += 1;
                })
                .unwrap();
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{iterates} iterates over 40 runs, largest rise {worst:.2e}, violations {violations}"
        ),
    )
}

/// Every accepted iterate of the sparse variants satisfies its constraint.
fn sparsity_feasibility() -> Outcome {
    let mut violations = 0;
    let mut iterates = 0;
    for seed in 0..3u64 {
        let x = synthetic_three_block(seed).x;
        for spec in [
            ModelSpec::new(Variant::NmfL20, 3, 120),
            ModelSpec::new(Variant::OnmfL20, 3, 120),
            ModelSpec::new(Variant::NmfLc0, 3, 40),
            ModelSpec::new(Variant::OnmfLc0, 3, 40),
        ] {
            for accelerate in [false, true] {
                let config = defaults(seed, accelerate);
                let start = init_factors(&x, &spec, &config).unwrap();
                let k = spec.k;
                let row_sparse = matches!(spec.variant, Variant::NmfL20 | Variant::OnmfL20);
                let mut check = |w: &DenseMatrix| {
                    let ok = if row_sparse {
                        // count non-zero rows directly
                        (0..w.rows())
                            .filter(|&i| w.row(i).iter().any(|v| *v != 0.0))
                            .count()
                            <= k
                    } else {
                        (0..w.cols()).all(|j| w.col(j).iter().filter(|v| **v != 0.0).count() <= k)
                    };
                    if !ok || w.as_slice().iter().any(|v| *v < 0.0) {
                        violations += 1;
                    }
                    iterates += 1;
                };
                check(&start.w);
                solve_observed(&x, &spec, start, &config, &mut |_, w, _| check(w)).unwrap();
            }
        }
    }
    outcome(
        violations == 0,
        format!("{iterates} iterates checked, violations {violations}"),
    )
}

/// Median iterations to tolerance: maPALM strictly below PALM.
fn acceleration() -> Outcome {
    let clock = Instant::now();
    let spec = ModelSpec::new(Variant::OnmfL20Rho, 3, 120).with_rho(0.5);
    let mut palm = Vec::new();
    let mut mapalm = Vec::new();
    for seed in SEEDS {
        let x = synthetic_three_block(seed).x;
        palm.push(
            solve(&x, &spec, &defaults(seed, false))
                .unwrap()
                .1
                .iterations() as f64,
        );
        mapalm.push(
            solve(&x, &spec, &defaults(seed, true))
                .unwrap()
                .1
                .iterations() as f64,
        );
    }
    let (mp, mm) = (median(&palm), median(&mapalm));
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        mm < mp && secs < 120.0,
        format!("median iterations PALM {mp} vs maPALM {mm}, total {secs:.1} s of 120 s; PALM {palm:?} maPALM {mapalm:?}"),
    )
}

/// Mean NMI over 10 restarts: row-sparse NMF at least plain NMF.
fn sparse_vs_plain() -> Outcome {
    let ds = synthetic_three_block(0);
    let truth = ds.truth.clone().unwrap();
    let mean_nmi = |spec: &ModelSpec| -> f64 {
        SEEDS
            .map(|seed| {
                let (pair, _) = solve(&ds.x, spec, &defaults(seed, true)).unwrap();
                nmi(&assign_clusters(&pair.h), &truth).unwrap()
            })
            .sum::<f64>()
            / SEEDS.count() as f64
    };
    let sparse = mean_nmi(&ModelSpec::new(Variant::NmfL20, 3, 120));
    let plain = mean_nmi(&ModelSpec::new(Variant::Nmf, 3, 120));
    outcome(
        sparse >= plain,
        format!("mean NMI nmf-l20 {sparse:.4} vs nmf {plain:.4}"),
    )
}

/// Continuation lowers the orthogonality score and leaves H with one
/// dominant entry per column.
fn orthogonality_continuation() -> Outcome {
    let spec = ModelSpec::new(Variant::OnmfL20, 3, 120);
    let mut first = Vec::new();
    let mut last = Vec::new();
    let mut dominant = Vec::new();
    for seed in SEEDS {
        let x = synthetic_three_block(seed).x;
        let config = defaults(seed, true);
        let start = init_factors(&x, &spec, &config).unwrap();
        let mut scores = Vec::new();
        let (pair, _) = continuation_solve_observed(&x, &spec, start, &config, |_, _, p| {
            scores.push(orthogonality_score(&p.h))
        })
        .unwrap();
        first.push(scores[0]);
        last.push(*scores.last().unwrap());
        let h = &pair.h;
        let good = (0..h.cols())
            .filter(|&j| {
                let mut c = h.col(j).to_vec();
                c.sort_by(|a, b| b.total_cmp(a));
                c.len() < 2 || c[1] <= 0.01 * c[0]
            })
            .count();
        dominant.push(good as f64 / h.cols() as f64);
    }
    let (m1, mk, md) = (median(&first), median(&last), median(&dominant));
    outcome(
        mk < m1 && md >= 0.9,
        format!(
            "median orthogonality score step 1 {m1:.4} -> step K {mk:.4}; median share of columns with a dominant entry {:.1}% (need >= 90%)",
            100.0 * md
        ),
    )
}

/// The 20 smallest H column maxima are mostly the outlier columns.
fn outlier_detection() -> Outcome {
    let spec = ModelSpec::new(Variant::OnmfL20, 3, 90);
    let mut hits = Vec::new();
    for seed in SEEDS {
        let x = synthetic_outlier(seed).x;
        let (pair, _) = solve(&x, &spec, &defaults(seed, true)).unwrap();
        let found = detect_outliers(&pair.h, 20).unwrap();
        hits.push(found.iter().filter(|j| (40..60).contains(*j)).count() as f64);
    }
    let m = median(&hits);
    outcome(
        m >= 18.0,
        format!("median recovered outliers {m} of 20; per seed {hits:?}"),
    )
}

/// Metrics match scalar-loop evaluations and ignore label names.
fn metric_oracles() -> Outcome {
    let mut rng = rng(0x5eed_0009);
    let mut worst: f64 = 0.0;
    let mut mismatched_errors = 0;
    for _ in 0..50 {
        let n = rng.gen_range(1..=30);
        let c_pred = rng.gen_range(1..=5);
        let c_truth = rng.gen_range(1..=5);
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c_pred)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c_truth)).collect();
        // arbitrary injective relabelings
        let shift_p = rng.gen_range(0..1000);
        let shift_t = rng.gen_range(0..1000);
        let pred2: Vec<usize> = pred
            .iter()
            .map(|l| (c_pred - 1 - l) * 13 + shift_p)
            .collect();
        let truth2: Vec<usize> = truth
            .iter()
            .map(|l| (c_truth - 1 - l) * 7 + shift_t)
            .collect();

        let (p, t) = (
            LabelVector::new(pred.clone()),
            LabelVector::new(truth.clone()),
        );
        let (p2, t2) = (LabelVector::new(pred2), LabelVector::new(truth2));
        let values = [
            (
                nmi(&p, &t).unwrap(),
                nmi(&p2, &t2).unwrap(),
                nmi_oracle(&pred, &truth),
            ),
            (
                purity(&p, &t).unwrap(),
                purity(&p2, &t2).unwrap(),
                purity_oracle(&pred, &truth),
            ),
        ];
        for (a, b, o) in values {
            worst = worst.max((a - o).abs()).max((b - o).abs());
        }
        match (
            entropy_metric(&p, &t),
            entropy_metric(&p2, &t2),
            entropy_oracle(&pred, &truth),
        ) {
            (Ok(a), Ok(b), Some(o)) => worst = worst.max((a - o).abs()).max((b - o).abs()),
            (Err(_), Err(_), None) => {}
            _ => mismatched_errors += 1,
        }
    }
    outcome(
        worst <= 1e-12 && mismatched_errors == 0,
        format!(
            "50 label pairs, max deviation {worst:.1e}, error-case mismatches {mismatched_errors}"
        ),
    )
}

fn run_cli(out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ssnmf"))
        .args([
            "solve",
            "--generate",
            "three-block",
            "--seed",
            "3",
            "--model",
            "onmf-l20",
            "--rank",
            "3",
            "--k",
            "120",
            "--restarts",
            "3",
            "--out",
        ])
        .arg(out)
        .env("SSNMF_THREADS", "1")
        .output()
        .expect("binary runs")
}

/// Two identical single-threaded runs write identical report and traces.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ra, rb) = (run_cli(&a), run_cli(&b));
    if !ra.status.success() || !rb.status.success() {
        return outcome(
            false,
            format!("solve failed: {}", String::from_utf8_lossy(&ra.stderr)),
        );
    }
    let read = |p: &Path| std::fs::read(p).unwrap_or_default();
    let mut files = vec![Path::new("report.json").to_path_buf()];
    for i in 0..3 {
        files.push(Path::new(&format!("restart_{i:02}")).join("trace.csv"));
        files.push(Path::new(&format!("restart_{i:02}")).join("report.json"));
    }
    let differing: Vec<String> = files
        .iter()
        .filter(|f| {
            let (x, y) = (read(&a.join(f)), read(&b.join(f)));
            x.is_empty() || x != y
        })
        .map(|f| f.display().to_string())
        .collect();
    outcome(
        differing.is_empty(),
        format!(
            "{} files compared, differing or missing: {differing:?}",
            files.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("prox oracle equivalence", prox_oracle),
        ("gradient correctness", gradients),
        ("monotone descent", monotone_descent),
        ("sparsity feasibility", sparsity_feasibility),
        ("maPALM acceleration", acceleration),
        ("sparse vs plain clustering", sparse_vs_plain),
        ("orthogonality continuation", orthogonality_continuation),
        ("outlier detection", outlier_detection),
        ("metric oracles", metric_oracles),
        ("determinism", determinism),
    ];
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let clock = Instant::now();
                    let o = f();
                    (o, clock.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion panicked"))
            .collect()
    });
    let mut failed = 0;
    println!();
    for (i, ((name, _), (o, secs))) in criteria.iter().zip(&results).enumerate() {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} {name}: {} [{secs:.1} s]",
            i + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
