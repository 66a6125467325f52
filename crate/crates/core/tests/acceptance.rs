//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use kdn::bounds::{
    limit_bound, lower_bound, monotonicity_scan, surrogate_check, ClassProfile, SurrogateGram,
};
use kdn::crossval::{cross_validate, summarize, FoldOutcome};
use kdn::dataio::{gen_random, gen_spiral, load_csv, one_hot, standardize, LabelColumn};
use kdn::ism::{fixed_point_residual, IsmConfig, IsmProblem};
use kdn::kernelkit::{
    gamma_from_labels, gamma_sign_check, gaussian_from_sq_dists, label_gram, laplacian_quadratic,
    GammaMode,
};
use kdn::linalg::pairwise_sq_dists;
use kdn::metrics::{csr, hsic_star, penalty_terms};
use kdn::network::TrainConfig;
use kdn::rff::sample_rff;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SPIRAL_SEED: u64 = 1;
const WINE_SEED: u64 = 0;
const CANCER_SEED: u64 = 0;
const RANDOM_SEED: u64 = 1;
const FOLDS: usize = 10;

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Run {
    folds: Vec<FoldOutcome>,
    elapsed: Duration,
}

fn cv(ds: &kdn::DataSet, seed: u64) -> Run {
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let (_, folds) = cross_validate(ds, FOLDS, seed, &cfg, 1).expect("cross-validation");
    Run {
        folds,
        elapsed: start.elapsed(),
    }
}

fn spiral_run() -> Run {
    cv(&gen_spiral(100, 0.1, SPIRAL_SEED).unwrap(), SPIRAL_SEED)
}

fn wine_run() -> Run {
    let ds = load_csv(data_path("wine.csv"), &LabelColumn::Name("class".into())).unwrap();
    cv(&ds, WINE_SEED)
}

fn cancer_run() -> Run {
    let ds = load_csv(data_path("breast_cancer.csv"), &LabelColumn::Name("class".into())).unwrap();
    cv(&ds, CANCER_SEED)
}

fn crit1(r: &Run) -> Outcome {
    let s = summarize(&r.folds);
    let max_depth = r.folds.iter().map(FoldOutcome::depth).max().unwrap_or(0);
    let min_hsic = r.folds.iter().map(FoldOutcome::hsic_star).fold(f64::INFINITY, f64::min);
    check(
        s.train_acc.mean >= 0.99
            && s.test_acc.mean >= 0.97
            && min_hsic >= 0.95
            && max_depth <= 6
            && r.elapsed.as_secs_f64() <= 60.0,
        format!(
            "train {:.4} test {:.4} min hsic* {:.4} max depth {} in {:.1}s",
            s.train_acc.mean,
            s.test_acc.mean,
            min_hsic,
            max_depth,
            r.elapsed.as_secs_f64()
        ),
    )
}

fn crit2(r: &Run) -> Outcome {
    let s = summarize(&r.folds);
    check(
        s.train_acc.mean >= 0.97
            && s.test_acc.mean >= 0.90
            && s.hsic_star.mean >= 0.95
            && r.elapsed.as_secs_f64() <= 60.0,
        format!(
            "train {:.4} test {:.4} hsic* {:.4} ± {:.4} depth {:.1} in {:.1}s",
            s.train_acc.mean,
            s.test_acc.mean,
            s.hsic_star.mean,
            s.hsic_star.std,
            s.depth.mean,
            r.elapsed.as_secs_f64()
        ),
    )
}

fn crit3() -> Outcome {
    let r = cv(&gen_random(80, 2, RANDOM_SEED).unwrap(), RANDOM_SEED);
    let s = summarize(&r.folds);
    check(
        (s.train_acc.mean - 1.0).abs() <= 0.02 && s.test_acc.mean <= 0.65,
        format!("train {:.4} test {:.4}", s.train_acc.mean, s.test_acc.mean),
    )
}

fn crit4(runs: &[(&str, &Run)]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut where_ = String::new();
    for (name, r) in runs {
        for f in &r.folds {
            let seq: Vec<f64> = f.model.layers.iter().map(|l| l.hsic_star).collect();
            for (l, p) in seq.windows(2).enumerate() {
                let step = p[1] - p[0];
                if step < worst {
                    worst = step;
                    where_ = format!("{name} fold {} layer {}->{}", f.fold, l + 1, l + 2);
                }
            }
        }
    }
    check(
        worst >= -0.01,
        format!("smallest step {worst:.4} ({where_})"),
    )
}

fn crit5(runs: &[(&str, &Run)], threshold: f64) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in runs {
        let converged: Vec<&FoldOutcome> =
            r.folds.iter().filter(|f| f.hsic_star() >= threshold).collect();
        let mut ratio_ok = 0;
        let mut gap_ok = 0;
        let mut min_gap = f64::INFINITY;
        for f in &converged {
            let first = f.per_layer.first().unwrap();
            let last = f.per_layer.last().unwrap();
            if last.scatter_ratio < first.scatter_ratio {
                ratio_ok += 1;
            }
            if last.block_gap >= 0.5 {
                gap_ok += 1;
            }
            min_gap = min_gap.min(last.block_gap);
        }
        let n = converged.len();
        pass &= ratio_ok == n && gap_ok == n;
        parts.push(format!(
            "{name}: {n} converged, ratio shrinks {ratio_ok}/{n}, gap>=0.5 {gap_ok}/{n} (min gap {min_gap:.3})"
        ));
    }
    check(pass, parts.join("; "))
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, c: usize) -> Vec<usize> {
    loop {
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
        let mut counts = vec![0usize; c];
        for &l in &labels {
            counts[l] += 1;
        }
        if counts.iter().all(|&k| k >= 2) {
            return labels;
        }
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn crit6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut instances = 0;
    while instances < 100 {
        let n = rng.gen_range(6..=50);
        let d = rng.gen_range(2..=6);
        let q = rng.gen_range(1..=d);
        let c = rng.gen_range(2..=4);
        let labels = random_labels(&mut rng, n, c);
        let mode = if rng.gen_bool(0.5) { GammaMode::Centered } else { GammaMode::Signed };
        let gamma = gamma_from_labels(&labels, mode).unwrap();
        if !gamma_sign_check(&gamma).holds {
            continue;
        }
        let r = gaussian_matrix(&mut rng, n, d);
        let w = gaussian_matrix(&mut rng, d, q).qr().q();
        let sigma = rng.gen_range(0.3..3.0);
        let pt = penalty_terms(&r, &w, sigma, &gamma.values, &labels).unwrap();
        worst = worst.max(pt.relative_residual());

        // −½ Σᵢⱼ Γ̂ᵢⱼ ‖zᵢ − zⱼ‖², evaluated entry by entry
        let z = &r * &w;
        let mut oracle = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d2 = (z.row(i) - z.row(j)).norm_squared();
                let k = (-d2 / (2.0 * sigma * sigma)).exp();
                oracle -= 0.5 * gamma.values[(i, j)] * k / (sigma * sigma) * d2;
            }
        }
        worst_oracle = worst_oracle.max((oracle - pt.trace_form).abs() / pt.scale.max(1e-300));
        instances += 1;
    }
    check(
        worst <= 1e-9 && worst_oracle <= 1e-9,
        format!("max relative residual {worst:.2e}, trace vs pair-sum oracle {worst_oracle:.2e}"),
    )
}

fn ub_grid(n_max: usize) -> Vec<f64> {
    let top = 1.0 / n_max as f64;
    (1..=100).map(|k| top * k as f64 / 100.0).collect()
}

fn crit7() -> Outcome {
    let start = Instant::now();
    let profiles: [&[usize]; 3] = [&[5, 5], &[3, 7], &[5, 5, 5]];
    let mut limit_err: f64 = 0.0;
    let mut h_err: f64 = 0.0;
    let mut mono_ok = true;
    for counts in profiles {
        let p = ClassProfile::signed(counts).unwrap();
        let h = p.h_star().abs();
        for s1 in [0.25, 0.5, 1.0, 2.0] {
            let e = lower_bound(&p, 1e-5, s1, 1.0, 1.0).unwrap();
            limit_err = limit_err.max((e.l - e.l_star).abs() / h);
        }
        h_err = h_err.max((limit_bound(&p, 1e-3, 1.0) - p.h_star()).abs() / h);
        let n_max = *counts.iter().max().unwrap();
        mono_ok &= monotonicity_scan(&p, 1.0, &ub_grid(n_max), 1.0).unwrap().non_increasing;
    }
    let mut sur_total = 0;
    let mut sur_ok = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for counts in profiles {
        for mode in [GammaMode::Signed, GammaMode::Centered] {
            for ub in [1e-4, 1e-3, 1e-2] {
                for s1 in [0.5, 1.0, 2.0] {
                    for gram in [SurrogateGram::Constant, SurrogateGram::Uniform(7)] {
                        let c = surrogate_check(counts, mode, ub, s1, gram).unwrap();
                        sur_total += 1;
                        if c.holds {
                            sur_ok += 1;
                        }
                        worst_excess = worst_excess.max(c.bound - c.hsic);
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        limit_err <= 1e-9 && h_err <= 1e-6 && mono_ok && sur_ok == sur_total && elapsed <= 5.0,
        format!(
            "|L-L*|/H* {limit_err:.1e}, |L*(1e-3)-H*|/H* {h_err:.1e}, monotone {mono_ok}, \
             surrogate HSIC >= L {sur_ok}/{sur_total} (max L-HSIC {worst_excess:.2e}) in {elapsed:.2}s"
        ),
    )
}

fn crit8() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut fails = Vec::new();

    let labels = random_labels(&mut rng, 40, 3);
    let g = gamma_from_labels(&labels, GammaMode::Centered).unwrap();
    let row_sum = g.values.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max);
    if row_sum > 1e-12 {
        fails.push(format!("Γ1 = {row_sum:.1e}"));
    }

    for counts in [&[5usize, 5][..], &[4, 4, 4], &[10, 10, 10, 10]] {
        let labels: Vec<usize> =
            counts.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat(c).take(k)).collect();
        let g = gamma_from_labels(&labels, GammaMode::Centered).unwrap();
        if !gamma_sign_check(&g).holds {
            fails.push(format!("signs {counts:?}"));
        }
    }

    let mut lap_err: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(2..=20);
        let d = rng.gen_range(1..=5);
        let x = gaussian_matrix(&mut rng, n, d);
        let a = gaussian_matrix(&mut rng, n, n);
        let psi = &a + a.transpose();
        let fast = laplacian_quadratic(&x, &psi).unwrap();
        let mut brute = DMatrix::zeros(d, d);
        for i in 0..n {
            for j in 0..n {
                let diff = (x.row(i) - x.row(j)).transpose();
                brute += psi[(i, j)] * &diff * diff.transpose();
            }
        }
        lap_err = lap_err.max((fast - &brute).amax() / brute.amax().max(1.0));
    }
    if lap_err > 1e-10 {
        fails.push(format!("laplacian {lap_err:.1e}"));
    }

    let wine = load_csv(data_path("wine.csv"), &LabelColumn::Name("class".into())).unwrap();
    let (z, _) = standardize(&wine).unwrap();
    let g = gamma_from_labels(&z.labels, GammaMode::Centered).unwrap();
    let problem = IsmProblem::new(&z.features, &g).unwrap();
    let mut fp: f64 = 0.0;
    let mut orth: f64 = 0.0;
    // below σ ≈ 2 the plain iteration cycles on this data, so there is no
    // fixed point to measure
    let cfg = IsmConfig {
        tol: 1e-10,
        max_iters: 200,
        ..IsmConfig::default()
    };
    for sigma in [2.0, 4.0, 8.0] {
        let res = problem.solve(sigma, &cfg).unwrap();
        if !res.converged {
            fails.push(format!("ISM did not converge at sigma {sigma}"));
        }
        let (resid, scale) = fixed_point_residual(&z.features, &g, sigma, &res).unwrap();
        fp = fp.max(resid / scale.max(1e-300));
        let q = res.w.ncols();
        orth = orth.max((res.w.transpose() * &res.w - DMatrix::identity(q, q)).amax());
    }
    if fp > 1e-6 {
        fails.push(format!("fixed point {fp:.1e}"));
    }
    if orth > 1e-8 {
        fails.push(format!("orthonormality {orth:.1e}"));
    }

    let x = gaussian_matrix(&mut rng, 100, 3);
    let exact = gaussian_from_sq_dists(&pairwise_sq_dists(&x), 1.5);
    let mut rff_err = 0.0;
    for seed in 0..5 {
        let phi = sample_rff(3, 1.5, 300, seed).unwrap().apply(&x).unwrap();
        let approx = &phi * phi.transpose();
        rff_err += (approx - &exact).abs().mean() / 5.0;
    }
    if rff_err > 0.05 {
        fails.push(format!("rff {rff_err:.3}"));
    }

    let ky = label_gram(&labels);
    let self_hsic = hsic_star(&ky, &ky).unwrap().value;
    if (self_hsic - 1.0).abs() > 1e-12 {
        fails.push(format!("hsic*(K_Y, K_Y) = {self_hsic}"));
    }
    let onehot_csr = csr(&one_hot(&labels, 3), &labels).unwrap().value;
    if onehot_csr.abs() > 1e-12 {
        fails.push(format!("csr(one-hot) = {onehot_csr}"));
    }

    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > 10.0 {
        fails.push(format!("took {elapsed:.1}s"));
    }
    let detail = format!(
        "fixed point {fp:.1e}, orth {orth:.1e}, laplacian {lap_err:.1e}, rff {rff_err:.4} in {elapsed:.2}s"
    );
    if fails.is_empty() {
        check(true, detail)
    } else {
        check(false, format!("{detail}; failed: {}", fails.join(", ")))
    }
}

fn crit9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_kdn"))
            .args(["train", "--data", "synthetic:spiral", "--seed", "1", "--jobs", "4", "--out"])
            .arg(&out)
            .env("KDN_LOG", "error")
            .stdout(std::process::Stdio::null())
            .status()
            .expect("run kdn");
        assert!(status.success());
        std::fs::read(out.join("report.json")).unwrap()
    };
    let a = run("a");
    let b = run("b");
    check(a == b && !a.is_empty(), format!("{} report bytes, identical {}", a.len(), a == b))
}

fn main() {
    let spiral = spiral_run();
    let wine = wine_run();
    let cancer = cancer_run();
    println!("cancer: {:.1}s", cancer.elapsed.as_secs_f64());
    let benchmarks = [("spiral", &spiral), ("wine", &wine), ("cancer", &cancer)];
    let threshold = TrainConfig::default().hsic_threshold;

    let results = [
        ("1 spiral", crit1(&spiral)),
        ("2 wine", crit2(&wine)),
        ("3 random labels", crit3()),
        ("4 monotone risk", crit4(&benchmarks)),
        ("5 geometric trend", crit5(&benchmarks, threshold)),
        ("6 penalty identity", crit6()),
        ("7 bound suite", crit7()),
        ("8 algebra suite", crit8()),
        ("9 determinism", crit9()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
