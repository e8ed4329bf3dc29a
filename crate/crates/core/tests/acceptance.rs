//! Exit criteria. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

#![allow(clippy::needless_range_loop)]

mod common;

use common::{random_params, wls};
use polycwm::em::e_step_of;
use polycwm::inference::{covariance_from_hessian, numerical_hessian, pack};
use polycwm::rng::task_rng;
use polycwm::simulate::{
    fit_reference_fmr_from, run_artificial_experiment, run_labeled_fraction_study, sample, table1_generator,
    table1_params, ArtificialConfig, ArtificialReport, LabeledFractionConfig,
};
use polycwm::{
    adjusted_rand_index, bic, fit, m_step, num_params, rand_index, standard_errors, Dataset64, FitConfig, Generator,
    MixtureKind, MixtureParams64, Partition, Responsibilities, SymMatrix,
};
use rand::Rng;

const SEEDS: u64 = 10;
const REQUIRED: usize = 9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let started = std::time::Instant::now();
    let runs = artificial_runs();
    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(&str, Check)> = vec![
        ("parameter count and BIC arithmetic", Box::new(bic_arithmetic)),
        (
            "artificial data: (2,3) selected by BIC and ICL with ARI = 1",
            Box::new(|| model_selection(&runs)),
        ),
        ("parameter recovery within 3 SE", Box::new(|| parameter_recovery(&runs))),
        (
            "regression-only mixture misclassifies",
            Box::new(|| fmr_contrast(&runs)),
        ),
        (
            "posterior equivalence with reference mixtures",
            Box::new(lemma_equivalence),
        ),
        ("EM monotonicity and fixed point", Box::new(em_monotone_fixed_point)),
        ("M-step matches weighted least squares", Box::new(m_step_oracle)),
        ("Rand and adjusted Rand oracles", Box::new(metric_oracles)),
        ("labeled-fraction trend", Box::new(labeled_fraction_trend)),
        ("standard-error sanity", Box::new(standard_error_sanity)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "acceptance {:>2} {} {name}: {} [{:.1}s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn artificial_runs() -> Vec<ArtificialReport<f64>> {
    (0..SEEDS)
        .map(|seed| run_artificial_experiment(seed, &ArtificialConfig::default()).expect("artificial run"))
        .collect()
}

fn bic_arithmetic() -> Outcome {
    let eta = num_params(2, 3);
    let b: f64 = bic(-5636.396 / 2.0, 2, 3, 700);
    let shown = format!("{b:.3}");
    outcome(eta == 13 && shown == "-5721.560", format!("eta = {eta}, BIC = {shown}"))
}

fn model_selection(runs: &[ArtificialReport<f64>]) -> Outcome {
    let mut hits = 0;
    let mut picks = Vec::new();
    for r in runs {
        let ok = r.grid.best_bic == (2, 3) && r.grid.best_icl == (2, 3) && r.ari == 1.0;
        hits += usize::from(ok);
        picks.push(format!(
            "s{}:bic{:?}/icl{:?}/ari{:.3}",
            r.seed, r.grid.best_bic, r.grid.best_icl, r.ari
        ));
    }
    outcome(
        hits >= REQUIRED,
        format!("{hits}/{SEEDS} seeds (need {REQUIRED}); {}", picks.join(" ")),
    )
}

/// Per-parameter standard errors of the cubic two-component fit reported for
/// the reference sample.
struct Scale {
    weights: [f64; 2],
    beta: [[f64; 4]; 2],
    sigma_eps: [f64; 2],
    mu_x: [f64; 2],
    sigma_x: [f64; 2],
}

const REFERENCE_SE: Scale = Scale {
    weights: [0.028, 0.024],
    beta: [[0.270, 0.398, 0.194, 0.028], [10.391, 8.558, 2.304, 0.202]],
    sigma_eps: [0.056, 0.102],
    mu_x: [0.051, 0.039],
    sigma_x: [0.036, 0.027],
};

fn within_three_se(est: &MixtureParams64, truth: &MixtureParams64) -> Vec<String> {
    let mut order: Vec<usize> = (0..2).collect();
    order.sort_by(|&a, &b| est.components[a].mu_x.total_cmp(&est.components[b].mu_x));
    let est = est.permuted(&order);
    let mut misses = Vec::new();
    let mut check = |name: String, e: f64, t: f64, se: f64| {
        if (e - t).abs() > 3.0 * se {
            misses.push(format!("{name}={e:.3}"));
        }
    };
    for j in 0..2 {
        let (e, t) = (&est.components[j], &truth.components[j]);
        check(
            format!("pi{}", j + 1),
            est.weights[j],
            truth.weights[j],
            REFERENCE_SE.weights[j],
        );
        for l in 0..4 {
            check(format!("b{l}{}", j + 1), e.beta[l], t.beta[l], REFERENCE_SE.beta[j][l]);
        }
        check(
            format!("se{}", j + 1),
            e.sigma_eps,
            t.sigma_eps,
            REFERENCE_SE.sigma_eps[j],
        );
        check(format!("mu{}", j + 1), e.mu_x, t.mu_x, REFERENCE_SE.mu_x[j]);
        check(format!("sx{}", j + 1), e.sigma_x, t.sigma_x, REFERENCE_SE.sigma_x[j]);
    }
    misses
}

fn parameter_recovery(runs: &[ArtificialReport<f64>]) -> Outcome {
    let truth = table1_params::<f64>();
    let mut hits = 0;
    let mut notes = Vec::new();
    for r in runs {
        let Some(fit) = r.grid.cell(2, 3).and_then(|c| c.fit.as_ref()) else {
            notes.push(format!("s{}: (2,3) failed", r.seed));
            continue;
        };
        let misses = within_three_se(&fit.psi_hat, &truth);
        if misses.is_empty() {
            hits += 1;
        } else {
            notes.push(format!("s{}: {}", r.seed, misses.join(",")));
        }
    }
    outcome(
        hits >= REQUIRED,
        format!("{hits}/{SEEDS} seeds (need {REQUIRED}) {}", notes.join("; ")),
    )
}

fn fmr_contrast(runs: &[ArtificialReport<f64>]) -> Outcome {
    let mut aris = Vec::new();
    for r in runs {
        let data = r.sample.unlabeled().expect("dataset");
        let res = fit_reference_fmr_from(&data, 2, 3, &FitConfig::default(), &r.sample.truth);
        let ari = match res {
            Ok(f) => adjusted_rand_index(&Partition(f.map_labels), &r.sample.truth_partition()).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        };
        aris.push(ari);
    }
    let hits = aris.iter().filter(|&&a| a < 0.3).count();
    let shown: Vec<String> = aris.iter().map(|a| format!("{a:.3}")).collect();
    outcome(
        hits >= REQUIRED,
        format!(
            "ARI < 0.3 in {hits}/{SEEDS} seeds (need {REQUIRED}): {}",
            shown.join(" ")
        ),
    )
}

fn lemma_equivalence() -> Outcome {
    let mut worst = [0.0f64; 2];
    for trial in 0..100u64 {
        for (slot, kind) in [MixtureKind::RegressionOnly, MixtureKind::MarginalOnly]
            .into_iter()
            .enumerate()
        {
            let mut rng = task_rng(0xacce55 + slot as u64, trial);
            let k = rng.random_range(2..=4);
            let r = rng.random_range(0..=3);
            let mut psi = random_params(&mut rng, k, r);
            let first = psi.components[0].clone();
            for c in &mut psi.components {
                match kind {
                    MixtureKind::RegressionOnly => {
                        c.mu_x = first.mu_x;
                        c.sigma_x = first.sigma_x;
                    }
                    _ => {
                        c.beta = first.beta.clone();
                        c.sigma_eps = first.sigma_eps;
                    }
                }
            }
            let s = sample(
                &Generator {
                    psi: psi.clone(),
                    group_sizes: None,
                    seed: trial,
                },
                100,
            )
            .unwrap();
            let data = s.unlabeled().unwrap();
            let (a, _) = e_step_of(MixtureKind::ClusterWeighted, &data, &psi).unwrap();
            let (b, _) = e_step_of(kind, &data, &psi).unwrap();
            let gap = a
                .rows()
                .flatten()
                .zip(b.rows().flatten())
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            worst[slot] = worst[slot].max(gap);
        }
    }
    outcome(
        worst[0] < 1e-12 && worst[1] < 1e-12,
        format!(
            "max |diff| regression-only {:.1e}, x-only {:.1e} (limit 1e-12)",
            worst[0], worst[1]
        ),
    )
}

fn em_monotone_fixed_point() -> Outcome {
    let mut worst_drop = 0.0f64;
    let mut worst_move = 0.0f64;
    let mut problems = Vec::new();
    for case in 0..50u64 {
        let mut rng = task_rng(0xf1ced, case);
        let k = rng.random_range(1..=3);
        let r = rng.random_range(0..=3);
        let n = rng.random_range(150..=400);
        let m = if case % 2 == 0 { 0 } else { rng.random_range(1..=n / 4) };
        let psi = random_params(&mut rng, k, r);
        let s = sample(
            &Generator {
                psi,
                group_sizes: None,
                seed: case,
            },
            n,
        )
        .unwrap();
        let labels = (0..n).map(|i| (i < m).then_some(s.truth[i])).collect();
        let data = Dataset64::new(s.x, s.y, labels).unwrap();
        let cfg = FitConfig {
            epsilon: 1e-12,
            max_iter: 20_000,
            restarts: 3,
            seed: case,
            ..FitConfig::default()
        };
        let res = match fit(&data, k, r, &cfg) {
            Ok(res) => res,
            Err(e) => {
                problems.push(format!("case {case}: {e}"));
                continue;
            }
        };
        for w in res.loglik_trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        if !res.converged {
            problems.push(format!("case {case}: no convergence in {} iterations", res.iterations));
        }
        let resp = e_step_of(MixtureKind::ClusterWeighted, &data, &res.psi_hat).unwrap().0;
        let next = m_step(&data, &resp, r, 1e-10).unwrap();
        let (a, b) = (pack(&res.psi_hat), pack(&next));
        // relative to the parameter's magnitude
        let mv = a
            .iter()
            .zip(&b)
            .map(|(u, v)| (u - v).abs() / (1.0 + u.abs()))
            .fold(0.0, f64::max);
        worst_move = worst_move.max(mv);
    }
    let pass = problems.is_empty() && worst_drop <= 1e-8 && worst_move < 1e-6;
    outcome(
        pass,
        format!(
            "50 cases, largest loglik drop {worst_drop:.1e} (slack 1e-8), largest one-step move {worst_move:.1e} (limit 1e-6) {}",
            problems.join("; ")
        ),
    )
}

fn m_step_oracle() -> Outcome {
    let mut worst_beta = 0.0f64;
    let mut worst_moment = 0.0f64;
    let sampled = [1usize, 2, 3, 5, 8, 13, 21];
    for case in 0..20u64 {
        let (data, k, r) = if case < 5 {
            let s = sample(&table1_generator::<f64>(100 + case), 700).unwrap();
            (s.unlabeled().unwrap(), 2, 3)
        } else {
            let mut rng = task_rng(0x0ac1e, case);
            let (k, r) = (rng.random_range(1..=3), rng.random_range(0..=3));
            let psi = random_params(&mut rng, k, r);
            let s = sample(
                &Generator {
                    psi,
                    group_sizes: None,
                    seed: case,
                },
                300,
            )
            .unwrap();
            (s.unlabeled().unwrap(), k, r)
        };
        let mut rng = task_rng(0x1417, case);
        let init: Vec<usize> = (0..data.n()).map(|_| rng.random_range(1..=k)).collect();
        let mut psi = m_step(&data, &Responsibilities::from_labels(&init, k).unwrap(), r, 1e-10).unwrap();
        for it in 1..=*sampled.last().unwrap() {
            let resp = e_step_of(MixtureKind::ClusterWeighted, &data, &psi).unwrap().0;
            let next = m_step(&data, &resp, r, 1e-10).unwrap();
            if sampled.contains(&it) {
                let n = data.n() as f64;
                for j in 0..k {
                    let w: Vec<f64> = (0..data.n()).map(|i| resp.get(i, j)).collect();
                    let mass: f64 = w.iter().sum();
                    let beta = wls(data.x(), data.y(), &w, r);
                    let c = &next.components[j];
                    for (u, v) in c.beta.iter().zip(&beta) {
                        worst_beta = worst_beta.max((u - v).abs() / v.abs().max(1.0));
                    }
                    let mu: f64 = w.iter().zip(data.x()).map(|(w, x)| w * x).sum::<f64>() / mass;
                    let sx = (w.iter().zip(data.x()).map(|(w, x)| w * (x - mu).powi(2)).sum::<f64>() / mass).sqrt();
                    for d in [next.weights[j] - mass / n, c.mu_x - mu, c.sigma_x - sx] {
                        worst_moment = worst_moment.max(d.abs());
                    }
                }
            }
            psi = next;
        }
    }
    outcome(
        worst_beta < 1e-8 && worst_moment < 1e-12,
        format!("20 runs x 7 iterations: beta {worst_beta:.1e} (limit 1e-8), weights/moments {worst_moment:.1e} (limit 1e-12)"),
    )
}

fn metric_oracles() -> Outcome {
    let a = Partition(vec![1, 1, 2, 2]);
    let b = Partition(vec![1, 2, 1, 2]);
    let ari = adjusted_rand_index(&a, &b).unwrap();
    let ri = rand_index(&a, &b).unwrap();
    let mut rng = task_rng(0x0a41, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..60);
        let k = rng.random_range(1..6);
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(1..=k)).collect();
        let q: Vec<usize> = (0..n).map(|_| rng.random_range(1..=k)).collect();
        let mut names: Vec<usize> = (1..=k).collect();
        for i in (1..k).rev() {
            names.swap(i, rng.random_range(0..=i));
        }
        let renamed: Vec<usize> = p.iter().map(|&l| 10 * names[l - 1] + 3).collect();
        let base = adjusted_rand_index(&Partition(p), &Partition(q.clone())).unwrap();
        let moved = adjusted_rand_index(&Partition(renamed), &Partition(q)).unwrap();
        worst = worst.max((base - moved).abs());
    }
    let pass = (ari + 0.5).abs() < 1e-12 && (ri - 1.0 / 3.0).abs() < 1e-12 && worst < 1e-12;
    outcome(
        pass,
        format!("ARI = {ari}, RI = {ri:.6}, relabeling gap over 1000 pairs {worst:.1e}"),
    )
}

fn labeled_fraction_trend() -> Outcome {
    let s = sample(&table1_generator::<f64>(0), 700).unwrap();
    let cfg = LabeledFractionConfig {
        m_values: vec![0, 10, 25, 50, 100, 200],
        reps: 50,
        k: 2,
        degree: 3,
        fit: FitConfig::default(),
        seed: 0,
    };
    let report = run_labeled_fraction_study(&s, &cfg).expect("study");
    let mut pass = true;
    for w in report.rows.windows(2) {
        let tol = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        if w[1].mean < w[0].mean - tol {
            pass = false;
        }
    }
    let failures: usize = report.rows.iter().map(|r| r.failures()).sum();
    let shown: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("m{}:{:.4}±{:.4}", r.m, r.mean, r.std_error))
        .collect();
    outcome(
        pass && failures == 0,
        format!("{} ({failures} failed fits)", shown.join(" ")),
    )
}

fn standard_error_sanity() -> Outcome {
    let mut rng = task_rng(0x5e, 0);
    let n = 1000;
    let x: Vec<f64> = (0..n).map(|_| common::normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n).map(|_| common::normal(&mut rng)).collect();
    let data = Dataset64::unlabeled(x, y).unwrap();
    let res = fit(&data, 1, 0, &FitConfig::default()).unwrap();
    let se = standard_errors(&data, &res.psi_hat).unwrap();
    let sigma = res.psi_hat.components[0].sigma_x;
    let expected = sigma / (n as f64).sqrt();
    let rel = (se.components[0].mu_x - expected).abs() / expected;

    // f(θ) = -½ θᵀAθ + bᵀθ has Hessian -A everywhere.
    let a = [
        [4.0, 1.0, 0.5, 0.0],
        [1.0, 3.0, 0.2, 0.1],
        [0.5, 0.2, 2.0, 0.3],
        [0.0, 0.1, 0.3, 1.5],
    ];
    let b = [0.3, -1.0, 2.0, 0.7];
    let f = |t: &[f64]| {
        let mut v = 0.0;
        for i in 0..4 {
            v += b[i] * t[i];
            for j in 0..4 {
                v -= 0.5 * t[i] * a[i][j] * t[j];
            }
        }
        v
    };
    let h: SymMatrix<f64> = numerical_hessian(f, &[0.4, -1.3, 2.2, 0.9], 1e-4).unwrap();
    let mut hess_gap = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            hess_gap = hess_gap.max((h.get(i, j) + a[i][j]).abs());
        }
    }
    let cov = covariance_from_hessian(&h).unwrap();
    let mut inv_gap = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let prod: f64 = (0..4).map(|t| a[i][t] * cov.get(t, j)).sum();
            inv_gap = inv_gap.max((prod - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    outcome(
        rel < 0.05 && hess_gap < 1e-6 && inv_gap < 1e-6,
        format!(
            "SE(mu_X) off by {:.2}% of sigma/sqrt(n) (limit 5%), quadratic Hessian gap {hess_gap:.1e}, inverse gap {inv_gap:.1e} (limit 1e-6)",
            100.0 * rel
        ),
    )
}
