//! Acceptance criteria 1-9. Run with `cargo test -p lel --test acceptance -- --nocapture`
//! to see one line per criterion.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;

use lel::balance::{check_gns, check_kms, fig1_sweep, carlen_maas_counterexample};
use lel::divergence::{relative_entropy, sandwiched_renyi};
use lel::flow::{
    comparison_check, comparison_constants, divergence_trace, fisher2_bound_check, fit_decay_rate,
    gradient_flow_residual, integrate_with, k_lower, lsi_constants, poincare_check, suggest_dt, DecayFit,
    IntegrateOptions, LsiBudget,
};
use lel::generator::{depolarizing, qubit_xz, random_gns, spectral_gap, GnsGenerator};
use lel::matcore::{eig_hermitian, frobenius, trace_norm, CMatrix, DensityMatrix, Domain, Superoperator};
use lel::noncomm::{chain_rule_residual, gamma_pow, mop, mop_inv, weight_operator};
use lel::random::{
    random_complex, random_density, random_density_with_floor, random_state_near, seeded,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn alpha_grid() -> Vec<f64> {
    (1..=24).map(|k| 0.25 * k as f64).collect()
}

fn criterion_1() -> Outcome {
    let g = carlen_maas_counterexample();
    let rows = fig1_sweep(&g, &alpha_grid()).unwrap();
    let at_two = rows.iter().find(|r| r.0 == 2.0).unwrap().1;
    let others = rows.iter().filter(|r| r.0 != 2.0).map(|r| r.1).fold(f64::INFINITY, f64::min);
    let kms = check_kms(&g).unwrap();
    let gns = check_gns(&g).unwrap();
    outcome(
        at_two <= 1e-9 && others >= 1e-3 && kms <= 1e-10 && gns >= 1e-3,
        format!("SRD(2) = {at_two:.2e}, min other = {others:.2e}, KMS = {kms:.2e}, GNS = {gns:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = seeded(2002);
    let gens: Vec<GnsGenerator> = [2, 3, 4].iter().map(|&n| random_gns(n, &mut rng)).collect();
    let alphas = [0.5, 1.0, 1.5, 2.0, 3.0];
    let mut cases = Vec::new();
    for (i, g) in gens.iter().enumerate() {
        for _ in 0..100 {
            cases.push((i, random_density(g.dim(), &mut rng)));
        }
    }
    let worst = cases
        .par_iter()
        .map(|(i, rho)| {
            alphas
                .iter()
                .map(|&a| gradient_flow_residual(&gens[*i], rho, a).unwrap())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= 1e-8, format!("max residual {worst:.2e} over {} evaluations", cases.len() * alphas.len()))
}

fn criterion_3() -> Outcome {
    let mut rng = seeded(3003);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = 2 + k % 3;
        let v = random_complex(n, &mut rng);
        let x = random_density_with_floor(n, 0.1, &mut rng);
        let w = rng.random_range(-3.0..3.0);
        worst = worst.max(chain_rule_residual(&v, x.matrix(), w).unwrap());
    }
    outcome(worst <= 1e-9, format!("max residual {worst:.2e}"))
}

/// ∫₀¹ e^{ω(s−½)} X^s (·) X^{1−s} ds by composite Simpson on 2001 points.
fn mop_quadrature(x: &CMatrix, omega: f64) -> Superoperator {
    let points = 2001;
    let h = 1.0 / (points - 1) as f64;
    let spec = eig_hermitian(x).unwrap();
    let mut acc = Superoperator::zero(x.nrows());
    for i in 0..points {
        let s = i as f64 * h;
        let w = if i == 0 || i == points - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let left = spec.pow(s, Domain::Strict).unwrap();
        let right = spec.pow(1.0 - s, Domain::Strict).unwrap();
        acc = acc.add(&Superoperator::sandwich(&left, &right).scale(w * (omega * (s - 0.5)).exp()));
    }
    acc.scale(h / 3.0)
}

fn criterion_4() -> Outcome {
    let mut rng = seeded(4004);
    let mut cases = Vec::new();
    for k in 0..100 {
        let n = 2 + k % 3;
        let x = random_density_with_floor(n, 0.2, &mut rng);
        let a = random_complex(n, &mut rng);
        let a = a.unscale(frobenius(&a));
        let w = rng.random_range(-3.0..3.0);
        let alpha = rng.random_range(0.3..5.0);
        cases.push((x, a, w, alpha));
    }
    let worst = cases
        .par_iter()
        .map(|(x, a, w, alpha)| {
            let q = mop_quadrature(x.matrix(), *w);
            let e1 = frobenius(&(mop(x.matrix(), *w).unwrap().apply(a) - q.apply(a)));
            let e2 = frobenius(&(mop_inv(x.matrix(), *w).unwrap().apply(a) - q.try_inverse().unwrap().apply(a)));
            let s1 = x.pow(1.0 / alpha).unwrap();
            let s2 = x.pow((alpha - 1.0) / alpha).unwrap();
            let g = gamma_pow(x, 2.0 * (alpha - 1.0) / alpha, a).unwrap();
            let composed = mop_quadrature(&s1, 0.0).apply(&mop_quadrature(&s2, 0.0).try_inverse().unwrap().apply(&g));
            let e3 = frobenius(&(weight_operator(x, *alpha).unwrap().apply(a) - composed));
            e1.max(e2).max(e3)
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst <= 1e-8, format!("max deviation {worst:.2e} over 100 instances"))
}

struct DecayCase {
    seed: u64,
    monotone_violation: f64,
    rate_ratio: f64,
    envelope_violation: f64,
}

fn decay_case(seed: u64) -> DecayCase {
    let mut rng = seeded(seed);
    let n = 2 + (seed % 3) as usize;
    let g = random_gns(n, &mut rng);
    let rho0 = random_density(n, &mut rng);
    let sigma = g.stationary();
    let lam = spectral_gap(&g).unwrap().gap;
    let alphas = [0.5, 1.0, 2.0, 4.0];
    let d0 = alphas
        .iter()
        .map(|&a| sandwiched_renyi(&rho0, sigma, a).unwrap().value)
        .fold(0.0, f64::max);
    // Run until the largest trace should reach 1e-13, two decades above the
    // absolute noise of D near σ.
    let t_end = (d0 / 1e-13).ln() / (2.0 * lam);
    let dt = suggest_dt(&g, 0.02);
    let steps = (t_end / dt).ceil() as usize;
    let traj = integrate_with(
        &g,
        &rho0,
        IntegrateOptions {
            t_end,
            dt,
            record_every: (steps / 300).max(1),
        },
    )
    .unwrap();
    let trace = divergence_trace(&traj, &g, &alphas).unwrap();
    let mut mono: f64 = 0.0;
    let mut ratio_worst: f64 = 1.0;
    let mut env: f64 = 0.0;
    for &a in &alphas {
        let (t, d, _) = trace.series(a);
        for w in d.windows(2) {
            mono = mono.max(w[1] - w[0]);
        }
        let ratio = match fit_decay_rate(&t, &d, 0.3).unwrap() {
            DecayFit::Rate { rate, .. } => rate / (2.0 * lam),
            DecayFit::Stationary => f64::NAN,
        };
        if (ratio - 1.0).abs() > (ratio_worst - 1.0).abs() || ratio.is_nan() {
            ratio_worst = ratio;
        }
        if a == 2.0 {
            for (ti, di) in t.iter().zip(&d) {
                let bound = (d[0].exp_m1() * (-2.0 * lam * ti).exp()).ln_1p();
                env = env.max(di - bound);
            }
        }
    }
    DecayCase {
        seed,
        monotone_violation: mono,
        rate_ratio: ratio_worst,
        envelope_violation: env,
    }
}

fn criterion_5() -> Outcome {
    let cases: Vec<DecayCase> = (0..50u64).into_par_iter().map(|s| decay_case(5000 + s)).collect();
    let mono = cases.iter().map(|c| c.monotone_violation).fold(f64::NEG_INFINITY, f64::max);
    let env = cases.iter().map(|c| c.envelope_violation).fold(f64::NEG_INFINITY, f64::max);
    let lo = cases.iter().map(|c| c.rate_ratio).fold(f64::INFINITY, f64::min);
    let hi = cases.iter().map(|c| c.rate_ratio).fold(f64::NEG_INFINITY, f64::max);
    let outside: Vec<String> = cases
        .iter()
        .filter(|c| !(0.98..=1.05).contains(&c.rate_ratio))
        .map(|c| format!("seed {} at {:.4}", c.seed, c.rate_ratio))
        .collect();
    outcome(
        mono <= 1e-9 && env <= 1e-12 && outside.is_empty(),
        format!(
            "max increase {mono:.2e}, rate/2λ in [{lo:.4}, {hi:.4}], envelope excess {env:.2e}, out of band: [{}]",
            outside.join(", ")
        ),
    )
}

fn criterion_6() -> Outcome {
    let gens = [
        qubit_xz(),
        depolarizing(&DensityMatrix::diagonal(&[0.7, 0.3]).unwrap(), 1.0).unwrap(),
        depolarizing(&DensityMatrix::diagonal(&[0.5, 0.3, 0.2]).unwrap(), 0.5).unwrap(),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for g in &gens {
        let r = lsi_constants(g, LsiBudget::default()).unwrap();
        let ok = r.k_lower <= r.k_est
            && r.k_est <= r.lambda_l + 1e-6
            && r.k2_est >= r.k2_lower - 1e-6
            && r.kappa1_est >= r.kappa2_est - 1e-6
            && (r.kappa1_est - r.k_est / 2.0).abs() <= 1e-4;
        pass &= ok;
        detail.push(format!(
            "{}: K {:.4} ≤ {:.4} ≤ {:.4}, K2 {:.4} ≥ {:.4}, κ₁ {:.4} ≥ κ₂ {:.4}",
            r.label, r.k_lower, r.k_est, r.lambda_l, r.k2_est, r.k2_lower, r.kappa1_est, r.kappa2_est
        ));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_7() -> Outcome {
    let mut rng = seeded(7007);
    let gens: Vec<GnsGenerator> = (0..10).map(|k| random_gns(2 + k % 3, &mut rng)).collect();
    let gaps: Vec<_> = gens.iter().map(|g| spectral_gap(g).unwrap()).collect();
    let mut eq_worst: f64 = 0.0;
    for (g, gap) in gens.iter().zip(&gaps) {
        let c = poincare_check(g, gap, &gap.gap_vector).unwrap();
        eq_worst = eq_worst.max((c.lhs - c.rhs).abs());
    }
    let mut poincare_fail = 0;
    let mut pinsker_fail = 0;
    let mut fisher_fail = 0;
    for k in 0..1000 {
        let i = k % gens.len();
        let (g, gap) = (&gens[i], &gaps[i]);
        let n = g.dim();
        let a: CMatrix = random_complex(n, &mut rng);
        if !poincare_check(g, gap, &a).unwrap().pass {
            poincare_fail += 1;
        }
        let rho = random_density(n, &mut rng);
        let d = relative_entropy(&rho, g.stationary()).unwrap();
        let tn = trace_norm(&(rho.matrix() - g.stationary().matrix()));
        if d < 0.5 * tn * tn - 1e-12 {
            pinsker_fail += 1;
        }
        if !fisher2_bound_check(g, gap.gap, &rho).unwrap().pass {
            fisher_fail += 1;
        }
    }
    outcome(
        eq_worst <= 1e-9 && poincare_fail + pinsker_fail + fisher_fail == 0,
        format!(
            "gap-vector equality {eq_worst:.2e}; violations: Poincaré {poincare_fail}, Pinsker {pinsker_fail}, Fisher-2 {fisher_fail} (1000 each)"
        ),
    )
}

fn near_state(g: &GnsGenerator, eps: f64, seed: u64) -> DensityMatrix {
    let sigma = g.stationary();
    let mut t = 0.5;
    loop {
        let rho = random_state_near(sigma, t, &mut seeded(seed));
        if relative_entropy(&rho, sigma).unwrap() <= eps {
            return rho;
        }
        t /= 2.0;
    }
}

fn criterion_8() -> Outcome {
    let gens = [
        qubit_xz(),
        depolarizing(&DensityMatrix::diagonal(&[0.6, 0.4]).unwrap(), 1.0).unwrap(),
    ];
    let pairs = [(2.0, 3.0), (2.0, 4.0), (1.5, 6.0)];
    let mut pass = true;
    let mut max_fd = f64::NEG_INFINITY;
    let mut margin = f64::NEG_INFINITY;
    for (gi, g) in gens.iter().enumerate() {
        let lmin = g.stationary().min_eig();
        let eps = lmin * lmin / 8.0;
        let k = k_lower(spectral_gap(g).unwrap().gap, lmin);
        for (pi, &(a0, a1)) in pairs.iter().enumerate() {
            let rho0 = near_state(g, eps, 80 + (gi * 3 + pi) as u64);
            let c = comparison_check(g, &rho0, a0, a1, eps, k).unwrap();
            pass &= c.pass;
            max_fd = max_fd.max(c.max_forward_diff);
            margin = margin.max(c.d_alpha1_final - c.d_alpha0_initial);
        }
    }
    let mm = DensityMatrix::maximally_mixed(3);
    let lmin = 1.0 / 3.0;
    let c = comparison_constants(2.0, 3.0, lmin * lmin / 8.0, &mm, &[0.0, 0.0], 1.0).unwrap();
    let e3 = 3f64.exp();
    let eta = 2.0 * (-1.5f64).exp() / (1.0 + e3);
    let closed = (c.lambda_big - e3).abs() <= 1e-12 * e3 && (c.eta - eta).abs() <= 1e-15;
    outcome(
        pass && closed,
        format!(
            "max ΔF {max_fd:.2e}, max D_α₁(ρ_T) − D_α₀(ρ₀) = {margin:.2e}, Λ = {:.12}, η = {:.5}",
            c.lambda_big, c.eta
        ),
    )
}

fn run_cli(args: &[&str]) -> i32 {
    let mut v = vec!["lel"];
    v.extend_from_slice(args);
    lel::cli::main_with_args(v)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["fig1", "--generator", "builtin:carlen-maas", "--alphas", "0.25:6:0.25"],
        &["simulate", "--generator", "builtin:qubit-xz", "--rho0", "random", "--seed", "7", "--alphas", "1,2", "--t-end", "2", "--dt", "0.001"],
        &["gradflow", "--generator", "builtin:depolarizing?gamma=0.5&sigma=0.5,0.3,0.2", "--seed", "3", "--samples", "10"],
    ];
    let mut identical = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let p = dir.path().join(format!("run{i}_{rep}.csv"));
            let mut a = args.to_vec();
            let ps = p.to_str().unwrap().to_string();
            a.extend_from_slice(&["--out", &ps]);
            assert_eq!(run_cli(&a), 0);
            bytes.push(std::fs::read(&p).unwrap());
        }
        if bytes[0] == bytes[1] && !bytes[0].is_empty() {
            identical += 1;
        }
    }
    outcome(identical == runs.len(), format!("{identical}/{} artifacts byte-identical", runs.len()))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

#[test]
fn acceptance_criteria() {
    let suite: [Criterion; 9] = [
        (1, "two-level SRD sweep", Duration::from_secs(5), criterion_1),
        (2, "gradient-flow identity", Duration::from_secs(30), criterion_2),
        (3, "chain rule", Duration::from_secs(5), criterion_3),
        (4, "kernel oracles", Duration::from_secs(20), criterion_4),
        (5, "monotonicity and decay", Duration::from_secs(120), criterion_5),
        (6, "constants brackets", Duration::from_secs(60), criterion_6),
        (7, "inequality suites", Duration::from_secs(30), criterion_7),
        (8, "comparison theorem", Duration::from_secs(60), criterion_8),
        (9, "determinism", Duration::from_secs(60), criterion_9),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, f) in suite {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.pass && took <= limit;
        println!(
            "criterion {id} ({name}): {} [{:.2}s / limit {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            limit.as_secs(),
            o.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
