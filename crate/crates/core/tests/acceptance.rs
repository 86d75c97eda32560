//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line. Expected values come from closed forms of the exponential family
//! and the arc-cosine kernel, evaluated independently of the code paths
//! they check.

use dka_core::iteration::{
    chebyshev_grid, classify_regime, estimate_regularity, fixed_point, iterate_deficit,
    iterate_kernel, limit_profile_low, sparse_extrapolate, SymmetrySet,
};
use dka_core::kernels::{ActivationKind, ActivationSpec, BuiltinKernel, Kernel};
use dka_core::rates::{
    contraction_check, matrix_b1, matrix_b2, rate_eval, sparse_rate_1, sparse_rate_2, ProfileEval,
};
use dka_core::report::samples_csv;
use dka_core::simulate::{
    centered_covariance, high_disorder_limits, sample, sparse_discontinuity_demo,
    tail_rate_curve, Centering,
};
use dka_core::sphere::{gegenbauer, mean_coefficient, spectral_expansion, PointConfig};
use dka_core::quad::gauss_jacobi;

fn report(number: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {number:02} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number:02} {name}: {detail}");
}

fn exp_kernel(gamma: f64) -> Kernel {
    Kernel::builtin(BuiltinKernel::Exponential { gamma }).unwrap()
}

/// Closed-form composition of the exponential-family kernel.
///
/// At t = +-1 the ratio form is gl (gamma - 1) over itself: exactly 1 for
/// every depth; cancelling it keeps the oracle finite where the raw f64
/// ratio degenerates to 0/0.
fn exp_kl(t: f64, gamma: f64, l: u64) -> f64 {
    if l == 0 {
        return t;
    }
    if t.abs() == 1.0 {
        return 1.0;
    }
    if gamma == 1.0 {
        let lf = l as f64;
        return ((lf - (lf - 1.0) * t * t) / (lf + 1.0 - lf * t * t)).sqrt();
    }
    let gl = gamma.powi(l as i32);
    let gl1 = gamma.powi(l as i32 + 1);
    (((gl1 - gamma) - (gl - gamma) * t * t) / ((gl1 - 1.0) - (gl - 1.0) * t * t)).sqrt()
}

fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect()
}

#[test]
fn criterion_01_closed_form_composition() {
    let mut max_err = 0.0f64;
    for &gamma in &[0.25, 1.0, 2.0] {
        let k = exp_kernel(gamma);
        for l in 0..=60u64 {
            for &t in &uniform_grid(101) {
                let err = (iterate_kernel(&k, t, l) - exp_kl(t, gamma, l)).abs();
                max_err = if err.is_finite() {
                    max_err.max(err)
                } else {
                    f64::INFINITY
                };
            }
        }
    }
    report(
        1,
        "closed-form composition",
        max_err <= 1e-12,
        &format!("max abs error {max_err:e} (tolerance 1e-12)"),
    );
}

#[test]
fn criterion_02_low_disorder_profile() {
    let gamma = 2.0;
    let k = exp_kernel(gamma);
    let grid = chebyshev_grid(201);
    let table = limit_profile_low(&k, &grid).unwrap();
    let mut max_err = 0.0f64;
    for (i, &t) in grid.iter().enumerate() {
        let expect = (gamma - 1.0) * (1.0 - t * t) / (2.0 * (gamma - t * t));
        max_err = max_err.max((table.values[i] - expect).abs());
    }
    let endpoints_exact = table.values[0] == 0.0 && *table.values.last().unwrap() == 0.0;
    report(
        2,
        "low-disorder profile",
        max_err <= 1e-8 && endpoints_exact,
        &format!("max abs error {max_err:e} (tolerance 1e-8), endpoints exact: {endpoints_exact}"),
    );
}

#[test]
fn criterion_03_sparse_profile() {
    let k = exp_kernel(1.0);
    // plain rescaling at depth 1000; analytic error ~ 3/(8 L)
    let plain = 1000.0 * iterate_deficit(&k, 1.0, 1000);
    let plain_err = (plain - 0.5).abs();
    // difference-quotient extrapolation with the exact exponent rho = 2
    let (extrapolated, _) = sparse_extrapolate(&k, 0.0, 2.0, 1000).unwrap();
    let extr_err = (extrapolated - 0.5).abs();
    report(
        3,
        "sparse profile",
        plain_err <= 1e-3 && extr_err <= 1e-6,
        &format!("plain error {plain_err:e} (tol 1e-3), extrapolated error {extr_err:e} (tol 1e-6)"),
    );
}

#[test]
fn criterion_04_regularity_fit() {
    let relu = Kernel::builtin(BuiltinKernel::Relu).unwrap();
    let fit_relu = estimate_regularity(&relu).unwrap();
    let c_relu = 2.0 * std::f64::consts::SQRT_2 / (3.0 * std::f64::consts::PI);
    let relu_ok = (1.49..=1.51).contains(&fit_relu.rho)
        && (fit_relu.c / c_relu - 1.0).abs() <= 0.02;

    let exp1 = exp_kernel(1.0);
    let fit_exp = estimate_regularity(&exp1).unwrap();
    let exp_ok =
        (1.99..=2.01).contains(&fit_exp.rho) && (fit_exp.c / 2.0 - 1.0).abs() <= 0.02;

    report(
        4,
        "regularity fit",
        relu_ok && exp_ok,
        &format!(
            "relu (c, rho) = ({}, {}); exponential gamma=1 (c, rho) = ({}, {})",
            fit_relu.c, fit_relu.rho, fit_exp.c, fit_exp.rho
        ),
    );
}

#[test]
fn criterion_05_quadrature_vs_arc_cosine() {
    let quad = Kernel::from_activation(&ActivationSpec::new(ActivationKind::Relu).with_order(200))
        .unwrap();
    let closed = Kernel::builtin(BuiltinKernel::Relu).unwrap();
    let mut max_err = 0.0f64;
    for &t in &uniform_grid(101) {
        max_err = max_err.max((quad.eval(t) - closed.eval(t)).abs());
    }
    report(
        5,
        "quadrature kernel vs arc-cosine",
        max_err <= 1e-6,
        &format!("max abs error {max_err:e} at order 200 (tolerance 1e-6)"),
    );
}

#[test]
fn criterion_06_sparse_rate_closed_forms() {
    let h = 0.5;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for seed in 0..50u64 {
        let dim = 1 + (seed % 3) as usize;
        let m = 2 + (seed % 5) as usize; // 2..=6
        let cfg = PointConfig::uniform(dim, m, 1000 + seed).unwrap();
        assert!(cfg.antipodal_pairs().is_empty() && !cfg.contains_north());
        let profile = ProfileEval::SparseFlat { h, symmetric: true };
        let b1 = matrix_b1(&profile, &cfg).unwrap();
        let b2 = matrix_b2(&profile, &cfg, dim).unwrap();
        // deterministic pseudo-random argument vector
        let y: Vec<f64> = (0..m)
            .map(|i| (((seed * 31 + i as u64 * 17 + 3) % 23) as f64 - 11.0) / 7.0)
            .collect();
        let closed1 = sparse_rate_1(&cfg, &y, h, SymmetrySet::PlusMinusOne);
        let eig1 = rate_eval(&b1, &y);
        let closed2 = sparse_rate_2(&cfg, &y, h, SymmetrySet::PlusMinusOne);
        let eig2 = rate_eval(&b2, &y);
        worst = worst
            .max((closed1.value - eig1.value).abs())
            .max((closed2.value - eig2.value).abs());
        checked += 1;
    }

    // infinity cases, triggered exactly per the reduction rules
    let cfg_n = PointConfig::new(2, &[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
    let profile = ProfileEval::SparseFlat { h, symmetric: true };
    let b1_n = matrix_b1(&profile, &cfg_n).unwrap();
    let north_inf = sparse_rate_1(&cfg_n, &[0.4, 1.0], h, SymmetrySet::PlusMinusOne)
        .value
        .is_infinite()
        && rate_eval(&b1_n, &[0.4, 1.0]).value.is_infinite()
        && sparse_rate_1(&cfg_n, &[0.0, 1.0], h, SymmetrySet::PlusMinusOne)
            .value
            .is_finite();

    let cfg_a = PointConfig::new(2, &[vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]]).unwrap();
    let b1_a = matrix_b1(&profile, &cfg_a).unwrap();
    let b2_a = matrix_b2(&profile, &cfg_a, 2).unwrap();
    let anti_inf = sparse_rate_1(&cfg_a, &[1.0, 0.5], h, SymmetrySet::PlusMinusOne)
        .value
        .is_infinite()
        && sparse_rate_2(&cfg_a, &[1.0, 0.5], h, SymmetrySet::PlusMinusOne)
            .value
            .is_infinite()
        && rate_eval(&b1_a, &[1.0, 0.5]).value.is_infinite()
        && rate_eval(&b2_a, &[1.0, 0.5]).value.is_infinite()
        && sparse_rate_1(&cfg_a, &[1.0, 1.0], h, SymmetrySet::PlusMinusOne)
            .value
            .is_finite();

    report(
        6,
        "sparse rate closed forms",
        worst <= 1e-10 && north_inf && anti_inf && checked == 50,
        &format!(
            "max |closed - pseudo-inverse| = {worst:e} over {checked} configs (tol 1e-10); \
             north-pole infinity: {north_inf}; antipodal infinity: {anti_inf}"
        ),
    );
}

#[test]
fn criterion_07_contraction_identity() {
    let mut worst = 0.0f64;
    // low disorder: exponential gamma = 2
    let low_profile = ProfileEval::ExponentialLow { gamma: 2.0 };
    for seed in 0..10u64 {
        let m = 1 + (seed % 3) as usize;
        let cfg = PointConfig::uniform(2, m, 2000 + seed).unwrap();
        let y: Vec<f64> = (0..m)
            .map(|i| (((seed * 13 + i as u64 * 7 + 1) % 19) as f64 - 9.0) / 5.0)
            .collect();
        let check = contraction_check(&low_profile, &cfg, &y, 2).unwrap();
        worst = worst.max(check.gap);
    }
    // sparse: exponential gamma = 1 with exact plateau h = 1/2
    let sparse_profile = ProfileEval::SparseFlat {
        h: 0.5,
        symmetric: true,
    };
    for seed in 0..10u64 {
        let m = 1 + (seed % 3) as usize;
        let cfg = PointConfig::uniform(2, m, 3000 + seed).unwrap();
        let y: Vec<f64> = (0..m)
            .map(|i| (((seed * 11 + i as u64 * 5 + 2) % 17) as f64 - 8.0) / 4.0)
            .collect();
        let check = contraction_check(&sparse_profile, &cfg, &y, 2).unwrap();
        worst = worst.max(check.gap);
    }
    report(
        7,
        "contraction identity",
        worst <= 1e-6,
        &format!("max |direct - contracted| = {worst:e} over 20 cases (tolerance 1e-6)"),
    );
}

#[test]
fn criterion_08_tail_rate_curve() {
    let k = exp_kernel(2.0);
    let regime = classify_regime(&k).unwrap();
    let cfg = PointConfig::new(2, &[vec![1.0, 0.0, 0.0]]).unwrap();
    let rows = tail_rate_curve(
        &k,
        &cfg,
        Centering::NorthPole,
        &[1.0],
        1.0,
        &[40],
        &regime,
    )
    .unwrap();
    let err = (rows[0].log_tail_over_speed + 1.0).abs();
    report(
        8,
        "tail rate curve",
        err <= 1e-2,
        &format!(
            "|(1/v_L) log P + 1| = {err:e} at L = 40 (tolerance 1e-2); curve value {}",
            rows[0].log_tail_over_speed
        ),
    );
}

#[test]
fn criterion_09_mean_coefficient() {
    let k = exp_kernel(2.0);
    let d01 = mean_coefficient(&k, 1, 2).unwrap();
    let expect = std::f64::consts::SQRT_2 * (1.0 / 3.0f64.sqrt()).asin();
    let err = (d01 - expect).abs();
    report(
        9,
        "mean spectral coefficient",
        err <= 1e-8,
        &format!("|D_01 - sqrt(2) asin(1/sqrt(3))| = {err:e} (tolerance 1e-8)"),
    );
}

#[test]
fn criterion_10_high_disorder_limits() {
    let k = exp_kernel(0.25);
    let t_star = fixed_point(&k).unwrap();
    let t_star_err = (t_star - 0.5).abs();
    let cfg = PointConfig::new(
        2,
        &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
    )
    .unwrap();
    let table = high_disorder_limits(&k, &cfg, 200).unwrap();
    let d0_err = (table.d0_hat - 0.5).abs();
    let mut np_err = 0.0f64;
    let mut sa_off_err = 0.0f64;
    for row in &table.rows {
        match row.centering {
            Centering::NorthPole => {
                let target = if row.i == row.j { 1.0 } else { 0.5 };
                np_err = np_err.max((row.computed - target).abs());
            }
            Centering::SphericalAverage => {
                if row.i != row.j {
                    sa_off_err = sa_off_err.max(row.computed.abs());
                }
            }
        }
    }
    report(
        10,
        "high-disorder limits",
        t_star_err <= 1e-10 && np_err <= 1e-6 && d0_err <= 1e-6 && sa_off_err <= 1e-6,
        &format!(
            "t* error {t_star_err:e} (tol 1e-10); north-pole entries error {np_err:e}, \
             d0 error {d0_err:e}, spherical-average off-diagonal {sa_off_err:e} (tol 1e-6)"
        ),
    );
}

#[test]
fn criterion_11_sparse_discontinuity() {
    let k = exp_kernel(1.0);
    // exact expansion parameters of this kernel: c = 2, rho = 2, h = 1/2
    let regime = classify_regime(&k)
        .unwrap()
        .with_regularity(2.0, 2.0)
        .unwrap();
    let rows =
        sparse_discontinuity_demo(&k, 2, &[1e-1, 1e-2, 1e-3], 10_000, &regime).unwrap();
    let mut diag_err = 0.0f64;
    let mut off_err = 0.0f64;
    let mut ratio_err = 0.0f64;
    for row in &rows {
        diag_err = diag_err
            .max((row.diag_1 - 1.0).abs())
            .max((row.diag_2 - 1.0).abs());
        off_err = off_err.max((row.off_diag - 0.5).abs());
        ratio_err = ratio_err.max((row.ratio - 2.0).abs());
    }
    report(
        11,
        "sparse discontinuity",
        diag_err <= 5e-3 && off_err <= 5e-3 && ratio_err <= 2e-2,
        &format!(
            "max diagonal error {diag_err:e}, off-diagonal error {off_err:e} (tol 5e-3), \
             ratio error {ratio_err:e}"
        ),
    );
}

#[test]
fn criterion_12_sampling_correctness() {
    let start = std::time::Instant::now();
    let k = exp_kernel(2.0);
    let cfg = PointConfig::uniform(2, 3, 12345).unwrap();
    let n = 200_000;
    let mut all_inside = true;
    let mut csv_identical = true;
    for centering in [Centering::NorthPole, Centering::SphericalAverage] {
        let cc = centered_covariance(&k, &cfg, 5, centering).unwrap();
        let batch = sample(&k, &cc, n, 2024).unwrap();
        let again = sample(&k, &cc, n, 2024).unwrap();
        csv_identical &= samples_csv(&batch) == samples_csv(&again);
        let nf = n as f64;
        for i in 0..3 {
            for j in i..3 {
                let mut acc = 0.0;
                for row in 0..n {
                    acc += batch.draws[row * 3 + i] * batch.draws[row * 3 + j];
                }
                let emp = acc / nf;
                let sij = cc.sigma[(i, j)];
                let se = ((cc.sigma[(i, i)] * cc.sigma[(j, j)] + sij * sij) / nf).sqrt();
                all_inside &= (emp - sij).abs() <= 4.0 * se;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        12,
        "sampling correctness",
        all_inside && csv_identical && elapsed <= 10.0,
        &format!(
            "bands inside: {all_inside}; identical-seed CSV byte-equal: {csv_identical}; \
             runtime {elapsed:.2}s (limit 10s)"
        ),
    );
}

#[test]
fn criterion_13_spectral_sanity() {
    let mut ortho_resid = 0.0f64;
    for dim in [1usize, 2, 3] {
        let alpha = dim as f64 / 2.0 - 1.0;
        let rule = gauss_jacobi(256, alpha, alpha).unwrap();
        for l in 0..=10usize {
            for lp in 0..=10usize {
                if l == lp {
                    continue;
                }
                let v = rule.integrate(|t| gegenbauer(l, dim, t) * gegenbauer(lp, dim, t));
                ortho_resid = ortho_resid.max(v.abs());
            }
        }
    }

    let k = exp_kernel(2.0);
    let sc = spectral_expansion(&k, 60, 2).unwrap();
    let mut rec_err = 0.0f64;
    for &t in &uniform_grid(101) {
        let rec: f64 = sc
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, &dl)| dl * gegenbauer(l, 2, t))
            .sum();
        rec_err = rec_err.max((rec - k.eval(t)).abs());
    }
    report(
        13,
        "spectral sanity",
        ortho_resid <= 1e-12 && rec_err <= 1e-6,
        &format!(
            "orthogonality residual {ortho_resid:e} (tol 1e-12); \
             reconstruction error {rec_err:e} at l_max = 60 (tol 1e-6)"
        ),
    );
}
