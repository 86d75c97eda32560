//! Exact joint Gaussian sampling of the centered field at finite
//! configurations, and numerical verification of the limit statements:
//! covariance rescaling, log-domain tail curves, the sparse diagonal jump,
//! and the high-disorder covariance limits.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iteration::{
    classify_regime, fixed_point, iterate_deficit, iterate_kernel, scaled_deficit_low,
    sparse_extrapolate, Regime, RegimeReport, SymmetrySet,
};
use crate::kernels::Kernel;
use crate::rates::{matrix_b1, matrix_b2, ProfileEval};
use crate::special::{ln_normal_sf, ln_tail_correction_from_ln};
use crate::sphere::{mean_coefficient, mean_deficit_at_depth, PointConfig};

/// Which centering produces the vanishing sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    NorthPole,
    SphericalAverage,
}

impl Centering {
    pub fn as_str(&self) -> &'static str {
        match self {
            Centering::NorthPole => "north-pole",
            Centering::SphericalAverage => "spherical-average",
        }
    }
}

/// Jitter ladder for Cholesky: delta * trace/m added to the diagonal.
const JITTER_LADDER: [f64; 5] = [1e-14, 1e-13, 1e-12, 1e-11, 1e-10];

/// Covariance of the centered field values at a configuration and depth.
#[derive(Debug, Clone)]
pub struct CenteredCovariance {
    pub config: PointConfig,
    pub l: u64,
    pub centering: Centering,
    pub sigma: DMatrix<f64>,
    /// Mean spectral coefficient at this depth (spherical-average centering).
    pub d0l: Option<f64>,
}

/// Assemble the covariance of the centered vector at depth L.
///
/// North-Pole centering: kappa_L(<xi,xj>) - kappa_L(<xi,N>) - kappa_L(<xj,N>) + 1,
/// with rows of configuration points at N exactly zero.
/// Spherical-average centering: kappa_L(<xi,xj>) - D_{0,L}.
pub fn centered_covariance(
    k: &Kernel,
    config: &PointConfig,
    l: u64,
    centering: Centering,
) -> Result<CenteredCovariance> {
    let m = config.len();
    let mut sigma = DMatrix::<f64>::zeros(m, m);
    let mut d0l = None;
    match centering {
        Centering::NorthPole => {
            // deficit form keeps entries meaningful at depths where
            // 1 - kappa_L underflows the spacing of f64 near 1
            let u_n: Vec<f64> = (0..m)
                .map(|i| iterate_deficit(k, 1.0 - config.north_inner(i), l))
                .collect();
            for i in 0..m {
                for j in i..m {
                    // a point at N centers to exactly zero: its row vanishes
                    let v = if config.north_flags()[i] || config.north_flags()[j] {
                        0.0
                    } else {
                        let u_ij = iterate_deficit(k, 1.0 - config.gram(i, j), l);
                        u_n[i] + u_n[j] - u_ij
                    };
                    sigma[(i, j)] = v;
                    sigma[(j, i)] = v;
                }
            }
        }
        Centering::SphericalAverage => {
            let d0 = mean_coefficient(k, l, config.dim())?;
            d0l = Some(d0);
            for i in 0..m {
                for j in i..m {
                    let v = iterate_kernel(k, config.gram(i, j), l) - d0;
                    sigma[(i, j)] = v;
                    sigma[(j, i)] = v;
                }
            }
        }
    }
    // PSD within jitter tolerance
    let eig = sigma.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin < -1e-8 * lmax.max(1e-300) {
        return Err(Error::Covariance(format!(
            "centered covariance indefinite beyond jitter budget (min eigenvalue {lmin:e}); \
             quadrature of the mean coefficient may be inaccurate"
        )));
    }
    Ok(CenteredCovariance {
        config: config.clone(),
        l,
        centering,
        sigma,
        d0l,
    })
}

/// Metadata that pins a batch to its generating run.
#[derive(Debug, Clone, Serialize)]
pub struct BatchMeta {
    pub l: u64,
    pub centering: Centering,
    pub config_digest: String,
    pub kernel_digest: String,
}

/// A reproducible batch of joint draws.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    /// row-major n x m
    pub draws: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub meta: BatchMeta,
}

use crate::report::digest8 as digest_hex;

/// Exact N(0, sigma) sampling via Cholesky with an escalating jitter
/// ladder. Coordinates with structurally zero variance (a configuration
/// point at the North Pole under that centering) are sampled as exact
/// zeros rather than jittered.
///
/// Draw i uses its own counter-based stream derived from (seed, i), so the
/// batch is bit-identical regardless of how rows are scheduled.
pub fn sample(k: &Kernel, cc: &CenteredCovariance, n: usize, seed: u64) -> Result<SampleBatch> {
    if n < 1 {
        return Err(Error::InvalidParameter("need at least one draw".into()));
    }
    let m = cc.sigma.nrows();
    let active: Vec<usize> = (0..m).filter(|&i| cc.sigma[(i, i)] > 0.0).collect();
    let ma = active.len();
    let sub = DMatrix::<f64>::from_fn(ma, ma, |r, c| cc.sigma[(active[r], active[c])]);

    let chol = {
        let mut found = None;
        let trace: f64 = (0..ma).map(|i| sub[(i, i)]).sum();
        let base = if ma > 0 { trace / ma as f64 } else { 0.0 };
        if let Some(c) = nalgebra::Cholesky::new(sub.clone()) {
            found = Some(c);
        } else {
            for &delta in &JITTER_LADDER {
                let jittered = &sub + DMatrix::identity(ma, ma) * (delta * base);
                if let Some(c) = nalgebra::Cholesky::new(jittered) {
                    found = Some(c);
                    break;
                }
            }
        }
        found.ok_or_else(|| {
            Error::Covariance("Cholesky failed at the top of the jitter ladder".into())
        })?
    };
    let lmat = chol.l();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|row| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(row as u64 + 1);
            let z: Vec<f64> = (0..ma).map(|_| rng.sample(StandardNormal)).collect();
            let mut full = vec![0.0; m];
            for r in 0..ma {
                let mut acc = 0.0;
                for c in 0..=r {
                    acc += lmat[(r, c)] * z[c];
                }
                full[active[r]] = acc;
            }
            full
        })
        .collect();

    let mut draws = Vec::with_capacity(n * m);
    for row in rows {
        draws.extend_from_slice(&row);
    }
    Ok(SampleBatch {
        draws,
        n,
        m,
        seed,
        meta: BatchMeta {
            l: cc.l,
            centering: cc.centering,
            config_digest: digest_hex(&cc.config.digest_label()),
            kernel_digest: digest_hex(&k.digest_label()),
        },
    })
}

/// The rescaling speed attached to a regime.
#[derive(Debug, Clone, Copy)]
pub enum Speed {
    /// v_L = kappa'(1)^{-L}
    Geometric { kprime1: f64 },
    /// v_L = L^{1/(rho-1)}
    Polynomial { rho: f64 },
}

impl Speed {
    pub fn from_report(report: &RegimeReport) -> Result<Speed> {
        match report.regime {
            Regime::LowDisorder => Ok(Speed::Geometric {
                kprime1: report.kprime1,
            }),
            Regime::Sparse => {
                let rho = report
                    .fit
                    .as_ref()
                    .map(|f| f.rho)
                    .ok_or_else(|| {
                        Error::RegimeMismatch(
                            "sparse speed needs the fitted regularity exponent".into(),
                        )
                    })?;
                Ok(Speed::Polynomial { rho })
            }
            Regime::HighDisorder => Err(Error::RegimeMismatch(
                "no vanishing-sequence speed exists when kappa'(1) > 1".into(),
            )),
        }
    }

    /// Override the polynomial exponent (user-supplied rho).
    pub fn polynomial(rho: f64) -> Speed {
        Speed::Polynomial { rho }
    }

    pub fn ln_v(&self, l: u64) -> f64 {
        match self {
            Speed::Geometric { kprime1 } => -(l as f64) * kprime1.ln(),
            Speed::Polynomial { rho } => (l as f64).ln() / (rho - 1.0),
        }
    }

    /// v_L * (1 - kappa_L(t)), computed without under/overflow.
    pub fn scaled_deficit(&self, k: &Kernel, t: f64, l: u64) -> f64 {
        match self {
            Speed::Geometric { kprime1 } => scaled_deficit_low(k, *kprime1, t, l),
            Speed::Polynomial { rho } => {
                let u = iterate_deficit(k, 1.0 - t, l);
                ((l as f64).ln() / (rho - 1.0)).exp() * u
            }
        }
    }
}

/// One row of the covariance-rescaling table.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub l: u64,
    pub i: usize,
    pub j: usize,
    pub rescaled: f64,
    pub limit: f64,
    pub abs_error: f64,
}

/// Rescaled covariance entries v_L sigma and their distance to the limit
/// matrix entries, per depth in the schedule.
pub fn covariance_convergence(
    k: &Kernel,
    config: &PointConfig,
    centering: Centering,
    l_schedule: &[u64],
    report: &RegimeReport,
) -> Result<Vec<ConvergenceRow>> {
    let speed = Speed::from_report(report)?;
    let profile = ProfileEval::from_kernel(k, report)?;
    let limit = match centering {
        Centering::NorthPole => matrix_b1(&profile, config)?,
        Centering::SphericalAverage => matrix_b2(&profile, config, config.dim())?,
    };
    let m = config.len();
    let mut rows = Vec::new();
    for &l in l_schedule {
        let rescaled_mean = match centering {
            Centering::SphericalAverage => {
                let v_l = speed.ln_v(l).exp();
                if v_l.is_finite() {
                    v_l * mean_deficit_at_depth(k, l, config.dim())?
                } else {
                    // geometric speed past overflow: use the limit mean
                    profile.weighted_mean(config.dim())?
                }
            }
            Centering::NorthPole => 0.0,
        };
        let u_n: Vec<f64> = (0..m)
            .map(|i| speed.scaled_deficit(k, config.north_inner(i), l))
            .collect();
        for i in 0..m {
            for j in i..m {
                let rescaled = match centering {
                    Centering::NorthPole => {
                        if config.north_flags()[i] || config.north_flags()[j] {
                            0.0
                        } else {
                            u_n[i] + u_n[j] - speed.scaled_deficit(k, config.gram(i, j), l)
                        }
                    }
                    Centering::SphericalAverage => {
                        rescaled_mean - speed.scaled_deficit(k, config.gram(i, j), l)
                    }
                };
                let lim = limit.matrix()[(i, j)];
                rows.push(ConvergenceRow {
                    l,
                    i,
                    j,
                    rescaled,
                    limit: lim,
                    abs_error: (rescaled - lim).abs(),
                });
            }
        }
    }
    Ok(rows)
}

/// One row of the tail-rate table.
#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub l: u64,
    pub log_tail_over_speed: f64,
    pub limit: f64,
    pub abs_error: f64,
}

/// Exact log-domain half-space tail curve:
/// (1/v_L) log P(<theta, U_L> >= a) per depth, next to the limit
/// -a^2 / (2 theta^T B theta).
pub fn tail_rate_curve(
    k: &Kernel,
    config: &PointConfig,
    centering: Centering,
    theta: &[f64],
    a: f64,
    l_schedule: &[u64],
    report: &RegimeReport,
) -> Result<Vec<TailRow>> {
    if theta.len() != config.len() {
        return Err(Error::InvalidParameter(
            "direction vector length must match the configuration size".into(),
        ));
    }
    if a.is_nan() || a <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "half-space offset must be positive, got {a}"
        )));
    }
    let speed = Speed::from_report(report)?;
    let profile = ProfileEval::from_kernel(k, report)?;
    let limit_model = match centering {
        Centering::NorthPole => matrix_b1(&profile, config)?,
        Centering::SphericalAverage => matrix_b2(&profile, config, config.dim())?,
    };
    let m = config.len();
    let mut quad_limit = 0.0;
    for i in 0..m {
        for j in 0..m {
            quad_limit += theta[i] * theta[j] * limit_model.matrix()[(i, j)];
        }
    }
    if quad_limit <= 0.0 {
        return Err(Error::Domain(format!(
            "degenerate direction: theta^T B theta = {quad_limit:e}"
        )));
    }
    let limit = -a * a / (2.0 * quad_limit);

    let mut rows = Vec::new();
    for &l in l_schedule {
        // rescaled quadratic form q_L = theta^T (v_L sigma) theta
        let u_n: Vec<f64> = (0..m)
            .map(|i| speed.scaled_deficit(k, config.north_inner(i), l))
            .collect();
        let rescaled_mean = match centering {
            Centering::SphericalAverage => {
                let v_l = speed.ln_v(l).exp();
                if v_l.is_finite() {
                    v_l * mean_deficit_at_depth(k, l, config.dim())?
                } else {
                    profile.weighted_mean(config.dim())?
                }
            }
            Centering::NorthPole => 0.0,
        };
        let mut q_l = 0.0;
        for i in 0..m {
            for j in 0..m {
                let entry = match centering {
                    Centering::NorthPole => {
                        if config.north_flags()[i] || config.north_flags()[j] {
                            0.0
                        } else {
                            u_n[i] + u_n[j]
                                - speed.scaled_deficit(k, config.gram(i, j), l)
                        }
                    }
                    Centering::SphericalAverage => {
                        rescaled_mean - speed.scaled_deficit(k, config.gram(i, j), l)
                    }
                };
                q_l += theta[i] * theta[j] * entry;
            }
        }
        if q_l <= 0.0 {
            return Err(Error::Domain(format!(
                "degenerate direction at depth {l}: theta^T sigma theta vanished"
            )));
        }
        // z = a / sqrt(theta^T sigma theta), with sigma = v_L^{-1} (v_L sigma)
        let ln_v = speed.ln_v(l);
        let ln_z = a.ln() + 0.5 * ln_v - 0.5 * q_l.ln();
        let inv_v = (-ln_v).exp();
        let value = if ln_z <= 8f64.ln() {
            inv_v * ln_normal_sf(ln_z.exp())
        } else {
            // (1/v) ln sf = -z^2/(2v) + correction/v with z^2/v = a^2/q_L
            -0.5 * a * a / q_l + inv_v * ln_tail_correction_from_ln(ln_z)
        };
        rows.push(TailRow {
            l,
            log_tail_over_speed: value,
            limit,
            abs_error: (value - limit).abs(),
        });
    }
    Ok(rows)
}

/// One row of the sparse-discontinuity table.
#[derive(Debug, Clone, Serialize)]
pub struct DiscontinuityRow {
    pub eps: f64,
    pub diag_1: f64,
    pub diag_2: f64,
    pub off_diag: f64,
    pub ratio: f64,
    pub expected_diag: f64,
    pub expected_off: f64,
}

/// The diagonal jump of the would-be sparse limit kernel: for point pairs
/// at inner product 1 - eps, the extrapolated rescaled covariance entries
/// approach 2h on the diagonal and h off it, for every eps in (0, 2].
pub fn sparse_discontinuity_demo(
    k: &Kernel,
    _dim: usize,
    eps_schedule: &[f64],
    depth: u64,
    report: &RegimeReport,
) -> Result<Vec<DiscontinuityRow>> {
    if report.regime != Regime::Sparse {
        return Err(Error::RegimeMismatch(
            "the discontinuity demonstration applies to the unit-derivative regime".into(),
        ));
    }
    let fit = report.fit.as_ref().ok_or_else(|| {
        Error::RegimeMismatch("sparse demonstration needs the fitted exponent".into())
    })?;
    let h = report.h.ok_or_else(|| {
        Error::RegimeMismatch("sparse demonstration needs the plateau value".into())
    })?;
    let rho = fit.rho;
    let symmetric = matches!(report.symmetry_set, Some(SymmetrySet::PlusMinusOne));

    let mut rows = Vec::new();
    for &eps in eps_schedule {
        if !(0.0 < eps && eps <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "pair separation eps must lie in (0, 2], got {eps}"
            )));
        }
        let alpha = (1.0 - eps).clamp(-1.0, 1.0).acos();
        // place the pair on a great circle through the poles, keeping both
        // points away from the poles
        let (phi1, phi2) = if alpha < 2.9 {
            (
                std::f64::consts::FRAC_PI_2 - alpha / 2.0,
                std::f64::consts::FRAC_PI_2 + alpha / 2.0,
            )
        } else {
            (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4 + alpha)
        };
        let t1n = phi1.cos();
        let t2n = phi2.cos();
        let t12 = 1.0 - eps;

        let estimate = |t: f64| -> Result<f64> {
            let in_unit = (1.0 - t).abs() <= 1e-12 || (symmetric && (1.0 + t).abs() <= 1e-12);
            if in_unit {
                Ok(0.0)
            } else {
                Ok(sparse_extrapolate(k, t, rho, depth)?.0)
            }
        };
        let s1 = estimate(t1n)?;
        let s2 = estimate(t2n)?;
        let s12 = estimate(t12)?;
        let diag_1 = 2.0 * s1;
        let diag_2 = 2.0 * s2;
        let off_diag = s1 + s2 - s12;
        let expected_off = if (1.0 - t12).abs() <= 1e-12 || (symmetric && (1.0 + t12).abs() <= 1e-12)
        {
            2.0 * h
        } else {
            h
        };
        rows.push(DiscontinuityRow {
            eps,
            diag_1,
            diag_2,
            off_diag,
            ratio: 0.5 * (diag_1 + diag_2) / off_diag,
            expected_diag: 2.0 * h,
            expected_off,
        });
    }
    Ok(rows)
}

/// One row of the high-disorder limit table.
#[derive(Debug, Clone, Serialize)]
pub struct HighDisorderRow {
    pub centering: Centering,
    pub i: usize,
    pub j: usize,
    pub computed: f64,
    pub limit: f64,
    pub abs_error: f64,
}

/// Summary of the high-disorder covariance limits.
#[derive(Debug, Clone, Serialize)]
pub struct HighDisorderTable {
    pub t_star: f64,
    pub d0_hat: f64,
    pub rows: Vec<HighDisorderRow>,
}

/// Covariance limits in the high-disorder regime at a large depth, for both
/// centerings: North-Pole diag 2(1-t*) and off-diag 1-t*; spherical-average
/// diag 1 - d0 and off-diag t* - d0, with d0 estimated at the given depth.
pub fn high_disorder_limits(
    k: &Kernel,
    config: &PointConfig,
    l_big: u64,
) -> Result<HighDisorderTable> {
    let report = classify_regime(k)?;
    if report.regime != Regime::HighDisorder {
        return Err(Error::RegimeMismatch(
            "high-disorder limits require kappa'(1) > 1".into(),
        ));
    }
    let m = config.len();
    for i in 0..m {
        if config.north_inner(i).abs() >= 1.0 - 1e-12 {
            return Err(Error::Domain(format!(
                "point {i} sits at a pole; the limit table needs |<x,N>| < 1"
            )));
        }
        for j in (i + 1)..m {
            if config.gram(i, j).abs() >= 1.0 - 1e-12 {
                return Err(Error::Domain(format!(
                    "points {i},{j} are aligned or antipodal; need |<xi,xj>| < 1"
                )));
            }
        }
    }
    let t_star = fixed_point(k)?;
    let d0_hat = mean_coefficient(k, l_big, config.dim())?;
    let mut rows = Vec::new();
    for centering in [Centering::NorthPole, Centering::SphericalAverage] {
        let cc = centered_covariance(k, config, l_big, centering)?;
        for i in 0..m {
            for j in i..m {
                let limit = match centering {
                    Centering::NorthPole => {
                        if i == j {
                            2.0 * (1.0 - t_star)
                        } else {
                            1.0 - t_star
                        }
                    }
                    Centering::SphericalAverage => {
                        if i == j {
                            1.0 - d0_hat
                        } else {
                            t_star - d0_hat
                        }
                    }
                };
                let computed = cc.sigma[(i, j)];
                rows.push(HighDisorderRow {
                    centering,
                    i,
                    j,
                    computed,
                    limit,
                    abs_error: (computed - limit).abs(),
                });
            }
        }
    }
    Ok(HighDisorderTable {
        t_star,
        d0_hat,
        rows,
    })
}

/// Per-entry band check of the weak-convergence test.
#[derive(Debug, Clone, Serialize)]
pub struct MomentBand {
    pub i: usize,
    pub j: usize,
    pub empirical: f64,
    pub limit: f64,
    pub band: f64,
    pub inside: bool,
}

/// Normality diagnostics per coordinate.
#[derive(Debug, Clone, Serialize)]
pub struct NormalityRow {
    pub coordinate: usize,
    pub skewness: f64,
    pub skewness_band: f64,
    pub kurtosis: f64,
    pub kurtosis_band: f64,
    pub inside: bool,
}

/// Report of the finite-dimensional weak-convergence check.
#[derive(Debug, Clone, Serialize)]
pub struct WeakConvergenceReport {
    pub l: u64,
    pub n: usize,
    pub insufficient_power: bool,
    pub covariance_bands: Vec<MomentBand>,
    pub normality: Vec<NormalityRow>,
    pub pass: bool,
}

/// Sample sqrt(v_L) U_L and compare the empirical covariance with the limit
/// matrix entrywise (4 standard errors), plus skewness/kurtosis
/// diagnostics. Small n flags insufficient power instead of failing.
pub fn weak_convergence_test(
    k: &Kernel,
    config: &PointConfig,
    centering: Centering,
    l: u64,
    n: usize,
    seed: u64,
    report: &RegimeReport,
) -> Result<WeakConvergenceReport> {
    let speed = Speed::from_report(report)?;
    let profile = ProfileEval::from_kernel(k, report)?;
    let limit = match centering {
        Centering::NorthPole => matrix_b1(&profile, config)?,
        Centering::SphericalAverage => matrix_b2(&profile, config, config.dim())?,
    };
    let m = config.len();

    // build v_L sigma directly in rescaled form
    let mut scaled = DMatrix::<f64>::zeros(m, m);
    let u_n: Vec<f64> = (0..m)
        .map(|i| speed.scaled_deficit(k, config.north_inner(i), l))
        .collect();
    let rescaled_mean = match centering {
        Centering::SphericalAverage => {
            let v_l = speed.ln_v(l).exp();
            if v_l.is_finite() {
                v_l * mean_deficit_at_depth(k, l, config.dim())?
            } else {
                profile.weighted_mean(config.dim())?
            }
        }
        Centering::NorthPole => 0.0,
    };
    for i in 0..m {
        for j in i..m {
            let v = match centering {
                Centering::NorthPole => {
                    if config.north_flags()[i] || config.north_flags()[j] {
                        0.0
                    } else {
                        u_n[i] + u_n[j] - speed.scaled_deficit(k, config.gram(i, j), l)
                    }
                }
                Centering::SphericalAverage => {
                    rescaled_mean - speed.scaled_deficit(k, config.gram(i, j), l)
                }
            };
            scaled[(i, j)] = v;
            scaled[(j, i)] = v;
        }
    }
    let cc = CenteredCovariance {
        config: config.clone(),
        l,
        centering,
        sigma: scaled,
        d0l: None,
    };
    let batch = sample(k, &cc, n, seed)?;

    let nf = n as f64;
    let mut bands = Vec::new();
    let mut all_inside = true;
    let mut max_band = 0.0f64;
    let mut max_diag = 0.0f64;
    for i in 0..m {
        max_diag = max_diag.max(limit.matrix()[(i, i)]);
        for j in i..m {
            let mut acc = 0.0;
            for row in 0..n {
                acc += batch.draws[row * m + i] * batch.draws[row * m + j];
            }
            let empirical = acc / nf;
            let bij = limit.matrix()[(i, j)];
            let se = ((limit.matrix()[(i, i)] * limit.matrix()[(j, j)] + bij * bij) / nf).sqrt();
            let band = 4.0 * se;
            max_band = max_band.max(band);
            let inside = (empirical - bij).abs() <= band;
            all_inside &= inside;
            bands.push(MomentBand {
                i,
                j,
                empirical,
                limit: bij,
                band,
                inside,
            });
        }
    }
    let insufficient_power = n < 1000 || max_band > 0.25 * max_diag.max(1e-300);

    let skew_band = 4.0 * (6.0 / nf).sqrt();
    let kurt_band = 4.0 * (24.0 / nf).sqrt();
    let mut normality = Vec::new();
    for i in 0..m {
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for row in 0..n {
            let x = batch.draws[row * m + i];
            m2 += x * x;
            m3 += x * x * x;
            m4 += x * x * x * x;
        }
        m2 /= nf;
        m3 /= nf;
        m4 /= nf;
        if m2 <= 0.0 {
            continue; // structurally zero coordinate
        }
        let skewness = m3 / m2.powf(1.5);
        let kurtosis = m4 / (m2 * m2);
        let inside = skewness.abs() <= skew_band && (kurtosis - 3.0).abs() <= kurt_band;
        all_inside &= inside;
        normality.push(NormalityRow {
            coordinate: i,
            skewness,
            skewness_band: skew_band,
            kurtosis,
            kurtosis_band: kurt_band,
            inside,
        });
    }

    Ok(WeakConvergenceReport {
        l,
        n,
        insufficient_power,
        covariance_bands: bands,
        normality,
        pass: all_inside || insufficient_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::BuiltinKernel;
    use approx::assert_relative_eq;

    fn exp_kernel(gamma: f64) -> Kernel {
        Kernel::builtin(BuiltinKernel::Exponential { gamma }).unwrap()
    }

    fn equator_config() -> PointConfig {
        PointConfig::new(2, &[vec![1.0, 0.0, 0.0]]).unwrap()
    }

    #[test]
    fn centered_covariance_identity_field() {
        // L = 0: north-pole sigma = 2(1 - <x,N>) = 2 for x orthogonal to N
        let k = exp_kernel(2.0);
        let cc = centered_covariance(&k, &equator_config(), 0, Centering::NorthPole).unwrap();
        assert_relative_eq!(cc.sigma[(0, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn centered_covariance_north_row_zero() {
        let k = exp_kernel(2.0);
        let cfg = PointConfig::new(
            2,
            &[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        )
        .unwrap();
        let cc = centered_covariance(&k, &cfg, 4, Centering::NorthPole).unwrap();
        assert_eq!(cc.sigma[(0, 0)], 0.0);
        assert_eq!(cc.sigma[(0, 1)], 0.0);
        assert!(cc.sigma[(1, 1)] > 0.0);
    }

    #[test]
    fn centered_covariance_spherical_average() {
        let k = exp_kernel(2.0);
        let cc =
            centered_covariance(&k, &equator_config(), 1, Centering::SphericalAverage).unwrap();
        let d01 = std::f64::consts::SQRT_2 * (1.0 / 3.0f64.sqrt()).asin();
        assert_relative_eq!(cc.sigma[(0, 0)], 1.0 - d01, epsilon = 1e-9);
        assert_relative_eq!(cc.d0l.unwrap(), d01, epsilon = 1e-9);
    }

    #[test]
    fn sampling_reproducible_and_calibrated() {
        let k = exp_kernel(2.0);
        let cfg = PointConfig::uniform(2, 3, 5).unwrap();
        let cc = centered_covariance(&k, &cfg, 2, Centering::NorthPole).unwrap();
        let b1 = sample(&k, &cc, 50_000, 77).unwrap();
        let b2 = sample(&k, &cc, 50_000, 77).unwrap();
        assert_eq!(b1.draws, b2.draws);
        let b3 = sample(&k, &cc, 50_000, 78).unwrap();
        assert_ne!(b1.draws, b3.draws);

        // empirical covariance within 4 SE
        let n = b1.n as f64;
        for i in 0..3 {
            for j in i..3 {
                let mut acc = 0.0;
                for row in 0..b1.n {
                    acc += b1.draws[row * 3 + i] * b1.draws[row * 3 + j];
                }
                let emp = acc / n;
                let sij = cc.sigma[(i, j)];
                let se =
                    ((cc.sigma[(i, i)] * cc.sigma[(j, j)] + sij * sij) / n).sqrt();
                assert!(
                    (emp - sij).abs() <= 4.0 * se,
                    "entry ({i},{j}): {emp} vs {sij} (band {})",
                    4.0 * se
                );
            }
        }
    }

    #[test]
    fn sampling_handles_structural_zero_rows() {
        let k = exp_kernel(2.0);
        let cfg = PointConfig::new(
            2,
            &[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        )
        .unwrap();
        let cc = centered_covariance(&k, &cfg, 3, Centering::NorthPole).unwrap();
        let batch = sample(&k, &cc, 100, 3).unwrap();
        for row in 0..batch.n {
            assert_eq!(batch.draws[row * 2], 0.0);
        }
        assert!(batch.draws.iter().skip(1).step_by(2).any(|&v| v != 0.0));
    }

    #[test]
    fn sample_means_are_centered() {
        let k = exp_kernel(2.0);
        let cc = centered_covariance(&k, &equator_config(), 1, Centering::NorthPole).unwrap();
        let batch = sample(&k, &cc, 100_000, 11).unwrap();
        let mean: f64 = batch.draws.iter().sum::<f64>() / batch.n as f64;
        let band = 4.0 * (cc.sigma[(0, 0)] / batch.n as f64).sqrt();
        assert!(mean.abs() <= band, "mean {mean} outside {band}");
    }

    #[test]
    fn covariance_convergence_low_disorder() {
        let k = exp_kernel(2.0);
        let report = classify_regime(&k).unwrap();
        let rows = covariance_convergence(
            &k,
            &equator_config(),
            Centering::NorthPole,
            &[0, 10, 40],
            &report,
        )
        .unwrap();
        // L = 0 reproduces the raw centered covariance (v_0 = 1)
        assert_relative_eq!(rows[0].rescaled, 2.0, epsilon = 1e-12);
        // at L = 40 the rescaled entry is within 1e-6 of 2 L(0) = 0.5
        let last = rows.last().unwrap();
        assert_relative_eq!(last.limit, 0.5, epsilon = 1e-12);
        assert!(last.abs_error <= 1e-6, "error {}", last.abs_error);
    }

    #[test]
    fn covariance_convergence_sparse() {
        let k = exp_kernel(1.0);
        // exact expansion parameters for this kernel: c = 2, rho = 2
        let report = classify_regime(&k)
            .unwrap()
            .with_regularity(2.0, 2.0)
            .unwrap();
        let rows = covariance_convergence(
            &k,
            &equator_config(),
            Centering::NorthPole,
            &[10_000],
            &report,
        )
        .unwrap();
        let row = rows.last().unwrap();
        assert_relative_eq!(row.limit, 1.0, epsilon = 1e-12); // 2h = 1
        assert!(row.abs_error <= 1e-3, "error {}", row.abs_error);

        // fitted parameters: exponent bias costs O(drho ln L)
        let fitted = classify_regime(&k).unwrap();
        let rows = covariance_convergence(
            &k,
            &equator_config(),
            Centering::NorthPole,
            &[10_000],
            &fitted,
        )
        .unwrap();
        assert!(rows.last().unwrap().abs_error <= 0.02);
    }

    #[test]
    fn tail_curve_reaches_the_rate() {
        let k = exp_kernel(2.0);
        let report = classify_regime(&k).unwrap();
        let rows = tail_rate_curve(
            &k,
            &equator_config(),
            Centering::NorthPole,
            &[1.0],
            1.0,
            &[1, 5, 10, 20, 40],
            &report,
        )
        .unwrap();
        assert_relative_eq!(rows.last().unwrap().limit, -1.0, epsilon = 1e-10);
        assert!(rows.last().unwrap().abs_error <= 1e-2);
        // monotone decrease in a: double a quadruples the limit magnitude
        let rows2 = tail_rate_curve(
            &k,
            &equator_config(),
            Centering::NorthPole,
            &[1.0],
            2.0,
            &[40],
            &report,
        )
        .unwrap();
        assert_relative_eq!(rows2[0].limit, -4.0, epsilon = 1e-10);
        assert!(rows2[0].log_tail_over_speed < rows.last().unwrap().log_tail_over_speed);
    }

    #[test]
    fn tail_curve_finite_at_extreme_depth() {
        let k = exp_kernel(2.0);
        let report = classify_regime(&k).unwrap();
        let rows = tail_rate_curve(
            &k,
            &equator_config(),
            Centering::NorthPole,
            &[1.0],
            1.0,
            &[500, 5000],
            &report,
        )
        .unwrap();
        for row in rows {
            assert!(row.log_tail_over_speed.is_finite());
            assert!(row.abs_error < 1e-6);
        }
    }

    #[test]
    fn discontinuity_demo_shows_the_jump() {
        let k = exp_kernel(1.0);
        let report = classify_regime(&k)
            .unwrap()
            .with_regularity(2.0, 2.0)
            .unwrap();
        let rows =
            sparse_discontinuity_demo(&k, 2, &[1e-1, 1e-2, 1e-3], 10_000, &report).unwrap();
        for row in &rows {
            assert!((row.diag_1 - 1.0).abs() <= 5e-3, "diag {}", row.diag_1);
            assert!((row.off_diag - 0.5).abs() <= 5e-3, "off {}", row.off_diag);
            assert!((row.ratio - 2.0).abs() <= 2e-2);
        }
        // antipodal pair: off-diagonal tends to 2h
        let anti = sparse_discontinuity_demo(&k, 2, &[2.0], 10_000, &report).unwrap();
        assert!((anti[0].off_diag - 1.0).abs() <= 5e-3);
        assert_relative_eq!(anti[0].expected_off, 1.0, max_relative = 0.05);
    }

    #[test]
    fn high_disorder_limit_table() {
        let k = exp_kernel(0.25);
        let cfg = PointConfig::new(
            2,
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        )
        .unwrap();
        let table = high_disorder_limits(&k, &cfg, 200).unwrap();
        assert_relative_eq!(table.t_star, 0.5, epsilon = 1e-10);
        assert_relative_eq!(table.d0_hat, 0.5, epsilon = 1e-6);
        for row in &table.rows {
            assert!(row.abs_error <= 1e-6, "row {row:?}");
        }
        // pole in the configuration is rejected
        let bad = PointConfig::new(2, &[vec![0.0, 0.0, 1.0]]).unwrap();
        assert!(high_disorder_limits(&k, &bad, 200).is_err());
    }

    #[test]
    fn weak_convergence_small_n_flags_power() {
        let k = exp_kernel(2.0);
        let report = classify_regime(&k).unwrap();
        let cfg = PointConfig::uniform(2, 3, 21).unwrap();
        let rep = weak_convergence_test(
            &k,
            &cfg,
            Centering::NorthPole,
            30,
            100,
            9,
            &report,
        )
        .unwrap();
        assert!(rep.insufficient_power);
        assert!(rep.pass);
    }

    #[test]
    fn weak_convergence_full_power() {
        let k = exp_kernel(2.0);
        let report = classify_regime(&k).unwrap();
        let cfg = PointConfig::uniform(2, 3, 21).unwrap();
        let rep = weak_convergence_test(
            &k,
            &cfg,
            Centering::NorthPole,
            30,
            200_000,
            10,
            &report,
        )
        .unwrap();
        assert!(!rep.insufficient_power);
        assert!(rep.pass, "report {rep:?}");
        for band in &rep.covariance_bands {
            assert!(band.inside);
        }
    }
}
