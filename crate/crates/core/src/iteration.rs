//! Deep iteration of the kernel: regime classification, the regularity
//! expansion fit, limit profiles of the rescaled deficit, and the
//! high-disorder fixed point.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::Kernel;

/// |kappa'(1) - 1| within this tolerance classifies as the unit-derivative
/// (sparse) regime. Built-ins carry exact derivatives; quadrature-built
/// kernels carry small derivative noise.
pub const CLASSIFY_TOL: f64 = 1e-9;
/// |kappa(-1) - 1| within this tolerance makes the kernel symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Iteration ceiling for scalar deficit iterations.
pub const L_MAX: u64 = 1_000_000;
/// Relative stopping tolerance for the low-disorder profile iteration.
const PROFILE_TOL: f64 = 1e-12;
/// Default extrapolation depth for the sparse profile.
pub const DEFAULT_SPARSE_DEPTH: u64 = 1000;
/// Points in [-1, 1] with kappa(t) = 1 are detected within this tolerance.
pub const UNIT_SET_TOL: f64 = 1e-12;

/// The three regimes of the deep iteration, keyed by kappa'(1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    LowDisorder,
    Sparse,
    HighDisorder,
}

/// The set of arguments mapped to 1 by the kernel: {1}, or {-1, 1} exactly
/// when the kernel is even.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetrySet {
    One,
    PlusMinusOne,
}

impl SymmetrySet {
    pub fn contains(&self, t: f64) -> bool {
        (1.0 - t).abs() <= UNIT_SET_TOL
            || (matches!(self, SymmetrySet::PlusMinusOne) && (1.0 + t).abs() <= UNIT_SET_TOL)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SymmetrySet::One => "{1}",
            SymmetrySet::PlusMinusOne => "{-1,1}",
        }
    }
}

impl Serialize for SymmetrySet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Least-squares diagnostics of the regularity fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitDiagnostics {
    pub r_squared: f64,
    pub n_points: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    /// Per-point log-residuals of the regression, in grid order.
    pub log_residuals: Vec<f64>,
}

/// Fitted parameters of the near-1 expansion
/// 1 - kappa(t) = kappa'(1)(1-t) - c (1-t)^rho + o((1-t)^rho).
#[derive(Debug, Clone, Serialize)]
pub struct RegularityFit {
    pub c: f64,
    pub rho: f64,
    pub diagnostics: FitDiagnostics,
}

impl RegularityFit {
    /// Plateau value of the sparse limit profile, h = (c (rho-1))^(-1/(rho-1)).
    pub fn plateau(&self) -> f64 {
        (self.c * (self.rho - 1.0)).powf(-1.0 / (self.rho - 1.0))
    }

    /// A fit record carrying externally known exact parameters.
    ///
    /// The least-squares fit estimates rho with a bias of order the next
    /// expansion term; quantities built on the exponent (the plateau, the
    /// polynomial speed, the extrapolated profile) inherit an
    /// O(delta_rho * ln L) relative error. When the exact exponent is known,
    /// supplying it here removes that bias.
    pub fn exact(c: f64, rho: f64) -> Self {
        RegularityFit {
            c,
            rho,
            diagnostics: FitDiagnostics {
                r_squared: 1.0,
                n_points: 0,
                grid_min: f64::NAN,
                grid_max: f64::NAN,
                log_residuals: Vec::new(),
            },
        }
    }
}

/// Outcome of regime classification.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub kprime1: f64,
    pub regime: Regime,
    /// None in the high-disorder regime, where the set plays no role.
    pub symmetry_set: Option<SymmetrySet>,
    /// Present when the regularity fit succeeded (low-disorder and sparse).
    pub fit: Option<RegularityFit>,
    /// Diagnostic when the fit failed.
    pub fit_error: Option<String>,
    /// Sparse plateau h, derived exactly from the stored (c, rho).
    pub h: Option<f64>,
    /// High-disorder fixed point in [0, 1).
    pub t_star: Option<f64>,
}

impl RegimeReport {
    /// Replace the fitted expansion parameters with user-supplied exact
    /// values; in the unit-derivative regime the plateau follows from them.
    pub fn with_regularity(mut self, c: f64, rho: f64) -> Result<Self> {
        if rho.is_nan() || rho <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "regularity exponent must exceed 1, got {rho}"
            )));
        }
        if self.regime == Regime::Sparse && c <= 0.0 {
            return Err(Error::InconsistentFit(format!(
                "unit-derivative regime requires c > 0, got {c}"
            )));
        }
        let fit = RegularityFit::exact(c, rho);
        if self.regime == Regime::Sparse {
            self.h = Some(fit.plateau());
        }
        self.fit = Some(fit);
        self.fit_error = None;
        Ok(self)
    }
}

/// L-fold composition kappa_L(t); kappa_0(t) = t.
pub fn iterate_kernel(k: &Kernel, t: f64, l: u64) -> f64 {
    let mut x = t;
    for _ in 0..l {
        x = k.eval(x);
    }
    x
}

/// Deficit-form composition: u_L with u_0 = u and u_{j+1} = 1 - kappa(1 - u_j).
///
/// Stays accurate when u_L underflows the spacing of f64 around 1, which the
/// direct composition cannot.
pub fn iterate_deficit(k: &Kernel, u: f64, l: u64) -> f64 {
    let mut x = u;
    for _ in 0..l {
        if x == 0.0 {
            return 0.0;
        }
        x = k.deficit(x);
    }
    x
}

/// Classify the regime of `k` and fill the report fields that the regime
/// supports.
pub fn classify_regime(k: &Kernel) -> Result<RegimeReport> {
    classify_regime_with(k, CLASSIFY_TOL, SYMMETRY_TOL)
}

/// Classification with caller-supplied tolerances for the unit-derivative
/// band and the symmetry detection.
pub fn classify_regime_with(
    k: &Kernel,
    classify_tol: f64,
    symmetry_tol: f64,
) -> Result<RegimeReport> {
    if !(classify_tol >= 0.0 && symmetry_tol >= 0.0) {
        return Err(Error::InvalidParameter(
            "classification tolerances must be nonnegative".into(),
        ));
    }
    let kprime1 = k.derivative_at_one();
    if !kprime1.is_finite() || kprime1 < 0.0 {
        return Err(Error::NumericFailure(format!(
            "kappa'(1) = {kprime1} is not usable"
        )));
    }
    let regime = if (kprime1 - 1.0).abs() <= classify_tol {
        Regime::Sparse
    } else if kprime1 < 1.0 {
        Regime::LowDisorder
    } else {
        Regime::HighDisorder
    };

    let mut report = RegimeReport {
        kprime1,
        regime,
        symmetry_set: None,
        fit: None,
        fit_error: None,
        h: None,
        t_star: None,
    };

    match regime {
        Regime::HighDisorder => {
            report.t_star = Some(fixed_point(k)?);
        }
        Regime::LowDisorder | Regime::Sparse => {
            report.symmetry_set = Some(symmetry_set_with(k, symmetry_tol));
            match estimate_regularity(k) {
                Ok(fit) => {
                    if regime == Regime::Sparse {
                        if fit.c <= 0.0 {
                            return Err(Error::InconsistentFit(format!(
                                "unit-derivative kernel fitted c = {} <= 0; the expansion \
                                 requires c > 0 in this regime",
                                fit.c
                            )));
                        }
                        report.h = Some(fit.plateau());
                    }
                    report.fit = Some(fit);
                }
                Err(e) => {
                    report.fit_error = Some(e.to_string());
                }
            }
        }
    }
    Ok(report)
}

/// {-1, 1} iff kappa(-1) = 1 within tolerance, else {1}.
///
/// Meaningful when kappa'(1) <= 1; classification never calls it in the
/// high-disorder regime.
pub fn symmetry_set(k: &Kernel) -> SymmetrySet {
    symmetry_set_with(k, SYMMETRY_TOL)
}

/// Symmetry detection at a caller-supplied tolerance.
pub fn symmetry_set_with(k: &Kernel, tol: f64) -> SymmetrySet {
    if (k.eval(-1.0) - 1.0).abs() <= tol {
        SymmetrySet::PlusMinusOne
    } else {
        SymmetrySet::One
    }
}

/// Fit (c, rho) of the near-1 expansion by least squares of
/// log |kappa'(1)(1-t) - (1-kappa(t))| against log(1-t) over a log-spaced
/// grid 1-t in [1e-6, 1e-2]. The sign of c is recovered from the residual.
pub fn estimate_regularity(k: &Kernel) -> Result<RegularityFit> {
    const GRID_MIN: f64 = 1e-6;
    const GRID_MAX: f64 = 1e-2;
    const N_PTS: usize = 40;
    const FLOOR: f64 = 1e-14;

    let kprime1 = k.derivative_at_one();
    let ratio = (GRID_MAX / GRID_MIN).powf(1.0 / (N_PTS - 1) as f64);
    let mut logs = Vec::with_capacity(N_PTS);
    let mut log_r = Vec::with_capacity(N_PTS);
    let mut pos = 0usize;
    let mut neg = 0usize;
    let mut any_above_floor = false;

    let mut s = GRID_MIN;
    for _ in 0..N_PTS {
        let r = kprime1 * s - k.deficit(s);
        if !r.is_finite() {
            return Err(Error::NumericFailure(format!(
                "non-finite residual at 1-t = {s:e}"
            )));
        }
        if r.abs() > FLOOR {
            any_above_floor = true;
        }
        if r > 0.0 {
            pos += 1;
        } else if r < 0.0 {
            neg += 1;
        }
        if r.abs() > 1e-300 {
            logs.push(s.ln());
            log_r.push(r.abs().ln());
        }
        s *= ratio;
    }
    if !any_above_floor {
        return Err(Error::AssumptionNotDetectable { floor: FLOOR });
    }
    if logs.len() < 3 {
        return Err(Error::NumericFailure(
            "too few usable residuals for the regularity fit".into(),
        ));
    }

    let n = logs.len() as f64;
    let mx = logs.iter().sum::<f64>() / n;
    let my = log_r.iter().sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = logs
        .iter()
        .zip(&log_r)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let rho = sxy / sxx;
    let intercept = my - rho * mx;
    let ss_tot: f64 = log_r.iter().map(|y| (y - my) * (y - my)).sum();
    let residuals: Vec<f64> = logs
        .iter()
        .zip(&log_r)
        .map(|(x, y)| y - (intercept + rho * x))
        .collect();
    let ss_res: f64 = residuals.iter().map(|e| e * e).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let sign = if pos >= neg { 1.0 } else { -1.0 };

    Ok(RegularityFit {
        c: sign * intercept.exp(),
        rho,
        diagnostics: FitDiagnostics {
            r_squared,
            n_points: logs.len(),
            grid_min: GRID_MIN,
            grid_max: GRID_MAX,
            log_residuals: residuals,
        },
    })
}

/// Which limit profile a table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    /// low-disorder profile: lim kappa'(1)^{-L} (1 - kappa_L(t))
    L,
    /// sparse profile: lim L^{1/(rho-1)} (1 - kappa_L(t))
    S,
}

impl ProfileKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileKind::L => "L",
            ProfileKind::S => "S",
        }
    }
}

/// Tabulated limit profile over a grid of arguments.
#[derive(Debug, Clone)]
pub struct ProfileTable {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub converged_at: Vec<u64>,
    pub non_converged: Vec<bool>,
    pub profile_kind: ProfileKind,
    /// Sparse plateau value carried alongside the table.
    pub h: Option<f64>,
    /// Whether the kernel is symmetric (determines the zero set).
    pub symmetric: bool,
}

/// Default profile grid: `n` Chebyshev-spaced points on [-1, 1]
/// (endpoints included), ascending.
pub fn chebyshev_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let mut g: Vec<f64> = (0..n)
        .map(|j| (std::f64::consts::PI * j as f64 / (n - 1) as f64).cos())
        .collect();
    g.reverse();
    // pin endpoints exactly
    g[0] = -1.0;
    g[n - 1] = 1.0;
    g
}

/// Low-disorder limit profile on a grid: per point, iterate
/// beta_L(t) = (1 - kappa_L(t)) / kappa'(1)^L to convergence.
///
/// beta_L is nonincreasing in L and bounded by 1 - t; both facts are
/// checked along the way.
pub fn limit_profile_low(k: &Kernel, grid: &[f64]) -> Result<ProfileTable> {
    let p = k.derivative_at_one();
    if !(p > 0.0 && p < 1.0 - CLASSIFY_TOL) {
        return Err(Error::RegimeMismatch(format!(
            "low-disorder profile requires 0 < kappa'(1) < 1, got {p}"
        )));
    }
    let symmetric = matches!(symmetry_set(k), SymmetrySet::PlusMinusOne);
    let results: Vec<Result<(f64, u64, bool)>> = grid
        .par_iter()
        .map(|&t| low_profile_point(k, p, t))
        .collect();

    let mut values = Vec::with_capacity(grid.len());
    let mut converged_at = Vec::with_capacity(grid.len());
    let mut non_converged = Vec::with_capacity(grid.len());
    for r in results {
        let (v, l, nc) = r?;
        values.push(v);
        converged_at.push(l);
        non_converged.push(nc);
    }
    Ok(ProfileTable {
        grid: grid.to_vec(),
        values,
        converged_at,
        non_converged,
        profile_kind: ProfileKind::L,
        h: None,
        symmetric,
    })
}

fn low_profile_point(k: &Kernel, p: f64, t: f64) -> Result<(f64, u64, bool)> {
    let mut u = 1.0 - t;
    if u == 0.0 {
        return Ok((0.0, 0, false));
    }
    let bound = u + 1e-12 * u.max(1.0);
    let mut beta_prev = u;
    let mut p_pow = 1.0f64;
    let mut l = 0u64;
    loop {
        l += 1;
        u = k.deficit(u);
        p_pow *= p;
        if u == 0.0 || p_pow == 0.0 {
            // exact zero: the point is in the unit set of the kernel
            return Ok((0.0, l, false));
        }
        let beta = u / p_pow;
        if !beta.is_finite() {
            return Err(Error::NumericFailure(format!(
                "rescaled deficit overflowed at t = {t}, L = {l}"
            )));
        }
        if beta > beta_prev * (1.0 + 1e-9) + 1e-14 {
            return Err(Error::NumericFailure(format!(
                "rescaled deficit increased at t = {t}, L = {l}: {beta_prev} -> {beta}"
            )));
        }
        if beta > bound {
            return Err(Error::NumericFailure(format!(
                "rescaled deficit exceeded its 1 - t bound at t = {t}, L = {l}"
            )));
        }
        if (beta - beta_prev).abs() <= PROFILE_TOL * beta.max(1.0) {
            return Ok((beta, l, false));
        }
        beta_prev = beta;
        if l >= L_MAX {
            return Ok((beta, l, true));
        }
    }
}

/// beta_L(t) at a *finite* depth L in the low-disorder regime, with the
/// iteration frozen once the deficit drops below 1e-250 (beyond that the
/// map is linear to far below f64 resolution).
pub fn scaled_deficit_low(k: &Kernel, p: f64, t: f64, l: u64) -> f64 {
    let mut u = 1.0 - t;
    let mut beta = u;
    let mut p_pow = 1.0f64;
    for _ in 0..l {
        if u == 0.0 {
            return 0.0;
        }
        if u < 1e-250 {
            return beta; // frozen: further steps change beta by < 1e-200 rel
        }
        u = k.deficit(u);
        p_pow *= p;
        beta = u / p_pow;
    }
    beta
}

/// Sparse limit profile by the difference-quotient extrapolation of
/// (1 - kappa_L)^{-(rho-1)} between depths L/2 and L.
pub fn limit_profile_sparse(
    k: &Kernel,
    grid: &[f64],
    fit: &RegularityFit,
    depth: u64,
) -> Result<ProfileTable> {
    if (k.derivative_at_one() - 1.0).abs() > CLASSIFY_TOL {
        return Err(Error::RegimeMismatch(format!(
            "sparse profile requires kappa'(1) = 1, got {}",
            k.derivative_at_one()
        )));
    }
    if fit.c <= 0.0 || fit.rho <= 1.0 {
        return Err(Error::InconsistentFit(format!(
            "sparse profile requires c > 0 and rho > 1, got c = {}, rho = {}",
            fit.c, fit.rho
        )));
    }
    let symmetric = matches!(symmetry_set(k), SymmetrySet::PlusMinusOne);
    let unit_set = if symmetric {
        SymmetrySet::PlusMinusOne
    } else {
        SymmetrySet::One
    };
    let rho = fit.rho;
    let h = fit.plateau();
    let results: Vec<Result<(f64, u64)>> = grid
        .par_iter()
        .map(|&t| {
            if unit_set.contains(t) {
                Ok((0.0, 0))
            } else {
                sparse_extrapolate(k, t, rho, depth)
            }
        })
        .collect();

    let mut values = Vec::with_capacity(grid.len());
    let mut converged_at = Vec::with_capacity(grid.len());
    for r in results {
        let (v, l) = r?;
        values.push(v);
        converged_at.push(l);
    }
    Ok(ProfileTable {
        grid: grid.to_vec(),
        values,
        non_converged: vec![false; grid.len()],
        converged_at,
        profile_kind: ProfileKind::S,
        h: Some(h),
        symmetric,
    })
}

/// Difference-quotient estimate of the sparse limit at one argument,
/// reducing the depth when the rescaled power overflows.
pub fn sparse_extrapolate(k: &Kernel, t: f64, rho: f64, depth: u64) -> Result<(f64, u64)> {
    let mut l = depth.max(4);
    loop {
        let half = l / 2;
        let u_half = iterate_deficit(k, 1.0 - t, half);
        let u_full = iterate_deficit(k, u_half, l - half);
        let exponent = -(rho - 1.0);
        let x_half = u_half.powf(exponent);
        let x_full = u_full.powf(exponent);
        if x_half.is_finite() && x_full.is_finite() {
            let slope = (x_full - x_half) / (l - half) as f64;
            if slope <= 0.0 || !slope.is_finite() {
                return Err(Error::NumericFailure(format!(
                    "sparse extrapolation slope {slope} at t = {t} is not positive"
                )));
            }
            return Ok((slope.powf(-1.0 / (rho - 1.0)), l));
        }
        if l <= 4 {
            return Err(Error::NumericFailure(format!(
                "sparse extrapolation overflowed even at depth {l} for t = {t}"
            )));
        }
        l /= 4;
    }
}

/// Plain rescaled deficit L^{1/(rho-1)} (1 - kappa_L(t)) at finite depth.
pub fn scaled_deficit_sparse(k: &Kernel, rho: f64, t: f64, l: u64) -> f64 {
    let u = iterate_deficit(k, 1.0 - t, l);
    (l as f64).powf(1.0 / (rho - 1.0)) * u
}

/// Fixed point t* of kappa in [0, 1) by bisection of kappa(t) - t.
///
/// Preconditions the high-disorder regime; with kappa'(1) > 1 the function
/// kappa(t) - t is positive at 0 (or exactly zero, in which case t* = 0)
/// and negative just below 1.
pub fn fixed_point(k: &Kernel) -> Result<f64> {
    let g = |t: f64| k.eval(t) - t;
    let mut lo = 0.0f64;
    let mut hi = 1.0 - 1e-12;
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo.abs() <= 1e-14 {
        return Ok(0.0);
    }
    if g_lo < 0.0 || g_hi > 0.0 {
        return Err(Error::FixedPointNotFound(format!(
            "no sign change of kappa(t) - t on [0, 1): g(0) = {g_lo:e}, g(1-) = {g_hi:e}; \
             the kernel may not be in the high-disorder regime"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t_star = 0.5 * (lo + hi);
    let resid = g(t_star).abs();
    if resid > 1e-14 {
        return Err(Error::FixedPointNotFound(format!(
            "bisection residual |kappa(t*) - t*| = {resid:e} exceeds 1e-14"
        )));
    }
    Ok(t_star)
}
