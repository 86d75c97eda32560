//! Point configurations on the d-sphere, Gegenbauer polynomials, the
//! associated weighted quadrature, and spectral coefficients of iterated
//! kernels.
//!
//! The sphere S^d is embedded in R^{d+1}; the North Pole is the last
//! coordinate axis. Spectral integrals use the weight (1-t^2)^(d/2-1) on
//! [-1, 1], generated by Gauss-Jacobi rules with alpha = beta = d/2 - 1.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::iteration::{iterate_deficit, ProfileKind, ProfileTable};
use crate::interp::MonotoneCubic;
use crate::kernels::Kernel;
use crate::quad::gauss_jacobi;

/// Detection tolerance for coincidence with a pole or an antipodal partner,
/// matching the pairwise-distinctness tolerance.
pub const INCIDENCE_TOL: f64 = 1e-12;

/// Base Gauss-Jacobi order for spectral integrals.
const QUAD_ORDER_BASE: usize = 256;
/// Escalation ceiling for steep integrands.
const QUAD_ORDER_MAX: usize = 2048;
/// Relative agreement required between successive quadrature orders.
const QUAD_CONVERGENCE_TOL: f64 = 1e-9;

/// A configuration of pairwise distinct unit vectors on S^d with its Gram
/// matrix and pole/antipodal incidence flags.
#[derive(Debug, Clone)]
pub struct PointConfig {
    dim: usize,
    points: Vec<Vec<f64>>,
    gram: Vec<f64>, // row-major m x m
    north_flags: Vec<bool>,
    south_flags: Vec<bool>,
    antipodal_pairs: Vec<(usize, usize)>,
}

impl PointConfig {
    /// Normalize coordinate rows onto S^d and compute the Gram structure.
    pub fn new(dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if dim < 1 {
            return Err(Error::Config(format!("sphere dimension must be >= 1, got {dim}")));
        }
        if rows.is_empty() {
            return Err(Error::Config("point configuration is empty".into()));
        }
        let m = rows.len();
        let mut points = Vec::with_capacity(m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim + 1 {
                return Err(Error::Config(format!(
                    "point {i} has {} coordinates, expected {} for S^{dim}",
                    row.len(),
                    dim + 1
                )));
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm <= 0.0 {
                return Err(Error::Config(format!("point {i} has zero or non-finite norm")));
            }
            points.push(row.iter().map(|x| x / norm).collect::<Vec<f64>>());
        }
        let mut gram = vec![0.0; m * m];
        for i in 0..m {
            gram[i * m + i] = 1.0;
            for j in (i + 1)..m {
                let dot: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .clamp(-1.0, 1.0);
                if dot >= 1.0 - INCIDENCE_TOL {
                    return Err(Error::Config(format!(
                        "points {i} and {j} coincide (inner product {dot})"
                    )));
                }
                gram[i * m + j] = dot;
                gram[j * m + i] = dot;
            }
        }
        let north_flags: Vec<bool> = points
            .iter()
            .map(|p| 1.0 - p[dim] <= INCIDENCE_TOL)
            .collect();
        let south_flags: Vec<bool> = points
            .iter()
            .map(|p| 1.0 + p[dim] <= INCIDENCE_TOL)
            .collect();
        let mut antipodal_pairs = Vec::new();
        for i in 0..m {
            for j in (i + 1)..m {
                if 1.0 + gram[i * m + j] <= INCIDENCE_TOL {
                    antipodal_pairs.push((i, j));
                }
            }
        }
        Ok(Self {
            dim,
            points,
            gram,
            north_flags,
            south_flags,
            antipodal_pairs,
        })
    }

    /// m i.i.d. uniform points on S^d from normalized Gaussian vectors;
    /// deterministic in the seed.
    pub fn uniform(dim: usize, m: usize, seed: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::Config("need at least one point".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(m);
        for _ in 0..m {
            loop {
                let row: Vec<f64> = (0..=dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    rows.push(row);
                    break;
                }
            }
        }
        Self::new(dim, &rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Inner product <x_i, x_j>.
    pub fn gram(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.len() + j]
    }

    /// Inner product with the North Pole.
    pub fn north_inner(&self, i: usize) -> f64 {
        self.points[i][self.dim]
    }

    pub fn north_flags(&self) -> &[bool] {
        &self.north_flags
    }

    pub fn south_flags(&self) -> &[bool] {
        &self.south_flags
    }

    pub fn antipodal_pairs(&self) -> &[(usize, usize)] {
        &self.antipodal_pairs
    }

    pub fn contains_north(&self) -> bool {
        self.north_flags.iter().any(|&f| f)
    }

    /// The same configuration with the North Pole appended.
    pub fn augment_with_north(&self) -> Result<Self> {
        if self.contains_north() {
            return Err(Error::Config(
                "configuration already contains the North Pole".into(),
            ));
        }
        let mut rows: Vec<Vec<f64>> = self.points.clone();
        let mut north = vec![0.0; self.dim + 1];
        north[self.dim] = 1.0;
        rows.push(north);
        Self::new(self.dim, &rows)
    }

    /// Canonical text form for run metadata digests.
    pub fn digest_label(&self) -> String {
        let mut s = format!("d={};m={}", self.dim, self.len());
        for p in &self.points {
            s.push(';');
            let coords: Vec<String> = p.iter().map(|c| format!("{c:.17e}")).collect();
            s.push_str(&coords.join(","));
        }
        s
    }
}

/// The weight mass: int_{-1}^{1} (1-t^2)^(d/2-1) dt
/// = sqrt(pi) Gamma(d/2) / Gamma((d+1)/2).
pub fn weight_integral(dim: usize) -> f64 {
    let d = dim as f64;
    (0.5 * std::f64::consts::PI.ln() + ln_gamma(d / 2.0) - ln_gamma((d + 1.0) / 2.0)).exp()
}

/// Normalized Gegenbauer polynomial G_{l,d}(t) with G_{l,d}(1) = 1, by the
/// three-term recurrence (l + d - 1) G_{l+1} = (2l + d - 1) t G_l - l G_{l-1}.
pub fn gegenbauer(l: usize, dim: usize, t: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => t,
        _ => {
            let d = dim as f64;
            let mut g0 = 1.0;
            let mut g1 = t;
            for ll in 1..l {
                let lf = ll as f64;
                let g2 = ((2.0 * lf + d - 1.0) * t * g1 - lf * g0) / (lf + d - 1.0);
                g0 = g1;
                g1 = g2;
            }
            g1
        }
    }
}

/// Weighted average of `f` against (1-t^2)^(d/2-1), evaluated at escalating
/// Gauss-Jacobi orders until two successive orders agree to 1e-9 relative.
fn weighted_average(f: &mut dyn FnMut(f64) -> f64, dim: usize) -> Result<f64> {
    let alpha = dim as f64 / 2.0 - 1.0;
    let mut order = QUAD_ORDER_BASE;
    let rule = gauss_jacobi(order, alpha, alpha)?;
    let mut prev = rule.integrate(&mut *f) / rule.mass();
    loop {
        order *= 2;
        if order > QUAD_ORDER_MAX {
            return Err(Error::NumericFailure(format!(
                "weighted average did not settle to {QUAD_CONVERGENCE_TOL:e} by order {QUAD_ORDER_MAX}"
            )));
        }
        let rule = gauss_jacobi(order, alpha, alpha)?;
        let cur = rule.integrate(&mut *f) / rule.mass();
        if !cur.is_finite() {
            return Err(Error::NumericFailure(
                "weighted-average quadrature returned a non-finite value".into(),
            ));
        }
        if (cur - prev).abs() <= QUAD_CONVERGENCE_TOL * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// Spectral coefficient of `f` at degree `l`:
/// int f G_{l,d} w dt / int G_{l,d}^2 w dt.
pub fn spectral_coefficient(f: impl Fn(f64) -> f64, l: usize, dim: usize) -> Result<f64> {
    let alpha = dim as f64 / 2.0 - 1.0;
    let rule = gauss_jacobi(QUAD_ORDER_BASE.max(2 * l + 32), alpha, alpha)?;
    let num = rule.integrate(|t| f(t) * gegenbauer(l, dim, t));
    let den = rule.integrate(|t| {
        let g = gegenbauer(l, dim, t);
        g * g
    });
    if !num.is_finite() || !den.is_finite() || den <= 0.0 {
        return Err(Error::NumericFailure(format!(
            "spectral coefficient quadrature failed at l = {l} (num = {num}, den = {den})"
        )));
    }
    Ok(num / den)
}

/// Spectral coefficients D_l for l = 0..=l_max of a kernel.
#[derive(Debug, Clone)]
pub struct SpectralCoeffs {
    pub dim: usize,
    pub coeffs: Vec<f64>,
    pub weight_mass: f64,
}

/// Expand a kernel in normalized Gegenbauer polynomials up to `l_max`.
pub fn spectral_expansion(k: &Kernel, l_max: usize, dim: usize) -> Result<SpectralCoeffs> {
    let coeffs = (0..=l_max)
        .map(|l| spectral_coefficient(|t| k.eval(t), l, dim))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectralCoeffs {
        dim,
        coeffs,
        weight_mass: weight_integral(dim),
    })
}

/// Mean spectral coefficient of the depth-L kernel:
/// D_{0,L} = int kappa_L w dt / int w dt.
///
/// Uses escalating quadrature orders; the integrand steepens near the
/// endpoints as L grows.
pub fn mean_coefficient(k: &Kernel, l: u64, dim: usize) -> Result<f64> {
    let mut f = |t: f64| crate::iteration::iterate_kernel(k, t, l);
    weighted_average(&mut f, dim)
}

/// Weighted average of the depth-L deficit 1 - kappa_L, equal to
/// 1 - D_{0,L}, computed in deficit form so it survives large depths.
pub fn mean_deficit_at_depth(k: &Kernel, l: u64, dim: usize) -> Result<f64> {
    let mut f = |t: f64| iterate_deficit(k, 1.0 - t, l);
    weighted_average(&mut f, dim)
}

/// The rescaled mean deficit v_L (1 - D_{0,L}) for a caller-supplied v_L.
pub fn rescaled_mean_deficit(k: &Kernel, l: u64, dim: usize, v_l: f64) -> Result<f64> {
    Ok(v_l * mean_deficit_at_depth(k, l, dim)?)
}

/// Weighted average of a tabulated limit profile.
///
/// Sparse profiles use the two-valued structure directly: the unit set has
/// zero weight measure, so the average is the plateau exactly. Low-disorder
/// tables are interpolated at the quadrature nodes; non-converged table
/// points are an error.
pub fn limit_mean_deficit(profile: &ProfileTable, dim: usize) -> Result<f64> {
    if profile.non_converged.iter().any(|&nc| nc) {
        return Err(Error::NonConverged(
            "profile table has non-converged points inside the quadrature support".into(),
        ));
    }
    match profile.profile_kind {
        ProfileKind::S => {
            let h = profile.h.or_else(|| {
                profile
                    .values
                    .iter()
                    .cloned()
                    .fold(None, |acc: Option<f64>, v| {
                        Some(acc.map_or(v, |a| a.max(v)))
                    })
            });
            h.ok_or_else(|| Error::NumericFailure("empty sparse profile".into()))
        }
        ProfileKind::L => {
            let interp = MonotoneCubic::new(&profile.grid, &profile.values)?;
            let mut f = |t: f64| interp.eval(t).unwrap_or(f64::NAN);
            let avg = weighted_average(&mut f, dim)?;
            if !avg.is_finite() {
                return Err(Error::NumericFailure(
                    "profile average is non-finite (grid does not cover the support?)".into(),
                ));
            }
            Ok(avg)
        }
    }
}
