//! Limit covariance matrices at point configurations, the quadratic-form
//! rate functions they induce, closed forms in the unit-derivative (sparse)
//! regime with their pole/antipodal reductions, and the contraction-
//! principle consistency check.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::iteration::{
    limit_profile_low, ProfileKind, ProfileTable, Regime, RegimeReport, SymmetrySet, UNIT_SET_TOL,
};
use crate::kernels::Kernel;
use crate::quad::gauss_jacobi;
use crate::sphere::{weight_integral, PointConfig};

/// Eigenvalues at or below this fraction of the largest are treated as an
/// exact null space.
pub const RANK_TOL: f64 = 1e-12;
/// Relative null-space projection residual separating "in range" from the
/// infinite rate value.
pub const RANGE_TOL: f64 = 1e-8;

/// An evaluable limit profile: closed form where one exists, plateau form
/// in the sparse regime, convergent iteration or grid interpolation
/// otherwise.
#[derive(Clone)]
pub enum ProfileEval {
    /// Closed form of the exponential family (gamma > 1):
    /// (gamma-1)(1-t^2) / (2(gamma-t^2)).
    ExponentialLow { gamma: f64 },
    /// Two-valued sparse profile: 0 on the unit set, h elsewhere.
    SparseFlat { h: f64, symmetric: bool },
    /// Per-argument convergent iteration of the rescaled deficit.
    IteratedLow {
        kernel: Arc<Kernel>,
        symmetric: bool,
    },
    /// Monotone-cubic interpolation of a tabulated profile.
    Table {
        interp: Arc<MonotoneCubic>,
        kind: ProfileKind,
        symmetric: bool,
        h: Option<f64>,
    },
}

impl ProfileEval {
    /// Route a kernel to its best available profile representation, given
    /// its classification.
    pub fn from_kernel(k: &Kernel, report: &RegimeReport) -> Result<Self> {
        let symmetric = matches!(report.symmetry_set, Some(SymmetrySet::PlusMinusOne));
        match report.regime {
            Regime::LowDisorder => {
                if let Some(gamma) = k.exponential_gamma() {
                    Ok(ProfileEval::ExponentialLow { gamma })
                } else {
                    Ok(ProfileEval::IteratedLow {
                        kernel: Arc::new(k.clone()),
                        symmetric,
                    })
                }
            }
            Regime::Sparse => {
                let h = report.h.ok_or_else(|| {
                    Error::RegimeMismatch(
                        "sparse profile needs a successful regularity fit".into(),
                    )
                })?;
                Ok(ProfileEval::SparseFlat { h, symmetric })
            }
            Regime::HighDisorder => Err(Error::RegimeMismatch(
                "no limit profile exists when kappa'(1) > 1".into(),
            )),
        }
    }

    /// Interpolating profile from a table.
    pub fn from_table(table: &ProfileTable) -> Result<Self> {
        if table.non_converged.iter().any(|&nc| nc) {
            return Err(Error::NonConverged(
                "profile table contains non-converged points".into(),
            ));
        }
        if matches!(table.profile_kind, ProfileKind::S) {
            let h = table.h.or_else(|| {
                table
                    .values
                    .iter()
                    .cloned()
                    .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
            });
            return Ok(ProfileEval::SparseFlat {
                h: h.ok_or_else(|| Error::NumericFailure("empty sparse table".into()))?,
                symmetric: table.symmetric,
            });
        }
        Ok(ProfileEval::Table {
            interp: Arc::new(MonotoneCubic::new(&table.grid, &table.values)?),
            kind: table.profile_kind,
            symmetric: table.symmetric,
            h: table.h,
        })
    }

    pub fn kind(&self) -> ProfileKind {
        match self {
            ProfileEval::ExponentialLow { .. } | ProfileEval::IteratedLow { .. } => ProfileKind::L,
            ProfileEval::SparseFlat { .. } => ProfileKind::S,
            ProfileEval::Table { kind, .. } => *kind,
        }
    }

    pub fn symmetric(&self) -> bool {
        match self {
            ProfileEval::ExponentialLow { .. } => true,
            ProfileEval::SparseFlat { symmetric, .. }
            | ProfileEval::IteratedLow { symmetric, .. }
            | ProfileEval::Table { symmetric, .. } => *symmetric,
        }
    }

    /// Sparse plateau when this is a sparse profile.
    pub fn plateau(&self) -> Option<f64> {
        match self {
            ProfileEval::SparseFlat { h, .. } => Some(*h),
            ProfileEval::Table { h, .. } => *h,
            _ => None,
        }
    }

    fn in_unit_set(&self, t: f64) -> bool {
        (1.0 - t).abs() <= UNIT_SET_TOL
            || (self.symmetric() && (1.0 + t).abs() <= UNIT_SET_TOL)
    }

    /// Evaluate the profile at an inner product in [-1, 1]; exact 0 on the
    /// unit set, domain error outside [-1, 1].
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&t) {
            return Err(Error::Domain(format!(
                "profile argument {t} outside [-1, 1]"
            )));
        }
        let t = t.clamp(-1.0, 1.0);
        if self.in_unit_set(t) {
            return Ok(0.0);
        }
        match self {
            ProfileEval::ExponentialLow { gamma } => {
                Ok((gamma - 1.0) * (1.0 - t * t) / (2.0 * (gamma - t * t)))
            }
            ProfileEval::SparseFlat { h, .. } => Ok(*h),
            ProfileEval::IteratedLow { kernel, .. } => {
                let table = limit_profile_low(kernel, &[t])?;
                if table.non_converged[0] {
                    return Err(Error::NonConverged(format!(
                        "profile iteration did not converge at t = {t}"
                    )));
                }
                Ok(table.values[0])
            }
            ProfileEval::Table { interp, .. } => interp.eval(t),
        }
    }

    /// Weighted average int g w dt / int w dt on S^d. For sparse profiles
    /// this is the plateau exactly: the unit set has zero weight measure.
    pub fn weighted_mean(&self, dim: usize) -> Result<f64> {
        match self {
            ProfileEval::SparseFlat { h, .. } => Ok(*h),
            _ => {
                let alpha = dim as f64 / 2.0 - 1.0;
                let rule = gauss_jacobi(256, alpha, alpha)?;
                let mut sum = 0.0;
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    sum += w * self.eval(t)?;
                }
                Ok(sum / weight_integral(dim))
            }
        }
    }
}

/// Which limit covariance matrix a model holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WhichMatrix {
    B1,
    B2,
}

/// A limit covariance matrix with its eigendecomposition and rank data,
/// ready for quadratic-form rate evaluation.
#[derive(Debug, Clone)]
pub struct RateModel {
    matrix: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    rank: usize,
    pub which: WhichMatrix,
    pub profile_kind: ProfileKind,
    pub h: Option<f64>,
}

#[derive(Serialize)]
struct RateModelJson<'a> {
    which: &'a WhichMatrix,
    h: Option<f64>,
    matrix: Vec<f64>,
    eigenvalues: &'a [f64],
    rank: usize,
}

impl RateModel {
    fn from_matrix(
        matrix: DMatrix<f64>,
        which: WhichMatrix,
        profile_kind: ProfileKind,
        h: Option<f64>,
    ) -> Result<Self> {
        let m = matrix.nrows();
        for i in 0..m {
            for j in 0..m {
                let asym = (matrix[(i, j)] - matrix[(j, i)]).abs();
                if asym > 1e-12 {
                    return Err(Error::NumericFailure(format!(
                        "limit covariance asymmetric at ({i},{j}): {asym:e}"
                    )));
                }
            }
        }
        let eig = matrix.clone().symmetric_eigen();
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        let lambda_max = eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        if eigenvalues.iter().any(|&l| l < -1e-10 * lambda_max.max(1e-300)) {
            return Err(Error::NumericFailure(format!(
                "limit covariance is indefinite: min eigenvalue {:e}",
                eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        let rank = eigenvalues
            .iter()
            .filter(|&&l| l > RANK_TOL * lambda_max)
            .count();
        Ok(RateModel {
            matrix,
            eigenvalues,
            eigenvectors: eig.eigenvectors,
            rank,
            which,
            profile_kind,
            h,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// JSON form: which, h, row-major matrix, eigenvalues, rank.
    pub fn to_json(&self) -> String {
        let m = self.dim();
        let mut rows = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                rows.push(self.matrix[(i, j)]);
            }
        }
        serde_json::to_string_pretty(&RateModelJson {
            which: &self.which,
            h: self.h,
            matrix: rows,
            eigenvalues: &self.eigenvalues,
            rank: self.rank,
        })
        .expect("rate model serialization cannot fail")
    }
}

/// Rate-function value at one argument vector.
#[derive(Debug, Clone, Serialize)]
pub struct RateValue {
    /// 1/2 y^T B^+ y, or +inf off the range of B.
    pub value: f64,
    pub in_range: bool,
    /// Norm of the projection of y onto the null space of B.
    pub residual: f64,
    /// Structural notes (e.g. a South-Pole point treated as generic).
    pub flags: Vec<String>,
}

impl RateValue {
    fn finite(value: f64) -> Self {
        RateValue {
            value,
            in_range: true,
            residual: 0.0,
            flags: Vec::new(),
        }
    }

    fn infinite(residual: f64) -> Self {
        RateValue {
            value: f64::INFINITY,
            in_range: false,
            residual,
            flags: Vec::new(),
        }
    }
}

/// First limit covariance matrix at a configuration:
/// entries g(<x_i, N>) + g(<x_j, N>) - g(<x_i, x_j>).
pub fn matrix_b1(profile: &ProfileEval, config: &PointConfig) -> Result<RateModel> {
    let m = config.len();
    let g_north: Vec<f64> = (0..m)
        .map(|i| profile.eval(config.north_inner(i)))
        .collect::<Result<_>>()?;
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = g_north[i] + g_north[j] - profile.eval(config.gram(i, j))?;
            mat[(i, j)] = v;
            mat[(j, i)] = v;
        }
    }
    RateModel::from_matrix(mat, WhichMatrix::B1, profile.kind(), profile.plateau())
}

/// Second limit covariance matrix: entries
/// weighted-average(g) - g(<x_i, x_j>).
pub fn matrix_b2(profile: &ProfileEval, config: &PointConfig, dim: usize) -> Result<RateModel> {
    let mean = profile.weighted_mean(dim)?;
    let m = config.len();
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = mean - profile.eval(config.gram(i, j))?;
            mat[(i, j)] = v;
            mat[(j, i)] = v;
        }
    }
    RateModel::from_matrix(mat, WhichMatrix::B2, profile.kind(), profile.plateau())
}

/// Quadratic-form rate evaluation 1/2 y^T B^+ y, +inf when y leaves the
/// range of B (relative null-space residual above `RANGE_TOL`).
pub fn rate_eval(model: &RateModel, y: &[f64]) -> RateValue {
    assert_eq!(y.len(), model.dim(), "argument dimension mismatch");
    let yv = DVector::from_column_slice(y);
    let y_norm = yv.norm();
    if y_norm == 0.0 {
        return RateValue::finite(0.0);
    }
    let z = model.eigenvectors.transpose() * &yv;
    let lambda_max = model
        .eigenvalues
        .iter()
        .cloned()
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut null_sq = 0.0;
    let mut value = 0.0;
    for (zi, &li) in z.iter().zip(&model.eigenvalues) {
        if li > RANK_TOL * lambda_max {
            value += zi * zi / li;
        } else {
            null_sq += zi * zi;
        }
    }
    let residual = null_sq.sqrt();
    if residual > RANGE_TOL * y_norm {
        RateValue::infinite(residual)
    } else {
        RateValue {
            value: 0.5 * value,
            in_range: true,
            residual,
            flags: Vec::new(),
        }
    }
}

/// Closed-form sparse rate for the North-Pole-centered sequence, applying
/// the reduction cascade before the explicit quadratic form
/// (m' sum y_i^2 - 2 sum_{i<j} y_i y_j) / (2 (m'+1) h).
///
/// Order matters: pole-antipode pairs first (both coordinates forced to 0),
/// then generic antipodal merges (equal coordinates), then lone poles
/// (coordinate forced to 0).
pub fn sparse_rate_1(
    config: &PointConfig,
    y: &[f64],
    h: f64,
    symmetry: SymmetrySet,
) -> RateValue {
    assert_eq!(y.len(), config.len(), "argument dimension mismatch");
    let m = config.len();
    let mut dropped = vec![false; m];
    let mut flags = Vec::new();

    match symmetry {
        SymmetrySet::One => {
            // only the North Pole is structural; South is generic here
            for i in 0..m {
                if config.north_flags()[i] {
                    if y[i] != 0.0 {
                        let mut rv = RateValue::infinite(y[i].abs());
                        rv.flags = flags;
                        return rv;
                    }
                    dropped[i] = true;
                }
                if config.south_flags()[i] {
                    flags.push(format!(
                        "point {i} at the South Pole treated as generic (unit set is {{1}})"
                    ));
                }
            }
        }
        SymmetrySet::PlusMinusOne => {
            // 1) antipodal pairs containing both poles: both values must be 0
            for &(i, j) in config.antipodal_pairs() {
                let pole_pair = (config.north_flags()[i] && config.south_flags()[j])
                    || (config.south_flags()[i] && config.north_flags()[j]);
                if pole_pair {
                    if y[i] != 0.0 || y[j] != 0.0 {
                        let mut rv =
                            RateValue::infinite((y[i] * y[i] + y[j] * y[j]).sqrt());
                        rv.flags = flags;
                        return rv;
                    }
                    dropped[i] = true;
                    dropped[j] = true;
                }
            }
            // 2) generic antipodal merges: equal values, keep one coordinate
            for &(i, j) in config.antipodal_pairs() {
                if dropped[i] || dropped[j] {
                    continue;
                }
                if y[i] != y[j] {
                    let mut rv = RateValue::infinite((y[i] - y[j]).abs());
                    rv.flags = flags;
                    return rv;
                }
                dropped[j] = true;
            }
            // 3) lone poles: value must vanish
            for i in 0..m {
                if dropped[i] {
                    continue;
                }
                if config.north_flags()[i] || config.south_flags()[i] {
                    if y[i] != 0.0 {
                        let mut rv = RateValue::infinite(y[i].abs());
                        rv.flags = flags;
                        return rv;
                    }
                    dropped[i] = true;
                }
            }
        }
    }

    let reduced: Vec<f64> = (0..m).filter(|&i| !dropped[i]).map(|i| y[i]).collect();
    let mp = reduced.len() as f64;
    if reduced.is_empty() {
        let mut rv = RateValue::finite(0.0);
        rv.flags = flags;
        return rv;
    }
    let sum_sq: f64 = reduced.iter().map(|v| v * v).sum();
    let sum: f64 = reduced.iter().sum();
    let cross = 0.5 * (sum * sum - sum_sq); // sum_{i<j} y_i y_j
    let value = (mp * sum_sq - 2.0 * cross) / (2.0 * (mp + 1.0) * h);
    let mut rv = RateValue::finite(value);
    rv.flags = flags;
    rv
}

/// Closed-form sparse rate for the spherical-average-centered sequence:
/// antipodal merges (equal values), then |y'|^2 / (2h). Poles carry no
/// structure under this centering.
pub fn sparse_rate_2(
    config: &PointConfig,
    y: &[f64],
    h: f64,
    symmetry: SymmetrySet,
) -> RateValue {
    assert_eq!(y.len(), config.len(), "argument dimension mismatch");
    let m = config.len();
    let mut dropped = vec![false; m];
    if matches!(symmetry, SymmetrySet::PlusMinusOne) {
        for &(i, j) in config.antipodal_pairs() {
            if y[i] != y[j] {
                return RateValue::infinite((y[i] - y[j]).abs());
            }
            dropped[j] = true;
        }
    }
    let sum_sq: f64 = (0..m).filter(|&i| !dropped[i]).map(|i| y[i] * y[i]).sum();
    RateValue::finite(sum_sq / (2.0 * h))
}

/// Result of the contraction-principle consistency check.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionCheck {
    pub direct: f64,
    pub contracted: f64,
    pub argmin_shift: f64,
    pub gap: f64,
}

/// Compare the direct North-Pole-centered rate with the infimum over a
/// common shift of the spherical-average rate on the configuration
/// augmented by the North Pole.
pub fn contraction_check(
    profile: &ProfileEval,
    config: &PointConfig,
    y: &[f64],
    dim: usize,
) -> Result<ContractionCheck> {
    if config.contains_north() {
        return Err(Error::Config(
            "contraction check requires a configuration without the North Pole".into(),
        ));
    }
    let b1 = matrix_b1(profile, config)?;
    let direct = rate_eval(&b1, y);

    let augmented = config.augment_with_north()?;
    let b2 = matrix_b2(profile, &augmented, dim)?;
    let m = y.len();
    let objective = |z: f64| -> f64 {
        let mut w = Vec::with_capacity(m + 1);
        for &yi in y {
            w.push(yi + z);
        }
        w.push(z);
        rate_eval(&b2, &w).value
    };

    let y_norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let span = 10.0 * y_norm.max(1e-6);
    let (z_star, contracted) = golden_minimize(objective, -span, span)?;
    if !contracted.is_finite() {
        return Err(Error::NumericFailure(
            "contracted objective is infinite across the search interval".into(),
        ));
    }
    Ok(ContractionCheck {
        direct: direct.value,
        contracted,
        argmin_shift: z_star,
        gap: (direct.value - contracted).abs(),
    })
}

/// Golden-section search followed by one parabolic refinement. The
/// objective is a convex quadratic (with a possible +inf indicator), so the
/// local minimum found is global.
fn golden_minimize(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (a.abs() + b.abs()).max(1.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut z = 0.5 * (a + b);
    let mut fz = f(z);
    // parabolic refinement around the bracket midpoint
    let hstep = (b - a).abs().max(1e-12);
    let (f_left, f_right) = (f(z - hstep), f(z + hstep));
    if f_left.is_finite() && f_right.is_finite() && fz.is_finite() {
        let denom = f_left - 2.0 * fz + f_right;
        if denom > 0.0 {
            let shift = 0.5 * hstep * (f_left - f_right) / denom;
            let cand = z + shift;
            let fcand = f(cand);
            if fcand < fz {
                z = cand;
                fz = fcand;
            }
        }
    }
    if fz.is_nan() {
        return Err(Error::NumericFailure(
            "minimization objective returned NaN".into(),
        ));
    }
    Ok((z, fz))
}

/// Which limit kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhichLimitKernel {
    B1,
    B2,
}

/// Continuous limit kernels of the low-disorder regime:
/// b1(z, w) = g(<z,N>) + g(<w,N>) - g(<z,w>),
/// b2(z, w) = weighted-average(g) - g(<z,w>).
///
/// Rejected for sparse profiles: the two-valued limit has a jump on the
/// diagonal, so no continuous limit kernel exists there.
pub fn limit_kernel(
    which: WhichLimitKernel,
    profile: &ProfileEval,
    z: &[f64],
    w: &[f64],
    dim: usize,
) -> Result<f64> {
    if matches!(profile.kind(), ProfileKind::S) {
        return Err(Error::RegimeMismatch(
            "the sparse limit profile is discontinuous at the diagonal; \
             no continuous limit kernel exists in that regime"
                .into(),
        ));
    }
    if z.len() != dim + 1 || w.len() != dim + 1 {
        return Err(Error::Domain(format!(
            "limit kernel arguments must have {} coordinates",
            dim + 1
        )));
    }
    for (name, v) in [("z", z), ("w", w)] {
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "limit kernel argument {name} is not a unit vector (norm {norm})"
            )));
        }
    }
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(-1.0, 1.0)
    };
    let zw = profile.eval(dot(z, w))?;
    match which {
        WhichLimitKernel::B1 => {
            let zn = profile.eval(z[dim].clamp(-1.0, 1.0))?;
            let wn = profile.eval(w[dim].clamp(-1.0, 1.0))?;
            Ok(zn + wn - zw)
        }
        WhichLimitKernel::B2 => Ok(profile.weighted_mean(dim)? - zw),
    }
}
