//! Construction and evaluation of the single-layer covariance function
//! kappa on [-1, 1], normalized so that kappa(1) = 1.
//!
//! Sources: built-in closed forms (ReLU arc-cosine, exponential family,
//! linear), nonnegative power-series coefficients, or an arbitrary
//! activation integrated against the bivariate Gaussian law.
//!
//! Every kernel also exposes a *deficit* evaluation `1 - kappa(1 - u)`
//! computed without cancellation near u = 0; the deep iteration and the
//! regularity fit depend on it staying accurate down to u ~ 1e-300.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad::legendre_panels;

/// Integration cutoff for activation quadrature: the standard normal mass
/// beyond |z| = 12 is ~ 1e-32 and activations with finite second moment
/// cannot bring it back.
const RADIAL_CUTOFF: f64 = 12.0;
const RADIAL_EDGES: [f64; 4] = [0.0, 2.0, 5.0, RADIAL_CUTOFF];

/// Default quadrature order for kinked (ReLU-class) activations.
pub const DEFAULT_ORDER_KINKED: usize = 200;
/// Default quadrature order for smooth activations.
pub const DEFAULT_ORDER_SMOOTH: usize = 64;

/// Pointwise activation function for quadrature-built kernels.
pub type ActivationFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which activation drives a quadrature-built kernel.
#[derive(Clone)]
pub enum ActivationKind {
    /// max(z, 0)
    Relu,
    /// exp(-a^2 z^2 / 2), a > 0
    GaussianExp { a: f64 },
    /// identity
    Linear,
    /// arbitrary pointwise function; assumed square-integrable under the
    /// standard normal and smooth away from z = 0
    Custom(ActivationFn),
}

impl fmt::Debug for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationKind::Relu => write!(f, "Relu"),
            ActivationKind::GaussianExp { a } => write!(f, "GaussianExp {{ a: {a} }}"),
            ActivationKind::Linear => write!(f, "Linear"),
            ActivationKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Activation plus the quadrature order used to integrate it.
#[derive(Debug, Clone)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    pub quadrature_order: usize,
}

impl ActivationSpec {
    pub fn new(kind: ActivationKind) -> Self {
        let order = match kind {
            ActivationKind::GaussianExp { .. } | ActivationKind::Linear => DEFAULT_ORDER_SMOOTH,
            _ => DEFAULT_ORDER_KINKED,
        };
        Self {
            kind,
            quadrature_order: order,
        }
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.quadrature_order = order;
        self
    }

    fn function(&self) -> ActivationFn {
        match &self.kind {
            ActivationKind::Relu => Arc::new(|z: f64| z.max(0.0)),
            ActivationKind::GaussianExp { a } => {
                let a2 = a * a;
                Arc::new(move |z: f64| (-0.5 * a2 * z * z).exp())
            }
            ActivationKind::Linear => Arc::new(|z: f64| z),
            ActivationKind::Custom(f) => f.clone(),
        }
    }

    fn label(&self) -> String {
        match &self.kind {
            ActivationKind::Relu => "relu".into(),
            ActivationKind::GaussianExp { a } => format!("gaussian-exp(a={a})"),
            ActivationKind::Linear => "linear".into(),
            ActivationKind::Custom(_) => "custom".into(),
        }
    }

    /// Closed-form derivative at 1 of the induced kernel, when the
    /// activation kind makes it available.
    fn derivative_hint(&self) -> Option<f64> {
        match &self.kind {
            ActivationKind::Relu => Some(1.0),
            ActivationKind::Linear => Some(1.0),
            ActivationKind::GaussianExp { a } => {
                // kappa'(1) = 1/gamma with gamma = (2a^2+1)/a^4
                let a2 = a * a;
                Some(a2 * a2 / (2.0 * a2 + 1.0))
            }
            ActivationKind::Custom(_) => None,
        }
    }
}

/// Identifies how a kernel was built; carries the closed-form parameters.
#[derive(Debug, Clone)]
pub enum KernelSource {
    BuiltinRelu,
    BuiltinExponential { gamma: f64 },
    BuiltinLinear,
    HermiteSeries,
    Quadrature { activation: String, order: usize },
}

#[derive(Clone)]
enum Form {
    Relu,
    Exponential { gamma: f64 },
    Linear,
    Hermite { coeffs: Vec<f64> },
    Quadrature(QuadKernel),
}

#[derive(Clone)]
struct QuadKernel {
    sigma: ActivationFn,
    order: usize,
    /// raw second moment E[sigma(Z)^2]; divides every evaluation
    norm: f64,
    label: String,
}

/// An evaluable covariance function on [-1, 1] with kappa(1) = 1.
///
/// Immutable after construction; evaluation is pure and safe to share
/// across threads.
#[derive(Clone)]
pub struct Kernel {
    form: Form,
    derivative_at_one: f64,
    series_coeffs: Option<Vec<f64>>,
    affine_warning: bool,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("source", &self.digest_label())
            .field("derivative_at_one", &self.derivative_at_one)
            .field("affine_warning", &self.affine_warning)
            .finish()
    }
}

/// Built-in closed-form kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinKernel {
    /// arc-cosine kernel of the ReLU activation
    Relu,
    /// kappa(t) = sqrt(gamma / (gamma + 1 - t^2)), gamma > 0
    Exponential { gamma: f64 },
    /// kappa(t) = t
    Linear,
}

impl Kernel {
    /// Construct a built-in kernel with an exact evaluator and an exact
    /// derivative at 1.
    pub fn builtin(spec: BuiltinKernel) -> Result<Self> {
        match spec {
            BuiltinKernel::Relu => Ok(Kernel {
                form: Form::Relu,
                derivative_at_one: 1.0,
                series_coeffs: None,
                affine_warning: false,
            }),
            BuiltinKernel::Exponential { gamma } => {
                if !(gamma.is_finite() && gamma > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "exponential kernel requires gamma > 0, got {gamma}"
                    )));
                }
                Ok(Kernel {
                    form: Form::Exponential { gamma },
                    derivative_at_one: 1.0 / gamma,
                    series_coeffs: None,
                    affine_warning: false,
                })
            }
            BuiltinKernel::Linear => Ok(Kernel {
                form: Form::Linear,
                derivative_at_one: 1.0,
                series_coeffs: Some(vec![0.0, 1.0]),
                affine_warning: true,
            }),
        }
    }

    /// Kernel from nonnegative power-series coefficients c_q, q = 0, 1, ...
    ///
    /// Coefficients are renormalized to sum 1; the derivative at 1 is
    /// sum q c_q. A series supported on q <= 1 is affine: it is accepted
    /// but flagged, since the induced field carries no nonlinearity.
    pub fn from_hermite(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::DegenerateKernel("empty coefficient sequence".into()));
        }
        for (q, &c) in coeffs.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "series coefficient at q={q} must be finite and >= 0, got {c}"
                )));
            }
        }
        let sum: f64 = coeffs.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateKernel(
                "all series coefficients are zero".into(),
            ));
        }
        let normalized: Vec<f64> = coeffs.iter().map(|&c| c / sum).collect();
        let affine_warning = normalized.iter().skip(2).all(|&c| c == 0.0);
        let derivative_at_one = normalized
            .iter()
            .enumerate()
            .map(|(q, &c)| q as f64 * c)
            .sum();
        Ok(Kernel {
            form: Form::Hermite {
                coeffs: normalized.clone(),
            },
            derivative_at_one,
            series_coeffs: Some(normalized),
            affine_warning,
        })
    }

    /// Kernel from an activation via bivariate Gaussian quadrature,
    /// scaled by 1/E[sigma(Z)^2] and renormalized so kappa(1) = 1 exactly.
    ///
    /// The expectation E[sigma(Z1) sigma(t Z1 + sqrt(1-t^2) Z2)] is computed
    /// in polar coordinates with angular panels split at the four angles
    /// where either argument crosses zero. For activations smooth away from
    /// the origin (ReLU-class kinks included) the rule converges spectrally
    /// and uniformly in t; activations with kinks elsewhere converge slower
    /// and need a higher order.
    pub fn from_activation(act: &ActivationSpec) -> Result<Self> {
        if let ActivationKind::GaussianExp { a } = act.kind {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian-exp activation requires a > 0, got {a}"
                )));
            }
        }
        let order = act.quadrature_order.max(8);
        let sigma = act.function();
        let norm = raw_second_moment(&sigma, order)?;
        if !norm.is_finite() {
            return Err(Error::NumericFailure(
                "second moment quadrature returned a non-finite value".into(),
            ));
        }
        if norm <= 1e-12 {
            return Err(Error::DegenerateKernel(format!(
                "activation second moment is zero within quadrature resolution ({norm:e})"
            )));
        }
        let quad = QuadKernel {
            sigma,
            order,
            norm,
            label: act.label(),
        };
        let derivative_at_one = match act.derivative_hint() {
            Some(d) => d,
            None => {
                let k = |t: f64| quad.eval(t);
                fd_derivative_at_one(k)?
            }
        };
        Ok(Kernel {
            form: Form::Quadrature(quad),
            derivative_at_one,
            series_coeffs: None,
            affine_warning: false,
        })
    }

    /// Evaluate kappa(t). Arguments are clamped to [-1, 1] to absorb
    /// floating-point drift from upstream inner products.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        match &self.form {
            Form::Relu => relu_kernel(t),
            Form::Exponential { gamma } => (gamma / (gamma + 1.0 - t * t)).sqrt(),
            Form::Linear => t,
            Form::Hermite { coeffs } => {
                if t == 1.0 {
                    // the renormalized coefficient sum is 1 by construction;
                    // skip the Horner rounding so the invariant stays exact
                    1.0
                } else {
                    horner(coeffs, t)
                }
            }
            Form::Quadrature(q) => q.eval(t),
        }
    }

    /// Evaluate the deficit 1 - kappa(1 - u) for u in [0, 2] without the
    /// cancellation that the direct form suffers for small u.
    ///
    /// Quadrature-built kernels fall back to the direct form; their deficit
    /// accuracy is limited to ~1e-16/u relative.
    pub fn deficit(&self, u: f64) -> f64 {
        debug_assert!((-1e-12..=2.0 + 1e-12).contains(&u));
        let u = u.clamp(0.0, 2.0);
        if u == 0.0 {
            return 0.0;
        }
        match &self.form {
            Form::Relu => relu_deficit(u),
            Form::Exponential { gamma } => {
                // 1 - sqrt(g/(g+w)) = w / ((g+w) (1+kappa)), w = u(2-u)
                let w = u * (2.0 - u);
                let kappa = (gamma / (gamma + w)).sqrt();
                w / ((gamma + w) * (1.0 + kappa))
            }
            Form::Linear => u,
            Form::Hermite { coeffs } => {
                if u <= 1.0 {
                    // sum_q c_q (1 - (1-u)^q), each term nonnegative;
                    // 1 - (1-u)^q through expm1/ln_1p to keep tiny u exact
                    let lg = (-u).ln_1p();
                    coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(q, &c)| -c * (q as f64 * lg).exp_m1())
                        .sum()
                } else {
                    1.0 - horner(coeffs, 1.0 - u)
                }
            }
            Form::Quadrature(q) => 1.0 - q.eval(1.0 - u),
        }
    }

    /// kappa'(1): exact for built-ins and series kernels, finite-difference
    /// with order-estimating Richardson extrapolation otherwise.
    pub fn derivative_at_one(&self) -> f64 {
        self.derivative_at_one
    }

    /// Normalized series coefficients when the kernel was built from them.
    pub fn series_coeffs(&self) -> Option<&[f64]> {
        self.series_coeffs.as_deref()
    }

    /// True when the series is supported on q <= 1 (affine kernel).
    pub fn affine_warning(&self) -> bool {
        self.affine_warning
    }

    /// Source descriptor.
    pub fn source(&self) -> KernelSource {
        match &self.form {
            Form::Relu => KernelSource::BuiltinRelu,
            Form::Exponential { gamma } => KernelSource::BuiltinExponential { gamma: *gamma },
            Form::Linear => KernelSource::BuiltinLinear,
            Form::Hermite { .. } => KernelSource::HermiteSeries,
            Form::Quadrature(q) => KernelSource::Quadrature {
                activation: q.label.clone(),
                order: q.order,
            },
        }
    }

    /// Canonical text form used in run metadata digests.
    pub fn digest_label(&self) -> String {
        match &self.form {
            Form::Relu => "builtin-relu".into(),
            Form::Exponential { gamma } => format!("builtin-exponential(gamma={gamma:.17e})"),
            Form::Linear => "builtin-linear".into(),
            Form::Hermite { coeffs } => {
                let cs: Vec<String> = coeffs.iter().map(|c| format!("{c:.17e}")).collect();
                format!("hermite-series[{}]", cs.join(","))
            }
            Form::Quadrature(q) => format!("quadrature({},order={})", q.label, q.order),
        }
    }

    /// Exponential-family parameter when this is that built-in.
    pub fn exponential_gamma(&self) -> Option<f64> {
        match &self.form {
            Form::Exponential { gamma } => Some(*gamma),
            _ => None,
        }
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// Arc-cosine kernel of ReLU: (t (pi - arccos t) + sqrt(1 - t^2)) / pi.
fn relu_kernel(t: f64) -> f64 {
    (t * (std::f64::consts::PI - t.acos()) + (1.0 - t * t).max(0.0).sqrt()) / std::f64::consts::PI
}

/// Deficit of the ReLU kernel: u - g(u) with
/// g(u) = (sqrt(u(2-u)) - (1-u) arccos(1-u)) / pi ~ c u^(3/2).
///
/// Below the crossover the bracketed series
/// g(u) = sqrt(2u)/pi (2u/3 + u^2/30 + 3u^3/560 + 5u^4/4032 + 35u^5/101376)
/// is exact to ~1e-16 relative; above it the direct form is stable.
fn relu_deficit(u: f64) -> f64 {
    let g = if u < 1e-3 {
        let bracket = u
            * (2.0 / 3.0
                + u * (1.0 / 30.0 + u * (3.0 / 560.0 + u * (5.0 / 4032.0 + u * 35.0 / 101_376.0))));
        (2.0 * u).sqrt() / std::f64::consts::PI * bracket
    } else {
        let t = 1.0 - u;
        ((u * (2.0 - u)).sqrt() - t * t.acos()) / std::f64::consts::PI
    };
    u - g
}

/// E[sigma(Z)^2] by panel Gauss-Legendre on [-12, 12] split at 0.
fn raw_second_moment(sigma: &ActivationFn, order: usize) -> Result<f64> {
    let per_panel = (order / 2).max(8);
    let edges = [-RADIAL_CUTOFF, -5.0, -2.0, 0.0, 2.0, 5.0, RADIAL_CUTOFF];
    let (nodes, weights) = legendre_panels(&edges, per_panel)?;
    let inv_sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt().recip();
    Ok(nodes
        .iter()
        .zip(&weights)
        .map(|(&z, &w)| {
            let s = sigma(z);
            w * s * s * (-0.5 * z * z).exp() * inv_sqrt_2pi
        })
        .sum())
}

impl QuadKernel {
    /// kappa(t) = E[sigma(X) sigma(Y)] / E[sigma^2], (X, Y) standard
    /// bivariate normal with correlation t, in polar coordinates:
    ///
    ///   K(t) = int_0^inf r e^{-r^2/2} (2pi)^{-1}
    ///          int_0^{2pi} sigma(r cos th) sigma(r cos(th - psi)) dth dr
    ///
    /// with psi = arccos t. Angular panels split at the four angles where
    /// cos(th) or cos(th - psi) vanishes, so kinks of sigma at the origin
    /// never cross a panel interior.
    fn eval(&self, t: f64) -> f64 {
        if t >= 1.0 {
            return 1.0;
        }
        if t <= -1.0 {
            return self.eval_diagonal(-1.0);
        }
        let psi = t.acos();
        let raw = self.raw_polar(psi).unwrap_or(f64::NAN);
        raw / self.norm
    }

    /// 1-D evaluation at t = +1 or -1: E[sigma(Z) sigma(sign * Z)].
    fn eval_diagonal(&self, sign: f64) -> f64 {
        let per_panel = (self.order / 2).max(8);
        let edges = [-RADIAL_CUTOFF, -5.0, -2.0, 0.0, 2.0, 5.0, RADIAL_CUTOFF];
        let (nodes, weights) = match legendre_panels(&edges, per_panel) {
            Ok(nw) => nw,
            Err(_) => return f64::NAN,
        };
        let inv_sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt().recip();
        let raw: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&z, &w)| {
                w * (self.sigma)(z) * (self.sigma)(sign * z) * (-0.5 * z * z).exp() * inv_sqrt_2pi
            })
            .sum();
        raw / self.norm
    }

    fn raw_polar(&self, psi: f64) -> Result<f64> {
        use std::f64::consts::{PI, TAU};
        // breakpoints of the two kink angles, folded into [0, 2pi)
        let mut brk = [
            (PI / 2.0) % TAU,
            (3.0 * PI / 2.0) % TAU,
            (psi + PI / 2.0) % TAU,
            (psi + 3.0 * PI / 2.0) % TAU,
        ];
        brk.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut edges = brk.to_vec();
        edges.push(brk[0] + TAU);
        edges.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

        let n_panels = edges.len() - 1;
        let per_theta = (self.order / n_panels.max(1)).max(8);
        let (theta, theta_w) = legendre_panels(&edges, per_theta)?;

        let per_r = (self.order / (RADIAL_EDGES.len() - 1)).max(8);
        let (r, r_w) = legendre_panels(&RADIAL_EDGES, per_r)?;

        let cos1: Vec<f64> = theta.iter().map(|&th| th.cos()).collect();
        let cos2: Vec<f64> = theta.iter().map(|&th| (th - psi).cos()).collect();

        let mut total = 0.0;
        for (&ri, &rwi) in r.iter().zip(&r_w) {
            let radial = rwi * ri * (-0.5 * ri * ri).exp();
            let mut inner = 0.0;
            for k in 0..theta.len() {
                inner += theta_w[k] * (self.sigma)(ri * cos1[k]) * (self.sigma)(ri * cos2[k]);
            }
            total += radial * inner;
        }
        Ok(total / TAU)
    }
}

/// One-sided finite difference for kappa'(1) over steps h, h/2, h/4 with
/// Richardson extrapolation at the estimated convergence order.
pub fn fd_derivative_at_one(kappa: impl Fn(f64) -> f64) -> Result<f64> {
    let h0 = 1e-4;
    let d: Vec<f64> = [h0, h0 / 2.0, h0 / 4.0]
        .iter()
        .map(|&h| (1.0 - kappa(1.0 - h)) / h)
        .collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericFailure(
            "non-finite kernel evaluations near t = 1".into(),
        ));
    }
    let num = d[0] - d[1];
    let den = d[1] - d[2];
    if den == 0.0 || num / den <= 1.0 {
        // no resolvable order: differences already at roundoff level
        return Ok(d[2]);
    }
    let rate = num / den; // 2^p
    let extrapolated = d[2] + (d[2] - d[1]) / (rate - 1.0);
    Ok(extrapolated)
}
