//! Spectral noise sensitivities and 1/f dephasing times.
//!
//! A noise channel couples through one variable λ of the circuit: the offset
//! charge ng, the reduced external flux φext, or a common-mode fractional
//! critical-current deviation δ (EJΣ → EJΣ·(1+δ)). The pure dephasing time
//! from a 1/f amplitude A is
//!
//! ```text
//! Tφ(λ) = 1 / (2π · A · |∂ν01/∂λ| · 1e9)   seconds
//! ```
//!
//! with ν01 = E01/h in GHz: the ħ of the energy-space formula and the h of
//! the frequency convention leave exactly the 2π. Slopes below
//! [`SLOPE_FLOOR`] count as a sweet spot and give an unbounded time.

use num_complex::Complex;

use crate::circuit::{
    build_hamiltonian, charge_derivative_matrix, flux_derivative_matrix, junction_matrix,
    CircuitParams, TruncationConfig,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{fp, Scalar};
use crate::spectral::{charge_dispersion, converge_ncut, e01_fixed, golden_max};

/// Noise variable a channel couples through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Charge,
    Flux,
    CriticalCurrent,
}

impl ChannelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ChannelKind::Charge => "charge",
            ChannelKind::Flux => "flux",
            ChannelKind::CriticalCurrent => "critical-current",
        }
    }

    /// Representative 1/f amplitude bounds per channel, in the channel's
    /// natural unit (e, Φ0, fraction of Ic).
    pub fn amplitude_range(&self) -> (f64, f64) {
        match self {
            ChannelKind::Charge => (1e-4, 1e-3),
            ChannelKind::Flux => (1e-6, 1e-5),
            ChannelKind::CriticalCurrent => (1e-7, 1e-6),
        }
    }

    /// Default amplitude: the low edge of each channel's range.
    pub fn default_amplitude(&self) -> f64 {
        self.amplitude_range().0
    }
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A noise channel: which λ plus its 1/f amplitude A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel<F> {
    pub kind: ChannelKind,
    pub amplitude: F,
    range_override: bool,
}

impl<F: Scalar> NoiseChannel<F> {
    /// Channel with an amplitude inside the documented range.
    pub fn new(kind: ChannelKind, amplitude: F) -> Result<Self> {
        let ch = NoiseChannel {
            kind,
            amplitude,
            range_override: false,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Channel that may carry any positive amplitude; dephasing-time
    /// computations skip the range check.
    pub fn with_range_override(kind: ChannelKind, amplitude: F) -> Result<Self> {
        let ch = NoiseChannel {
            kind,
            amplitude,
            range_override: true,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() || self.amplitude <= F::zero() {
            return Err(Error::validation("amplitude", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn in_documented_range(&self) -> bool {
        let (lo, hi) = self.kind.amplitude_range();
        self.amplitude >= fp(lo) && self.amplitude <= fp(hi)
    }

    pub fn range_override(&self) -> bool {
        self.range_override
    }
}

/// Whether the operating point is taken as given or resolved by scanning the
/// channel's own variable over its half-period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointPolicy {
    Fixed,
    WorstCase,
}

/// Bias point a sensitivity is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint<F> {
    pub ng: F,
    pub phi_ext: F,
    pub policy: PointPolicy,
    /// Set when a worst-case scan ran into its edge cap (symmetric-SQUID
    /// flux slope diverging toward φext = 1/2).
    pub clamped: bool,
}

impl<F: Scalar> OperatingPoint<F> {
    pub fn fixed(ng: F, phi_ext: F) -> Self {
        OperatingPoint {
            ng,
            phi_ext,
            policy: PointPolicy::Fixed,
            clamped: false,
        }
    }

    pub fn worst_case(ng: F, phi_ext: F) -> Self {
        OperatingPoint {
            ng,
            phi_ext,
            policy: PointPolicy::WorstCase,
            clamped: false,
        }
    }
}

/// A positive duration in seconds, or no decay at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoherenceTime<F> {
    Bounded(F),
    Unbounded,
}

impl<F: Scalar> CoherenceTime<F> {
    pub fn bounded(seconds: F) -> Result<Self> {
        if !seconds.is_finite() || seconds <= F::zero() {
            return Err(Error::validation("seconds", "must be finite and > 0"));
        }
        Ok(CoherenceTime::Bounded(seconds))
    }

    pub fn seconds(&self) -> Option<F> {
        match self {
            CoherenceTime::Bounded(s) => Some(*s),
            CoherenceTime::Unbounded => None,
        }
    }

    /// Decay rate in 1/s; an unbounded time is a zero rate.
    pub fn rate(&self) -> F {
        match self {
            CoherenceTime::Bounded(s) => F::one() / *s,
            CoherenceTime::Unbounded => F::zero(),
        }
    }

    fn from_rate(rate: F) -> Self {
        if rate > F::zero() {
            CoherenceTime::Bounded(F::one() / rate)
        } else {
            CoherenceTime::Unbounded
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, CoherenceTime::Unbounded)
    }
}

/// How a slope was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeMethod {
    FiniteDifference,
    HellmannFeynman,
}

/// One channel's dephasing estimate at a resolved bias point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct T2Result<F> {
    pub channel: NoiseChannel<F>,
    /// |∂E01/∂λ| in GHz per unit λ.
    pub slope: F,
    pub t2: CoherenceTime<F>,
    /// The point actually used (worst-case policies resolve to Fixed here).
    pub point: OperatingPoint<F>,
    pub method: SlopeMethod,
}

/// Relaxation and pure-dephasing inputs for the total rate
/// Γ2 = Γ1/2 + Γφ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBudget<F> {
    pub t1: CoherenceTime<F>,
    pub t_phi: CoherenceTime<F>,
}

/// Slopes below this (GHz per unit λ) are treated as exactly zero: they sit
/// under the double-precision resolution of the eigenproblem.
pub const SLOPE_FLOOR: f64 = 1e-12;

/// Finite-difference steps per channel, sized so that E01's O(1) curvature
/// scales balance truncation against roundoff in double precision.
pub const H_NG: f64 = 1e-4;
pub const H_FLUX: f64 = 1e-4;
pub const H_DELTA: f64 = 1e-5;

/// Flux worst-case scans stop short of the half-flux point by this margin:
/// a symmetric SQUID's slope diverges there.
const FLUX_SCAN_CAP_MARGIN: f64 = 1e-3;
const FLUX_SCAN_POINTS: usize = 201;
const WIDTH_REL_TOL: f64 = 1e-4;

fn with_lambda<F: Scalar>(
    params: &CircuitParams<F>,
    kind: ChannelKind,
    lambda: F,
) -> CircuitParams<F> {
    let mut p = *params;
    match kind {
        ChannelKind::Charge => p.ng = lambda,
        ChannelKind::Flux => p.phi_ext = lambda,
        ChannelKind::CriticalCurrent => p.ej_sum = params.ej_sum * (F::one() + lambda),
    }
    p
}

fn base_lambda<F: Scalar>(point: &OperatingPoint<F>, kind: ChannelKind) -> F {
    match kind {
        ChannelKind::Charge => point.ng,
        ChannelKind::Flux => point.phi_ext,
        ChannelKind::CriticalCurrent => F::zero(),
    }
}

fn fd_step<F: Scalar>(kind: ChannelKind) -> F {
    match kind {
        ChannelKind::Charge => fp(H_NG),
        ChannelKind::Flux => fp(H_FLUX),
        ChannelKind::CriticalCurrent => fp(H_DELTA),
    }
}

/// Applies the resolved point to the parameter set (the δ variable leaves
/// the parameters untouched).
fn params_at_point<F: Scalar>(
    params: &CircuitParams<F>,
    point: &OperatingPoint<F>,
) -> CircuitParams<F> {
    let mut p = *params;
    p.ng = point.ng;
    p.phi_ext = point.phi_ext;
    p
}

/// 5-point central finite difference of E01 in the channel variable with one
/// Richardson step, at a fixed already-resolved point. Returns |slope|.
fn fd_slope_at<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    kind: ChannelKind,
    point: &OperatingPoint<F>,
) -> Result<F> {
    let p0 = params_at_point(params, point);
    p0.validate()?;
    let x0 = base_lambda(point, kind);
    let h = fd_step::<F>(kind);
    let limit = fp::<F>(64.0) * F::epsilon() * x0.abs().max(F::one());
    if h < limit {
        return Err(Error::StepUnderflow {
            step: h.to_f64().unwrap_or(f64::NAN),
            magnitude: x0.to_f64().unwrap_or(f64::NAN),
        });
    }
    let ncut = converge_ncut(&p0, trunc)?;
    let fixed = trunc.with_ncut(ncut);
    let half = fp::<F>(0.5);
    let eval = |x: F| -> Result<F> { e01_fixed(&with_lambda(&p0, kind, x), &fixed) };
    let f_p = eval(x0 + h)?;
    let f_m = eval(x0 - h)?;
    let f_ph = eval(x0 + h * half)?;
    let f_mh = eval(x0 - h * half)?;
    let r3 = (f_p - f_m) * half;
    let r5 = (fp::<F>(4.0) / fp::<F>(3.0)) * (f_ph - f_mh) - r3 / fp::<F>(3.0);
    Ok((r5 / h).abs())
}

/// Worst-case resolution: the scanned point plus the production slope
/// estimate at it. For the charge channel the slope is the dispersion-scan
/// refinement maximum (a central difference at the scan scale, whose noise
/// floor ~1e−12 stays below the smallest dispersions swept); for flux the
/// 5-point estimator is already far above its noise floor.
fn resolve_worst_case<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    kind: ChannelKind,
    point: &OperatingPoint<F>,
) -> Result<(OperatingPoint<F>, F)> {
    let base = params_at_point(params, point);
    match kind {
        ChannelKind::Charge => {
            let disp = charge_dispersion(&base, trunc, 101)?;
            let resolved = OperatingPoint {
                ng: disp.argmax_ng,
                phi_ext: base.phi_ext,
                policy: PointPolicy::Fixed,
                clamped: false,
            };
            Ok((resolved, disp.max_slope))
        }
        ChannelKind::Flux => {
            let cap = fp::<F>(0.5) - fp::<F>(FLUX_SCAN_CAP_MARGIN);
            let step = cap / fp::<F>((FLUX_SCAN_POINTS - 1) as f64);
            let ncut = converge_ncut(&base, trunc)?;
            let fixed = trunc.with_ncut(ncut);
            let slope_at = |phi: F| -> Result<F> {
                let pt = OperatingPoint::fixed(base.ng, phi);
                fd_slope_fixed_trunc(&base, &fixed, ChannelKind::Flux, &pt)
            };
            let mut best = (F::zero(), F::zero());
            for i in 0..FLUX_SCAN_POINTS {
                let phi = step * fp::<F>(i as f64);
                let s = slope_at(phi)?;
                if s > best.1 {
                    best = (phi, s);
                }
            }
            let lo = (best.0 - step).max(F::zero());
            let hi = (best.0 + step).min(cap);
            let width_tol = fp::<F>(WIDTH_REL_TOL) * fp::<F>(0.5);
            let (mut phi_star, mut slope) = golden_max(slope_at, lo, hi, width_tol)?;
            if best.1 > slope {
                phi_star = best.0;
                slope = best.1;
            }
            let clamped = phi_star >= cap - step;
            let resolved = OperatingPoint {
                ng: base.ng,
                phi_ext: phi_star,
                policy: PointPolicy::Fixed,
                clamped,
            };
            Ok((resolved, slope))
        }
        ChannelKind::CriticalCurrent => {
            // The δ derivative needs no scan; keep the caller's bias.
            let resolved = OperatingPoint {
                ng: base.ng,
                phi_ext: base.phi_ext,
                policy: PointPolicy::Fixed,
                clamped: false,
            };
            let slope = fd_slope_at(params, trunc, kind, &resolved)?;
            Ok((resolved, slope))
        }
    }
}

/// As [`fd_slope_at`] but on an externally fixed window (scan loops resolve
/// the window once).
fn fd_slope_fixed_trunc<F: Scalar>(
    params: &CircuitParams<F>,
    fixed: &TruncationConfig<F>,
    kind: ChannelKind,
    point: &OperatingPoint<F>,
) -> Result<F> {
    let p0 = params_at_point(params, point);
    let x0 = base_lambda(point, kind);
    let h = fd_step::<F>(kind);
    let half = fp::<F>(0.5);
    let eval = |x: F| -> Result<F> { e01_fixed(&with_lambda(&p0, kind, x), fixed) };
    let f_p = eval(x0 + h)?;
    let f_m = eval(x0 - h)?;
    let f_ph = eval(x0 + h * half)?;
    let f_mh = eval(x0 - h * half)?;
    let r3 = (f_p - f_m) * half;
    let r5 = (fp::<F>(4.0) / fp::<F>(3.0)) * (f_ph - f_mh) - r3 / fp::<F>(3.0);
    Ok((r5 / h).abs())
}

/// |∂E01/∂λ| by finite differences. A `WorstCase` point is resolved first.
pub fn slope_fd<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    kind: ChannelKind,
    point: &OperatingPoint<F>,
) -> Result<F> {
    match point.policy {
        PointPolicy::Fixed => fd_slope_at(params, trunc, kind, point),
        PointPolicy::WorstCase => {
            let (resolved, _) = resolve_worst_case(params, trunc, kind, point)?;
            fd_slope_at(params, trunc, kind, &resolved)
        }
    }
}

/// |∂E01/∂λ| from first-order perturbation theory: the difference of
/// ⟨k|∂H/∂λ|k⟩ over the converged eigenvectors of levels 1 and 0. Serves as
/// the analytic cross-check of [`slope_fd`].
pub fn slope_hf<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    kind: ChannelKind,
    point: &OperatingPoint<F>,
) -> Result<F> {
    let resolved = match point.policy {
        PointPolicy::Fixed => *point,
        PointPolicy::WorstCase => resolve_worst_case(params, trunc, kind, point)?.0,
    };
    let p0 = params_at_point(params, &resolved);
    p0.validate()?;
    let ncut = converge_ncut(&p0, trunc)?;
    let fixed = trunc.with_ncut(ncut);
    let h = build_hamiltonian(&p0, &fixed)?;
    let (values, vectors) = linalg::eigen_with_vectors(&h, 2)?;
    let e01 = values[1] - values[0];
    if e01 < fp(1e-9) {
        return Err(Error::DegeneratePair {
            e01: e01.to_f64().unwrap_or(f64::NAN),
        });
    }
    let dh = match kind {
        ChannelKind::Charge => charge_derivative_matrix(&p0, &fixed),
        ChannelKind::Flux => flux_derivative_matrix(&p0, &fixed),
        ChannelKind::CriticalCurrent => junction_matrix(&p0, &fixed),
    };
    let g0 = expectation_checked(&dh, &vectors[0]);
    let g1 = expectation_checked(&dh, &vectors[1]);
    Ok((g1 - g0).abs())
}

fn expectation_checked<F: Scalar>(m: &crate::circuit::HermitianMatrix<F>, w: &[Complex<F>]) -> F {
    linalg::expectation(m, w)
}

/// Resolves the worst-case bias point for a channel: charge scans ng via the
/// dispersion refinement, flux scans φext up to the edge cap, the
/// critical-current channel keeps the caller's bias.
pub fn worst_case_point<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    kind: ChannelKind,
) -> Result<OperatingPoint<F>> {
    let point = OperatingPoint::worst_case(params.ng, params.phi_ext);
    Ok(resolve_worst_case(params, trunc, kind, &point)?.0)
}

/// Pure dephasing time of one channel via the finite-difference slope.
pub fn t2_pure<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    channel: &NoiseChannel<F>,
    point: &OperatingPoint<F>,
) -> Result<T2Result<F>> {
    t2_with_method(params, trunc, channel, point, SlopeMethod::FiniteDifference)
}

/// Pure dephasing time with an explicit slope estimator.
pub fn t2_with_method<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    channel: &NoiseChannel<F>,
    point: &OperatingPoint<F>,
    method: SlopeMethod,
) -> Result<T2Result<F>> {
    channel.validate()?;
    if !channel.range_override && !channel.in_documented_range() {
        let (lo, hi) = channel.kind.amplitude_range();
        return Err(Error::validation(
            "amplitude",
            format!(
                "{} outside the documented {} range [{lo:e}, {hi:e}]; \
                 use the override constructor or config flag to allow it",
                channel.amplitude, channel.kind
            ),
        ));
    }
    let (resolved, slope) = match (point.policy, method) {
        (PointPolicy::WorstCase, SlopeMethod::FiniteDifference) => {
            resolve_worst_case(params, trunc, channel.kind, point)?
        }
        (PointPolicy::WorstCase, SlopeMethod::HellmannFeynman) => {
            let (resolved, _) = resolve_worst_case(params, trunc, channel.kind, point)?;
            let slope = slope_hf(params, trunc, channel.kind, &resolved)?;
            (resolved, slope)
        }
        (PointPolicy::Fixed, SlopeMethod::FiniteDifference) => {
            let slope = fd_slope_at(params, trunc, channel.kind, point)?;
            (*point, slope)
        }
        (PointPolicy::Fixed, SlopeMethod::HellmannFeynman) => {
            let slope = slope_hf(params, trunc, channel.kind, point)?;
            (*point, slope)
        }
    };
    Ok(T2Result {
        channel: *channel,
        slope,
        t2: t2_from_slope(channel.amplitude, slope),
        point: resolved,
        method,
    })
}

/// 1/(2π · A · slope · 1e9), or unbounded at and below the slope floor.
pub fn t2_from_slope<F: Scalar>(amplitude: F, slope_ghz: F) -> CoherenceTime<F> {
    if slope_ghz <= fp(SLOPE_FLOOR) {
        return CoherenceTime::Unbounded;
    }
    let two_pi = fp::<F>(2.0) * F::PI();
    let rate = two_pi * amplitude * slope_ghz * fp::<F>(1e9);
    CoherenceTime::from_rate(rate)
}

/// Total dephasing time from Γ2 = Γ1/2 + Γφ. Two unbounded inputs give an
/// unbounded total; no division by zero can surface.
pub fn combine_rates<F: Scalar>(budget: &RateBudget<F>) -> CoherenceTime<F> {
    let half = fp::<F>(0.5);
    CoherenceTime::from_rate(budget.t1.rate() * half + budget.t_phi.rate())
}
