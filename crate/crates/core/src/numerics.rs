//! Quadrature and series engines for the potential integrals.
//!
//! - [`integrate_decaying`] handles `∫_lower^∞ f(b) db` for integrands that
//!   fall off on a known length scale, by mapping `[lower, ∞)` onto `[0, 1)`
//!   and refining panels of a 7/15-point Gauss–Kronrod pair.
//! - [`sum_matsubara`] accumulates primed Matsubara sums (`j = 0` at half
//!   weight) with Neumaier compensation, a lookahead stop rule and a tail
//!   correction.
//! - [`coth_sum_identity`] and [`exp_weighted_sum_identity`] are closed forms
//!   of two such series, used as oracles and by the asymptote formulas.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::f64::consts::PI;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rel_tol: f64,
    /// Absolute floor in joules; energies below it count as converged.
    pub abs_floor: f64,
    pub max_matsubara_terms: usize,
    pub max_quad_depth: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_floor: 1e-45,
            max_matsubara_terms: 1_000_000,
            max_quad_depth: 60,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return Err(NumericsError::InvalidArgument(format!(
                "rel_tol must lie in (0, 1e-3], got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_floor >= 0.0 && self.abs_floor.is_finite()) {
            return Err(NumericsError::InvalidArgument(format!(
                "abs_floor must be finite and non-negative, got {}",
                self.abs_floor
            )));
        }
        if self.max_matsubara_terms == 0 || self.max_quad_depth == 0 {
            return Err(NumericsError::InvalidArgument(
                "term and depth limits must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Quadrature settings with an absolute floor already converted to the
    /// integral's own units.
    pub fn quadrature(&self, abs_tol: f64) -> QuadratureControl {
        QuadratureControl {
            rel_tol: self.rel_tol,
            abs_tol,
            max_depth: self.max_quad_depth,
        }
    }

    /// Series settings with an absolute floor in the series' own units.
    pub fn series(&self, abs_floor: f64) -> SeriesControl {
        SeriesControl {
            rel_tol: self.rel_tol,
            abs_floor,
            max_terms: self.max_matsubara_terms,
            lookahead: SeriesControl::DEFAULT_LOOKAHEAD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        Tolerances::default().quadrature(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub max_terms: usize,
    pub lookahead: usize,
}

impl SeriesControl {
    pub const DEFAULT_LOOKAHEAD: usize = 20;
}

impl Default for SeriesControl {
    fn default() -> Self {
        Tolerances::default().series(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error(
        "quadrature did not converge within depth {max_depth}: partial value {partial:e}, error estimate {error_estimate:e}"
    )]
    QuadratureDepth {
        partial: f64,
        error_estimate: f64,
        max_depth: usize,
    },
    #[error("integrand is not finite at {at:e}")]
    NonFiniteIntegrand { at: f64 },
    #[error(
        "series did not converge after {terms} terms: last term {last_term:e}, partial sum {partial_sum:e}"
    )]
    SeriesNonConvergence {
        terms: usize,
        last_term: f64,
        partial_sum: f64,
    },
    #[error("series term {index} is not finite")]
    NonFiniteTerm { index: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

// ---------------------------------------------------------------------------
// Compensated accumulation

/// Kahan–Babuška–Neumaier running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, rhs: f64) {
        CompensatedSum::add(self, rhs);
    }
}

impl Add<f64> for CompensatedSum {
    type Output = Self;

    fn add(mut self, rhs: f64) -> Self {
        self += rhs;
        self
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s += x;
        }
        s
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

// ---------------------------------------------------------------------------
// Gauss–Kronrod quadrature

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    depth: usize,
) -> Result<Panel, NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| -> Result<f64, NumericsError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericsError::NonFiniteIntegrand { at: x })
        }
    };
    let fc = eval(center)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = eval(center - dx)? + eval(center + dx)?;
        kronrod += WGK[i] * s;
        // Odd Kronrod nodes coincide with the 7-point Gauss nodes.
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok(Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
        depth,
    })
}

const MAX_PANELS: usize = 50_000;

/// Globally adaptive Gauss–Kronrod on `[a, b]`, starting from `initial`
/// equal panels. The reported error is the sum of the per-panel
/// `|K15 − G7|` differences.
pub fn integrate_interval<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    initial: usize,
    ctrl: &QuadratureControl,
) -> Result<Estimate, NumericsError> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(NumericsError::InvalidArgument(format!(
            "finite interval required, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    let initial = initial.max(1);
    let mut heap = BinaryHeap::with_capacity(64);
    let width = (b - a) / initial as f64;
    for i in 0..initial {
        let lo = a + width * i as f64;
        let hi = if i + 1 == initial { b } else { lo + width };
        heap.push(gauss_kronrod(&mut f, lo, hi, 0)?);
    }
    loop {
        let value = compensated_sum(heap.iter().map(|p| p.value));
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if error <= (ctrl.rel_tol * value.abs()).max(ctrl.abs_tol) {
            return Ok(Estimate { value, error });
        }
        let worst = heap.pop().expect("heap is never empty");
        if worst.depth + 1 > ctrl.max_depth || heap.len() + 2 > MAX_PANELS {
            heap.push(worst);
            return Err(NumericsError::QuadratureDepth {
                partial: value,
                error_estimate: error,
                max_depth: ctrl.max_depth,
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(gauss_kronrod(&mut f, worst.a, mid, worst.depth + 1)?);
        heap.push(gauss_kronrod(&mut f, mid, worst.b, worst.depth + 1)?);
    }
}

/// `∫_lower^∞ f(b) db` for an integrand that decays on the length scale
/// `scale` (for the surface integrals, `1/(2 z_A)`).
///
/// Substitutes `b = lower + scale · t/(1 − t)` and integrates over
/// `t ∈ [0, 1)` adaptively.
pub fn integrate_decaying<F: FnMut(f64) -> f64>(
    mut f: F,
    lower: f64,
    scale: f64,
    ctrl: &QuadratureControl,
) -> Result<Estimate, NumericsError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(NumericsError::InvalidArgument(format!(
            "decay scale must be positive, got {scale}"
        )));
    }
    if !lower.is_finite() {
        return Err(NumericsError::InvalidArgument(format!(
            "lower limit must be finite, got {lower}"
        )));
    }
    let mapped = |t: f64| {
        let one_minus = 1.0 - t;
        let u = t / one_minus;
        let jac = scale / (one_minus * one_minus);
        let v = f(lower + scale * u);
        // Past the representable range the integrand has decayed to zero.
        if v == 0.0 || !jac.is_finite() {
            0.0
        } else {
            v * jac
        }
    };
    integrate_interval(mapped, 0.0, 1.0, 4, ctrl)
}

// ---------------------------------------------------------------------------
// Matsubara series

/// How the remainder beyond the last evaluated term is treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailModel {
    /// Terms are known to fall off exponentially: stop once the lookahead
    /// rule holds and the fitted geometric remainder is within tolerance,
    /// then add that remainder.
    Geometric,
    /// As `Geometric`, and additionally recognise power-law decay and
    /// extrapolate the partial sums (Richardson in `1/N`).
    Auto,
}

enum TailShape {
    Zero,
    Alternating,
    Geometric(f64),
    Growing,
}

fn geometric_tail(window: &VecDeque<f64>) -> TailShape {
    let last = *window.back().expect("window is non-empty");
    if last == 0.0 {
        return TailShape::Zero;
    }
    let first = *window.front().expect("window is non-empty");
    let same_sign = window
        .iter()
        .all(|t| t.signum() == last.signum() && *t != 0.0);
    if !same_sign {
        return TailShape::Alternating;
    }
    let steps = (window.len() - 1) as f64;
    let q = (last / first).powf(1.0 / steps);
    if q >= 1.0 || !q.is_finite() {
        TailShape::Growing
    } else {
        TailShape::Geometric(last * q / (1.0 - q))
    }
}

struct Checkpoint {
    n: usize,
    partial: f64,
    term: f64,
}

/// Richardson extrapolation of partial sums `S_N, S_{2N}, …` whose remainder
/// expands in `N^{-(p-1)}, N^{-p}, N^{-(p+1)}`.
fn richardson(partials: &[f64], p: i32) -> f64 {
    let mut row = partials.to_vec();
    for (level, exponent) in (p - 1..=p + 1).enumerate() {
        let factor = 2f64.powi(exponent);
        for i in 0..row.len() - level - 1 {
            row[i] = (factor * row[i + 1] - row[i]) / (factor - 1.0);
        }
    }
    row[0]
}

/// Power-law order of the terms around the newest checkpoint, if the decay
/// is algebraic with an integer exponent of at least two.
fn algebraic_order(cps: &[Checkpoint]) -> Option<i32> {
    let n = cps.len();
    if n < 3 {
        return None;
    }
    let (t0, t1, t2) = (cps[n - 3].term, cps[n - 2].term, cps[n - 1].term);
    if t0 == 0.0 || t0.signum() != t1.signum() || t1.signum() != t2.signum() {
        return None;
    }
    let p_a = (t0 / t1).log2();
    let p_b = (t1 / t2).log2();
    let p = p_b.round();
    if (p_a - p_b).abs() < 1e-3 && (p_b - p).abs() < 1e-3 && p >= 2.0 {
        Some(p as i32)
    } else {
        None
    }
}

/// Primed sum `½ term(0) + Σ_{j≥1} term(j)` with automatic tail handling.
pub fn sum_matsubara<F: FnMut(usize) -> f64>(
    mut term: F,
    tol: &Tolerances,
) -> Result<Estimate, NumericsError> {
    sum_matsubara_with(
        |j| Ok::<f64, NumericsError>(term(j)),
        &tol.series(0.0),
        TailModel::Auto,
    )
}

/// General form of [`sum_matsubara`]: fallible terms, explicit control and
/// tail model.
///
/// Stops once `lookahead` consecutive terms are each below
/// `max(rel_tol·|S|, abs_floor)` and the estimated remainder is too.
pub fn sum_matsubara_with<F, E>(
    mut term: F,
    ctrl: &SeriesControl,
    tail: TailModel,
) -> Result<Estimate, E>
where
    F: FnMut(usize) -> Result<f64, E>,
    E: From<NumericsError>,
{
    let lookahead = ctrl.lookahead.max(1);
    let mut acc = CompensatedSum::new();
    let mut window: VecDeque<f64> = VecDeque::with_capacity(lookahead + 1);
    let mut small_run = 0usize;
    let mut checkpoints: Vec<Checkpoint> = Vec::new();
    let mut last_extrapolation: Option<f64> = None;
    let mut last = 0.0;

    for j in 0..ctrl.max_terms {
        let mut t = term(j)?;
        if !t.is_finite() {
            return Err(NumericsError::NonFiniteTerm { index: j }.into());
        }
        if j == 0 {
            t *= 0.5;
        }
        last = t;

        if tail == TailModel::Auto && j >= 8 && j.is_power_of_two() {
            checkpoints.push(Checkpoint {
                n: j,
                partial: acc.value(),
                term: t,
            });
            if let Some(est) = extrapolate(&checkpoints, &mut last_extrapolation, ctrl) {
                return Ok(est);
            }
        }

        acc += t;
        if window.len() == lookahead + 1 {
            window.pop_front();
        }
        window.push_back(t);

        let threshold = (ctrl.rel_tol * acc.value().abs()).max(ctrl.abs_floor);
        if t.abs() <= threshold {
            small_run += 1;
        } else {
            small_run = 0;
        }
        if small_run >= lookahead && window.len() == lookahead + 1 {
            match geometric_tail(&window) {
                TailShape::Zero => {
                    return Ok(Estimate {
                        value: acc.value(),
                        error: 0.0,
                    })
                }
                TailShape::Alternating => {
                    return Ok(Estimate {
                        value: acc.value(),
                        error: t.abs(),
                    })
                }
                TailShape::Geometric(rest) if rest.abs() <= threshold => {
                    return Ok(Estimate {
                        value: acc.value() + rest,
                        error: rest.abs(),
                    })
                }
                TailShape::Geometric(_) | TailShape::Growing => {}
            }
        }
    }
    Err(NumericsError::SeriesNonConvergence {
        terms: ctrl.max_terms,
        last_term: last,
        partial_sum: acc.value(),
    }
    .into())
}

fn extrapolate(
    cps: &[Checkpoint],
    previous: &mut Option<f64>,
    ctrl: &SeriesControl,
) -> Option<Estimate> {
    let Some(p) = algebraic_order(cps) else {
        *previous = None;
        return None;
    };
    let n = cps.len();
    if n < 4 || cps[n - 1].n < 128 {
        return None;
    }
    let partials: Vec<f64> = cps[n - 4..].iter().map(|c| c.partial).collect();
    let current = richardson(&partials, p);
    let result = match *previous {
        Some(prev) => {
            let diff = (current - prev).abs();
            (diff <= (ctrl.rel_tol * current.abs()).max(ctrl.abs_floor)).then_some(Estimate {
                value: current,
                error: diff,
            })
        }
        None => None,
    };
    *previous = Some(current);
    result
}

// ---------------------------------------------------------------------------
// Closed-form series

fn check_positive(a: f64) -> Result<(), NumericsError> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(NumericsError::InvalidArgument(format!(
            "argument must be positive and finite, got {a}"
        )))
    }
}

const SMALL_ARGUMENT: f64 = 1e-4;

/// `Σ'_{j≥0} 1/(a² + j²) = π coth(πa) / (2a)`.
pub fn coth_sum_identity(a: f64) -> Result<f64, NumericsError> {
    check_positive(a)?;
    if a < SMALL_ARGUMENT {
        let pi2 = PI * PI;
        return Ok(0.5 / (a * a) + pi2 / 6.0 - pi2 * pi2 * a * a / 90.0);
    }
    Ok(PI / (2.0 * a) / (PI * a).tanh())
}

/// `Σ'_{j≥0} e^{−2ja}(1 + 2ja + 2j²a²) = coth(a)/2 + (a/2)(1 + a coth a)/sinh²a`.
pub fn exp_weighted_sum_identity(a: f64) -> Result<f64, NumericsError> {
    check_positive(a)?;
    if a < SMALL_ARGUMENT {
        let a3 = a * a * a;
        return Ok(1.5 / a - a3 / 90.0 + 2.0 * a3 * a * a / 315.0);
    }
    let e = (-2.0 * a).exp();
    let one_minus = -(-2.0 * a).exp_m1();
    let coth = (1.0 + e) / one_minus;
    let inv_sinh2 = 4.0 * e / (one_minus * one_minus);
    Ok(0.5 * coth + 0.5 * a * (1.0 + a * coth) * inv_sinh2)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI_COTH_PI_OVER_2: f64 = 1.576_674_047_468_581_2;
    const EXP_SUM_AT_ONE: f64 = 1.493_907_728_095_830_6;
    // ∫₀^∞ e^{-u}/(1+u²) du, 30-digit reference quadrature.
    const EXP_OVER_LORENTZ: f64 = 0.621_449_624_235_813_4;

    fn ctrl(rel: f64) -> QuadratureControl {
        QuadratureControl {
            rel_tol: rel,
            abs_tol: 0.0,
            max_depth: 60,
        }
    }

    #[test]
    fn exponential_integrals() {
        let z = 2.5e-6;
        let scale = 1.0 / (2.0 * z);
        let r = integrate_decaying(|b| (-2.0 * b * z).exp(), 0.0, scale, &ctrl(1e-9)).unwrap();
        assert!((r.value * 2.0 * z - 1.0).abs() < 1e-9);
        let r =
            integrate_decaying(|b| b * b * (-2.0 * b * z).exp(), 0.0, scale, &ctrl(1e-9)).unwrap();
        assert!((r.value * 4.0 * z * z * z - 1.0).abs() < 1e-9);
    }

    #[test]
    fn shifted_lower_limit() {
        // ∫_L^∞ e^{-2bz} db = e^{-2Lz}/(2z)
        let z = 1e-6;
        let lower = 3e5;
        let r = integrate_decaying(|b| (-2.0 * b * z).exp(), lower, 0.5 / z, &ctrl(1e-10)).unwrap();
        let exact = (-2.0 * lower * z).exp() / (2.0 * z);
        assert!((r.value / exact - 1.0).abs() < 1e-10);
    }

    #[test]
    fn error_estimate_bounds_true_error() {
        type Case = (fn(f64) -> f64, f64);
        let cases: [Case; 4] = [
            (|u| (-u).exp(), 1.0),
            (|u| u * (-u).exp(), 1.0),
            (|u| u * u * (-u).exp(), 2.0),
            (|u| (-u).exp() / (1.0 + u * u), EXP_OVER_LORENTZ),
        ];
        for (f, exact) in cases {
            for rel in [1e-3, 1e-6, 1e-9, 1e-12] {
                let r = integrate_decaying(f, 0.0, 1.0, &ctrl(rel)).unwrap();
                let true_err = (r.value - exact).abs();
                assert!(
                    true_err <= r.error.max(4.0 * f64::EPSILON * exact),
                    "rel={rel}"
                );
                assert!(true_err <= rel * exact, "rel={rel}: {true_err:e}");
            }
        }
    }

    #[test]
    fn interval_rule_on_polynomial() {
        let r = integrate_interval(|x| x * x * x, 0.0, 2.0, 1, &ctrl(1e-12)).unwrap();
        assert!((r.value - 4.0).abs() < 1e-13);
    }

    #[test]
    fn depth_exhaustion_reports_partial_value() {
        let c = QuadratureControl {
            rel_tol: 1e-12,
            abs_tol: 0.0,
            max_depth: 2,
        };
        let err = integrate_interval(|x| x.abs().sqrt(), -1.0, 1.0, 1, &c).unwrap_err();
        match err {
            NumericsError::QuadratureDepth { partial, .. } => {
                assert!((partial - 4.0 / 3.0).abs() < 1e-2)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate_interval(|_| f64::NAN, 0.0, 1.0, 1, &ctrl(1e-6)).unwrap_err();
        assert!(matches!(err, NumericsError::NonFiniteIntegrand { .. }));
    }

    #[test]
    fn matsubara_lorentzian_series() {
        let tol = Tolerances::default();
        let s = sum_matsubara(|j| 1.0 / (1.0 + (j * j) as f64), &tol).unwrap();
        assert!(
            (s.value / PI_COTH_PI_OVER_2 - 1.0).abs() < 1e-9,
            "{}",
            s.value
        );
    }

    #[test]
    fn half_weight_of_zeroth_term() {
        let s = sum_matsubara(|j| if j == 0 { 1.0 } else { 0.0 }, &Tolerances::default()).unwrap();
        assert_eq!(s.value, 0.5);
    }

    #[test]
    fn matsubara_exponential_series() {
        let a = 1.0f64;
        let s = sum_matsubara(
            |j| {
                let x = j as f64 * a;
                (-2.0 * x).exp() * (1.0 + 2.0 * x + 2.0 * x * x)
            },
            &Tolerances::default(),
        )
        .unwrap();
        assert!((s.value - 1.4939).abs() < 1e-3);
        assert!((s.value / EXP_SUM_AT_ONE - 1.0).abs() < 1e-10);
    }

    #[test]
    fn geometric_tail_is_added() {
        // Σ' 0.999^j = 1/(1-0.999) - 1/2
        let tol = Tolerances {
            rel_tol: 1e-9,
            ..Tolerances::default()
        };
        let s = sum_matsubara_with(
            |j| Ok::<_, NumericsError>(0.999f64.powi(j as i32)),
            &tol.series(0.0),
            TailModel::Geometric,
        )
        .unwrap();
        assert!((s.value / 999.5 - 1.0).abs() < 1e-9, "{}", s.value);
    }

    #[test]
    fn series_non_convergence_carries_diagnostics() {
        let tol = Tolerances {
            max_matsubara_terms: 100,
            ..Tolerances::default()
        };
        let err = sum_matsubara(|_| 1.0, &tol).unwrap_err();
        match err {
            NumericsError::SeriesNonConvergence {
                terms,
                last_term,
                partial_sum,
            } => {
                assert_eq!(terms, 100);
                assert_eq!(last_term, 1.0);
                assert_eq!(partial_sum, 99.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identities_match_their_limits() {
        for a in [1e-7, 1e-5] {
            let v = exp_weighted_sum_identity(a).unwrap();
            assert!((v * a / 1.5 - 1.0).abs() < 1e-9);
            let v = coth_sum_identity(a).unwrap();
            let lim = 0.5 / (a * a) + PI * PI / 6.0;
            assert!((v / lim - 1.0).abs() < 1e-15);
        }
        assert!((exp_weighted_sum_identity(50.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(exp_weighted_sum_identity(1e4).unwrap(), 0.5);
        assert!((coth_sum_identity(1.0).unwrap() - PI_COTH_PI_OVER_2).abs() < 1e-15);
        assert!((exp_weighted_sum_identity(1.0).unwrap() - EXP_SUM_AT_ONE).abs() < 1e-15);
        assert!(coth_sum_identity(0.0).is_err());
        assert!(exp_weighted_sum_identity(-1.0).is_err());
    }

    #[test]
    fn series_fallback_is_continuous() {
        let below = exp_weighted_sum_identity(SMALL_ARGUMENT * (1.0 - 1e-12)).unwrap();
        let above = exp_weighted_sum_identity(SMALL_ARGUMENT).unwrap();
        assert!((below / above - 1.0).abs() < 1e-11);
        let below = coth_sum_identity(SMALL_ARGUMENT * (1.0 - 1e-12)).unwrap();
        let above = coth_sum_identity(SMALL_ARGUMENT).unwrap();
        assert!((below / above - 1.0).abs() < 1e-11);
    }

    #[test]
    fn identities_agree_with_summation() {
        let tol = Tolerances::default();
        for i in 0..30 {
            let a = 10f64.powf(-3.0 + 6.0 * i as f64 / 29.0);
            let direct = sum_matsubara(|j| 1.0 / (a * a + (j * j) as f64), &tol).unwrap();
            let closed = coth_sum_identity(a).unwrap();
            assert!(
                (direct.value / closed - 1.0).abs() < 1e-8,
                "a={a}: {} vs {closed}",
                direct.value
            );

            let direct = sum_matsubara(
                |j| {
                    let x = j as f64 * a;
                    (-2.0 * x).exp() * (1.0 + 2.0 * x + 2.0 * x * x)
                },
                &tol,
            )
            .unwrap();
            let closed = exp_weighted_sum_identity(a).unwrap();
            assert!(
                (direct.value / closed - 1.0).abs() < 1e-8,
                "a={a}: {} vs {closed}",
                direct.value
            );
        }
    }

    #[test]
    fn compensation_survives_ill_conditioning() {
        // Alternating pairs (A_j, −(A_j − δ_j)) with A ≈ 4·10⁶ and δ ≈ 8, so
        // Σ|t| / |Σt| ≈ 10⁶. Every term is an integer multiple of 2⁻³⁰, which
        // makes the exact sum an i128 computation.
        let unit = 2f64.powi(-30);
        let mut exact: i128 = 0;
        let mut acc = CompensatedSum::new();
        let mut naive = 0.0f64;
        let mut abs_total = 0.0;
        // A leading ±2⁵² pair (cancelling exactly) lifts the partial sums to
        // where naive addition has to round.
        let offset = 1i64 << 52;
        let mut terms = vec![offset];
        for j in 0..500_000i64 {
            let a = (1i64 << 52) + (j * 7919 % 1_000_003) * 12_345;
            let delta = (1i64 << 33) + (j % 17) * 977;
            terms.extend([a, -(a - delta)]);
        }
        terms.push(-offset);
        {
            for m in terms {
                exact += m as i128;
                let x = m as f64 * unit;
                acc += x;
                naive += x;
                abs_total += x.abs();
            }
        }
        let exact = exact as f64 * unit;
        let condition = abs_total / exact.abs();
        assert!(condition > 9e5 && condition < 2e6, "{condition:e}");
        let rel = |v: f64| (v - exact).abs() / exact.abs();
        // Lose fewer than two of the ~16 available digits.
        assert!(rel(acc.value()) < 1e-14, "{:e}", rel(acc.value()));
        assert!(
            rel(naive) > rel(acc.value()),
            "{:e} {:e}",
            rel(naive),
            rel(acc.value())
        );
    }

    proptest::proptest! {
        #[test]
        fn compensated_sum_is_order_insensitive(mut xs in proptest::collection::vec(-1e6f64..1e6, 1..200)) {
            let forward = compensated_sum(xs.iter().copied());
            xs.reverse();
            let backward = compensated_sum(xs.iter().copied());
            let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            proptest::prop_assert!((forward - backward).abs() <= 4.0 * f64::EPSILON * scale);
        }
    }
}
