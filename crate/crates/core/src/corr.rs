//! Correlations of Lipschitz observables under translations and the doubling
//! map, decay-exponent fits, and evaluators for the bounds relating decay of
//! correlations, local dimension and hitting-time indicators.
//!
//! The Lipschitz norm is `sup |f| + Lip(f)`, with `Lip` taken for the sup
//! distance on `T^d`.

use crate::error::{Error, Result};
use crate::indicator::{estimate_indicators, IndicatorEstimate, Schedule};
use crate::orbit::{HittingRecord, Translation};
use crate::sampling;
use crate::trig::{f64_up, TrigPoly};
use rand::RngCore;
use rug::Rational;
use serde::{Deserialize, Serialize};

/// Quadrature grid size (points in total).
pub const QUADRATURE_POINTS: u32 = 1 << 16;
/// Minimum number of entries above the error floor for a decay fit.
pub const MIN_FIT_ENTRIES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Trig { poly: TrigPoly },
    /// `max(0, 1 - dist(x, center) / width)` in the sup distance.
    Hat { center: Vec<f64>, width: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub shape: Shape,
    pub mean_removed: bool,
}

fn circle_dist(a: f64) -> f64 {
    let f = a - a.floor();
    f.min(1.0 - f)
}

impl Observable {
    pub fn trig(poly: TrigPoly) -> Observable {
        Observable {
            shape: Shape::Trig { poly },
            mean_removed: false,
        }
    }

    /// `cos(2 pi x)` on the circle.
    pub fn cos1() -> Observable {
        Observable::trig(TrigPoly::cosine(1, 0.0, vec![1], 1.0).expect("valid"))
    }

    pub fn hat(center: Vec<f64>, width: f64) -> Result<Observable> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Precondition("hat center must be a finite point".into()));
        }
        if !(width > 0.0 && width <= 0.5) {
            return Err(Error::Precondition(format!("hat width {width} must lie in (0, 1/2]")));
        }
        Ok(Observable {
            shape: Shape::Hat { center, width },
            mean_removed: false,
        })
    }

    pub fn centered(mut self) -> Observable {
        self.mean_removed = true;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Trig { poly } => poly.dim,
            Shape::Hat { center, .. } => center.len(),
        }
    }

    fn raw_mean(&self) -> f64 {
        match &self.shape {
            Shape::Trig { poly } => poly.mean(),
            Shape::Hat { width, .. } => {
                let d = self.dim() as i32;
                (2.0 * width).powi(d) / (d as f64 + 1.0)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        if self.mean_removed {
            0.0
        } else {
            self.raw_mean()
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let v = match &self.shape {
            Shape::Trig { poly } => poly.eval(x),
            Shape::Hat { center, width } => {
                let d = x.iter().zip(center).fold(0.0f64, |m, (a, b)| m.max(circle_dist(a - b)));
                (1.0 - d / width).max(0.0)
            }
        };
        if self.mean_removed {
            v - self.raw_mean()
        } else {
            v
        }
    }

    /// Certified bound for `sup |f|`.
    pub fn sup_bound(&self) -> f64 {
        let s = match &self.shape {
            Shape::Trig { poly } => poly.sup_bound(),
            Shape::Hat { .. } => 1.0,
        };
        if self.mean_removed {
            (s + self.raw_mean().abs()).next_up()
        } else {
            s
        }
    }

    /// Certified Lipschitz constant.
    pub fn lipschitz_constant(&self) -> f64 {
        match &self.shape {
            Shape::Trig { poly } => poly.lipschitz_bound(),
            Shape::Hat { width, .. } => f64_up(&Rational::from_f64(*width).expect("finite").recip()),
        }
    }

    /// `sup |f| + Lip(f)`.
    pub fn lipschitz_norm(&self) -> f64 {
        (self.sup_bound() + self.lipschitz_constant()).next_up()
    }

    fn constant(&self) -> bool {
        match &self.shape {
            Shape::Trig { poly } => poly.terms.iter().all(|t| t.freq.iter().all(|&k| k == 0)),
            Shape::Hat { .. } => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum System {
    Translation { translation: Translation },
    /// `x -> 2x mod 1` on the circle.
    Doubling,
}

impl System {
    pub fn dim(&self) -> usize {
        match self {
            System::Translation { translation } => translation.dim(),
            System::Doubling => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

/// `|int f o T^n g - int f int g|` with an error bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationValue {
    pub n: u64,
    pub value: f64,
    pub error_bound: f64,
    pub method: Method,
}

fn closed_form(system: &System, f: &TrigPoly, g: &TrigPoly, n: u64) -> Result<(f64, f64)> {
    let cf = f.fourier();
    let cg = g.fourier();
    let (mut re, mut mag) = (0.0f64, 0.0f64);
    for (k, &(a, b)) in &cf {
        if k.iter().all(|&v| v == 0) {
            continue;
        }
        match system {
            System::Translation { translation } => {
                let neg: Vec<i64> = k.iter().map(|v| -v).collect();
                let Some(&(c, d)) = cg.get(&neg) else { continue };
                // Phase 2 pi k.(n alpha), reduced exactly.
                let mut t = Rational::new();
                for (ki, a) in k.iter().zip(&translation.angles) {
                    t += Rational::from(a.frac() * n) * *ki;
                }
                let fl = t.clone().floor();
                let theta = 2.0 * std::f64::consts::PI * (t - fl).to_f64();
                let (s, co) = theta.sin_cos();
                // Re[(a + ib)(c + id)(cos + i sin)]
                let (pr, pi) = (a * c - b * d, a * d + b * c);
                re += pr * co - pi * s;
                mag += (a * a + b * b).sqrt() * (c * c + d * d).sqrt();
            }
            System::Doubling => {
                let Some(scale) = 1i64.checked_shl(n.min(63) as u32).filter(|_| n < 63) else {
                    continue;
                };
                let Some(m) = k[0].checked_mul(scale).and_then(|v| v.checked_neg()) else {
                    continue;
                };
                let Some(&(c, d)) = cg.get(&vec![m]) else { continue };
                re += a * c - b * d;
                mag += (a * a + b * b).sqrt() * (c * c + d * d).sqrt();
            }
        }
    }
    Ok((re.abs(), 8.0 * f64::EPSILON * mag))
}

fn quadrature(system: &System, f: &Observable, g: &Observable, n: u64) -> Result<(f64, f64)> {
    let d = system.dim();
    let m = (QUADRATURE_POINTS as f64).powf(1.0 / d as f64).round() as u64;
    let total = m.pow(d as u32);
    let shift: Vec<f64> = match system {
        System::Translation { translation } => translation
            .angles
            .iter()
            .map(|a| {
                let t = Rational::from(a.frac() * n);
                let fl = t.clone().floor();
                (t - fl).to_f64()
            })
            .collect(),
        System::Doubling => vec![],
    };
    let mut sum = 0.0f64;
    let mut x = vec![0.0; d];
    for j in 0..total {
        let mut r = j;
        for xi in x.iter_mut() {
            *xi = ((r % m) as f64 + 0.5) / m as f64;
            r /= m;
        }
        let y: Vec<f64> = match system {
            System::Translation { .. } => x.iter().zip(&shift).map(|(a, b)| (a + b).fract()).collect(),
            System::Doubling => {
                let v = if n >= 64 { 0.0 } else { (x[0] * (1u64 << n.min(63)) as f64).fract() };
                vec![v]
            }
        };
        sum += f.eval(&y) * g.eval(&x);
    }
    let value = (sum / total as f64 - f.mean() * g.mean()).abs();
    let lip_factor = match system {
        System::Translation { .. } => 1.0,
        System::Doubling => 2f64.powi(n.min(1023) as i32),
    };
    let f_norm = f.sup_bound() + f.lipschitz_constant() * lip_factor;
    let err = f_norm * g.lipschitz_norm() / m as f64;
    Ok((value, err))
}

pub fn correlation(system: &System, f: &Observable, g: &Observable, n: u64) -> Result<CorrelationValue> {
    if f.dim() != system.dim() || g.dim() != system.dim() {
        return Err(Error::Precondition(format!(
            "observables on T^{}/T^{} for a system on T^{}",
            f.dim(),
            g.dim(),
            system.dim()
        )));
    }
    if f.constant() || g.constant() {
        return Ok(CorrelationValue {
            n,
            value: 0.0,
            error_bound: 0.0,
            method: Method::ClosedForm,
        });
    }
    let ((value, error_bound), method) = match (&f.shape, &g.shape) {
        (Shape::Trig { poly: a }, Shape::Trig { poly: b }) => (closed_form(system, a, b, n)?, Method::ClosedForm),
        _ => (quadrature(system, f, g, n)?, Method::Quadrature),
    };
    Ok(CorrelationValue {
        n,
        value,
        error_bound,
        method,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub values: Vec<CorrelationValue>,
    pub quadrature: String,
}

impl CorrelationSeries {
    /// A series `f(n)` with a constant error floor.
    pub fn synthetic(f: impl Fn(u64) -> f64, ns: &[u64], floor: f64) -> CorrelationSeries {
        CorrelationSeries {
            values: ns
                .iter()
                .map(|&n| CorrelationValue {
                    n,
                    value: f(n),
                    error_bound: floor,
                    method: Method::ClosedForm,
                })
                .collect(),
            quadrature: format!("synthetic, floor {floor:e}"),
        }
    }
}

pub fn correlation_series(system: &System, f: &Observable, g: &Observable, ns: &[u64]) -> Result<CorrelationSeries> {
    let values = ns
        .iter()
        .map(|&n| correlation(system, f, g, n))
        .collect::<Result<Vec<_>>>()?;
    let quadrature = if values.iter().all(|v| v.method == Method::ClosedForm) {
        "closed form (Fourier pairing)".to_string()
    } else {
        format!("midpoint grid, {QUADRATURE_POINTS} points, Lipschitz error bound")
    };
    Ok(CorrelationSeries { values, quadrature })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Least-squares slope of `-ln value` against `ln n`; `None` with fewer
    /// than `MIN_FIT_ENTRIES` usable entries.
    pub p: Option<f64>,
    pub r_squared: Option<f64>,
    pub used: usize,
    pub censored: usize,
    /// Largest `-ln(floor) / ln n` over entries at or below their floor.
    pub p_at_least: Option<f64>,
}

pub fn decay_exponent_fit(series: &CorrelationSeries) -> Result<DecayFit> {
    let mut pts = Vec::new();
    let mut censored = 0;
    let mut bound: Option<f64> = None;
    for v in &series.values {
        if v.n == 0 {
            continue;
        }
        let ln_n = (v.n as f64).ln();
        if v.value > v.error_bound && v.value > 0.0 {
            pts.push((ln_n, -v.value.ln()));
        } else {
            censored += 1;
            if v.n >= 2 {
                let floor = v.error_bound.max(f64::MIN_POSITIVE);
                let b = -floor.ln() / ln_n;
                bound = Some(bound.map_or(b, |c: f64| c.max(b)));
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::Estimation(match bound {
            Some(b) => format!("every entry is below its error floor; p >= {b:.3}"),
            None => "no usable entries".into(),
        }));
    }
    let mut fit = DecayFit {
        p: None,
        r_squared: None,
        used: pts.len(),
        censored,
        p_at_least: bound,
    };
    if pts.len() >= MIN_FIT_ENTRIES {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        if sxx > 0.0 {
            let slope = sxy / sxx;
            fit.p = Some(slope);
            fit.r_squared = Some(if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 });
        }
    }
    Ok(fit)
}

/// Upper bound `1 + (2 d_up + 2) / (d_low p)` on the upper hitting indicator
/// normalized by `-ln mu(B_r)`; `+inf` when `p <= 0`.
pub fn theorem1_bound(d_low: f64, d_up: f64, p: f64) -> Result<f64> {
    if !(d_low > 0.0 && d_low.is_finite()) || !(d_up.is_finite() && d_up >= d_low) || p.is_nan() {
        return Err(Error::Precondition(format!(
            "need 0 < d_low <= d_up < inf and p a number, got ({d_low}, {d_up}, {p})"
        )));
    }
    if p <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 + (2.0 * d_up + 2.0) / (d_low * p))
}

/// Band `[d, d + (2d + 2)/p]` for the upper indicator of an absolutely
/// continuous measure of dimension `d`.
pub fn theorem_c_band(d: f64, p: f64) -> Result<(f64, f64)> {
    if !(d > 0.0 && d.is_finite()) || p.is_nan() {
        return Err(Error::Precondition(format!("need 0 < d < inf, got ({d}, {p})")));
    }
    if p <= 0.0 {
        return Ok((d, f64::INFINITY));
    }
    Ok((d, d + (2.0 * d + 2.0) / p))
}

/// Largest decay exponent compatible with upper indicator `big_r` in dimension `d`.
pub fn corollary_bound(d: f64, big_r: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) || big_r.is_nan() {
        return Err(Error::Precondition(format!("need 0 < d < inf, got ({d}, {big_r})")));
    }
    if big_r <= d {
        return Err(Error::Inconsistent(format!(
            "indicator {big_r} <= dimension {d} contradicts the lower bound by the dimension"
        )));
    }
    if big_r.is_infinite() {
        return Ok(0.0);
    }
    Ok((2.0 * d + 2.0) / (big_r - d))
}

/// Binary expansion of a random point of the circle, so that doubling-map
/// orbits are exact: `T^n x = 0.b_n b_(n+1) ...`.
#[derive(Clone, Debug)]
pub struct DoublingOrbit {
    words: Vec<u64>,
}

impl DoublingOrbit {
    /// Point with `bits` random binary digits from the `BITS` stream.
    pub fn sample(seed: u64, index: u64, bits: u64) -> DoublingOrbit {
        let mut rng = sampling::rng(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15), sampling::streams::BITS);
        let words = (0..bits.div_ceil(64) + 1).map(|_| rng.next_u64()).collect();
        DoublingOrbit { words }
    }

    pub fn len_bits(&self) -> u64 {
        (self.words.len() as u64 - 1) * 64
    }

    /// `T^n x` to 53 bits.
    pub fn point(&self, n: u64) -> f64 {
        let (w, b) = ((n / 64) as usize, (n % 64) as u32);
        let hi = self.words[w] << b;
        let lo = if b == 0 { 0 } else { self.words[w + 1] >> (64 - b) };
        ((hi | lo) >> 11) as f64 / (1u64 << 53) as f64
    }

    /// First `n` in `1..=horizon` with `|T^n x - x0| < r` on the circle.
    pub fn hit(&self, x0: f64, r: f64, horizon: u64) -> Result<Option<u64>> {
        if horizon > self.len_bits() {
            return Err(Error::Resource(format!(
                "horizon {horizon} exceeds the {} sampled bits",
                self.len_bits()
            )));
        }
        Ok((1..=horizon).find(|&n| circle_dist(self.point(n) - x0) < r))
    }
}

/// Hitting indicators of the doubling map for a sampled point and target,
/// with horizon `ceil(20 / (2 r))` per radius.
pub fn doubling_indicators(
    orbit: &DoublingOrbit,
    x0: f64,
    schedule: &Schedule,
    tail_window: usize,
) -> Result<IndicatorEstimate> {
    estimate_indicators(
        |r: &Rational| {
            let rf = r.to_f64();
            if !(rf > 0.0 && rf < 0.5) {
                return Err(Error::DegenerateBall(format!("{rf}")));
            }
            let horizon = ((10.0 / rf).ceil() as u64).min(orbit.len_bits());
            Ok(HittingRecord {
                radius: r.clone(),
                tau: orbit.hit(x0, rf, horizon)?,
                horizon,
            })
        },
        schedule,
        tail_window,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Angle, ContinuedFraction};

    #[test]
    fn rotation_cosine_closed_form() {
        let a = Angle::truncation(ContinuedFraction::golden(30));
        let alpha = a.frac().to_f64();
        let sys = System::Translation {
            translation: Translation::circle(a),
        };
        for n in [1u64, 5, 13, 100] {
            let v = correlation(&sys, &Observable::cos1(), &Observable::cos1(), n).unwrap();
            let expect = (2.0 * std::f64::consts::PI * n as f64 * alpha).cos().abs() / 2.0;
            assert!((v.value - expect).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn doubling_cosine_is_exactly_zero() {
        for n in 1..80 {
            let v = correlation(&System::Doubling, &Observable::cos1(), &Observable::cos1(), n).unwrap();
            assert_eq!(v.value, 0.0);
        }
        let v = correlation(&System::Doubling, &Observable::cos1(), &Observable::cos1(), 0).unwrap();
        assert_eq!(v.value, 0.5);
    }

    #[test]
    fn constant_observable_gives_zero() {
        let c = Observable::trig(TrigPoly::constant(1, 3.0));
        let h = Observable::hat(vec![0.3], 0.2).unwrap();
        let v = correlation(&System::Doubling, &h, &c, 4).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn hat_quadrature_mean() {
        let h = Observable::hat(vec![0.3, 0.6], 0.25).unwrap();
        assert!((h.mean() - 0.25 / 3.0).abs() < 1e-15);
        assert_eq!(h.lipschitz_constant(), 4.0);
        assert_eq!(h.lipschitz_norm(), 5.0f64.next_up());
    }

    #[test]
    fn formula_values() {
        assert_eq!(theorem_c_band(1.0, 2.0).unwrap(), (1.0, 3.0));
        assert_eq!(theorem1_bound(1.0, 1.0, 2.0).unwrap(), 3.0);
        assert_eq!(theorem1_bound(2.0, 2.0, 4.0).unwrap(), 1.75);
        assert_eq!(theorem1_bound(1.0, 1.0, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(corollary_bound(2.0, 4.0).unwrap(), 3.0);
        assert_eq!(corollary_bound(3.0, f64::INFINITY).unwrap(), 0.0);
        assert!(matches!(corollary_bound(2.0, 2.0), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn doubling_orbit_shifts_bits() {
        let o = DoublingOrbit::sample(1, 0, 256);
        let x = o.point(0);
        let y = o.point(1);
        assert!(((2.0 * x).fract() - y).abs() < 1e-15);
    }
}
