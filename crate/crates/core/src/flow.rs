//! Translation flows on `T^2` and `T^3`, positive reparametrizations,
//! time-1 maps and Poincaré sections.
//!
//! A reparametrized flow `x' = phi(x) alpha` keeps the straight orbits of the
//! translation flow: `x(t) = x + s(t) alpha` with `s' = phi(x + s alpha)`.
//! Ball entries and section crossings are located on the line by an exact
//! interval sweep and converted to time by integrating `s` with classical RK4,
//! refining the event by bisection.

use crate::angle::{Angle, AngleSource};
use crate::error::{Error, Result};
use crate::orbit::Translation;
use crate::trig::{f64_up, TrigPoly};
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};

/// Bisection tolerance for event times.
pub const EVENT_TOL: f64 = 1e-10;
/// Largest number of integration steps (or sweep iterations) per call.
pub const MAX_STEPS: u64 = 200_000_000;

fn wrap(v: f64) -> f64 {
    let f = v - v.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

fn circle_dist(a: f64) -> f64 {
    let f = a - a.floor();
    f.min(1.0 - f)
}

fn in_ball(p: &[f64], x0: &[f64], r: f64) -> bool {
    p.iter().zip(x0).all(|(a, b)| circle_dist(a - b) < r)
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r < 0.5 {
        Ok(())
    } else {
        Err(Error::DegenerateBall(format!("{r}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationFlow {
    pub direction: Vec<f64>,
    /// Angles `alpha, alpha', ...` when the direction is `(1, alpha, alpha', ...)`
    /// built from exact data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<Angle>>,
    pub provenance: String,
}

impl TranslationFlow {
    pub fn new(direction: Vec<f64>) -> Result<TranslationFlow> {
        if !(2..=3).contains(&direction.len()) {
            return Err(Error::Precondition(format!(
                "flows live on T^2 or T^3, got dimension {}",
                direction.len()
            )));
        }
        if direction.iter().any(|v| !v.is_finite()) || direction.iter().all(|&v| v == 0.0) {
            return Err(Error::Precondition("direction must be finite and nonzero".into()));
        }
        Ok(TranslationFlow {
            direction,
            angles: None,
            provenance: "float direction; rational independence not tracked".into(),
        })
    }

    /// The flow with direction `(1, alpha, alpha', ...)`.
    pub fn from_angles(angles: &[Angle]) -> Result<TranslationFlow> {
        let mut direction = vec![1.0];
        direction.extend(angles.iter().map(|a| a.frac().to_f64()));
        let mut flow = TranslationFlow::new(direction)?;
        let kinds: Vec<String> = angles
            .iter()
            .map(|a| match a.source() {
                AngleSource::Rational(q) => format!("rational {q}"),
                AngleSource::Exact(cf) => format!("exact continued fraction of depth {}", cf.depth()),
                AngleSource::Truncation(cf) => format!("truncation of depth {}", cf.depth()),
            })
            .collect();
        flow.provenance = format!("(1, angles): {}", kinds.join(", "));
        flow.angles = Some(angles.to_vec());
        Ok(flow)
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    /// `x + s * direction`, reduced to `[0, 1)^d`.
    pub fn position(&self, x: &[f64], s: f64) -> Vec<f64> {
        x.iter().zip(&self.direction).map(|(a, b)| wrap(a + s * b)).collect()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "point of dimension {} for a flow on T^{}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// A speed `phi` with a certified constant `c`: `1/c <= phi <= c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reparametrization {
    pub speed: TrigPoly,
    pub c: f64,
}

impl Reparametrization {
    pub fn new(speed: TrigPoly, c: f64) -> Result<Reparametrization> {
        if !(c.is_finite() && c >= 1.0) {
            return Err(Error::Precondition(format!("constant {c} must be finite and at least 1")));
        }
        let cq = Rational::from_f64(c).expect("finite");
        let lo = speed.lower_bound();
        if lo <= 0 || Rational::from(&lo * &cq) < 1 || speed.upper_bound() > cq {
            return Err(Error::Precondition(format!(
                "speed bounds [{}, {}] not certified inside [1/{c}, {c}]",
                lo.to_f64(),
                speed.upper_bound().to_f64()
            )));
        }
        Ok(Reparametrization { speed, c })
    }

    /// Reparametrization with the smallest constant the bounds certify.
    pub fn certified(speed: TrigPoly) -> Result<Reparametrization> {
        let lo = speed.lower_bound();
        if lo <= 0 {
            return Err(Error::Precondition("speed is not certifiably positive".into()));
        }
        let hi = speed.upper_bound();
        let inv = Rational::from(lo.recip_ref());
        let c = f64_up(if inv > hi { &inv } else { &hi }).max(1.0);
        Reparametrization::new(speed, c)
    }

    pub fn identity(dim: usize) -> Reparametrization {
        Reparametrization {
            speed: TrigPoly::constant(dim, 1.0),
            c: 1.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.speed.eval(x)
    }
}

/// Admissible parameters of one coordinate: `||x_i + s a_i - x0_i|| < r`.
struct Lane {
    speed: f64,
    offset: f64,
    always: bool,
}

impl Lane {
    fn new(a: f64, xi: f64, x0i: f64, r: f64) -> Result<Lane> {
        let delta = xi - x0i;
        if a == 0.0 {
            if circle_dist(delta) < r {
                Ok(Lane {
                    speed: 0.0,
                    offset: 0.0,
                    always: true,
                })
            } else {
                Err(Error::NeverHits(format!(
                    "frozen coordinate at distance {} >= {r}",
                    circle_dist(delta)
                )))
            }
        } else if a > 0.0 {
            Ok(Lane {
                speed: a,
                offset: delta,
                always: false,
            })
        } else {
            Ok(Lane {
                speed: -a,
                offset: -delta,
                always: false,
            })
        }
    }

    /// Earliest open interval whose right end exceeds `s`.
    fn next(&self, s: f64, r: f64) -> (f64, f64) {
        if self.always {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let mut k = (s * self.speed + self.offset - r).floor() + 1.0;
        loop {
            let hi = (k + r - self.offset) / self.speed;
            if hi > s {
                return ((k - r - self.offset) / self.speed, hi);
            }
            k += 1.0;
        }
    }
}

/// Infimum of the parameters `s > 0` (within `s_max`) with `x + s a` in the
/// open sup-ball `B(x0, r)`.
fn line_hit(direction: &[f64], x: &[f64], x0: &[f64], r: f64, s_max: f64) -> Result<Option<f64>> {
    let lanes = direction
        .iter()
        .zip(x.iter().zip(x0))
        .map(|(&a, (&xi, &x0i))| Lane::new(a, xi, x0i, r))
        .collect::<Result<Vec<_>>>()?;
    let mut s = 0.0f64;
    let mut iterations = 0u64;
    while s <= s_max {
        let (mut lo, mut hi) = (s, f64::INFINITY);
        for lane in &lanes {
            let (l, h) = lane.next(s, r);
            lo = lo.max(l);
            hi = hi.min(h);
        }
        if lo < hi {
            return Ok((lo <= s_max).then_some(lo));
        }
        s = hi;
        iterations += 1;
        if iterations > MAX_STEPS {
            return Err(Error::Resource(format!("interval sweep exceeded {MAX_STEPS} iterations")));
        }
    }
    Ok(None)
}

/// Continuous hitting time; `time` is `None` when censored at `t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowHit {
    pub time: Option<f64>,
    pub t_max: f64,
}

fn check_t_max(t_max: f64) -> Result<()> {
    if t_max.is_finite() && t_max > 0.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("t_max {t_max} must be finite and positive")))
    }
}

/// First entrance of the translation flow into the open sup-ball `B(x0, r)`.
pub fn flow_hit(flow: &TranslationFlow, x: &[f64], x0: &[f64], r: f64, t_max: f64) -> Result<FlowHit> {
    check_radius(r)?;
    check_t_max(t_max)?;
    flow.check_point(x)?;
    flow.check_point(x0)?;
    Ok(FlowHit {
        time: line_hit(&flow.direction, x, x0, r, t_max)?,
        t_max,
    })
}

/// Integration of `s' = phi(x + s alpha)` along one orbit.
struct Line<'a> {
    flow: &'a TranslationFlow,
    rep: &'a Reparametrization,
    x: &'a [f64],
}

impl Line<'_> {
    fn g(&self, s: f64) -> f64 {
        self.rep.eval(&self.flow.position(self.x, s))
    }

    fn rk4(&self, s: f64, h: f64) -> f64 {
        let k1 = self.g(s);
        let k2 = self.g(s + 0.5 * h * k1);
        let k3 = self.g(s + 0.5 * h * k2);
        let k4 = self.g(s + h * k3);
        s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    /// Time at which `s` reaches `target`, or `None` past `t_max`.
    fn time_to(&self, target: f64, h: f64, t_max: f64) -> Result<Option<f64>> {
        if target <= 0.0 {
            return Ok(Some(0.0));
        }
        let mut s = 0.0;
        let mut k = 0u64;
        loop {
            let t = k as f64 * h;
            if t > t_max {
                return Ok(None);
            }
            let s1 = self.rk4(s, h);
            if s1 >= target {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while (hi - lo) * h > EVENT_TOL {
                    let mid = 0.5 * (lo + hi);
                    if self.rk4(s, mid * h) >= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let t = t + hi * h;
                return Ok((t <= t_max).then_some(t));
            }
            s = s1;
            k += 1;
            if k > MAX_STEPS {
                return Err(Error::Resource(format!("integration exceeded {MAX_STEPS} steps")));
            }
        }
    }

    /// `s(n)` for `n = 1..=n_max`, calling `visit` until it returns true.
    fn integer_times(&self, n_max: u64, h: f64, mut visit: impl FnMut(u64, f64) -> bool) -> Result<()> {
        let per = (1.0 / h).ceil() as u64;
        if per.saturating_mul(n_max) > MAX_STEPS {
            return Err(Error::Resource(format!(
                "{n_max} unit times at {per} steps each exceed {MAX_STEPS} steps"
            )));
        }
        let hh = 1.0 / per as f64;
        let mut s = 0.0;
        for n in 1..=n_max {
            for _ in 0..per {
                s = self.rk4(s, hh);
            }
            if visit(n, s) {
                break;
            }
        }
        Ok(())
    }
}

/// Fixed RK4 step for a flow, radius and time budget.
///
/// With `L = Lip(phi) * max |alpha_i|`, the step keeps `L h <= 1/50` and the
/// accumulated local error model `c L^4 h^4 t_max / 120` below `r / 100`.
pub fn step_size(flow: &TranslationFlow, rep: &Reparametrization, r: f64, t_max: f64) -> f64 {
    let amax = flow.direction.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let l = rep.speed.lipschitz_bound() * amax;
    let stability = 0.02 / (1.0 + l);
    if l == 0.0 {
        return stability;
    }
    let accuracy = (1.2 * r / (rep.c * l.powi(4) * t_max.max(1.0))).powf(0.25);
    stability.min(accuracy)
}

fn check_budget(t_max: f64, h: f64) -> Result<()> {
    if t_max / h > MAX_STEPS as f64 {
        return Err(Error::Resource(format!(
            "t_max {t_max} needs {:.3e} steps of size {h:.3e}, budget {MAX_STEPS}",
            t_max / h
        )));
    }
    Ok(())
}

/// Continuous hitting time of a reparametrized flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReparamHit {
    pub time: Option<f64>,
    /// Entry parameter `s` on the straight orbit.
    pub parameter: Option<f64>,
    pub step: f64,
    /// Difference between the step-`h` and step-`h/2` event times.
    pub error_estimate: f64,
    pub t_max: f64,
}

pub fn reparam_flow_hit(
    flow: &TranslationFlow,
    rep: &Reparametrization,
    x: &[f64],
    x0: &[f64],
    r: f64,
    t_max: f64,
) -> Result<ReparamHit> {
    check_radius(r)?;
    check_t_max(t_max)?;
    flow.check_point(x)?;
    flow.check_point(x0)?;
    check_dim(flow, rep)?;
    let h = step_size(flow, rep, r, t_max);
    check_budget(t_max, h)?;
    let mut out = ReparamHit {
        time: None,
        parameter: None,
        step: h,
        error_estimate: 0.0,
        t_max,
    };
    let Some(s) = line_hit(&flow.direction, x, x0, r, rep.c * t_max)? else {
        return Ok(out);
    };
    out.parameter = Some(s);
    let line = Line { flow, rep, x };
    let coarse = line.time_to(s, h, t_max * (1.0 + 1e-9))?;
    let fine = line.time_to(s, 0.5 * h, t_max)?;
    if let (Some(a), Some(b)) = (coarse, fine) {
        out.error_estimate = (a - b).abs();
    }
    out.time = fine;
    Ok(out)
}

fn check_dim(flow: &TranslationFlow, rep: &Reparametrization) -> Result<()> {
    if rep.speed.dim != flow.dim() {
        return Err(Error::Precondition(format!(
            "speed on T^{} for a flow on T^{}",
            rep.speed.dim,
            flow.dim()
        )));
    }
    Ok(())
}

/// `Phi_1(x)`.
pub fn time1_map(flow: &TranslationFlow, rep: &Reparametrization, x: &[f64]) -> Result<Vec<f64>> {
    flow.check_point(x)?;
    check_dim(flow, rep)?;
    let h = step_size(flow, rep, 0.01, 1.0);
    let line = Line { flow, rep, x };
    let mut s1 = 0.0;
    line.integer_times(1, h, |_, s| {
        s1 = s;
        true
    })?;
    Ok(flow.position(x, s1))
}

/// Time-1 map of the unreparametrized flow built from angles, exactly:
/// translation by `(1, alpha, ...) = (0, alpha, ...)` mod 1.
pub fn exact_time1_map(flow: &TranslationFlow, x: &[Rational]) -> Result<Vec<Rational>> {
    let angles = exact_angles(flow, x)?;
    let mut out = vec![frac(x[0].clone())];
    for (a, xi) in angles.iter().zip(&x[1..]) {
        out.push(frac(Rational::from(xi + a.frac())));
    }
    Ok(out)
}

fn frac(q: Rational) -> Rational {
    let f = q.clone().floor();
    q - f
}

fn exact_angles<'a>(flow: &'a TranslationFlow, x: &[Rational]) -> Result<&'a [Angle]> {
    let angles = flow
        .angles
        .as_deref()
        .ok_or_else(|| Error::Precondition("flow carries no exact angles".into()))?;
    if x.len() != flow.dim() {
        return Err(Error::Precondition(format!(
            "point of dimension {} for a flow on T^{}",
            x.len(),
            flow.dim()
        )));
    }
    Ok(angles)
}

/// First `n` in `1..=n_max` with `Phi_1^n(x)` in the open ball `B(x0, r)`.
pub fn time1_hit(
    flow: &TranslationFlow,
    rep: &Reparametrization,
    x: &[f64],
    x0: &[f64],
    r: f64,
    n_max: u64,
) -> Result<Option<u64>> {
    check_radius(r)?;
    flow.check_point(x)?;
    flow.check_point(x0)?;
    check_dim(flow, rep)?;
    let h = step_size(flow, rep, r, n_max as f64);
    let line = Line { flow, rep, x };
    let mut found = None;
    line.integer_times(n_max, h, |n, s| {
        if in_ball(&flow.position(x, s), x0, r) {
            found = Some(n);
            true
        } else {
            false
        }
    })?;
    Ok(found)
}

/// First return of an orbit to the section `{x_1 = c}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionReturn {
    pub point: Vec<f64>,
    /// Crossing parameter on the straight orbit.
    pub parameter: f64,
    pub return_time: f64,
}

/// Parameter of the first crossing of `{x_1 = c}` at positive time.
fn crossing(flow: &TranslationFlow, c: f64, x1: f64) -> Result<f64> {
    let a = flow.direction[0];
    if a == 0.0 {
        return Err(Error::Resource("orbit never crosses the section".into()));
    }
    let gap = if a > 0.0 { wrap(c - x1) } else { wrap(x1 - c) };
    let gap = if gap == 0.0 { 1.0 } else { gap };
    Ok(gap / a.abs())
}

pub fn poincare_section(flow: &TranslationFlow, rep: &Reparametrization, c: f64, x: &[f64]) -> Result<SectionReturn> {
    flow.check_point(x)?;
    check_dim(flow, rep)?;
    let c = wrap(c);
    let s = crossing(flow, c, x[0])?;
    let t_max = rep.c * s * 2.0 + 1.0;
    let h = step_size(flow, rep, 0.01, t_max);
    check_budget(t_max, h)?;
    let line = Line { flow, rep, x };
    let t = line
        .time_to(s, h, t_max)?
        .ok_or_else(|| Error::Resource("no crossing within the integration budget".into()))?;
    let mut point = flow.position(x, s);
    point[0] = c;
    Ok(SectionReturn {
        point,
        parameter: s,
        return_time: t,
    })
}

/// Section map of the unreparametrized flow built from angles, exactly.
/// Returns the point on `{x_1 = x[0]}` reached first and the return time.
pub fn exact_section_map(flow: &TranslationFlow, x: &[Rational]) -> Result<(Vec<Rational>, Rational)> {
    let angles = exact_angles(flow, x)?;
    // The first direction component is exactly 1, so the return parameter is 1.
    let s = Rational::from(1);
    let mut out = vec![frac(x[0].clone())];
    for (a, xi) in angles.iter().zip(&x[1..]) {
        out.push(frac(Rational::from(a.frac() * &s) + xi));
    }
    Ok((out, s))
}

/// The section map of the unreparametrized flow as a translation of `T^(d-1)`.
pub fn section_translation(flow: &TranslationFlow) -> Result<Translation> {
    let angles = flow
        .angles
        .as_ref()
        .ok_or_else(|| Error::Precondition("flow carries no exact angles".into()))?;
    Ok(Translation { angles: angles.clone() })
}

/// Flow and time-1 hitting times against the section's discrete hitting time
/// at radius `k r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionComparison {
    pub radius: f64,
    pub k: f64,
    pub flow_time: Option<f64>,
    pub time1_steps: Option<u64>,
    pub section_steps: Option<u64>,
    /// Measured `flow_time / section_steps`.
    pub flow_ratio: Option<f64>,
    /// Measured `time1_steps / section_steps`.
    pub time1_ratio: Option<f64>,
}

/// Compares hitting times of `y` (a point on the section `{x_1 = y_1}`).
#[allow(clippy::too_many_arguments)]
pub fn section_comparison(
    flow: &TranslationFlow,
    rep: &Reparametrization,
    x: &[f64],
    y: &[f64],
    r: f64,
    k: f64,
    t_max: f64,
    n_max: u64,
) -> Result<SectionComparison> {
    check_radius(r)?;
    check_radius(k * r)?;
    let flow_time = reparam_flow_hit(flow, rep, x, y, r, t_max)?.time;
    let time1_steps = time1_hit(flow, rep, x, y, r, n_max)?;
    let a1 = flow.direction[0];
    let s0 = crossing(flow, y[0], x[0])?;
    let start = flow.position(x, s0);
    let step = 1.0 / a1.abs();
    let mut section_steps = None;
    for n in 1..=n_max {
        let p: Vec<f64> = (1..flow.dim())
            .map(|i| start[i] + n as f64 * step * flow.direction[i])
            .collect();
        if in_ball(&p, &y[1..], k * r) {
            section_steps = Some(n);
            break;
        }
    }
    let ratio = |a: Option<f64>| match (a, section_steps) {
        (Some(a), Some(n)) => Some(a / n as f64),
        _ => None,
    };
    Ok(SectionComparison {
        radius: r,
        k,
        flow_time,
        time1_steps,
        section_steps,
        flow_ratio: ratio(flow_time),
        time1_ratio: ratio(time1_steps.map(|n| n as f64)),
    })
}

/// Weighted volume of a box before and after the time-1 map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureCheck {
    pub samples: usize,
    pub before: f64,
    pub after: f64,
    pub relative_error: f64,
}

/// Checks that `Phi_1` preserves the measure with density proportional to
/// `1/phi` on the box `[lo, hi)`, integrating over an `R_d` low-discrepancy
/// point set.
pub fn measure_preservation(
    flow: &TranslationFlow,
    rep: &Reparametrization,
    lo: &[f64],
    hi: &[f64],
    samples: usize,
) -> Result<MeasureCheck> {
    check_dim(flow, rep)?;
    let d = flow.dim();
    if lo.len() != d || hi.len() != d || lo.iter().zip(hi).any(|(a, b)| !(0.0 <= *a && a < b && *b <= 1.0)) {
        return Err(Error::Precondition("box must satisfy 0 <= lo < hi <= 1".into()));
    }
    if samples == 0 {
        return Err(Error::Precondition("at least one sample".into()));
    }
    // phi_d is the positive root of x^(d+1) = x + 1.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let g: Vec<f64> = (1..=d).map(|i| phi.powi(-(i as i32))).collect();
    let inside = |p: &[f64]| p.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v < b);
    let h = step_size(flow, rep, 0.01, 1.0);
    let (mut total, mut before, mut after) = (0.0, 0.0, 0.0);
    for j in 0..samples {
        let u: Vec<f64> = g.iter().map(|gi| wrap(0.5 + (j as f64 + 1.0) * gi)).collect();
        let w = 1.0 / rep.eval(&u);
        total += w;
        if inside(&u) {
            before += w;
        }
        let line = Line { flow, rep, x: &u };
        let mut s1 = 0.0;
        line.integer_times(1, h, |_, s| {
            s1 = s;
            true
        })?;
        if inside(&flow.position(&u, s1)) {
            after += w;
        }
    }
    let (before, after) = (before / total, after / total);
    Ok(MeasureCheck {
        samples,
        before,
        after,
        relative_error: (after - before).abs() / before,
    })
}

/// Sampled trajectory `(t, x(t))` for `t = 0, dt, ..., t_end`.
pub fn trajectory(
    flow: &TranslationFlow,
    rep: &Reparametrization,
    x: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    flow.check_point(x)?;
    check_dim(flow, rep)?;
    check_t_max(t_end)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition("dt must be positive".into()));
    }
    let h = step_size(flow, rep, 0.01, t_end).min(dt);
    check_budget(t_end, h)?;
    let per = (dt / h).ceil() as u64;
    let hh = dt / per as f64;
    let line = Line { flow, rep, x };
    let mut out = vec![(0.0, flow.position(x, 0.0))];
    let mut s = 0.0;
    let samples = (t_end / dt).floor() as u64;
    for n in 1..=samples {
        for _ in 0..per {
            s = line.rk4(s, hh);
        }
        out.push((n as f64 * dt, flow.position(x, s)));
    }
    Ok(out)
}

/// The unreparametrized section map as an exact translation applied `n` times.
pub fn section_orbit_point(flow: &TranslationFlow, y: &[Rational], n: u64) -> Result<Vec<Rational>> {
    section_translation(flow)?.apply(y, &Integer::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_entry_time() {
        let f = TranslationFlow::new(vec![1.0, 1.0]).unwrap();
        let h = flow_hit(&f, &[0.0, 0.0], &[0.5, 0.5], 0.1, 10.0).unwrap();
        assert!((h.time.unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn frozen_coordinate_never_hits() {
        let f = TranslationFlow::new(vec![1.0, 0.0]).unwrap();
        let e = flow_hit(&f, &[0.0, 0.3], &[0.5, 0.0], 0.1, 10.0).unwrap_err();
        assert!(matches!(e, Error::NeverHits(_)));
    }

    #[test]
    fn certified_constant_of_cosine_speed() {
        let p = TrigPoly::cosine(2, 1.0, vec![1, 0], 0.5).unwrap();
        assert_eq!(Reparametrization::certified(p.clone()).unwrap().c, 2.0);
        assert!(Reparametrization::new(p.clone(), 3.0).is_ok());
        assert!(Reparametrization::new(p, 1.5).is_err());
        let neg = TrigPoly::cosine(1, 0.4, vec![1], 0.5).unwrap();
        assert!(Reparametrization::certified(neg).is_err());
    }

    #[test]
    fn constant_speed_two_halves_times() {
        let f = TranslationFlow::new(vec![1.0, 0.618]).unwrap();
        let one = Reparametrization::identity(2);
        let two = Reparametrization::new(TrigPoly::constant(2, 2.0), 2.0).unwrap();
        let (x, y) = ([0.1, 0.2], [0.7, 0.9]);
        let a = reparam_flow_hit(&f, &one, &x, &y, 0.05, 500.0).unwrap().time.unwrap();
        let b = reparam_flow_hit(&f, &two, &x, &y, 0.05, 500.0).unwrap().time.unwrap();
        let exact = flow_hit(&f, &x, &y, 0.05, 500.0).unwrap().time.unwrap();
        assert!((a - exact).abs() < 1e-8);
        assert!((2.0 * b - exact).abs() < 1e-8);
        let p = time1_map(&f, &two, &x).unwrap();
        assert!((p[0] - 0.1).abs() < 1e-12 && (p[1] - wrap(0.2 + 2.0 * 0.618)).abs() < 1e-12);
    }
}
