//! Characteristic curves of the Hill-type muscle: active force-length,
//! force-velocity, passive force-length and tendon force-length.
//!
//! Each curve is a chain of quintic Bézier segments built with the corner
//! construction used by the Millard muscle family: every segment joins two
//! points with prescribed slopes, and its inner control points sit on the two
//! tangent lines. The joints are C² (the curvature vanishes at both ends of a
//! segment) and the curve is extended linearly outside its knots.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Control polygon of one quintic Bézier segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuinticSegment {
    pub x: [f64; 6],
    pub y: [f64; 6],
}

const BINOM5: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];

/// Bernstein coefficients of degree 5 to power-basis coefficients.
fn power_basis(p: &[f64; 6]) -> [f64; 6] {
    let mut c = [0.0; 6];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (i, pi) in p.iter().enumerate().take(k + 1) {
            let binom_ki = binom(k, i);
            let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binom_ki * pi;
        }
        *ck = BINOM5[k] * s;
    }
    c
}

fn binom(n: usize, k: usize) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

#[inline]
fn horner(c: &[f64; 6], u: f64) -> f64 {
    ((((c[5] * u + c[4]) * u + c[3]) * u + c[2]) * u + c[1]) * u + c[0]
}

#[inline]
fn horner_d(c: &[f64; 6], u: f64) -> f64 {
    (((5.0 * c[5] * u + 4.0 * c[4]) * u + 3.0 * c[3]) * u + 2.0 * c[2]) * u + c[1]
}

impl QuinticSegment {
    /// Segment from `(x0, y0)` with slope `dydx0` to `(x1, y1)` with slope
    /// `dydx1`; `curviness` in (0, 1] pulls the inner control points toward the
    /// intersection of the two tangents.
    pub fn corner(
        x0: f64,
        y0: f64,
        dydx0: f64,
        x1: f64,
        y1: f64,
        dydx1: f64,
        curviness: f64,
    ) -> Result<Self> {
        if !(x1 > x0) {
            return Err(SimError::Curve(format!(
                "segment end {x1} must lie right of its start {x0}"
            )));
        }
        let (xc, yc) = if (dydx0 - dydx1).abs() < 1e-12 {
            (0.5 * (x0 + x1), 0.5 * (y0 + y1))
        } else {
            let xc = (y1 - y0 - x1 * dydx1 + x0 * dydx0) / (dydx0 - dydx1);
            // Evaluate on the flatter tangent so a zero end slope stays exact.
            let yc = if dydx0.abs() <= dydx1.abs() {
                y0 + (xc - x0) * dydx0
            } else {
                y1 + (xc - x1) * dydx1
            };
            (xc, yc)
        };
        if !(xc > x0 && xc < x1) {
            return Err(SimError::Curve(format!(
                "tangent intersection x = {xc:.6} falls outside ({x0}, {x1})"
            )));
        }
        let p1x = x0 + curviness * (xc - x0);
        let p1y = y0 + curviness * (yc - y0);
        let p3x = x1 + curviness * (xc - x1);
        let p3y = y1 + curviness * (yc - y1);
        Ok(Self {
            x: [x0, p1x, p1x, p3x, p3x, x1],
            y: [y0, p1y, p1y, p3y, p3y, y1],
        })
    }
}

#[derive(Clone, Debug)]
struct Compiled {
    x0: f64,
    x1: f64,
    cx: [f64; 6],
    cy: [f64; 6],
}

impl Compiled {
    fn new(s: &QuinticSegment) -> Self {
        Self {
            x0: s.x[0],
            x1: s.x[5],
            cx: power_basis(&s.x),
            cy: power_basis(&s.y),
        }
    }

    /// Solve x(u) = x on [0, 1]; x(u) is monotone for corner segments.
    fn param_at(&self, x: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut u = ((x - self.x0) / (self.x1 - self.x0)).clamp(0.0, 1.0);
        let tol = 1e-14 * (self.x1 - self.x0).max(1.0);
        for _ in 0..60 {
            let f = horner(&self.cx, u) - x;
            if f.abs() <= tol {
                return u;
            }
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let d = horner_d(&self.cx, u);
            let mut next = if d > 0.0 { u - f / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - u).abs() < 1e-16 {
                return next;
            }
            u = next;
        }
        u
    }
}

/// A C²-continuous chain of quintic Bézier segments with linear extension
/// beyond the first and last knots.
#[derive(Clone, Debug)]
pub struct BezierCurve {
    segments: Vec<QuinticSegment>,
    compiled: Vec<Compiled>,
    left_slope: f64,
    right_slope: f64,
}

impl PartialEq for BezierCurve {
    fn eq(&self, other: &Self) -> bool {
        self.segments == other.segments
    }
}

impl Serialize for BezierCurve {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.segments.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BezierCurve {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let segments = Vec::<QuinticSegment>::deserialize(d)?;
        BezierCurve::new(segments).map_err(serde::de::Error::custom)
    }
}

impl BezierCurve {
    pub fn new(segments: Vec<QuinticSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(SimError::Curve("curve needs at least one segment".into()));
        }
        for w in segments.windows(2) {
            if (w[0].x[5] - w[1].x[0]).abs() > 1e-12 || (w[0].y[5] - w[1].y[0]).abs() > 1e-12 {
                return Err(SimError::Curve("segments are not joined end to start".into()));
            }
        }
        for s in &segments {
            if s.x.windows(2).any(|p| p[1] < p[0]) {
                return Err(SimError::Curve("control x values must be non-decreasing".into()));
            }
        }
        let first = &segments[0];
        let last = &segments[segments.len() - 1];
        let left_slope = (first.y[1] - first.y[0]) / (first.x[1] - first.x[0]);
        let right_slope = (last.y[5] - last.y[4]) / (last.x[5] - last.x[4]);
        let compiled = segments.iter().map(Compiled::new).collect();
        Ok(Self {
            segments,
            compiled,
            left_slope,
            right_slope,
        })
    }

    pub fn segments(&self) -> &[QuinticSegment] {
        &self.segments
    }

    pub fn x_min(&self) -> f64 {
        self.compiled[0].x0
    }

    pub fn x_max(&self) -> f64 {
        self.compiled[self.compiled.len() - 1].x1
    }

    /// Value and slope at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let first = &self.compiled[0];
        if x <= first.x0 {
            let y0 = first.cy[0];
            return (y0 + self.left_slope * (x - first.x0), self.left_slope);
        }
        let last = &self.compiled[self.compiled.len() - 1];
        if x >= last.x1 {
            let y1 = horner(&last.cy, 1.0);
            return (y1 + self.right_slope * (x - last.x1), self.right_slope);
        }
        let seg = self
            .compiled
            .iter()
            .find(|s| x <= s.x1)
            .unwrap_or(last);
        let u = seg.param_at(x);
        let y = horner(&seg.cy, u);
        let dx = horner_d(&seg.cx, u);
        let dy = horner_d(&seg.cy, u);
        let slope = if dx > 1e-300 { dy / dx } else { 0.0 };
        (y, slope)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// Inverse of a curve whose y is strictly increasing inside its knots.
    /// Returns `None` outside the open range of the Bézier part.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let y_lo = self.compiled[0].cy[0];
        let y_hi = horner(&self.compiled[self.compiled.len() - 1].cy, 1.0);
        if !(y > y_lo && y < y_hi) {
            return None;
        }
        let seg = self
            .compiled
            .iter()
            .find(|s| y <= horner(&s.cy, 1.0))?;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if horner(&seg.cy, mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(horner(&seg.cx, 0.5 * (lo + hi)))
    }
}

fn scale_curviness(c: f64) -> f64 {
    0.1 + 0.8 * c
}

/// Shape constants for the four curves. The defaults are the published
/// defaults of the Millard 2012 muscle family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveShapes {
    /// Active force-length: shortest active fiber length.
    pub fl_min_active: f64,
    /// Active force-length: knee between steep and shallow ascending limbs.
    pub fl_transition: f64,
    /// Active force-length: longest active fiber length.
    pub fl_max_active: f64,
    /// Active force-length: slope of the shallow ascending limb.
    pub fl_shallow_slope: f64,
    /// Active force-length: value outside the active range.
    pub fl_min_value: f64,
    /// Eccentric plateau of the force-velocity curve.
    pub fv_max_eccentric: f64,
    pub fv_slope_concentric_end: f64,
    pub fv_slope_near_concentric: f64,
    pub fv_slope_isometric: f64,
    pub fv_slope_eccentric_end: f64,
    pub fv_slope_near_eccentric: f64,
    pub fv_curviness_concentric: f64,
    pub fv_curviness_eccentric: f64,
    /// Fiber strain at which the passive force starts.
    pub fpe_strain_zero: f64,
    /// Fiber strain at which the passive force reaches one.
    pub fpe_strain_iso: f64,
    pub fpe_stiffness_low: f64,
    pub fpe_curviness: f64,
    /// Tendon strain at one normalized force.
    pub ft_strain_iso: f64,
    /// Normalized stiffness of the linear tendon region.
    pub ft_stiffness_iso: f64,
    /// Normalized force at the end of the toe region.
    pub ft_force_toe: f64,
    pub ft_curviness: f64,
}

impl Default for CurveShapes {
    fn default() -> Self {
        Self {
            fl_min_active: 0.4441,
            fl_transition: 0.73,
            fl_max_active: 1.8123,
            fl_shallow_slope: 0.8616,
            fl_min_value: 0.0,
            fv_max_eccentric: 1.4,
            fv_slope_concentric_end: 0.0,
            fv_slope_near_concentric: 0.25,
            fv_slope_isometric: 5.0,
            fv_slope_eccentric_end: 0.0,
            fv_slope_near_eccentric: 0.15,
            fv_curviness_concentric: 0.6,
            fv_curviness_eccentric: 0.9,
            fpe_strain_zero: 0.0,
            fpe_strain_iso: 0.7,
            fpe_stiffness_low: 0.2,
            fpe_curviness: 0.75,
            ft_strain_iso: 0.049,
            ft_stiffness_iso: 1.375 / 0.049,
            ft_force_toe: 2.0 / 3.0,
            ft_curviness: 0.5,
        }
    }
}

/// The four characteristic curves shared by all muscles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    /// Active force-length f^L(l̃^M).
    pub active_fl: BezierCurve,
    /// Force-velocity f^V(ṽ^M), ṽ^M in units of the maximum contraction velocity.
    pub force_velocity: BezierCurve,
    /// Passive fiber force-length f^PE(l̃^M).
    pub passive_fl: BezierCurve,
    /// Tendon force-length f^T(l̃^T).
    pub tendon_fl: BezierCurve,
}

impl Default for CurveSet {
    fn default() -> Self {
        CurveSet::from_shapes(&CurveShapes::default()).expect("default curve shapes are valid")
    }
}

impl CurveSet {
    pub fn from_shapes(s: &CurveShapes) -> Result<Self> {
        Ok(Self {
            active_fl: active_force_length(s)?,
            force_velocity: force_velocity(s)?,
            passive_fl: passive_force_length(s)?,
            tendon_fl: tendon_force_length(s)?,
        })
    }

    /// Open interval of f^V values over which the force-velocity curve can be
    /// inverted analytically (the Bézier part between ṽ = -1 and ṽ = 1).
    pub fn fv_inverse_domain(&self) -> (f64, f64) {
        (
            self.force_velocity.value(self.force_velocity.x_min()),
            self.force_velocity.value(self.force_velocity.x_max()),
        )
    }
}

fn active_force_length(s: &CurveShapes) -> Result<BezierCurve> {
    let c = scale_curviness(1.0);
    let x0 = s.fl_min_active;
    let x1 = s.fl_transition;
    let x2 = 1.0;
    let x3 = s.fl_max_active;
    let ylow = s.fl_min_value;
    let slope = s.fl_shallow_slope;

    let x_delta = 0.05 * x2;
    let xs = x2 - x_delta;

    let y0 = 0.0;
    let y1 = 1.0 - slope * (xs - x1);
    let dydx01 = 1.25 * (y1 - y0) / (x1 - x0);
    let x01 = x0 + 0.5 * (x1 - x0);
    let y01 = y0 + 0.5 * (y1 - y0);

    let x1s = x1 + 0.5 * (xs - x1);
    let y1s = y1 + 0.5 * (1.0 - y1);

    let y2 = 1.0;
    let y3 = 0.0;
    let x23 = (x2 + x_delta) + 0.5 * (x3 - (x2 + x_delta));
    let y23 = y2 + 0.5 * (y3 - y2);
    let dydx23 = (y3 - y2) / ((x3 - x_delta) - (x2 + x_delta));

    BezierCurve::new(vec![
        QuinticSegment::corner(x0, ylow, 0.0, x01, y01, dydx01, c)?,
        QuinticSegment::corner(x01, y01, dydx01, x1s, y1s, slope, c)?,
        QuinticSegment::corner(x1s, y1s, slope, x2, y2, 0.0, c)?,
        QuinticSegment::corner(x2, y2, 0.0, x23, y23, dydx23, c)?,
        QuinticSegment::corner(x23, y23, dydx23, x3, ylow, 0.0, c)?,
    ])
}

fn force_velocity(s: &CurveShapes) -> Result<BezierCurve> {
    let cc = scale_curviness(s.fv_curviness_concentric);
    let ce = scale_curviness(s.fv_curviness_eccentric);

    let (xc, yc) = (-1.0, 0.0);
    let x_near_c = -0.9;
    let y_near_c = yc
        + 0.5 * s.fv_slope_near_concentric * (x_near_c - xc)
        + 0.5 * s.fv_slope_concentric_end * (x_near_c - xc);
    let (xe, ye) = (1.0, s.fv_max_eccentric);
    let x_near_e = 0.9;
    let y_near_e = ye
        + 0.5 * s.fv_slope_near_eccentric * (x_near_e - xe)
        + 0.5 * s.fv_slope_eccentric_end * (x_near_e - xe);

    BezierCurve::new(vec![
        QuinticSegment::corner(
            xc,
            yc,
            s.fv_slope_concentric_end,
            x_near_c,
            y_near_c,
            s.fv_slope_near_concentric,
            cc,
        )?,
        QuinticSegment::corner(
            x_near_c,
            y_near_c,
            s.fv_slope_near_concentric,
            0.0,
            1.0,
            s.fv_slope_isometric,
            cc,
        )?,
        QuinticSegment::corner(
            0.0,
            1.0,
            s.fv_slope_isometric,
            x_near_e,
            y_near_e,
            s.fv_slope_near_eccentric,
            ce,
        )?,
        QuinticSegment::corner(
            x_near_e,
            y_near_e,
            s.fv_slope_near_eccentric,
            xe,
            ye,
            s.fv_slope_eccentric_end,
            ce,
        )?,
    ])
}

fn passive_force_length(s: &CurveShapes) -> Result<BezierCurve> {
    let c = scale_curviness(s.fpe_curviness);
    let x_zero = 1.0 + s.fpe_strain_zero;
    let x_iso = 1.0 + s.fpe_strain_iso;
    let k_iso = 2.0 / s.fpe_strain_iso;
    let delta = (0.1 / k_iso).min(0.1 * (x_iso - x_zero));
    let x_low = x_zero + delta;
    let x_foot = x_zero + 0.5 * (x_low - x_zero);
    let y_low = s.fpe_stiffness_low * (x_low - x_foot);
    BezierCurve::new(vec![
        QuinticSegment::corner(x_zero, 0.0, 0.0, x_low, y_low, s.fpe_stiffness_low, c)?,
        QuinticSegment::corner(x_low, y_low, s.fpe_stiffness_low, x_iso, 1.0, k_iso, c)?,
    ])
}

fn tendon_force_length(s: &CurveShapes) -> Result<BezierCurve> {
    let c = scale_curviness(s.ft_curviness);
    let x_iso = 1.0 + s.ft_strain_iso;
    let x_toe = x_iso - (1.0 - s.ft_force_toe) / s.ft_stiffness_iso;
    let toe = QuinticSegment::corner(1.0, 0.0, 0.0, x_toe, s.ft_force_toe, s.ft_stiffness_iso, c)?;
    // Straight continuation to one normalized force so the last knot sits at
    // the nominal strain.
    let lin = QuinticSegment {
        x: std::array::from_fn(|i| x_toe + (x_iso - x_toe) * i as f64 / 5.0),
        y: std::array::from_fn(|i| s.ft_force_toe + (1.0 - s.ft_force_toe) * i as f64 / 5.0),
    };
    BezierCurve::new(vec![toe, lin])
}
