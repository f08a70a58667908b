//! Model parameters, arc geometry and the per-arc Gibbs integrals.
//!
//! For a field `x` in the plane, arc `k` carries the weight `exp<e_w, x>` on
//! `S_k = [2pi(k-1)/q, 2pi k/q)`. Everything downstream is built from three
//! integrals of that weight: the partition value `Z_k(x)`, the normalized
//! first moment `m_k(x)` and the covariance of `(cos w, sin w)`. The first
//! moment is the gradient of `log Z_k` and the covariance its Hessian.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::consistency::SolverOptions;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

pub const DEFAULT_NODES_PER_ARC: usize = 32;

/// A vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// Order parameter: a point of the closed unit disk.
pub type Magnetization = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    /// Unit vector at angle `theta`.
    pub fn unit(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2 { x: c, y: s }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Vec2::unit(theta) * r
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotate(self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Vec2 {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Inverse temperature, number of arcs and quadrature resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub q: usize,
    pub nodes_per_arc: usize,
}

impl ModelParams {
    pub fn new(beta: f64, q: usize) -> Result<Self> {
        Self::with_nodes(beta, q, DEFAULT_NODES_PER_ARC)
    }

    pub fn with_nodes(beta: f64, q: usize, nodes_per_arc: usize) -> Result<Self> {
        let p = ModelParams {
            beta,
            q,
            nodes_per_arc,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::invalid(format!("beta must be positive and finite, got {}", self.beta)));
        }
        if self.q < 3 {
            return Err(Error::invalid(format!("q must be at least 3, got {}", self.q)));
        }
        if self.nodes_per_arc < 8 {
            return Err(Error::invalid(format!(
                "nodes_per_arc must be at least 8, got {}",
                self.nodes_per_arc
            )));
        }
        Ok(())
    }

    /// Arc width `2pi/q`.
    pub fn arc_width(&self) -> f64 {
        2.0 * PI / self.q as f64
    }
}

/// One of the `q` equal arcs, `k` in `1..=q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Arc {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Entries `[[a, b], [b, c]]` of the covariance of `(cos w, sin w)` on one arc.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArcCovariance {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ArcCovariance {
    pub fn trace(&self) -> f64 {
        self.a + self.c
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.b * v.x + self.c * v.y)
    }

    /// `R C R^T` for the rotation `R` by `theta`.
    pub fn rotate(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        // columns of R C R^T
        let a = c * c * self.a - 2.0 * c * s * self.b + s * s * self.c;
        let cc = s * s * self.a + 2.0 * c * s * self.b + c * c * self.c;
        let b = c * s * (self.a - self.c) + (c * c - s * s) * self.b;
        ArcCovariance { a, b, c: cc }
    }
}

/// All three per-arc integrals at one field value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArcMoments {
    pub z: f64,
    pub mean: Vec2,
    pub cov: ArcCovariance,
}

/// Quadrature nodes for every arc, stored flat (`arc * per_arc + node`).
#[derive(Debug, Clone)]
struct NodeTable {
    per_arc: usize,
    weight: Vec<f64>,
    // offsets from the arc midpoint direction; keeps the covariance free of
    // cancellation on narrow arcs
    dx: Vec<f64>,
    dy: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl NodeTable {
    fn build(q: usize, nodes: usize, panels: usize) -> Self {
        let (gx, gw) = gauss_legendre(nodes);
        let width = 2.0 * PI / q as f64;
        let pw = width / panels as f64;
        let per_arc = nodes * panels;
        let mut t = NodeTable {
            per_arc,
            weight: Vec::with_capacity(q * per_arc),
            dx: Vec::with_capacity(q * per_arc),
            dy: Vec::with_capacity(q * per_arc),
            cos: Vec::with_capacity(q * per_arc),
            sin: Vec::with_capacity(q * per_arc),
        };
        for arc in 0..q {
            let lo = width * arc as f64;
            let mid = Vec2::unit(lo + 0.5 * width);
            for p in 0..panels {
                let plo = lo + pw * p as f64;
                for (x, w) in gx.iter().zip(&gw) {
                    let om = plo + 0.5 * pw * (x + 1.0);
                    let (s, c) = om.sin_cos();
                    t.weight.push(0.5 * pw * w);
                    t.cos.push(c);
                    t.sin.push(s);
                    t.dx.push(c - mid.x);
                    t.dy.push(s - mid.y);
                }
            }
        }
        t
    }
}

/// Panels per arc needed to keep Gauss–Legendre at full precision when the
/// weight `exp<e_w, x>` has `|x| = r`: the peak has width `~1/sqrt(r)` and the
/// tails decay at rate up to `r`.
fn panels_for(width: f64, r: f64) -> usize {
    let r = r.max(1.0);
    ((width * (r.sqrt() / 10.0).max(r / 24.0)).ceil() as usize).max(1)
}

/// Precomputed quadrature for a [`ModelParams`].
#[derive(Debug, Clone)]
pub struct Model {
    params: ModelParams,
    panels: usize,
    table: NodeTable,
    boundary: Vec<Vec2>,
    mids: Vec<Vec2>,
    mean_at_zero: Vec<Vec2>,
    solver: SolverOptions,
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let q = params.q;
        let width = params.arc_width();
        let panels = panels_for(width, params.beta);
        let table = NodeTable::build(q, params.nodes_per_arc, panels);
        let boundary = (1..=q).map(|k| Vec2::unit(width * k as f64)).collect();
        let mids = (0..q).map(|i| Vec2::unit(width * (i as f64 + 0.5))).collect();
        // m_k(0) = (q/pi) sin(pi/q) e_{mid}
        let r0 = (q as f64 / PI) * (PI / q as f64).sin();
        let mean_at_zero = (0..q).map(|i| Vec2::polar(r0, width * (i as f64 + 0.5))).collect();
        Ok(Model {
            params,
            panels,
            table,
            boundary,
            mids,
            mean_at_zero,
            solver: SolverOptions::default(),
        })
    }

    /// Shorthand for `Model::new(ModelParams::new(beta, q)?)`.
    pub fn with(beta: f64, q: usize) -> Result<Self> {
        Model::new(ModelParams::new(beta, q)?)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn beta(&self) -> f64 {
        self.params.beta
    }

    pub fn q(&self) -> usize {
        self.params.q
    }

    /// The same quadrature at a different inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Ok(Model::new(ModelParams { beta, ..self.params })?.with_solver(self.solver))
    }

    /// Replaces the options used whenever the magnetization is solved for this model.
    pub fn with_solver(mut self, options: SolverOptions) -> Self {
        self.solver = options;
        self
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver
    }

    pub fn arc(&self, k: usize) -> Result<Arc> {
        self.check_index(k)?;
        let w = self.params.arc_width();
        Ok(Arc {
            index: k,
            lo: w * (k - 1) as f64,
            hi: w * k as f64,
        })
    }

    /// Unit vector at the right endpoint `2pi k/q` of arc `k` (0-based `i = k-1`).
    pub(crate) fn boundary_dir(&self, i: usize) -> Vec2 {
        self.boundary[i]
    }

    /// `m_k(0)` for 0-based arc `i`, from the closed form.
    pub(crate) fn mean_at_zero(&self, i: usize) -> Vec2 {
        self.mean_at_zero[i]
    }

    /// `Z_k(x)`.
    pub fn arc_partition_value(&self, k: usize, x: Vec2) -> Result<f64> {
        Ok(self.arc_moments(k, x)?.z)
    }

    /// `m_k(x)`, the mean of `e_w` under the arc-`k` weight.
    pub fn arc_mean(&self, k: usize, x: Vec2) -> Result<Vec2> {
        Ok(self.arc_moments(k, x)?.mean)
    }

    pub fn arc_covariance(&self, k: usize, x: Vec2) -> Result<ArcCovariance> {
        Ok(self.arc_moments(k, x)?.cov)
    }

    pub fn arc_moments(&self, k: usize, x: Vec2) -> Result<ArcMoments> {
        self.check_index(k)?;
        if !x.is_finite() {
            return Err(Error::invalid("field vector must be finite"));
        }
        let needed = panels_for(self.params.arc_width(), x.norm());
        if needed > self.panels {
            let t = NodeTable::build(self.params.q, self.params.nodes_per_arc, needed);
            Ok(moments_on(&t, k - 1, self.mids[k - 1], x))
        } else {
            Ok(moments_on(&self.table, k - 1, self.mids[k - 1], x))
        }
    }

    /// `sum_k Z_k(x)`, the integral of `exp<e_w, x>` over the whole circle.
    pub fn total_partition(&self, x: Vec2) -> f64 {
        let mut z = vec![0.0; self.q()];
        self.partitions_into(x, &mut z);
        z.iter().sum()
    }

    /// Moments of all arcs at once. `x` is assumed finite with `|x|` of the
    /// order of beta.
    pub(crate) fn moments_into(&self, x: Vec2, out: &mut [ArcMoments]) {
        for (i, m) in out.iter_mut().enumerate() {
            *m = moments_on(&self.table, i, self.mids[i], x);
        }
    }

    /// Partition values of all arcs.
    pub(crate) fn partitions_into(&self, x: Vec2, out: &mut [f64]) {
        let t = &self.table;
        for (i, z) in out.iter_mut().enumerate() {
            let r = i * t.per_arc..(i + 1) * t.per_arc;
            let mut acc = 0.0;
            for j in r {
                acc += t.weight[j] * (x.x * t.cos[j] + x.y * t.sin[j]).exp();
            }
            *z = acc;
        }
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.q() {
            return Err(Error::invalid(format!("arc index {k} outside 1..={}", self.q())));
        }
        Ok(())
    }
}

fn moments_on(t: &NodeTable, i: usize, mid: Vec2, x: Vec2) -> ArcMoments {
    let r = i * t.per_arc..(i + 1) * t.per_arc;
    let (mut s0, mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for j in r {
        let f = t.weight[j] * (x.x * t.cos[j] + x.y * t.sin[j]).exp();
        let (dx, dy) = (t.dx[j], t.dy[j]);
        s0 += f;
        sx += f * dx;
        sy += f * dy;
        sxx += f * dx * dx;
        sxy += f * dx * dy;
        syy += f * dy * dy;
    }
    let (mx, my) = (sx / s0, sy / s0);
    ArcMoments {
        z: s0,
        mean: mid + Vec2::new(mx, my),
        cov: ArcCovariance {
            a: (sxx / s0 - mx * mx).max(0.0),
            b: sxy / s0 - mx * my,
            c: (syy / s0 - my * my).max(0.0),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(beta: f64, q: usize) -> Model {
        Model::with(beta, q).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 10).is_err());
        assert!(ModelParams::new(f64::NAN, 10).is_err());
        assert!(ModelParams::new(1.0, 2).is_err());
        assert!(ModelParams::with_nodes(1.0, 10, 4).is_err());
    }

    #[test]
    fn arcs_partition_the_circle() {
        let m = model(1.0, 7);
        let mut prev = 0.0;
        for k in 1..=7 {
            let a = m.arc(k).unwrap();
            assert_eq!(a.lo, prev);
            assert!((a.width() - 2.0 * PI / 7.0).abs() < 1e-15);
            prev = a.hi;
        }
        assert!((prev - 2.0 * PI).abs() < 1e-14);
        assert!(m.arc(0).is_err());
        assert!(m.arc(8).is_err());
    }

    #[test]
    fn partition_at_zero_field_is_arc_length() {
        let m = model(3.0, 10);
        for k in 1..=10 {
            let z = m.arc_partition_value(k, Vec2::ZERO).unwrap();
            assert!((z - 2.0 * PI / 10.0).abs() < 1e-15, "k={k}: {z}");
        }
    }

    #[test]
    fn partition_self_convergence() {
        let m = model(3.0, 10);
        let fine = Model::new(ModelParams::with_nodes(3.0, 10, 64).unwrap()).unwrap();
        let x = Vec2::new(3.0, 0.0);
        let a = m.arc_partition_value(1, x).unwrap();
        let b = fine.arc_partition_value(1, x).unwrap();
        assert!(((a - b) / b).abs() < 1e-12);
        // independent value from adaptive quadrature
        assert!(((a - 10.548050017329958) / a).abs() < 1e-12);
    }

    #[test]
    fn partition_accurate_for_large_fields() {
        for q in [3, 4, 10] {
            let m = model(1.0, q);
            let fine = Model::new(ModelParams::with_nodes(1.0, q, 128).unwrap()).unwrap();
            for r in [50.0, 200.0] {
                for th in [0.0, 0.4, 1.3] {
                    let x = Vec2::polar(r, th);
                    for k in 1..=q {
                        let a = m.arc_partition_value(k, x).unwrap();
                        let b = fine.arc_partition_value(k, x).unwrap();
                        assert!(((a - b) / b).abs() < 1e-12, "q={q} r={r} k={k}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn additivity_over_arcs() {
        // full-circle integral of exp(r cos(w - t)) is 2 pi I0(r); use the
        // periodic trapezoid rule as an independent route
        let m = model(3.0, 10);
        let x = Vec2::new(1.7, -2.2);
        let n = 400;
        let trap: f64 = (0..n)
            .map(|j| {
                let w = 2.0 * PI * j as f64 / n as f64;
                (x.dot(Vec2::unit(w))).exp()
            })
            .sum::<f64>()
            * 2.0
            * PI
            / n as f64;
        let total = m.total_partition(x);
        assert!(((total - trap) / trap).abs() < 1e-12);
    }

    #[test]
    fn mean_at_zero_matches_closed_form() {
        let m = model(3.0, 10);
        let mean = m.arc_mean(1, Vec2::ZERO).unwrap();
        let expected = Vec2::polar((10.0 / PI) * (PI / 10.0).sin(), PI / 10.0);
        assert!((mean - expected).norm() < 1e-14);
        assert!((mean.norm() - 0.983631643083466).abs() < 1e-12);
        for i in 0..10 {
            let k = i + 1;
            assert!((m.arc_mean(k, Vec2::ZERO).unwrap() - m.mean_at_zero(i)).norm() < 1e-14);
        }
    }

    #[test]
    fn mean_stays_in_arc_cone() {
        let m = model(3.0, 10);
        for x in [Vec2::new(50.0, 0.0), Vec2::new(-30.0, 4.0), Vec2::new(0.0, 2.0)] {
            for k in 1..=10 {
                let a = m.arc(k).unwrap();
                let mean = m.arc_mean(k, x).unwrap();
                assert!(mean.norm() < 1.0);
                let ang = mean.angle().rem_euclid(2.0 * PI);
                assert!(ang >= a.lo - 1e-12 && ang <= a.hi + 1e-12, "k={k} x={x:?} ang={ang}");
            }
        }
    }

    #[test]
    fn rotation_equivariance() {
        let m = model(3.0, 10);
        let th = 2.0 * PI / 10.0;
        let x = Vec2::new(2.0, 1.0);
        for k in 2..=10 {
            let rotated = m.arc_moments(k, x.rotate(th)).unwrap();
            let base = m.arc_moments(k - 1, x).unwrap();
            assert!((rotated.z - base.z).abs() < 1e-13 * base.z);
            assert!((rotated.mean - base.mean.rotate(th)).norm() < 1e-13);
            let c = base.cov.rotate(th);
            assert!((rotated.cov.a - c.a).abs() < 1e-13);
            assert!((rotated.cov.b - c.b).abs() < 1e-13);
            assert!((rotated.cov.c - c.c).abs() < 1e-13);
        }
    }

    #[test]
    fn covariance_trace_identity_at_zero() {
        let m = model(3.0, 10);
        let c = m.arc_covariance(1, Vec2::ZERO).unwrap();
        let mean = m.arc_mean(1, Vec2::ZERO).unwrap();
        assert!((c.trace() - (1.0 - mean.dot(mean))).abs() < 1e-14);
        let c1 = m.arc_covariance(1, Vec2::ZERO).unwrap();
        let c4 = m.arc_covariance(4, Vec2::ZERO).unwrap();
        let r = c1.rotate(3.0 * 2.0 * PI / 10.0);
        assert!((r.a - c4.a).abs() < 1e-14 && (r.b - c4.b).abs() < 1e-14 && (r.c - c4.c).abs() < 1e-14);
    }

    #[test]
    fn gradient_and_hessian_by_finite_differences() {
        let m = model(3.0, 10);
        let x = Vec2::new(2.0, 1.0);
        let k = 3;
        let h = 1e-5;
        let logz = |x: Vec2| m.arc_partition_value(k, x).unwrap().ln();
        let grad = Vec2::new(
            (logz(x + Vec2::new(h, 0.0)) - logz(x - Vec2::new(h, 0.0))) / (2.0 * h),
            (logz(x + Vec2::new(0.0, h)) - logz(x - Vec2::new(0.0, h))) / (2.0 * h),
        );
        let mean = m.arc_mean(k, x).unwrap();
        assert!((grad - mean).norm() < 1e-6);

        let dmx = (m.arc_mean(k, x + Vec2::new(h, 0.0)).unwrap() - m.arc_mean(k, x - Vec2::new(h, 0.0)).unwrap()) * (0.5 / h);
        let dmy = (m.arc_mean(k, x + Vec2::new(0.0, h)).unwrap() - m.arc_mean(k, x - Vec2::new(0.0, h)).unwrap()) * (0.5 / h);
        let c = m.arc_covariance(k, x).unwrap();
        assert!((dmx.x - c.a).abs() < 1e-6);
        assert!((dmx.y - c.b).abs() < 1e-6);
        assert!((dmy.x - c.b).abs() < 1e-6);
        assert!((dmy.y - c.c).abs() < 1e-6);
    }

    #[test]
    fn covariance_is_psd() {
        let m = model(3.0, 10);
        for x in [Vec2::ZERO, Vec2::new(40.0, -10.0), Vec2::new(-3.0, 0.5)] {
            for k in 1..=10 {
                let c = m.arc_covariance(k, x).unwrap();
                assert!(c.a >= 0.0 && c.c >= 0.0);
                assert!(c.b * c.b <= c.a * c.c * (1.0 + 1e-10) + 1e-300);
            }
        }
    }

    #[test]
    fn non_finite_field_is_rejected() {
        let m = model(3.0, 10);
        assert!(m.arc_partition_value(1, Vec2::new(f64::NAN, 0.0)).is_err());
        assert!(m.arc_mean(1, Vec2::new(0.0, f64::INFINITY)).is_err());
        assert!(m.arc_covariance(11, Vec2::ZERO).is_err());
    }
}
