//! Simple transversal factors: the disk `|x| ≤ R` with metric `c(x)·e` and
//! the interval `[0, ℓ]`; geodesics and Levi-Civita transport by RK4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed RK4 step in arc length.
pub const GEODESIC_STEP: f64 = 1e-3;

/// Conformal factor `c` of the metric `c·e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConformalFactor {
    Flat,
    /// `c = (1 + κ|x|²)^{-2}`, a spherical cap of curvature `4κ`.
    Cap { kappa: f64 },
}

impl ConformalFactor {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        match *self {
            ConformalFactor::Flat => 1.0,
            ConformalFactor::Cap { kappa } => (1.0 + kappa * (x[0] * x[0] + x[1] * x[1])).powi(-2),
        }
    }

    /// Gradient of `φ = ½ log c`.
    pub fn grad_phi(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            ConformalFactor::Flat => [0.0, 0.0],
            ConformalFactor::Cap { kappa } => {
                let s = -2.0 * kappa / (1.0 + kappa * (x[0] * x[0] + x[1] * x[1]));
                [s * x[0], s * x[1]]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimpleSurface {
    /// 1 for the interval, 2 for the disk.
    pub dim: usize,
    /// Disk radius or interval length.
    pub size: f64,
    pub factor: ConformalFactor,
}

/// One sample of a geodesic: position, velocity, arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathSample {
    pub x: [f64; 2],
    pub v: [f64; 2],
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicPath {
    pub start: PathSample,
    pub samples: Vec<PathSample>,
    pub length: f64,
    factor: ConformalFactor,
}

type State = [f64; 4];

fn geodesic_rhs(factor: &ConformalFactor, y: &State) -> State {
    let g = factor.grad_phi([y[0], y[1]]);
    let (vx, vy) = (y[2], y[3]);
    let vg = vx * g[0] + vy * g[1];
    let vv = vx * vx + vy * vy;
    [vx, vy, -2.0 * vg * vx + vv * g[0], -2.0 * vg * vy + vv * g[1]]
}

fn rk4<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], dt: f64) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], s: f64| -> [f64; N] { std::array::from_fn(|k| a[k] + s * b[k]) };
    let k1 = f(y);
    let k2 = f(&add(y, &k1, dt / 2.0));
    let k3 = f(&add(y, &k2, dt / 2.0));
    let k4 = f(&add(y, &k3, dt));
    std::array::from_fn(|k| y[k] + dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]))
}

/// Christoffel contraction `Γ(a, b)` for `c·e`, with `φ = ½ log c`.
fn christoffel(g: [f64; 2], a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let ag = a[0] * g[0] + a[1] * g[1];
    let bg = b[0] * g[0] + b[1] * g[1];
    let ab = a[0] * b[0] + a[1] * b[1];
    [a[0] * bg + b[0] * ag - ab * g[0], a[1] * bg + b[1] * ag - ab * g[1]]
}

impl SimpleSurface {
    pub fn disk(radius: f64, factor: ConformalFactor) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!("disk radius must be positive, got {radius}")));
        }
        if let ConformalFactor::Cap { kappa } = factor {
            if !(0.0..=0.5).contains(&kappa) {
                return Err(Error::InvalidArgument(format!("cap parameter {kappa} outside [0, 0.5]")));
            }
        }
        Ok(Self { dim: 2, size: radius, factor })
    }

    pub fn interval(length: f64) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidArgument(format!("interval length must be positive, got {length}")));
        }
        Ok(Self { dim: 1, size: length, factor: ConformalFactor::Flat })
    }

    pub fn conformal(&self, x: [f64; 2]) -> f64 {
        self.factor.value(x)
    }

    pub fn norm_g(&self, x: [f64; 2], v: [f64; 2]) -> f64 {
        (self.conformal(x) * (v[0] * v[0] + v[1] * v[1])).sqrt()
    }

    fn boundary_fn(&self, x: [f64; 2]) -> f64 {
        match self.dim {
            1 => x[0] * (x[0] - self.size),
            _ => x[0] * x[0] + x[1] * x[1] - self.size * self.size,
        }
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.boundary_fn(x) <= 1e-12
    }

    /// Outer unit normal (Euclidean) at a boundary point.
    pub fn outer_normal(&self, x: [f64; 2]) -> [f64; 2] {
        match self.dim {
            1 => [if x[0] <= self.size / 2.0 { -1.0 } else { 1.0 }, 0.0],
            _ => {
                let r = x[0].hypot(x[1]);
                [x[0] / r, x[1] / r]
            }
        }
    }

    /// Unit-speed inward vector at boundary angle `alpha` from the inward normal.
    pub fn inward(&self, x: [f64; 2], alpha: f64) -> [f64; 2] {
        let n = self.outer_normal(x);
        let (c, s) = (alpha.cos(), alpha.sin());
        let d = [-n[0] * c + n[1] * s, -n[1] * c - n[0] * s];
        let scale = 1.0 / self.conformal(x).sqrt();
        [d[0] * scale, d[1] * scale]
    }

    /// Boundary point at polar angle `phi` (disk) or endpoint `phi < π` ↦ 0 (interval).
    pub fn boundary_point(&self, phi: f64) -> [f64; 2] {
        match self.dim {
            1 => [if phi < std::f64::consts::PI { 0.0 } else { self.size }, 0.0],
            _ => [self.size * phi.cos(), self.size * phi.sin()],
        }
    }

    /// Geodesic started at `(x, v)` with `|v|_g = 1`, followed until it leaves
    /// the surface. The exit is located by bisection on the boundary function.
    pub fn geodesic_trace(&self, x: [f64; 2], v: [f64; 2]) -> Result<GeodesicPath> {
        let speed = self.norm_g(x, v);
        if (speed - 1.0).abs() > 1e-10 {
            return Err(Error::NonUnitVector(speed));
        }
        if self.boundary_fn(x) > 1e-10 {
            return Err(Error::InvalidArgument(format!("start point {x:?} outside the surface")));
        }
        let on_boundary = self.boundary_fn(x).abs() <= 1e-10;
        if on_boundary {
            let n = self.outer_normal(x);
            if n[0] * v[0] + n[1] * v[1] >= 0.0 {
                return Err(Error::InvalidArgument("boundary start needs an inward direction".into()));
            }
        }
        let start = PathSample { x, v, t: 0.0 };
        if self.dim == 1 {
            let length = if v[0] > 0.0 { self.size - x[0] } else { x[0] };
            let n = (length / GEODESIC_STEP).ceil().max(1.0) as usize;
            let samples = (0..=n)
                .map(|k| {
                    let t = length * k as f64 / n as f64;
                    PathSample { x: [x[0] + t * v[0], 0.0], v, t }
                })
                .collect();
            return Ok(GeodesicPath { start, samples, length, factor: self.factor });
        }
        let f = |y: &State| geodesic_rhs(&self.factor, y);
        let max_len = 100.0 * self.size;
        let mut y: State = [x[0], x[1], v[0], v[1]];
        let mut t = 0.0;
        let mut samples = vec![start];
        loop {
            let next = rk4(f, &y, GEODESIC_STEP);
            if self.boundary_fn([next[0], next[1]]) >= 0.0 {
                let (mut lo, mut hi) = (0.0, GEODESIC_STEP);
                while hi - lo > 1e-14 {
                    let mid = 0.5 * (lo + hi);
                    let p = rk4(f, &y, mid);
                    if self.boundary_fn([p[0], p[1]]) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let tau = 0.5 * (lo + hi);
                let p = rk4(f, &y, tau);
                samples.push(PathSample { x: [p[0], p[1]], v: [p[2], p[3]], t: t + tau });
                return Ok(GeodesicPath { start, samples, length: t + tau, factor: self.factor });
            }
            y = next;
            t += GEODESIC_STEP;
            samples.push(PathSample { x: [y[0], y[1]], v: [y[2], y[3]], t });
            if t > max_len {
                return Err(Error::TrappedGeodesic(t));
            }
        }
    }

    /// Levi-Civita parallel transport of `w` along `path`, integrated jointly
    /// with the geodesic equation.
    pub fn parallel_transport(&self, path: &GeodesicPath, w: [f64; 2]) -> [f64; 2] {
        self.transport_to(path, w, path.length)
    }

    /// Transport of `w` from the start of `path` to arc length `t_end`.
    pub fn transport_to(&self, path: &GeodesicPath, w: [f64; 2], t_end: f64) -> [f64; 2] {
        if self.dim == 1 || self.factor == ConformalFactor::Flat {
            return w;
        }
        let (_, _, out) = self.flow(path.start.x, path.start.v, w, t_end);
        out
    }

    /// Geodesic flow for time `time` from `(x, v)` (any speed), carrying a
    /// parallel vector `w`. Returns the end point, velocity and transported `w`.
    pub fn flow(&self, x: [f64; 2], v: [f64; 2], w: [f64; 2], time: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        if self.dim == 1 || self.factor == ConformalFactor::Flat {
            return ([x[0] + time * v[0], x[1] + time * v[1]], v, w);
        }
        let factor = self.factor;
        let f = |y: &[f64; 6]| -> [f64; 6] {
            let p = [y[0], y[1]];
            let vel = [y[2], y[3]];
            let g = factor.grad_phi(p);
            let acc = christoffel(g, vel, vel);
            let dw = christoffel(g, vel, [y[4], y[5]]);
            [vel[0], vel[1], -acc[0], -acc[1], -dw[0], -dw[1]]
        };
        let speed = (v[0] * v[0] + v[1] * v[1]).sqrt() * self.conformal(x).sqrt();
        let n = ((time.abs() * speed.max(1e-300)) / GEODESIC_STEP).ceil().max(1.0) as usize;
        let dt = time / n as f64;
        let mut y = [x[0], x[1], v[0], v[1], w[0], w[1]];
        for _ in 0..n {
            y = rk4(f, &y, dt);
        }
        ([y[0], y[1]], [y[2], y[3]], [y[4], y[5]])
    }
}

fn hermite(p0: f64, m0: f64, p1: f64, m1: f64, dt: f64, s: f64) -> (f64, f64) {
    let (s2, s3) = (s * s, s * s * s);
    let p = (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * dt * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * dt * m1;
    let dp = ((6.0 * s2 - 6.0 * s) * p0 + (3.0 * s2 - 4.0 * s + 1.0) * dt * m0 + (-6.0 * s2 + 6.0 * s) * p1 + (3.0 * s2 - 2.0 * s) * dt * m1) / dt;
    (p, dp)
}

impl GeodesicPath {
    pub fn exit(&self) -> PathSample {
        *self.samples.last().expect("non-empty path")
    }

    /// Position and velocity at arc length `t ∈ [0, L]` by cubic Hermite
    /// interpolation (positions with velocities, velocities with accelerations).
    pub fn at(&self, t: f64) -> ([f64; 2], [f64; 2]) {
        let t = t.clamp(0.0, self.length);
        let k = self.samples.partition_point(|s| s.t <= t).clamp(1, self.samples.len() - 1);
        let (a, b) = (&self.samples[k - 1], &self.samples[k]);
        let dt = b.t - a.t;
        if dt <= 0.0 {
            return (a.x, a.v);
        }
        let s = (t - a.t) / dt;
        let acc = |p: &PathSample| {
            let r = geodesic_rhs(&self.factor, &[p.x[0], p.x[1], p.v[0], p.v[1]]);
            [r[2], r[3]]
        };
        let (aa, ab) = (acc(a), acc(b));
        let mut x = [0.0; 2];
        let mut v = [0.0; 2];
        for c in 0..2 {
            x[c] = hermite(a.x[c], a.v[c], b.x[c], b.v[c], dt, s).0;
            v[c] = hermite(a.v[c], aa[c], b.v[c], ab[c], dt, s).0;
        }
        (x, v)
    }

    /// Arc length of the path point closest to `x`.
    pub fn locate(&self, x: [f64; 2]) -> f64 {
        let d2 = |p: [f64; 2]| (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
        let best = self.samples.iter().min_by(|a, b| d2(a.x).total_cmp(&d2(b.x))).expect("non-empty path");
        let mut t = best.t;
        for _ in 0..8 {
            let (p, v) = self.at(t);
            let vv = v[0] * v[0] + v[1] * v[1];
            if vv == 0.0 {
                break;
            }
            t -= ((p[0] - x[0]) * v[0] + (p[1] - x[1]) * v[1]) / vv;
            t = t.clamp(0.0, self.length);
        }
        t
    }

    /// CSV polyline `t,x,y,vx,vy`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y,vx,vy\n");
        for p in &self.samples {
            s.push_str(&format!("{},{},{},{},{}\n", p.t, p.x[0], p.x[1], p.v[0], p.v[1]));
        }
        s
    }
}
