//! Two-dimensional synthetic targets.

use std::f64::consts::PI;

use super::{sigmoid, Target};
use crate::error::{Error, Result};

pub const TARGET_2D_NAMES: [&str; 5] = ["banana", "ring", "squiggly", "two-moons", "funnel"];

pub fn make_2d_target(name: &str) -> Result<Box<dyn Target>> {
    Ok(match name {
        "banana" => Box::new(Banana::default()),
        "ring" => Box::new(Ring::default()),
        "squiggly" => Box::new(Squiggly::default()),
        "two-moons" => Box::new(TwoMoons::default()),
        "funnel" => Box::new(Funnel::default()),
        other => return Err(Error::config(format!("unknown 2d target '{other}'"))),
    })
}

/// Rosenbrock-warped Gaussian:
/// `log p = -x1^2/(2a^2) - (x2 - b x1^2 + a^2 b)^2 / 2`, normalized.
#[derive(Clone, Debug)]
pub struct Banana {
    pub a: f64,
    pub b: f64,
}

impl Default for Banana {
    fn default() -> Self {
        Self { a: 2.0, b: 0.3 }
    }
}

impl Target for Banana {
    fn name(&self) -> &str {
        "banana"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let a2 = self.a * self.a;
        let u = x[1] - self.b * x[0] * x[0] + a2 * self.b;
        -x[0] * x[0] / (2.0 * a2) - 0.5 * u * u - (2.0 * PI * self.a).ln()
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        let a2 = self.a * self.a;
        let u = x[1] - self.b * x[0] * x[0] + a2 * self.b;
        out[0] = -x[0] / a2 + 2.0 * self.b * x[0] * u;
        out[1] = -u;
    }
}

/// `log p = -(|x| - r0)^2 / (2 sigma^2)`, unnormalized.
#[derive(Clone, Debug)]
pub struct Ring {
    pub radius: f64,
    pub sigma: f64,
}

impl Default for Ring {
    fn default() -> Self {
        Self {
            radius: 3.0,
            sigma: 0.25,
        }
    }
}

impl Target for Ring {
    fn name(&self) -> &str {
        "ring"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let r = x[0].hypot(x[1]);
        -(r - self.radius).powi(2) / (2.0 * self.sigma * self.sigma)
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        let r = x[0].hypot(x[1]);
        if r == 0.0 {
            out[0] = 0.0;
            out[1] = 0.0;
            return;
        }
        let radial = -(r - self.radius) / (self.sigma * self.sigma);
        out[0] = radial * x[0] / r;
        out[1] = radial * x[1] / r;
    }
}

/// Sine-warped band: `x2 ~ N(sin(omega x1), s^2)`, `x1 ~ N(0, 4^2)`.
#[derive(Clone, Debug)]
pub struct Squiggly {
    pub omega: f64,
    pub sigma: f64,
    pub x1_scale: f64,
}

impl Default for Squiggly {
    fn default() -> Self {
        Self {
            omega: 2.0,
            sigma: 0.3,
            x1_scale: 4.0,
        }
    }
}

impl Target for Squiggly {
    fn name(&self) -> &str {
        "squiggly"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let u = x[1] - (self.omega * x[0]).sin();
        -u * u / (2.0 * self.sigma * self.sigma)
            - x[0] * x[0] / (2.0 * self.x1_scale * self.x1_scale)
            - (2.0 * PI * self.sigma * self.x1_scale).ln()
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        let s2 = self.sigma * self.sigma;
        let u = x[1] - (self.omega * x[0]).sin();
        out[0] = u * self.omega * (self.omega * x[0]).cos() / s2
            - x[0] / (self.x1_scale * self.x1_scale);
        out[1] = -u / s2;
    }
}

/// Equal mixture of two gated ring arcs, point-symmetric about the origin.
///
/// Component `+` is centred at `(1, -0.5)` and gated towards its upper half,
/// component `-` at `(-1, 0.5)` gated towards its lower half:
/// `a_+(x) = -(|x - c_+| - r)^2 / (2 s^2) + ln sigmoid(gamma (x2 - c_+2))`.
#[derive(Clone, Debug)]
pub struct TwoMoons {
    pub center: [f64; 2],
    pub radius: f64,
    pub sigma: f64,
    pub gate: f64,
}

impl Default for TwoMoons {
    fn default() -> Self {
        Self {
            center: [1.0, -0.5],
            radius: 2.0,
            sigma: 0.35,
            gate: 3.0,
        }
    }
}

impl TwoMoons {
    /// Log of one component and its gradient. `sign` is +1 or -1.
    fn component(&self, x: &[f64], sign: f64) -> (f64, [f64; 2]) {
        let c = [sign * self.center[0], sign * self.center[1]];
        let dx = [x[0] - c[0], x[1] - c[1]];
        let rho = dx[0].hypot(dx[1]);
        let s2 = self.sigma * self.sigma;
        let dev = rho - self.radius;
        let u = sign * self.gate * (x[1] - c[1]);
        let log_gate = -super::softplus(-u);
        let value = -dev * dev / (2.0 * s2) + log_gate;
        let mut grad = [0.0; 2];
        if rho > 0.0 {
            grad[0] = -dev / s2 * dx[0] / rho;
            grad[1] = -dev / s2 * dx[1] / rho;
        }
        grad[1] += sigmoid(-u) * sign * self.gate;
        (value, grad)
    }
}

impl Target for TwoMoons {
    fn name(&self) -> &str {
        "two-moons"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let (a, _) = self.component(x, 1.0);
        let (b, _) = self.component(x, -1.0);
        let m = a.max(b);
        m + ((a - m).exp() + (b - m).exp()).ln() - 2.0f64.ln()
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        let (a, ga) = self.component(x, 1.0);
        let (b, gb) = self.component(x, -1.0);
        let m = a.max(b);
        let (ea, eb) = ((a - m).exp(), (b - m).exp());
        let wa = ea / (ea + eb);
        let wb = 1.0 - wa;
        out[0] = wa * ga[0] + wb * gb[0];
        out[1] = wa * ga[1] + wb * gb[1];
    }
}

/// Neal's funnel in 2D with `v = x2 ~ N(0, 3^2)` and `x1 | v ~ N(0, e^v)`.
#[derive(Clone, Debug)]
pub struct Funnel {
    pub v_scale: f64,
}

impl Default for Funnel {
    fn default() -> Self {
        Self { v_scale: 3.0 }
    }
}

impl Target for Funnel {
    fn name(&self) -> &str {
        "funnel"
    }

    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let v = x[1];
        -v * v / (2.0 * self.v_scale * self.v_scale) - x[0] * x[0] / (2.0 * v.exp()) - 0.5 * v
            - (2.0 * PI).ln()
            - self.v_scale.ln()
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) {
        let v = x[1];
        let inv = (-v).exp();
        out[0] = -x[0] * inv;
        out[1] = -v / (self.v_scale * self.v_scale) + 0.5 * x[0] * x[0] * inv - 0.5;
    }
}
