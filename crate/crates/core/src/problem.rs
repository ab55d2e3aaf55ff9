//! Source terms and initial data.

use crate::tensor::Vec2;

const FD_STEP: f64 = 1e-6;

/// Body force `f`, mass source `g`, heat source `h` and initial data.
///
/// Derivatives default to central differences; closed-form data should
/// override them.
pub trait ProblemData: Sync {
    fn f(&self, x: Vec2, t: f64) -> Vec2;
    fn g(&self, x: Vec2, t: f64) -> f64;
    fn h(&self, x: Vec2, t: f64) -> f64;
    fn p0(&self, x: Vec2) -> f64;
    fn t0(&self, x: Vec2) -> f64;
    fn u0(&self, x: Vec2) -> Vec2;

    fn df_dt(&self, x: Vec2, t: f64) -> Vec2 {
        let (a, b) = (self.f(x, t + FD_STEP), self.f(x, t - FD_STEP));
        [(a[0] - b[0]) / (2.0 * FD_STEP), (a[1] - b[1]) / (2.0 * FD_STEP)]
    }

    fn grad_p0(&self, x: Vec2) -> Vec2 {
        central_gradient(|y| self.p0(y), x)
    }

    fn grad_t0(&self, x: Vec2) -> Vec2 {
        central_gradient(|y| self.t0(y), x)
    }
}

pub fn central_gradient<F: Fn(Vec2) -> f64>(f: F, x: Vec2) -> Vec2 {
    let d = FD_STEP;
    [
        (f([x[0] + d, x[1]]) - f([x[0] - d, x[1]])) / (2.0 * d),
        (f([x[0], x[1] + d]) - f([x[0], x[1] - d])) / (2.0 * d),
    ]
}

/// All sources and initial data vanish.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroData;

impl ProblemData for ZeroData {
    fn f(&self, _: Vec2, _: f64) -> Vec2 {
        [0.0; 2]
    }
    fn g(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn h(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn p0(&self, _: Vec2) -> f64 {
        0.0
    }
    fn t0(&self, _: Vec2) -> f64 {
        0.0
    }
    fn u0(&self, _: Vec2) -> Vec2 {
        [0.0; 2]
    }
    fn df_dt(&self, _: Vec2, _: f64) -> Vec2 {
        [0.0; 2]
    }
    fn grad_p0(&self, _: Vec2) -> Vec2 {
        [0.0; 2]
    }
    fn grad_t0(&self, _: Vec2) -> Vec2 {
        [0.0; 2]
    }
}

fn bubble(x: Vec2) -> f64 {
    use std::f64::consts::PI;
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

fn bubble_grad(x: Vec2) -> Vec2 {
    use std::f64::consts::PI;
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    [PI * cx * sy, PI * sx * cy]
}

/// No sources; pressure and temperature start from sine bubbles with the
/// given amplitudes and relax.
#[derive(Clone, Copy, Debug)]
pub struct FreeDecay {
    pub p_amp: f64,
    pub t_amp: f64,
}

impl Default for FreeDecay {
    fn default() -> Self {
        FreeDecay { p_amp: 1.0, t_amp: 1.0 }
    }
}

impl ProblemData for FreeDecay {
    fn f(&self, _: Vec2, _: f64) -> Vec2 {
        [0.0; 2]
    }
    fn g(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn h(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn p0(&self, x: Vec2) -> f64 {
        self.p_amp * bubble(x)
    }
    fn t0(&self, x: Vec2) -> f64 {
        self.t_amp * bubble(x)
    }
    fn u0(&self, _: Vec2) -> Vec2 {
        [0.0; 2]
    }
    fn df_dt(&self, _: Vec2, _: f64) -> Vec2 {
        [0.0; 2]
    }
    fn grad_p0(&self, x: Vec2) -> Vec2 {
        let g = bubble_grad(x);
        [self.p_amp * g[0], self.p_amp * g[1]]
    }
    fn grad_t0(&self, x: Vec2) -> Vec2 {
        let g = bubble_grad(x);
        [self.t_amp * g[0], self.t_amp * g[1]]
    }
}

/// Multiplies every source and initial datum of `inner` by `factor`.
#[derive(Clone, Copy, Debug)]
pub struct Scaled<P> {
    pub inner: P,
    pub factor: f64,
}

impl<P: ProblemData> ProblemData for Scaled<P> {
    fn f(&self, x: Vec2, t: f64) -> Vec2 {
        let v = self.inner.f(x, t);
        [self.factor * v[0], self.factor * v[1]]
    }
    fn g(&self, x: Vec2, t: f64) -> f64 {
        self.factor * self.inner.g(x, t)
    }
    fn h(&self, x: Vec2, t: f64) -> f64 {
        self.factor * self.inner.h(x, t)
    }
    fn p0(&self, x: Vec2) -> f64 {
        self.factor * self.inner.p0(x)
    }
    fn t0(&self, x: Vec2) -> f64 {
        self.factor * self.inner.t0(x)
    }
    fn u0(&self, x: Vec2) -> Vec2 {
        let v = self.inner.u0(x);
        [self.factor * v[0], self.factor * v[1]]
    }
    fn df_dt(&self, x: Vec2, t: f64) -> Vec2 {
        let v = self.inner.df_dt(x, t);
        [self.factor * v[0], self.factor * v[1]]
    }
    fn grad_p0(&self, x: Vec2) -> Vec2 {
        let v = self.inner.grad_p0(x);
        [self.factor * v[0], self.factor * v[1]]
    }
    fn grad_t0(&self, x: Vec2) -> Vec2 {
        let v = self.inner.grad_t0(x);
        [self.factor * v[0], self.factor * v[1]]
    }
}

/// Replaces the body force of `inner` by `force` and keeps everything else.
#[derive(Clone, Copy, Debug)]
pub struct WithForce<P, F> {
    pub inner: P,
    pub force: F,
}

impl<P: ProblemData, F: Fn(Vec2, f64) -> Vec2 + Sync> ProblemData for WithForce<P, F> {
    fn f(&self, x: Vec2, t: f64) -> Vec2 {
        (self.force)(x, t)
    }
    fn g(&self, x: Vec2, t: f64) -> f64 {
        self.inner.g(x, t)
    }
    fn h(&self, x: Vec2, t: f64) -> f64 {
        self.inner.h(x, t)
    }
    fn p0(&self, x: Vec2) -> f64 {
        self.inner.p0(x)
    }
    fn t0(&self, x: Vec2) -> f64 {
        self.inner.t0(x)
    }
    fn u0(&self, x: Vec2) -> Vec2 {
        self.inner.u0(x)
    }
    fn grad_p0(&self, x: Vec2) -> Vec2 {
        self.inner.grad_p0(x)
    }
    fn grad_t0(&self, x: Vec2) -> Vec2 {
        self.inner.grad_t0(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decay_gradients_match_differences() {
        let d = FreeDecay { p_amp: 2.0, t_amp: -0.5 };
        let x = [0.31, 0.77];
        let exact = d.grad_p0(x);
        let fd = central_gradient(|y| d.p0(y), x);
        assert!((exact[0] - fd[0]).abs() < 1e-8 && (exact[1] - fd[1]).abs() < 1e-8);
        assert!(d.p0([0.0, 0.4]).abs() < 1e-15);
    }

    #[test]
    fn scaling_wrapper() {
        let s = Scaled { inner: FreeDecay::default(), factor: 3.0 };
        let x = [0.2, 0.6];
        assert!((s.t0(x) - 3.0 * bubble(x)).abs() < 1e-15);
        assert_eq!(s.g(x, 0.1), 0.0);
    }
}
