//! Physical coefficients, derived coupling quantities, admissibility
//! constraints and the isotropic compliance tensor.

use thiserror::Error;

use crate::mesh::TriMesh;
use crate::tensor::{SymMat2, Tensor2};

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("tensor `{name}` is not symmetric positive definite")]
    NotSpd { name: &'static str },
    #[error("beta and b0 may only vanish together (decoupled Biot limit); got beta={beta}, b0={b0}")]
    PartialDecoupling { beta: f64, b0: f64 },
    #[error("field has {got} cells but the mesh has {expected} triangles")]
    MeshMismatch { expected: usize, got: usize },
}

/// Coefficients of the thermo-poroelastic model.
///
/// `k` is the permeability divided by viscosity and `theta` the effective
/// thermal conductivity; both are constant symmetric positive definite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub lambda: f64,
    pub k: SymMat2,
    pub theta: SymMat2,
}

/// `c_r`, `b_r`, `a_r` and the contraction factor `ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedCoeffs {
    pub c_r: f64,
    pub b_r: f64,
    pub a_r: f64,
    /// `θ_M (μ+λ) / (αβ)`; infinite in the decoupled limit `β = 0`.
    pub xi: f64,
}

/// Eigenvalue bounds of `K⁻¹` and `Θ⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralBounds {
    pub k_m: f64,
    pub k_max: f64,
    pub theta_m: f64,
    pub theta_max: f64,
}

/// Margins of the three coefficient inequalities required by the
/// well-posedness theory. A constraint holds iff its margin is positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintReport {
    pub margins: [f64; 3],
    pub passed: [bool; 3],
    pub overall: bool,
}

impl ConstraintReport {
    pub const LABELS: [&'static str; 3] = [
        "b0 - alpha*beta/(mu+lambda)",
        "c0 - c_r/2 - b0 - 1/(6(mu+lambda))",
        "a0 - a_r/2 - b0 - 1/(6(mu+lambda))",
    ];
}

impl std::fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..3 {
            writeln!(
                f,
                "constraint {}: {:<38} margin = {:+.6e}  {}",
                i + 1,
                Self::LABELS[i],
                self.margins[i],
                if self.passed[i] { "pass" } else { "FAIL" }
            )?;
        }
        write!(f, "overall: {}", if self.overall { "pass" } else { "FAIL" })
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams::preset()
    }
}

impl MaterialParams {
    /// Builds and validates a parameter set.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a0: f64,
        b0: f64,
        c0: f64,
        alpha: f64,
        beta: f64,
        mu: f64,
        lambda: f64,
        k: SymMat2,
        theta: SymMat2,
    ) -> Result<Self, ParamError> {
        let p = MaterialParams { a0, b0, c0, alpha, beta, mu, lambda, k, theta };
        p.validate()?;
        Ok(p)
    }

    /// Constraint-satisfying preset with unit Lamé parameters and
    /// identity conductivities.
    pub fn preset() -> Self {
        MaterialParams {
            a0: 1.0,
            b0: 0.05,
            c0: 1.0,
            alpha: 0.1,
            beta: 0.1,
            mu: 1.0,
            lambda: 1.0,
            k: SymMat2::identity(),
            theta: SymMat2::identity(),
        }
    }

    /// Same material with the thermal couplings `β` and `b0` removed, which
    /// decouples the mechanics and flow from the energy balance.
    pub fn decoupled(self) -> Self {
        MaterialParams { beta: 0.0, b0: 0.0, ..self }
    }

    pub fn is_decoupled(&self) -> bool {
        self.beta == 0.0 && self.b0 == 0.0
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let scalars = [
            ("a0", self.a0),
            ("b0", self.b0),
            ("c0", self.c0),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mu", self.mu),
            ("lambda", self.lambda),
        ];
        for (name, value) in scalars {
            if !value.is_finite() {
                return Err(ParamError::NonFinite { name, value });
            }
        }
        if (self.beta == 0.0 || self.b0 == 0.0) && !self.is_decoupled() {
            return Err(ParamError::PartialDecoupling { beta: self.beta, b0: self.b0 });
        }
        for (name, value) in scalars {
            let allowed_zero = self.is_decoupled() && (name == "beta" || name == "b0");
            if value < 0.0 || (value == 0.0 && !allowed_zero) {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        if !self.k.is_spd() {
            return Err(ParamError::NotSpd { name: "K" });
        }
        if !self.theta.is_spd() {
            return Err(ParamError::NotSpd { name: "Theta" });
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedCoeffs {
        derived_coeffs(self)
    }

    pub fn check_constraints(&self) -> ConstraintReport {
        check_constraints(self)
    }

    pub fn spectral_bounds(&self) -> SpectralBounds {
        let (k_lo, k_hi) = self.k.eigenvalues();
        let (t_lo, t_hi) = self.theta.eigenvalues();
        SpectralBounds { k_m: 1.0 / k_hi, k_max: 1.0 / k_lo, theta_m: 1.0 / t_hi, theta_max: 1.0 / t_lo }
    }

    pub fn k_inv(&self) -> SymMat2 {
        self.k.inverse().expect("validated K is invertible")
    }

    pub fn theta_inv(&self) -> SymMat2 {
        self.theta.inverse().expect("validated Theta is invertible")
    }

    pub fn compliance(&self) -> Compliance {
        Compliance { mu: self.mu, lambda: self.lambda }
    }

    /// `c_r / (2α) = α / (2(μ+λ))`, the pressure–stress trace coupling.
    pub fn pressure_trace_coupling(&self) -> f64 {
        self.alpha / (2.0 * (self.mu + self.lambda))
    }

    /// `a_r / (2β) = β / (2(μ+λ))`, the temperature–stress trace coupling.
    pub fn thermal_trace_coupling(&self) -> f64 {
        self.beta / (2.0 * (self.mu + self.lambda))
    }
}

pub fn derived_coeffs(params: &MaterialParams) -> DerivedCoeffs {
    let ml = params.mu + params.lambda;
    let theta_max = params.spectral_bounds().theta_max;
    let ab = params.alpha * params.beta;
    DerivedCoeffs {
        c_r: params.alpha * params.alpha / ml,
        b_r: params.b0 - ab / ml,
        a_r: params.beta * params.beta / ml,
        xi: if ab == 0.0 { f64::INFINITY } else { theta_max * ml / ab },
    }
}

pub fn check_constraints(params: &MaterialParams) -> ConstraintReport {
    let ml = params.mu + params.lambda;
    let d = derived_coeffs(params);
    let margins = [
        params.b0 - params.alpha * params.beta / ml,
        params.c0 - d.c_r / 2.0 - params.b0 - 1.0 / (6.0 * ml),
        params.a0 - d.a_r / 2.0 - params.b0 - 1.0 / (6.0 * ml),
    ];
    let passed = margins.map(|m| m > 0.0);
    ConstraintReport { margins, passed, overall: passed.iter().all(|&p| p) }
}

/// Isotropic plane compliance `Aτ = (τ − λ/(2(μ+λ)) tr(τ) I) / (2μ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Compliance {
    pub mu: f64,
    pub lambda: f64,
}

impl Compliance {
    pub fn new(mu: f64, lambda: f64) -> Result<Self, ParamError> {
        if !(mu > 0.0) {
            return Err(ParamError::NonPositive { name: "mu", value: mu });
        }
        if !(lambda >= 0.0) {
            return Err(ParamError::NonPositive { name: "lambda", value: lambda });
        }
        Ok(Compliance { mu, lambda })
    }

    /// Coefficient of the trace term, `λ / (2(μ+λ))`.
    pub fn trace_factor(&self) -> f64 {
        self.lambda / (2.0 * (self.mu + self.lambda))
    }

    pub fn apply(&self, tau: &Tensor2) -> Tensor2 {
        compliance_apply(tau, self)
    }

    /// Pointwise `Aτ₁ : τ₂`.
    pub fn inner(&self, t1: &Tensor2, t2: &Tensor2) -> f64 {
        (t1.ddot(t2) - self.trace_factor() * t1.trace() * t2.trace()) / (2.0 * self.mu)
    }

    /// Lower and upper constants of `‖τ‖²/(2(μ+λ)) ≤ ‖τ‖²_A ≤ ‖τ‖²/(2μ)`.
    pub fn equivalence_bounds(&self) -> (f64, f64) {
        (1.0 / (2.0 * (self.mu + self.lambda)), 1.0 / (2.0 * self.mu))
    }
}

pub fn compliance_apply(tau: &Tensor2, c: &Compliance) -> Tensor2 {
    let shift = c.trace_factor() * tau.trace();
    (*tau - Tensor2::identity() * shift) * (1.0 / (2.0 * c.mu))
}

/// `∫ Aτ₁ : τ₂` for piecewise-constant tensor fields (one tensor per triangle).
pub fn compliance_inner(
    mesh: &TriMesh,
    tau1: &[Tensor2],
    tau2: &[Tensor2],
    c: &Compliance,
) -> Result<f64, ParamError> {
    let nt = mesh.num_triangles();
    for len in [tau1.len(), tau2.len()] {
        if len != nt {
            return Err(ParamError::MeshMismatch { expected: nt, got: len });
        }
    }
    Ok(tau1
        .iter()
        .zip(tau2)
        .enumerate()
        .map(|(t, (a, b))| mesh.area(t) * c.inner(a, b))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(alpha: f64, beta: f64, mu: f64, lambda: f64, b0: f64) -> MaterialParams {
        MaterialParams { alpha, beta, mu, lambda, b0, ..MaterialParams::preset() }
    }

    #[test]
    fn derived_examples() {
        let d = unit(1.0, 1.0, 1.0, 1.0, 1.0).derived();
        assert_eq!((d.c_r, d.a_r, d.b_r), (0.5, 0.5, 0.5));
        assert_eq!(d.xi, 2.0);
        let d = unit(2.0, 1.0, 1.0, 3.0, 1.0).derived();
        assert_eq!((d.c_r, d.a_r, d.b_r), (1.0, 0.25, 0.5));
    }

    #[test]
    fn derived_product_identity() {
        let p = unit(0.3, 0.7, 1.3, 2.1, 0.4);
        let d = p.derived();
        let ab = p.alpha * p.beta / (p.mu + p.lambda);
        assert!((d.c_r * d.a_r - ab * ab).abs() < 1e-15);
        assert!((d.c_r * d.a_r - (p.b0 - d.b_r).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut p = MaterialParams::preset();
        p.mu = 0.0;
        assert_eq!(p.validate(), Err(ParamError::NonPositive { name: "mu", value: 0.0 }));
        let mut p = MaterialParams::preset();
        p.beta = 0.0;
        assert!(matches!(p.validate(), Err(ParamError::PartialDecoupling { .. })));
        assert!(MaterialParams::preset().decoupled().validate().is_ok());
        let mut p = MaterialParams::preset();
        p.k = SymMat2::new(1.0, 2.0, 1.0);
        assert_eq!(p.validate(), Err(ParamError::NotSpd { name: "K" }));
        let mut p = MaterialParams::preset();
        p.c0 = f64::NAN;
        assert!(matches!(p.validate(), Err(ParamError::NonFinite { name: "c0", .. })));
    }

    #[test]
    fn spectral_bounds_of_anisotropic_tensor() {
        let mut p = MaterialParams::preset();
        p.k = SymMat2::new(2.0, 0.0, 0.5);
        let b = p.spectral_bounds();
        assert!((b.k_m - 0.5).abs() < 1e-15);
        assert!((b.k_max - 2.0).abs() < 1e-15);
    }

    #[test]
    fn compliance_examples() {
        let c = Compliance::new(1.0, 1.0).unwrap();
        let a = c.apply(&Tensor2::identity());
        assert_eq!(a, Tensor2::identity() * 0.25);
        let a = c.apply(&Tensor2::symmetric(0.0, 1.0, 0.0));
        assert_eq!(a, Tensor2::symmetric(0.0, 0.5, 0.0));
        let c0 = Compliance::new(2.0, 0.0).unwrap();
        let t = Tensor2::symmetric(1.0, -3.0, 0.5);
        assert_eq!(c0.apply(&t), t * 0.25);
        assert!(Compliance::new(0.0, 1.0).is_err());
    }
}
