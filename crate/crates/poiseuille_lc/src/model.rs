//! Domain types: the material law, boundary and initial data, Riemann
//! variables, and validation of the structural hypotheses on the data.
//!
//! The wave speed is `c(theta) = sqrt(K1 cos^2 theta + K3 sin^2 theta)` with
//! splay and bend moduli `K1, K3 > 0`. Its bounds are
//! `C_L = min(sqrt(K1), sqrt(K3))`, `C_U = max(sqrt(K1), sqrt(K3))`.
//!
//! For the slope bound `C1 = sup |c'|`: with `s = sin^2 theta`,
//! `|c'| = |K3-K1| sqrt(s(1-s)) / sqrt(K1 + (K3-K1) s)`. Setting the
//! derivative in `s` to zero gives `(K3-K1) s^2 + 2 K1 s - K1 = 0`, whose
//! admissible root is `s* = sqrt(K1) / (sqrt(K1) + sqrt(K3))`. Substituting
//! back yields `c(s*) = (K1 K3)^(1/4)` and the exact supremum
//! `C1 = |sqrt(K3) - sqrt(K1)|`.

use crate::error::SolverError;
use crate::util::simpson_fn;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Compressed Riemann values at `pi` (in magnitude) encode an infinite
/// gradient; values this close to `pi` are treated as cusps.
pub const CUSP_TOL: f64 = 1e-6;

/// Tolerance for the compatibility conditions checked at load time.
pub const COMPAT_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Material law
// ---------------------------------------------------------------------------

/// Frank constants of the normalized model (`rho = nu = 1`, `gamma_1 = 2`,
/// `gamma_2 = 0`, `g = h = 1`).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MaterialModel {
    pub k1: f64,
    pub k3: f64,
}

impl MaterialModel {
    pub fn new(k1: f64, k3: f64) -> Result<Self, SolverError> {
        if !(k1 > 0.0 && k1.is_finite() && k3 > 0.0 && k3.is_finite()) {
            return Err(SolverError::Config(format!(
                "moduli must be positive and finite: K1={k1}, K3={k3}"
            )));
        }
        Ok(MaterialModel { k1, k3 })
    }

    /// Wave speed and its derivative at angle `theta`.
    pub fn wave_speed(&self, theta: f64) -> (f64, f64) {
        let (sin, cos) = theta.sin_cos();
        let c = (self.k1 * cos * cos + self.k3 * sin * sin).sqrt();
        let cprime = (self.k3 - self.k1) * sin * cos / c;
        (c, cprime)
    }

    /// Lower bound of the wave speed.
    pub fn c_lower(&self) -> f64 {
        self.k1.min(self.k3).sqrt()
    }

    /// Upper bound of the wave speed.
    pub fn c_upper(&self) -> f64 {
        self.k1.max(self.k3).sqrt()
    }

    /// Exact supremum of `|c'|` (see the module docs for the derivation).
    pub fn c1_bound(&self) -> f64 {
        (self.k3.sqrt() - self.k1.sqrt()).abs()
    }

    /// Boundary energy `B(theta) = integral_0^theta iota c^2(s) s ds`.
    pub fn boundary_energy(&self, iota: f64, theta: f64) -> f64 {
        if iota == 0.0 || theta == 0.0 {
            return 0.0;
        }
        iota * simpson_fn(
            |s| {
                let (c, _) = self.wave_speed(s);
                c * c * s
            },
            0.0,
            theta,
            64,
        )
    }
}

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

/// Velocity boundary condition at both endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityBc {
    /// Dirichlet `u = 0` (solid wall). The stress `J` then satisfies
    /// `J_x = 0` at the walls.
    Nonslip,
    /// Neumann: zero shear stress `J = u_x + theta_t = 0` at the walls.
    StressFree,
}

/// Director-angle boundary conditions:
/// `-iota1 theta(0) + iota2 theta_x(0) = 0` and
/// `iota3 theta(pi) + iota4 theta_x(pi) = 0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub u_side: VelocityBc,
    /// `(iota1, iota2)` at x = 0.
    pub theta_left: (f64, f64),
    /// `(iota3, iota4)` at x = pi.
    pub theta_right: (f64, f64),
}

/// The director boundary conditions the characteristic solver supports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaBcClass {
    /// `theta(0) = 0` and `iota theta(pi) + theta_x(pi) = 0` with
    /// `iota >= 0`. This is the fully proved case (`iota = 0` is the
    /// Neumann limit).
    DirichletRobin { iota: f64 },
    /// `theta(0) = theta(pi) = 0`: supported via the reflection closure at
    /// both walls, but outside the printed case. Flagged as extension.
    DirichletDirichlet,
}

impl ThetaBcClass {
    pub fn is_extension(&self) -> bool {
        matches!(self, ThetaBcClass::DirichletDirichlet)
    }

    pub fn iota(&self) -> f64 {
        match self {
            ThetaBcClass::DirichletRobin { iota } => *iota,
            ThetaBcClass::DirichletDirichlet => 0.0,
        }
    }
}

impl BoundarySpec {
    /// Convenience constructor for the proved mixed case.
    pub fn dirichlet_robin(u_side: VelocityBc, iota: f64) -> Self {
        BoundarySpec {
            u_side,
            theta_left: (1.0, 0.0),
            theta_right: (iota, 1.0),
        }
    }

    /// Coefficient sign and non-degeneracy checks.
    pub fn check_coefficients(&self) -> Result<(), SolverError> {
        let (i1, i2) = self.theta_left;
        let (i3, i4) = self.theta_right;
        for (name, v) in [("iota1", i1), ("iota2", i2), ("iota3", i3), ("iota4", i4)] {
            if v < 0.0 || !v.is_finite() {
                return Err(SolverError::InvalidCoefficients(format!(
                    "{name} = {v} must be nonnegative and finite"
                )));
            }
        }
        if i1 * i1 + i2 * i2 == 0.0 {
            return Err(SolverError::InvalidCoefficients(
                "iota1^2 + iota2^2 must be positive".into(),
            ));
        }
        if i3 * i3 + i4 * i4 == 0.0 {
            return Err(SolverError::InvalidCoefficients(
                "iota3^2 + iota4^2 must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Classify the director conditions for the solver core. Combinations
    /// with a non-Dirichlet left condition are accepted by the configuration
    /// layer but have no transformed closure here.
    pub fn classify_theta(&self) -> Result<ThetaBcClass, SolverError> {
        self.check_coefficients()?;
        let (_, i2) = self.theta_left;
        let (i3, i4) = self.theta_right;
        if i2 != 0.0 {
            return Err(SolverError::UnsupportedBoundary(
                "left director condition must be Dirichlet (iota2 = 0)".into(),
            ));
        }
        if i4 != 0.0 {
            Ok(ThetaBcClass::DirichletRobin { iota: i3 / i4 })
        } else {
            Ok(ThetaBcClass::DirichletDirichlet)
        }
    }
}

// ---------------------------------------------------------------------------
// Initial data presets
// ---------------------------------------------------------------------------

/// One term `amp * sin(freq * x + phase)` of a trigonometric series.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SineTerm {
    pub amp: f64,
    pub freq: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Named initial-data presets with analytic derivatives.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Constant { value: f64 },
    SineSeries { terms: Vec<SineTerm> },
    /// Ascending powers: `coeffs[k] * x^k`.
    Polynomial { coeffs: Vec<f64> },
    /// Piecewise-linear table on ascending nodes.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => *value,
            Profile::SineSeries { terms } => terms
                .iter()
                .map(|t| t.amp * (t.freq * x + t.phase).sin())
                .sum(),
            Profile::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            Profile::Table { xs, ys } => crate::util::interp_linear(xs, ys, x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Profile::Zero | Profile::Constant { .. } => 0.0,
            Profile::SineSeries { terms } => terms
                .iter()
                .map(|t| t.amp * t.freq * (t.freq * x + t.phase).cos())
                .sum(),
            Profile::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c),
            Profile::Table { xs, ys } => {
                // Slope of the interval containing x (left-continuous).
                let n = xs.len();
                if n < 2 {
                    return 0.0;
                }
                let k = xs.partition_point(|&v| v < x).clamp(1, n - 1);
                let dx = xs[k] - xs[k - 1];
                if dx > 0.0 {
                    (ys[k] - ys[k - 1]) / dx
                } else {
                    0.0
                }
            }
        }
    }
}

/// Initial profiles `u0 in H^1`, `theta0 in H^1` (absolutely continuous),
/// `theta1 in L^2`, plus the Hoelder exponent of `J0 = u0' + theta1`,
/// recorded for documentation and validation only.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitialData {
    pub u0: Profile,
    pub theta0: Profile,
    pub theta1: Profile,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.2
}

impl InitialData {
    /// `J0(x) = u0'(x) + theta1(x)`.
    pub fn j0(&self, x: f64) -> f64 {
        self.u0.deriv(x) + self.theta1.eval(x)
    }
}

// ---------------------------------------------------------------------------
// Riemann variables
// ---------------------------------------------------------------------------

/// Forward/backward Riemann variables and their compressed and weighted
/// companions at one point.
#[derive(Clone, Copy, Debug)]
pub struct RiemannState {
    pub r: f64,
    pub s: f64,
    pub w: f64,
    pub z: f64,
    pub p: f64,
    pub q: f64,
}

/// Result of decompressing a `w` or `z` value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RiemannValue {
    Finite(f64),
    /// `|w| = pi`: the gradient is unbounded at this point.
    Cusp,
}

impl RiemannValue {
    pub fn finite_or(&self, fallback: f64) -> f64 {
        match self {
            RiemannValue::Finite(v) => *v,
            RiemannValue::Cusp => fallback,
        }
    }
}

/// `R = theta_t + c theta_x`, `S = theta_t - c theta_x`.
pub fn riemann_from_fields(
    model: &MaterialModel,
    theta: f64,
    theta_t: f64,
    theta_x: f64,
) -> (f64, f64) {
    let (c, _) = model.wave_speed(theta);
    (theta_t + c * theta_x, theta_t - c * theta_x)
}

/// Inverse of [`riemann_from_fields`]: `theta_t = (R+S)/2`,
/// `theta_x = (R-S)/(2c)`.
pub fn fields_from_riemann(model: &MaterialModel, theta: f64, r: f64, s: f64) -> (f64, f64) {
    let (c, _) = model.wave_speed(theta);
    (0.5 * (r + s), 0.5 * (r - s) / c)
}

/// `w = 2 arctan R`, mapping infinite slopes to the sentinel `pi`.
pub fn compress(r: f64) -> f64 {
    if r.is_infinite() {
        if r > 0.0 {
            PI
        } else {
            -PI
        }
    } else {
        2.0 * r.atan()
    }
}

/// Inverse of [`compress`]; `|w| >= pi` yields the cusp sentinel.
pub fn decompress(w: f64) -> RiemannValue {
    if w.abs() >= PI {
        RiemannValue::Cusp
    } else {
        RiemannValue::Finite((0.5 * w).tan())
    }
}

// ---------------------------------------------------------------------------
// Problem specification and validation
// ---------------------------------------------------------------------------

/// Raw problem configuration before validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub material: MaterialModel,
    pub boundary: BoundarySpec,
    pub initial: InitialData,
}

/// A problem whose data passed the compatibility and finiteness checks.
#[derive(Clone, Debug)]
pub struct ValidatedProblem {
    pub spec: ProblemSpec,
    pub theta_bc: ThetaBcClass,
    /// True when the director conditions fall outside the proved case.
    pub extension: bool,
    /// `J0` tabulated on a uniform sampling grid over `[0, pi]`.
    pub j0_xs: Vec<f64>,
    pub j0_values: Vec<f64>,
}

impl ProblemSpec {
    /// Check every load-time invariant; return the normalized problem or the
    /// full list of violations.
    pub fn validate(&self) -> Result<ValidatedProblem, Vec<SolverError>> {
        let mut violations = Vec::new();

        let theta_bc = match self.boundary.classify_theta() {
            Ok(class) => Some(class),
            Err(e) => {
                violations.push(e);
                None
            }
        };

        let ini = &self.initial;
        if !(ini.alpha > 0.0 && ini.alpha < 0.25) {
            violations.push(SolverError::Config(format!(
                "alpha = {} must lie in (0, 1/4)",
                ini.alpha
            )));
        }

        let mut check = |endpoint: &str, identity: &str, residual: f64| {
            if !(residual.abs() <= COMPAT_TOL) {
                violations.push(SolverError::CompatibilityViolation {
                    endpoint: endpoint.into(),
                    identity: identity.into(),
                    residual,
                });
            }
        };

        if let Some(class) = theta_bc {
            check("0", "theta0(0) = 0", ini.theta0.eval(0.0));
            match class {
                ThetaBcClass::DirichletRobin { iota } => {
                    check(
                        "pi",
                        "iota*theta0(pi) + theta1(pi) = 0",
                        iota * ini.theta0.eval(PI) + ini.theta1.eval(PI),
                    );
                }
                ThetaBcClass::DirichletDirichlet => {
                    check("pi", "theta0(pi) = 0", ini.theta0.eval(PI));
                    check("pi", "theta1(pi) = 0", ini.theta1.eval(PI));
                }
            }
        }

        match self.boundary.u_side {
            VelocityBc::Nonslip => {
                check("0", "u0(0) = 0", ini.u0.eval(0.0));
                check("pi", "u0(pi) = 0", ini.u0.eval(PI));
            }
            VelocityBc::StressFree => {
                check("0", "u0'(0) + theta1(0) = 0", ini.j0(0.0));
                check("pi", "u0'(pi) + theta1(pi) = 0", ini.j0(PI));
            }
        }

        // Tabulate J0 and confirm it is finite everywhere on the grid.
        let n = 4097;
        let mut j0_xs = Vec::with_capacity(n);
        let mut j0_values = Vec::with_capacity(n);
        for i in 0..n {
            let x = PI * i as f64 / (n - 1) as f64;
            let v = ini.j0(x);
            if !v.is_finite() {
                violations.push(SolverError::QuadratureFailure(x));
                break;
            }
            j0_xs.push(x);
            j0_values.push(v);
        }

        if violations.is_empty() {
            let theta_bc = theta_bc.expect("classified");
            Ok(ValidatedProblem {
                spec: self.clone(),
                extension: theta_bc.is_extension(),
                theta_bc,
                j0_xs,
                j0_values,
            })
        } else {
            Err(violations)
        }
    }
}
