//! Interval heat kernels by the method of images.
//!
//! The fundamental solution is
//! `g0(x,t;xi,tau) = exp(-(x-xi)^2/(4(t-tau))) / (2 sqrt(pi (t-tau)))`.
//! On `[0, pi]` the Dirichlet (Green) and Neumann kernels are image series:
//! as functions of `xi` both are sums of Gaussians of width `t-tau` centered
//! at `x - 2n pi` (direct images, weight +1) and `2n pi - x` (reflected
//! images, weight -1 for Green, +1 for Neumann).

use crate::error::SolverError;
use statrs::function::erf::erf;
use std::f64::consts::PI;

/// Default truncation tail tolerance for the image series.
pub const TAIL_TOL: f64 = 1e-12;

/// Fundamental solution of the heat equation on the line.
pub fn g0(x: f64, t: f64, xi: f64, tau: f64) -> Result<f64, SolverError> {
    let dt = t - tau;
    if !(dt > 0.0) {
        return Err(SolverError::NonpositiveTimeGap { t, tau });
    }
    let d = x - xi;
    Ok((-d * d / (4.0 * dt)).exp() / (2.0 * (PI * dt).sqrt()))
}

/// Number of image pairs needed so the omitted Gaussian tail is below `tol`.
///
/// For `x, xi` in `[0, pi]` the image centered at `2n pi (+/- xi)` sits at
/// distance at least `(2|n| - 2) pi` from `x`, so the first omitted pair is
/// bounded by `exp(-((2n-2) pi)^2 / (4 dt)) / (2 sqrt(pi dt))`; the count is
/// doubled for safety (this also covers the differentiated series, whose
/// polynomial prefactor is dominated by halving the exponent).
pub fn images_needed(dt: f64, tol: f64) -> i64 {
    let prefactor = 0.5 / (PI * dt).sqrt();
    let mut n: i64 = 2;
    while n < 64 {
        let d = (2 * n - 2) as f64 * PI;
        // Factor 4: crude bound for the geometric-like remainder of the tail.
        if 4.0 * prefactor * (-d * d / (4.0 * dt)).exp() < tol {
            break;
        }
        n += 1;
    }
    2 * n
}

/// Which interval kernel an [`ImageKernel`] represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    /// Dirichlet kernel: vanishes at `x = 0, pi`.
    Green,
    /// Insulated kernel: `x`-derivative vanishes at `x = 0, pi`.
    Neumann,
}

/// The truncated image series for fixed pole `x` and time gap `dt = t - tau`,
/// viewed as a function of the source point `xi`.
///
/// Each term is `sign * gauss(xi; center, dt)` with
/// `gauss(xi; m, dt) = exp(-(xi-m)^2/(4 dt)) / (2 sqrt(pi dt))`.
#[derive(Clone, Debug)]
pub struct ImageKernel {
    pub dt: f64,
    /// `(sign, center, dcenter_dx)` per image term.
    terms: Vec<(f64, f64, f64)>,
}

impl ImageKernel {
    pub fn new(kind: KernelKind, x: f64, dt: f64, tol: f64) -> Result<Self, SolverError> {
        if !(dt > 0.0) {
            return Err(SolverError::NonpositiveTimeGap { t: dt, tau: 0.0 });
        }
        let n_img = images_needed(dt, tol);
        let reflected_sign = match kind {
            KernelKind::Green => -1.0,
            KernelKind::Neumann => 1.0,
        };
        let mut terms = Vec::with_capacity(2 * (2 * n_img as usize + 1));
        for n in -n_img..=n_img {
            let shift = 2.0 * PI * n as f64;
            terms.push((1.0, x - shift, 1.0));
            terms.push((reflected_sign, shift - x, -1.0));
        }
        Ok(ImageKernel { dt, terms })
    }

    fn gauss(&self, d: f64) -> f64 {
        (-d * d / (4.0 * self.dt)).exp() / (2.0 * (PI * self.dt).sqrt())
    }

    /// Kernel value `K(x, t; xi, tau)`.
    pub fn eval(&self, xi: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(s, m, _)| s * self.gauss(xi - m))
            .sum()
    }

    /// `partial K / partial xi`.
    pub fn eval_dxi(&self, xi: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(s, m, _)| -s * (xi - m) / (2.0 * self.dt) * self.gauss(xi - m))
            .sum()
    }

    /// `partial K / partial x`.
    pub fn eval_dx(&self, xi: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(s, m, dm)| s * dm * (xi - m) / (2.0 * self.dt) * self.gauss(xi - m))
            .sum()
    }

    /// Exact zeroth Gaussian moment over `[a, b]`:
    /// `int_a^b gauss(xi; m, dt) dxi`.
    fn moment0(&self, m: f64, a: f64, b: f64) -> f64 {
        let w = 2.0 * self.dt.sqrt();
        0.5 * (erf((b - m) / w) - erf((a - m) / w))
    }

    /// Exact first centered moment over `[a, b]`:
    /// `int_a^b (xi - m) gauss(xi; m, dt) dxi`.
    fn moment1(&self, m: f64, a: f64, b: f64) -> f64 {
        let e = |v: f64| (-(v - m) * (v - m) / (4.0 * self.dt)).exp();
        -(self.dt / PI).sqrt() * (e(b) - e(a))
    }

    /// `int_0^pi K(x,t;xi,tau) f(xi) dxi` for piecewise-linear `f` sampled on
    /// the ascending grid `xs`, by exact per-cell Gaussian moments.
    pub fn integrate_linear(&self, xs: &[f64], f: &[f64]) -> f64 {
        debug_assert_eq!(xs.len(), f.len());
        let mut total = 0.0;
        for &(s, m, _) in &self.terms {
            let mut acc = 0.0;
            for k in 1..xs.len() {
                let (a, b) = (xs[k - 1], xs[k]);
                if b <= a {
                    continue;
                }
                let slope = (f[k] - f[k - 1]) / (b - a);
                // f(xi) = f(a) + slope (xi - a) = [f(a) + slope (m - a)] + slope (xi - m)
                acc += (f[k - 1] + slope * (m - a)) * self.moment0(m, a, b)
                    + slope * self.moment1(m, a, b);
            }
            total += s * acc;
        }
        total
    }

    /// `int_0^pi (partial_xi K) f dxi` for continuous piecewise-linear `f`,
    /// by per-cell integration by parts (boundary terms telescope).
    pub fn integrate_dxi_linear(&self, xs: &[f64], f: &[f64]) -> f64 {
        debug_assert_eq!(xs.len(), f.len());
        let n = xs.len();
        let mut total = 0.0;
        for &(s, m, _) in &self.terms {
            let mut acc = self.gauss(xs[n - 1] - m) * f[n - 1] - self.gauss(xs[0] - m) * f[0];
            for k in 1..n {
                let (a, b) = (xs[k - 1], xs[k]);
                if b <= a {
                    continue;
                }
                let slope = (f[k] - f[k - 1]) / (b - a);
                acc -= slope * self.moment0(m, a, b);
            }
            total += s * acc;
        }
        total
    }
}

macro_rules! pointwise {
    ($name:ident, $kind:expr, $method:ident) => {
        pub fn $name(x: f64, t: f64, xi: f64, tau: f64, tol: f64) -> Result<f64, SolverError> {
            let dt = t - tau;
            if !(dt > 0.0) {
                return Err(SolverError::NonpositiveTimeGap { t, tau });
            }
            Ok(ImageKernel::new($kind, x, dt, tol)?.$method(xi))
        }
    };
}

pointwise!(green, KernelKind::Green, eval);
pointwise!(neumann, KernelKind::Neumann, eval);
pointwise!(dgreen_dxi, KernelKind::Green, eval_dxi);
pointwise!(dneumann_dxi, KernelKind::Neumann, eval_dxi);
pointwise!(dgreen_dx, KernelKind::Green, eval_dx);
pointwise!(dneumann_dx, KernelKind::Neumann, eval_dx);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::simpson_fn;

    /// Deterministic pseudo-random stream in [0, 1).
    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    #[test]
    fn g0_examples() {
        let v = g0(0.3, 1.0 / (4.0 * PI), 0.3, 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-14);

        let v = g0(2.0, 1.0, 0.0, 0.0).unwrap();
        let expect = (-1.0f64).exp() / (2.0 * PI.sqrt());
        assert!((v - expect).abs() < 1e-12);
        assert!((expect - 0.103777).abs() < 1e-6);

        let mut seed = 7u64;
        for _ in 0..50 {
            let (x, xi) = (lcg(&mut seed) * 3.0, lcg(&mut seed) * 3.0);
            let t = 0.1 + lcg(&mut seed);
            let a = g0(x, t, xi, 0.0).unwrap();
            let b = g0(xi, t, x, 0.0).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn g0_rejects_nonpositive_gap() {
        assert!(matches!(
            g0(0.0, 1.0, 0.0, 1.0),
            Err(SolverError::NonpositiveTimeGap { .. })
        ));
    }

    #[test]
    fn green_vanishes_at_walls() {
        for &t in &[1e-3, 0.1, 1.0] {
            for &xi in &[0.3, 1.5, 3.0] {
                assert!(green(0.0, t, xi, 0.0, TAIL_TOL).unwrap().abs() < 1e-10);
                assert!(green(PI, t, xi, 0.0, TAIL_TOL).unwrap().abs() < 1e-10);
            }
        }
    }

    #[test]
    fn neumann_derivative_vanishes_at_walls() {
        // Centered differences with reflection across the wall.
        let eps = 1e-5;
        for &t in &[1e-2, 0.5, 5.0] {
            for &xi in &[0.4, 2.0] {
                for &x in &[0.0, PI] {
                    let plus = neumann(x + eps, t, xi, 0.0, TAIL_TOL).unwrap();
                    let minus = neumann(x - eps, t, xi, 0.0, TAIL_TOL).unwrap();
                    assert!(
                        ((plus - minus) / (2.0 * eps)).abs() < 1e-6,
                        "N_x({x}) != 0 at t={t}, xi={xi}"
                    );
                }
            }
        }
    }

    #[test]
    fn neumann_conserves_mass() {
        for &dt in &[1e-4, 1e-2, 1.0, 10.0] {
            for &x in &[0.0, 0.7, PI / 2.0, PI] {
                let kernel = ImageKernel::new(KernelKind::Neumann, x, dt, TAIL_TOL).unwrap();
                // Exact moments against f = 1 are erf differences; also check
                // plain quadrature at moderate dt.
                let xs: Vec<f64> = (0..=512).map(|i| PI * i as f64 / 512.0).collect();
                let ones = vec![1.0; xs.len()];
                let mass = kernel.integrate_linear(&xs, &ones);
                assert!((mass - 1.0).abs() < 1e-8, "mass {mass} at dt={dt}, x={x}");
                if dt >= 1e-2 {
                    let quad = simpson_fn(|xi| kernel.eval(xi), 0.0, PI, 512);
                    assert!((quad - 1.0).abs() < 1e-8);
                }
            }
        }
    }

    /// Truncated eigenfunction expansion of the Neumann kernel.
    fn neumann_spectral(x: f64, t: f64, xi: f64, modes: usize) -> f64 {
        let mut sum = 1.0 / PI;
        for k in 1..=modes {
            let kf = k as f64;
            sum += (2.0 / PI) * (kf * x).cos() * (kf * xi).cos() * (-kf * kf * t).exp();
        }
        sum
    }

    fn green_spectral(x: f64, t: f64, xi: f64, modes: usize) -> f64 {
        let mut sum = 0.0;
        for k in 1..=modes {
            let kf = k as f64;
            sum += (2.0 / PI) * (kf * x).sin() * (kf * xi).sin() * (-kf * kf * t).exp();
        }
        sum
    }

    #[test]
    fn neumann_long_time_flattens() {
        // At t = 10 the kernel is uniform up to the first surviving mode;
        // compare against the truncated eigen-expansion.
        for i in 0..=16 {
            let x = PI * i as f64 / 16.0;
            for j in 0..=16 {
                let xi = PI * j as f64 / 16.0;
                let images = neumann(x, 10.0, xi, 0.0, TAIL_TOL).unwrap();
                let spectral = neumann_spectral(x, 10.0, xi, 8);
                assert!((images - spectral).abs() < 1e-6);
                assert!((images - 1.0 / PI).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn kernels_match_spectral_expansion() {
        let mut seed = 11u64;
        for _ in 0..40 {
            let x = lcg(&mut seed) * PI;
            let xi = lcg(&mut seed) * PI;
            let t = 0.5 + lcg(&mut seed);
            let n = neumann(x, t, xi, 0.0, TAIL_TOL).unwrap();
            let g = green(x, t, xi, 0.0, TAIL_TOL).unwrap();
            assert!((n - neumann_spectral(x, t, xi, 40)).abs() < 1e-9);
            assert!((g - green_spectral(x, t, xi, 40)).abs() < 1e-9);
        }
    }

    #[test]
    fn dneumann_dxi_symmetry_and_fd() {
        for &dt in &[0.05, 0.7] {
            let v = dneumann_dxi(PI / 2.0, dt, PI / 2.0, 0.0, TAIL_TOL).unwrap();
            assert!(v.abs() < 1e-12, "midpoint symmetry broken: {v}");
        }
        let eps = 1e-5;
        let mut seed = 23u64;
        for _ in 0..30 {
            let x = 0.2 + lcg(&mut seed) * (PI - 0.4);
            let xi = 0.2 + lcg(&mut seed) * (PI - 0.4);
            let dt = 0.05 + lcg(&mut seed);
            let exact = dneumann_dxi(x, dt, xi, 0.0, TAIL_TOL).unwrap();
            let fd = (neumann(x, dt, xi + eps, 0.0, TAIL_TOL).unwrap()
                - neumann(x, dt, xi - eps, 0.0, TAIL_TOL).unwrap())
                / (2.0 * eps);
            assert!((exact - fd).abs() <= 1e-6);
        }
    }

    #[test]
    fn adjoint_derivative_identity() {
        // dG/dx = -dN/dxi and dG/dxi = -dN/dx, each side from its own series.
        let mut seed = 31u64;
        for _ in 0..100 {
            let x = lcg(&mut seed) * PI;
            let xi = lcg(&mut seed) * PI;
            let dt = 0.02 + lcg(&mut seed);
            let lhs = dgreen_dx(x, dt, xi, 0.0, TAIL_TOL).unwrap();
            let rhs = -dneumann_dxi(x, dt, xi, 0.0, TAIL_TOL).unwrap();
            assert!((lhs - rhs).abs() < 1e-8, "dG/dx vs -dN/dxi: {lhs} {rhs}");
            let lhs2 = dgreen_dxi(x, dt, xi, 0.0, TAIL_TOL).unwrap();
            let rhs2 = -dneumann_dx(x, dt, xi, 0.0, TAIL_TOL).unwrap();
            assert!((lhs2 - rhs2).abs() < 1e-8);
        }
    }

    #[test]
    fn semigroup_property() {
        // Chapman-Kolmogorov: int N(x,t;y,s) N(y,s;xi,tau) dy = N(x,t;xi,tau).
        let (t, s, tau) = (0.8, 0.3, 0.0);
        let nquad = 1024;
        let ys: Vec<f64> = (0..=nquad).map(|i| PI * i as f64 / nquad as f64).collect();
        for &(x, xi) in &[(0.5, 2.5), (1.2, 1.2), (0.0, 3.0)] {
            let outer = ImageKernel::new(KernelKind::Neumann, x, t - s, TAIL_TOL).unwrap();
            let inner: Vec<f64> = ys
                .iter()
                .map(|&y| neumann(y, s, xi, tau, TAIL_TOL).unwrap())
                .collect();
            let composed = outer.integrate_linear(&ys, &inner);
            let direct = neumann(x, t, xi, tau, TAIL_TOL).unwrap();
            assert!((composed - direct).abs() < 1e-6);
        }
    }

    #[test]
    fn exact_moments_match_quadrature() {
        // integrate_linear against brute-force Simpson for a smooth profile.
        let xs: Vec<f64> = (0..=256).map(|i| PI * i as f64 / 256.0).collect();
        let f: Vec<f64> = xs.iter().map(|&x| (x).sin() + 0.3 * x).collect();
        let kernel = ImageKernel::new(KernelKind::Green, 1.1, 0.2, TAIL_TOL).unwrap();
        let exact = kernel.integrate_linear(&xs, &f);
        let quad = simpson_fn(
            |xi| kernel.eval(xi) * crate::util::interp_linear(&xs, &f, xi),
            0.0,
            PI,
            4096,
        );
        assert!((exact - quad).abs() < 1e-8);

        let d_exact = kernel.integrate_dxi_linear(&xs, &f);
        let d_quad = simpson_fn(
            |xi| kernel.eval_dxi(xi) * crate::util::interp_linear(&xs, &f, xi),
            0.0,
            PI,
            8192,
        );
        assert!((d_exact - d_quad).abs() < 1e-6);
    }

    #[test]
    fn moments_resolve_kernels_sharper_than_grid() {
        // dt much smaller than the cell width: pointwise quadrature would
        // miss the spike; the exact moments keep unit mass.
        let xs: Vec<f64> = (0..=16).map(|i| PI * i as f64 / 16.0).collect();
        let ones = vec![1.0; xs.len()];
        let kernel = ImageKernel::new(KernelKind::Neumann, 1.0, 1e-6, TAIL_TOL).unwrap();
        let mass = kernel.integrate_linear(&xs, &ones);
        assert!((mass - 1.0).abs() < 1e-10);
    }
}
