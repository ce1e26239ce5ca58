//! Manufactured solutions `u = (z p, z q, c - (z²/2)(∂ₓp + ∂ᵧq))`.
//!
//! Any smooth potentials `p, q, c` of `(t, x, y)` give a field that is
//! divergence free, tangentially zero on `z = 0`, and has `∂u₃/∂z = 0` there.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{GridSpec, VectorField};
use crate::system::{constant_matrix, constant_scalar, MatrixFn, ProblemSpec, ScalarFn};

/// A smooth function of `(t, x, y)` with analytic partial derivatives.
pub trait Potential: Send + Sync + fmt::Debug {
    /// `∂ₜⁿᵗ ∂ₓⁿˣ ∂ᵧⁿʸ` at `(t, x, y)`.
    fn d(&self, nt: u32, nx: u32, ny: u32, t: f64, x: f64, y: f64) -> f64;

    fn value(&self, t: f64, x: f64, y: f64) -> f64 {
        self.d(0, 0, 0, t, x, y)
    }
}

/// `amp · e^{-λt} · sin(kₓx + φ) · sin(k_y y + ψ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigPotential {
    pub amp: f64,
    pub decay: f64,
    pub kx: f64,
    pub ky: f64,
    pub phase_x: f64,
    pub phase_y: f64,
}

fn sin_derivative(n: u32, k: f64, arg: f64) -> f64 {
    k.powi(n as i32) * (arg + n as f64 * std::f64::consts::FRAC_PI_2).sin()
}

impl Potential for TrigPotential {
    fn d(&self, nt: u32, nx: u32, ny: u32, t: f64, x: f64, y: f64) -> f64 {
        self.amp
            * (-self.decay).powi(nt as i32)
            * (-self.decay * t).exp()
            * sin_derivative(nx, self.kx, self.kx * x + self.phase_x)
            * sin_derivative(ny, self.ky, self.ky * y + self.phase_y)
    }
}

/// Sum of monomials `coef · tᵃ xᵇ yᶜ`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyPotential {
    pub terms: Vec<(f64, [u32; 3])>,
}

impl PolyPotential {
    pub fn constant(v: f64) -> Self {
        Self { terms: vec![(v, [0, 0, 0])] }
    }

    pub fn zero() -> Self {
        Self::default()
    }
}

fn falling(p: u32, n: u32, v: f64) -> f64 {
    if n > p {
        return 0.0;
    }
    let coef: f64 = (0..n).map(|i| (p - i) as f64).product();
    coef * v.powi((p - n) as i32)
}

impl Potential for PolyPotential {
    fn d(&self, nt: u32, nx: u32, ny: u32, t: f64, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(c, [pt, px, py])| c * falling(pt, nt, t) * falling(px, nx, x) * falling(py, ny, y))
            .sum()
    }
}

/// Manufactured family: potentials plus the PDE coefficients `a, c, B`.
#[derive(Clone)]
pub struct MmsFamily {
    pub name: String,
    pub p: Arc<dyn Potential>,
    pub q: Arc<dyn Potential>,
    pub c: Arc<dyn Potential>,
    pub coef_a: ScalarFn,
    pub coef_c: ScalarFn,
    pub coef_b: MatrixFn,
}

impl fmt::Debug for MmsFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MmsFamily").field("name", &self.name).field("p", &self.p).field("q", &self.q).field("c", &self.c).finish()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MmsPoint {
    pub u: [f64; 3],
    pub dt_u: [f64; 3],
    pub laplacian: [f64; 3],
    pub curl: [f64; 3],
}

impl MmsFamily {
    pub fn new(name: &str, p: impl Potential + 'static, q: impl Potential + 'static, c: impl Potential + 'static) -> Self {
        Self {
            name: name.to_string(),
            p: Arc::new(p),
            q: Arc::new(q),
            c: Arc::new(c),
            coef_a: constant_scalar(1.0),
            coef_c: constant_scalar(0.0),
            coef_b: constant_matrix([[0.0; 3]; 3]),
        }
    }

    pub fn with_coefficients(mut self, a: ScalarFn, c: ScalarFn, b: MatrixFn) -> Self {
        self.coef_a = a;
        self.coef_c = c;
        self.coef_b = b;
        self
    }

    /// Trigonometric potentials with variable `a`, a reaction term and a
    /// constant non-symmetric `B`.
    pub fn trigonometric() -> Self {
        let trig = |amp, kx, ky, phase_x, phase_y| TrigPotential { amp, decay: 0.5, kx, ky, phase_x, phase_y };
        Self::new(
            "trig",
            trig(1.0, 1.1, 0.9, 0.3, 0.7),
            trig(0.8, 0.8, 1.2, 1.1, 0.2),
            trig(0.6, 1.0, 1.0, 0.5, 0.4),
        )
        .with_coefficients(
            Arc::new(|_, x: [f64; 3]| 1.0 + 0.2 * x[0].sin() * x[1].cos()),
            constant_scalar(0.5),
            constant_matrix([[0.0, 0.3, 0.0], [-0.3, 0.0, 0.1], [0.0, 0.2, 0.0]]),
        )
    }

    /// Quadratic in space and linear in time, reproduced exactly by the
    /// discrete operators.
    pub fn polynomial() -> Self {
        let p = PolyPotential { terms: vec![(0.5, [0, 0, 0]), (0.3, [1, 1, 0]), (-0.2, [0, 0, 1])] };
        let q = PolyPotential { terms: vec![(0.4, [0, 1, 0]), (0.1, [1, 0, 0])] };
        let c = PolyPotential { terms: vec![(1.0, [0, 0, 0]), (0.25, [0, 2, 0]), (-0.5, [1, 0, 1]), (0.3, [0, 0, 2])] };
        Self::new("poly", p, q, c).with_coefficients(constant_scalar(1.0), constant_scalar(0.0), constant_matrix([[0.0; 3]; 3]))
    }

    /// `u = (0, 0, c₀)`.
    pub fn constant(c0: f64) -> Self {
        Self::new("constant", PolyPotential::zero(), PolyPotential::zero(), PolyPotential::constant(c0))
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "trig" => Ok(Self::trigonometric()),
            "poly" => Ok(Self::polynomial()),
            "constant" => Ok(Self::constant(1.0)),
            "zero" => Ok(Self::constant(0.0)),
            _ => Err(Error::InvalidArgument(format!("unknown manufactured family `{name}` (expected trig, poly, constant, zero)"))),
        }
    }

    pub fn eval(&self, t: f64, x: [f64; 3]) -> MmsPoint {
        let (p, q, c) = (&self.p, &self.q, &self.c);
        let [x, y, z] = x;
        let d = |f: &Arc<dyn Potential>, nt, nx, ny| f.d(nt, nx, ny, t, x, y);
        let zz = 0.5 * z * z;
        let s = d(p, 0, 1, 0) + d(q, 0, 0, 1);
        let sx = d(p, 0, 2, 0) + d(q, 0, 1, 1);
        let sy = d(p, 0, 1, 1) + d(q, 0, 0, 2);
        let st = d(p, 1, 1, 0) + d(q, 1, 0, 1);
        let s_lap = d(p, 0, 3, 0) + d(p, 0, 1, 2) + d(q, 0, 2, 1) + d(q, 0, 0, 3);
        MmsPoint {
            u: [z * d(p, 0, 0, 0), z * d(q, 0, 0, 0), d(c, 0, 0, 0) - zz * s],
            dt_u: [z * d(p, 1, 0, 0), z * d(q, 1, 0, 0), d(c, 1, 0, 0) - zz * st],
            laplacian: [
                z * (d(p, 0, 2, 0) + d(p, 0, 0, 2)),
                z * (d(q, 0, 2, 0) + d(q, 0, 0, 2)),
                d(c, 0, 2, 0) + d(c, 0, 0, 2) - zz * s_lap - s,
            ],
            curl: [
                d(c, 0, 0, 1) - zz * sy - d(q, 0, 0, 0),
                d(p, 0, 0, 0) - d(c, 0, 1, 0) + zz * sx,
                z * (d(q, 0, 1, 0) - d(p, 0, 0, 1)),
            ],
        }
    }

    pub fn exact(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        self.eval(t, x).u
    }

    /// `f = ∂ₜu - aΔu + B curl u + cu`.
    pub fn forcing(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        let m = self.eval(t, x);
        let a = (self.coef_a)(t, x);
        let c = (self.coef_c)(t, x);
        let b = (self.coef_b)(t, x);
        std::array::from_fn(|i| {
            let bc = b[i][0] * m.curl[0] + b[i][1] * m.curl[1] + b[i][2] * m.curl[2];
            m.dt_u[i] - a * m.laplacian[i] + bc + c * m.u[i]
        })
    }

    /// Scales the solution (and hence the forcing) by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.p = Arc::new(Scaled(self.p.clone(), lambda));
        out.q = Arc::new(Scaled(self.q.clone(), lambda));
        out.c = Arc::new(Scaled(self.c.clone(), lambda));
        out.name = format!("{}*{lambda}", self.name);
        out
    }
}

#[derive(Debug)]
struct Scaled(Arc<dyn Potential>, f64);

impl Potential for Scaled {
    fn d(&self, nt: u32, nx: u32, ny: u32, t: f64, x: f64, y: f64) -> f64 {
        self.1 * self.0.d(nt, nx, ny, t, x, y)
    }
}

/// Problem generated from a family, with the exact solution attached.
#[derive(Clone, Debug)]
pub struct MmsProblem {
    pub spec: ProblemSpec,
    pub family: MmsFamily,
}

impl MmsProblem {
    pub fn exact_at(&self, t: f64) -> Result<VectorField> {
        VectorField::sample(&self.spec.grid, |x| self.family.exact(t, x))
    }
}

/// Builds the problem on `grid`: forcing from the family, outer Dirichlet data
/// from the exact solution, and `u⁰` the exact solution sampled at `t = 0`.
/// The sample is divergence free only up to truncation, so `tol_div` is set
/// to `10h²`; the solver projects it before stepping.
pub fn mms_generate(family: &MmsFamily, grid: &GridSpec, t_final: f64, dt: f64) -> Result<MmsProblem> {
    let u0 = VectorField::sample(grid, |x| family.exact(0.0, x))?;
    let h = grid.spacing().iter().copied().fold(0.0, f64::max);
    let fam_f = family.clone();
    let fam_g = family.clone();
    let spec = ProblemSpec {
        grid: grid.clone(),
        t_final,
        dt,
        a: family.coef_a.clone(),
        c: family.coef_c.clone(),
        b: family.coef_b.clone(),
        f: Arc::new(move |t, x| fam_f.forcing(t, x)),
        u0,
        outer_data: Some(Arc::new(move |t, x| fam_g.exact(t, x))),
        tol_div: crate::system::DEFAULT_TOL_DIV.max(10.0 * h * h),
    };
    Ok(MmsProblem { spec, family: family.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &dyn Potential) {
        let (t, x, y) = (0.3, -0.4, 0.7);
        let h = 1e-5;
        let dx = (f.value(t, x + h, y) - f.value(t, x - h, y)) / (2.0 * h);
        let dy = (f.value(t, x, y + h) - f.value(t, x, y - h)) / (2.0 * h);
        let dt = (f.value(t + h, x, y) - f.value(t - h, x, y)) / (2.0 * h);
        assert!((dx - f.d(0, 1, 0, t, x, y)).abs() < 1e-8);
        assert!((dy - f.d(0, 0, 1, t, x, y)).abs() < 1e-8);
        assert!((dt - f.d(1, 0, 0, t, x, y)).abs() < 1e-8);
        let dxy = (f.d(0, 1, 0, t, x, y + h) - f.d(0, 1, 0, t, x, y - h)) / (2.0 * h);
        assert!((dxy - f.d(0, 1, 1, t, x, y)).abs() < 1e-8);
    }

    #[test]
    fn potential_derivatives() {
        fd_check(&TrigPotential { amp: 1.3, decay: 0.5, kx: 1.1, ky: 0.7, phase_x: 0.2, phase_y: -0.4 });
        fd_check(&PolyPotential { terms: vec![(1.0, [1, 2, 1]), (-0.5, [0, 3, 0]), (2.0, [2, 0, 2])] });
    }

    fn fd4(f: impl Fn(f64) -> [f64; 3], x: f64, h: f64) -> [f64; 3] {
        let (a, b, c, d) = (f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h));
        std::array::from_fn(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h))
    }

    fn partials(fam: &MmsFamily, t: f64, x: [f64; 3], axis: usize) -> [f64; 3] {
        fd4(
            |s| {
                let mut y = x;
                y[axis] = s;
                fam.exact(t, y)
            },
            x[axis],
            1e-3,
        )
    }

    #[test]
    fn family_matches_finite_differences() {
        for fam in [MmsFamily::trigonometric(), MmsFamily::polynomial()] {
            for &(t, x) in &[(0.0, [0.1, 0.2, 0.3]), (0.4, [-0.7, 0.5, 0.9]), (1.0, [0.3, -0.2, 0.05])] {
                let d: [[f64; 3]; 3] = std::array::from_fn(|a| partials(&fam, t, x, a));
                let div = d[0][0] + d[1][1] + d[2][2];
                assert!(div.abs() < 1e-10, "{}: div = {div}", fam.name);
                let m = fam.eval(t, x);
                let curl = [d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]];
                let dt = fd4(|s| fam.exact(s, x), t, 1e-3);
                for i in 0..3 {
                    assert!((curl[i] - m.curl[i]).abs() < 1e-10);
                    assert!((dt[i] - m.dt_u[i]).abs() < 1e-10);
                }
                let h = 1e-3;
                for i in 0..3 {
                    let mut lap = 0.0;
                    for a in 0..3 {
                        let mut xp = x;
                        let mut xm = x;
                        xp[a] += h;
                        xm[a] -= h;
                        lap += (fam.exact(t, xp)[i] - 2.0 * m.u[i] + fam.exact(t, xm)[i]) / (h * h);
                    }
                    assert!((lap - m.laplacian[i]).abs() < 1e-5);
                }
            }
            let at_sigma = fam.eval(0.2, [0.4, -0.3, 0.0]);
            assert_eq!(at_sigma.u[0], 0.0);
            assert_eq!(at_sigma.u[1], 0.0);
        }
    }

    #[test]
    fn sine_family_example() {
        let p = TrigPotential { amp: 1.0, decay: 1.0, kx: 1.0, ky: 0.0, phase_x: 0.0, phase_y: std::f64::consts::FRAC_PI_2 };
        let fam = MmsFamily::new("sine", p, PolyPotential::zero(), PolyPotential::zero());
        let (t, x) = (0.3, [0.4, 0.1, 0.6]);
        let u = fam.exact(t, x);
        assert!((u[2] + 0.5 * 0.36 * 0.4f64.cos() * (-t).exp()).abs() < 1e-15);
    }

    #[test]
    fn constant_family_forcing() {
        let fam = MmsFamily::constant(2.5).with_coefficients(constant_scalar(3.0), constant_scalar(0.7), constant_matrix([[1.0; 3]; 3]));
        let f = fam.forcing(0.3, [0.1, 0.2, 0.3]);
        assert_eq!(f, [0.0, 0.0, 0.7 * 2.5]);
    }
}
