//! Levi-Civita regularization of the planar rotated Hill problem.
//!
//! Physical states live in the rotated frame with velocities; momenta
//! `p_x = ẋ − y`, `p_y = ẏ + x` are formed only inside the maps below.
//!
//! With `k = |C|/4` the scaled coordinates are
//! `x + iy = α²(X + iY)²`, `p = (2/ρ)[[u, −v], [v, u]] β P` where
//! `(u, v) = α(X, Y)`, `ρ = u² + v²`, `α = 2k^{1/4}`, `β = 2k^{3/4}`, and the
//! Hamiltonian is divided by `γ = 4k^{3/2}`. The result is
//!
//! ```text
//! Ȟ = ½(X² + Y² + P_X² + P_Y²) + 2R(Y P_X − X P_Y)
//!     + 2(A X⁶ + (4B − A) X⁴Y² + (4B − A) X²Y⁴ + A Y⁶),   R = X² + Y²,
//! ```
//!
//! with `A = 1 − λ₂`, `B = 1 − λ₁` (twice the rotated-Hamiltonian
//! coefficients `a`, `b`). Collision orbits of the physical problem lie on
//! `Ȟ = |C|^{−3/2}/2`, and physical time advances as `dt/dτ = 4R`.
//! The scaling assumes `C > 0`.

use nalgebra::{Matrix4, SVector, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::VectorField;
use crate::model::eigen_structure;

/// Value of Ȟ on which the physical energy level `C` lives.
pub fn regularized_energy(c: f64) -> Result<f64> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::Domain(format!("regularized energy undefined at C = {c}")));
    }
    Ok(0.5 * c.abs().powf(-1.5))
}

/// Energy-dependent scaling of the regularized variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyContext {
    pub c: f64,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub h_reg: f64,
}

impl EnergyContext {
    pub fn new(c: f64) -> Result<Self> {
        let h_reg = regularized_energy(c)?;
        let h = -c / 2.0;
        let k = h.abs() / 2.0;
        Ok(EnergyContext {
            c,
            h,
            alpha: 2.0 * k.powf(0.25),
            beta: 2.0 * k.powf(0.75),
            gamma: 4.0 * k.powf(1.5),
            h_reg,
        })
    }

    fn require_bound(&self) -> Result<()> {
        if self.c > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "physical/regularized correspondence needs C > 0, got {}",
                self.c
            )))
        }
    }

    /// Regularized state of a rotated-frame physical state `(x, y, ẋ, ẏ)`.
    /// Of the two preimages, the one with `X > 0` (or `Y ≥ 0` if `X = 0`) is
    /// returned.
    pub fn to_regularized(&self, s: &Vector4<f64>) -> Result<Vector4<f64>> {
        self.require_bound()?;
        let (x, y) = (s[0], s[1]);
        let (px, py) = (s[2] - y, s[3] + x);
        let (u, v) = lc_inverse(x, y);
        if u == 0.0 && v == 0.0 {
            return Err(Error::Singularity("collision state has no momentum preimage".into()));
        }
        let pu = 0.5 * (u * px + v * py);
        let pv = 0.5 * (-v * px + u * py);
        Ok(Vector4::new(u / self.alpha, v / self.alpha, pu / self.beta, pv / self.beta))
    }

    /// Physical rotated-frame state `(x, y, ẋ, ẏ)` of a regularized state.
    pub fn to_physical(&self, r: &Vector4<f64>) -> Result<Vector4<f64>> {
        self.require_bound()?;
        let (u, v) = (self.alpha * r[0], self.alpha * r[1]);
        let (x, y) = lc_map(u, v);
        let (px, py) = lc_momentum_map(u, v, self.beta * r[2], self.beta * r[3])?;
        Ok(Vector4::new(x, y, px + y, py - x))
    }

    /// Physical distance to the origin of a regularized state.
    pub fn physical_radius(&self, r: &Vector4<f64>) -> f64 {
        self.alpha * self.alpha * (r[0] * r[0] + r[1] * r[1])
    }
}

/// `(X, Y) ↦ (X² − Y², 2XY)`.
pub fn lc_map(x_reg: f64, y_reg: f64) -> (f64, f64) {
    (x_reg * x_reg - y_reg * y_reg, 2.0 * x_reg * y_reg)
}

/// Inverse of [`lc_map`] on the half-plane `X > 0` (plus `X = 0, Y ≥ 0`).
pub fn lc_inverse(x: f64, y: f64) -> (f64, f64) {
    let r = x.hypot(y);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    // Half-angle formulas, choosing the branch that avoids cancellation.
    if x >= 0.0 {
        let u = (0.5 * (r + x)).sqrt();
        (u, y / (2.0 * u))
    } else {
        let v = (0.5 * (r - x)).sqrt().copysign(y);
        let v = if y == 0.0 { v.abs() } else { v };
        let u = y / (2.0 * v);
        if u < 0.0 {
            (-u, -v)
        } else {
            (u, v)
        }
    }
}

/// `p = (2/(X² + Y²)) [[X, −Y], [Y, X]] (P_X, P_Y)`.
pub fn lc_momentum_map(x_reg: f64, y_reg: f64, px_reg: f64, py_reg: f64) -> Result<(f64, f64)> {
    let rho = x_reg * x_reg + y_reg * y_reg;
    if rho == 0.0 {
        return Err(Error::Singularity("momentum map undefined at the origin".into()));
    }
    let f = 2.0 / rho;
    Ok((f * (x_reg * px_reg - y_reg * py_reg), f * (y_reg * px_reg + x_reg * py_reg)))
}

/// Sextic coefficients `(A, B)` at mass ratio `mu`.
pub fn sextic_coefficients(mu: f64) -> Result<(f64, f64)> {
    let e = eigen_structure(mu)?;
    Ok((2.0 * e.a_coef, 2.0 * e.b_coef))
}

/// Regularized state with the energy level it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegState {
    pub x: f64,
    pub y: f64,
    pub px: f64,
    pub py: f64,
    pub h_reg: f64,
}

impl RegState {
    pub fn vec(&self) -> Vector4<f64> {
        Vector4::new(self.x, self.y, self.px, self.py)
    }
}

/// Regularized Hamiltonian vector field. Also usable with the physical time
/// appended as a fifth component (see [`WithPhysicalTime`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedField {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
}

impl RegularizedField {
    pub fn new(mu: f64) -> Result<Self> {
        let (a, b) = sextic_coefficients(mu)?;
        Ok(RegularizedField { mu, a, b })
    }

    pub fn hamiltonian(&self, s: &Vector4<f64>) -> f64 {
        let (x, y, px, py) = (s[0], s[1], s[2], s[3]);
        let (x2, y2) = (x * x, y * y);
        let r = x2 + y2;
        let e = 4.0 * self.b - self.a;
        0.5 * (r + px * px + py * py)
            + 2.0 * r * (y * px - x * py)
            + 2.0 * (self.a * x2 * x2 * x2 + e * x2 * x2 * y2 + e * x2 * y2 * y2 + self.a * y2 * y2 * y2)
    }

    fn sextic_gradient(&self, x: f64, y: f64) -> (f64, f64) {
        let (a, e) = (self.a, 4.0 * self.b - self.a);
        let (x2, y2) = (x * x, y * y);
        (
            x * (6.0 * a * x2 * x2 + 4.0 * e * x2 * y2 + 2.0 * e * y2 * y2),
            y * (2.0 * e * x2 * x2 + 4.0 * e * x2 * y2 + 6.0 * a * y2 * y2),
        )
    }

    fn hessian(&self, s: &Vector4<f64>) -> Matrix4<f64> {
        let (x, y, px, py) = (s[0], s[1], s[2], s[3]);
        let (a, e) = (self.a, 4.0 * self.b - self.a);
        let (x2, y2) = (x * x, y * y);
        let r = x2 + y2;
        let l = y * px - x * py;
        let sxx = 30.0 * a * x2 * x2 + 12.0 * e * x2 * y2 + 2.0 * e * y2 * y2;
        let syy = 2.0 * e * x2 * x2 + 12.0 * e * x2 * y2 + 30.0 * a * y2 * y2;
        let sxy = 8.0 * e * x * y * (x2 + y2);
        let hxx = 1.0 + 4.0 * l - 8.0 * x * py + 2.0 * sxx;
        let hyy = 1.0 + 4.0 * l + 8.0 * y * px + 2.0 * syy;
        let hxy = 4.0 * x * px - 4.0 * y * py + 2.0 * sxy;
        let hxpx = 4.0 * x * y;
        let hxpy = -4.0 * x2 - 2.0 * r;
        let hypx = 4.0 * y2 + 2.0 * r;
        let hypy = -4.0 * x * y;
        Matrix4::new(
            hxx, hxy, hxpx, hxpy, //
            hxy, hyy, hypx, hypy, //
            hxpx, hypx, 1.0, 0.0, //
            hxpy, hypy, 0.0, 1.0,
        )
    }

    /// `dt/dτ` at a regularized state.
    pub fn time_rate(s: &Vector4<f64>) -> f64 {
        4.0 * (s[0] * s[0] + s[1] * s[1])
    }
}

impl VectorField<4> for RegularizedField {
    fn eval(&self, s: &Vector4<f64>) -> Vector4<f64> {
        let (x, y, px, py) = (s[0], s[1], s[2], s[3]);
        let r = x * x + y * y;
        let l = y * px - x * py;
        let (sx, sy) = self.sextic_gradient(x, y);
        Vector4::new(
            px + 2.0 * r * y,
            py - 2.0 * r * x,
            -x - 4.0 * x * l + 2.0 * r * py - 2.0 * sx,
            -y - 4.0 * y * l - 2.0 * r * px - 2.0 * sy,
        )
    }

    fn jacobian(&self, s: &Vector4<f64>) -> Matrix4<f64> {
        let h = self.hessian(s);
        let mut j = Matrix4::zeros();
        for c in 0..4 {
            j[(0, c)] = h[(2, c)];
            j[(1, c)] = h[(3, c)];
            j[(2, c)] = -h[(0, c)];
            j[(3, c)] = -h[(1, c)];
        }
        j
    }

    fn id(&self) -> String {
        format!("levi-civita(mu={})", self.mu)
    }
}

/// Regularized field with physical time carried as a fifth component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WithPhysicalTime(pub RegularizedField);

impl VectorField<5> for WithPhysicalTime {
    fn eval(&self, s: &SVector<f64, 5>) -> SVector<f64, 5> {
        let base = Vector4::new(s[0], s[1], s[2], s[3]);
        let f = self.0.eval(&base);
        SVector::<f64, 5>::from([f[0], f[1], f[2], f[3], RegularizedField::time_rate(&base)])
    }

    fn id(&self) -> String {
        format!("{}+t", self.0.id())
    }
}

/// `P_Y > 0` on the section `Y = 0` at energy `h_reg`: the larger root of
/// `½P_Y² − 2X³P_Y + (½(X² + P_X²) + 2A X⁶ − h_reg) = 0`.
pub fn momentum_on_section(x: f64, px: f64, h_reg: f64, mu: f64) -> Result<f64> {
    let (a, _) = sextic_coefficients(mu)?;
    let x3 = x * x * x;
    let c = 0.5 * (x * x + px * px) + 2.0 * a * x3 * x3 - h_reg;
    let disc = 4.0 * x3 * x3 - 2.0 * c;
    if disc < 0.0 {
        return Err(Error::Inadmissible(format!(
            "no real P_Y at X = {x}, P_X = {px} (discriminant {disc:e})"
        )));
    }
    let py = 2.0 * x3 + disc.sqrt();
    if py <= 0.0 {
        return Err(Error::Inadmissible(format!("no positive P_Y at X = {x}, P_X = {px}")));
    }
    Ok(py)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{flow, propagate, Tolerances};
    use crate::model::HillModel;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn lc_examples() {
        assert_eq!(lc_map(1.0, 0.0), (1.0, 0.0));
        assert_eq!(lc_map(0.0, 1.0), (-1.0, 0.0));
        let a = lc_momentum_map(0.3, -0.2, 0.5, 0.7).unwrap();
        let b = lc_momentum_map(-0.3, 0.2, -0.5, -0.7).unwrap();
        assert_eq!(a, b);
        assert_eq!(lc_map(0.3, -0.2), lc_map(-0.3, 0.2));
        assert!(lc_momentum_map(0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn energy_examples() {
        assert_abs_diff_eq!(regularized_energy(4.0).unwrap(), 0.0625);
        assert_abs_diff_eq!(regularized_energy(4.329636).unwrap(), 0.055500, epsilon = 5e-7);
        assert_eq!(regularized_energy(-3.7).unwrap(), regularized_energy(3.7).unwrap());
        assert!(regularized_energy(0.0).is_err());
    }

    #[test]
    fn classical_sextic() {
        let f = RegularizedField::new(0.0).unwrap();
        assert_eq!((f.a, f.b), (-2.0, 1.0));
        for (x, y) in [(0.3f64, 0.4f64), (-0.7, 0.2), (1.1, -0.9)] {
            let s = Vector4::new(x, y, 0.0, 0.0);
            let quad = 0.5 * (x * x + y * y);
            let printed = -4.0
                * (x.powi(6) - 3.0 * x.powi(4) * y * y - 3.0 * x * x * y.powi(4) + y.powi(6));
            assert_abs_diff_eq!(f.hamiltonian(&s) - quad, printed, epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn antipodal_invariance(mu in 0.0..=0.5f64, x in -2.0..2.0f64, y in -2.0..2.0f64,
                                px in -2.0..2.0f64, py in -2.0..2.0f64) {
            let f = RegularizedField::new(mu).unwrap();
            let s = Vector4::new(x, y, px, py);
            prop_assert_eq!(f.hamiltonian(&s), f.hamiltonian(&-s));
            prop_assert_eq!(f.eval(&-s), -f.eval(&s));
        }

        #[test]
        fn field_is_symplectic_gradient(mu in 0.0..=0.5f64, x in -1.5..1.5f64, y in -1.5..1.5f64,
                                        px in -1.5..1.5f64, py in -1.5..1.5f64) {
            let f = RegularizedField::new(mu).unwrap();
            let s = Vector4::new(x, y, px, py);
            let h = 1e-6;
            let d = |i: usize| {
                let mut a = s;
                let mut b = s;
                a[i] += h;
                b[i] -= h;
                (f.hamiltonian(&a) - f.hamiltonian(&b)) / (2.0 * h)
            };
            let sg = Vector4::new(d(2), d(3), -d(0), -d(1));
            let v = f.eval(&s);
            prop_assert!((v - sg).norm() <= 1e-6 * v.norm().max(1.0));
        }

        #[test]
        fn jacobian_matches_differences(mu in 0.0..=0.5f64, x in -1.0..1.0f64, y in -1.0..1.0f64,
                                        px in -1.0..1.0f64, py in -1.0..1.0f64) {
            let f = RegularizedField::new(mu).unwrap();
            let s = Vector4::new(x, y, px, py);
            let exact = f.jacobian(&s);
            let mut fd = Matrix4::zeros();
            for j in 0..4 {
                let mut a = s;
                let mut b = s;
                a[j] += 1e-6;
                b[j] -= 1e-6;
                fd.set_column(j, &((f.eval(&a) - f.eval(&b)) / 2e-6));
            }
            prop_assert!((exact - fd).abs().max() <= 1e-6 * exact.abs().max().max(1.0));
        }

        #[test]
        fn round_trip(mu in 0.0..0.5f64, c in 1.0..8.0f64, x in -1.5..1.5f64, y in -1.5..1.5f64,
                      vx in -2.0..2.0f64, vy in -2.0..2.0f64) {
            prop_assume!(x.hypot(y) > 1e-3);
            let _ = mu;
            let ctx = EnergyContext::new(c).unwrap();
            let s = Vector4::new(x, y, vx, vy);
            let r = ctx.to_regularized(&s).unwrap();
            prop_assert!(r[0] > 0.0 || (r[0] == 0.0 && r[1] >= 0.0));
            let back = ctx.to_physical(&r).unwrap();
            prop_assert!((back - s).norm() <= 1e-12 * s.norm().max(1.0));
        }

        #[test]
        fn energy_correspondence(mu in 0.0..0.5f64, x in -1.0..1.0f64, y in -1.0..1.0f64,
                                 vx in -1.0..1.0f64, vy in -1.0..1.0f64) {
            prop_assume!(x.hypot(y) > 1e-2);
            let m = HillModel::rotated(mu).unwrap();
            let s = Vector4::new(x, y, vx, vy);
            let c = m.jacobi(&s);
            prop_assume!(c > 0.5);
            let ctx = EnergyContext::new(c).unwrap();
            let f = RegularizedField::new(mu).unwrap();
            let r = ctx.to_regularized(&s).unwrap();
            prop_assert!((f.hamiltonian(&r) - ctx.h_reg).abs() <= 1e-10 * ctx.h_reg.max(1.0));
        }

        #[test]
        fn section_momentum_on_level(mu in 0.0..=0.5f64, x in -0.6..0.6f64, px in -0.2..0.2f64) {
            let h = regularized_energy(4.3).unwrap();
            if let Ok(py) = momentum_on_section(x, px, h, mu) {
                let f = RegularizedField::new(mu).unwrap();
                let e = f.hamiltonian(&Vector4::new(x, 0.0, px, py));
                prop_assert!((e - h).abs() <= 1e-12);
                prop_assert!(py > 0.0);
            }
        }
    }

    #[test]
    fn section_momentum_examples() {
        let h = 0.06;
        assert_abs_diff_eq!(momentum_on_section(0.0, 0.0, h, 0.1).unwrap(), (2.0 * h).sqrt());
        assert!(matches!(momentum_on_section(0.0, 1.0, h, 0.1), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn energy_conserved_over_long_span() {
        // Above C_L1 the motion near the tertiary is bounded.
        let f = RegularizedField::new(0.00095).unwrap();
        let h = regularized_energy(4.5).unwrap();
        let py = momentum_on_section(0.25, 0.0, h, 0.00095).unwrap();
        let s0 = Vector4::new(0.25, 0.0, 0.0, py);
        let traj = propagate(&f, 0.0, s0, 1000.0, &Tolerances::default()).unwrap();
        let drift = traj.states.iter().map(|s| (f.hamiltonian(s) - h).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-10, "{drift}");
    }

    #[test]
    fn trajectories_correspond() {
        let mu = 0.00095;
        let m = HillModel::rotated(mu).unwrap();
        let f = RegularizedField::new(mu).unwrap();
        let s0 = Vector4::new(0.3, 0.05, 0.1, 0.9);
        let ctx = EnergyContext::new(m.jacobi(&s0)).unwrap();
        let r0 = ctx.to_regularized(&s0).unwrap();
        let tol = Tolerances::default();
        let aug = WithPhysicalTime(f);
        let z0 = SVector::<f64, 5>::from([r0[0], r0[1], r0[2], r0[3], 0.0]);
        let traj = propagate(&aug, 0.0, z0, 2.0, &tol).unwrap();
        for z in traj.states.iter().step_by(7) {
            let t = z[4];
            let phys = ctx.to_physical(&Vector4::new(z[0], z[1], z[2], z[3])).unwrap();
            let direct = flow(&m, s0, t, &tol).unwrap();
            assert!((phys - direct).norm() < 1e-8, "t = {t}: {}", (phys - direct).norm());
        }
    }

    #[test]
    fn regularized_flow_passes_through_collision() {
        // A radial fall onto the tertiary is singular in physical coordinates
        // but smooth here: the orbit crosses X = Y = 0 and comes out.
        let f = RegularizedField::new(0.1).unwrap();
        let h = regularized_energy(5.0).unwrap();
        let s0 = Vector4::new(0.0, 0.0, (2.0 * h).sqrt(), 0.0);
        let traj = propagate(&f, 0.0, s0, 3.0, &Tolerances::default()).unwrap();
        assert!(traj.completed());
        let drift = traj.states.iter().map(|s| (f.hamiltonian(s) - h).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-12);
    }
}
