//! The Hill four-body model in both frames, the full restricted four-body
//! reference model and the scaling-limit comparison between them.
//!
//! Planar states are `(x, y, ẋ, ẏ)`, spatial states `(x, y, z, ẋ, ẏ, ż)`.
//! States carry velocities; momenta appear only where a Hamiltonian is
//! evaluated.

use nalgebra::{Matrix2, Matrix4, Matrix6, Vector2, Vector3, Vector4, Vector6};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::{VectorField, R_MIN};
use crate::io::Csv;

/// Coordinate frame of the Hill model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Synodic axes translated to the tertiary.
    Unrotated,
    /// Axes aligned with the eigenvectors of the quadratic part of Ω.
    Rotated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub mu: f64,
    pub frame: Frame,
}

impl ModelParams {
    pub fn new(mu: f64, frame: Frame) -> Result<Self> {
        check_mu(mu)?;
        Ok(ModelParams { mu, frame })
    }
}

pub(crate) fn check_mu(mu: f64) -> Result<()> {
    if (0.0..=0.5).contains(&mu) {
        Ok(())
    } else {
        Err(Error::MassRatio(mu))
    }
}

/// Spectral data of the quadratic form of the unrotated potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenStructure {
    pub d: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Eigenvector of `lambda1`; absent at μ = 1/2 where the closed form is singular.
    pub v1: Option<Vector2<f64>>,
    /// Eigenvector of `lambda2`; absent at μ = 1/2.
    pub v2: Option<Vector2<f64>>,
    /// Columns `(v2, v1)`; maps rotated coordinates to unrotated ones.
    pub rotation: Matrix2<f64>,
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
}

impl EigenStructure {
    /// The coefficient `−v₂₂/v₁₁` of the frame change.
    pub fn symplectic_coefficient(&self) -> f64 {
        -self.rotation[(1, 0)] / self.rotation[(0, 1)]
    }
}

pub fn eigen_structure(mu: f64) -> Result<EigenStructure> {
    check_mu(mu)?;
    let d = (1.0 - 3.0 * mu + 3.0 * mu * mu).sqrt();
    let lambda1 = 1.5 * (1.0 - d);
    let lambda2 = 1.5 * (1.0 + d);
    let (v1, v2, rotation) = if mu == 0.5 {
        // Limit of the eigenvector formulas as μ → 1/2: v2 → (0, 1), v1 → (−1, 0).
        (None, None, Matrix2::new(0.0, -1.0, 1.0, 0.0))
    } else {
        // (1 − 2d)/(2μ − 1) rewritten as 3(1 − 2μ)/(1 + 2d) to avoid cancellation near μ = 1/2.
        let s3 = 3f64.sqrt();
        let t1 = -(1.0 + 2.0 * d) / (1.0 - 2.0 * mu);
        let t2 = 3.0 * (1.0 - 2.0 * mu) / (1.0 + 2.0 * d);
        let v1 = Vector2::new(t1, s3) / t1.hypot(s3);
        let v2 = Vector2::new(t2, s3) / t2.hypot(s3);
        (Some(v1), Some(v2), Matrix2::from_columns(&[v2, v1]))
    };
    Ok(EigenStructure {
        d,
        lambda1,
        lambda2,
        v1,
        v2,
        rotation,
        a_coef: (1.0 - lambda2) / 2.0,
        b_coef: (1.0 - lambda1) / 2.0,
        c_coef: 0.5,
    })
}

/// Quadratic form `M` of the unrotated potential, `Ω = ½ pᵀMp − ½z² + 1/r`.
pub fn unrotated_quadratic(mu: f64) -> Matrix2<f64> {
    let k = 3.0 * 3f64.sqrt() / 4.0 * (1.0 - 2.0 * mu);
    Matrix2::new(0.75, k, k, 2.25)
}

/// The Hill model at one mass ratio and frame. Implements the planar field;
/// see [`SpatialHill`] for the spatial one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillModel {
    pub params: ModelParams,
    pub eig: EigenStructure,
    quad: Matrix2<f64>,
    /// Collision guard radius.
    pub r_min: f64,
}

impl HillModel {
    pub fn new(mu: f64, frame: Frame) -> Result<Self> {
        let params = ModelParams::new(mu, frame)?;
        let eig = eigen_structure(mu)?;
        let quad = match frame {
            Frame::Unrotated => unrotated_quadratic(mu),
            Frame::Rotated => Matrix2::new(eig.lambda2, 0.0, 0.0, eig.lambda1),
        };
        Ok(HillModel { params, eig, quad, r_min: R_MIN })
    }

    pub fn rotated(mu: f64) -> Result<Self> {
        Self::new(mu, Frame::Rotated)
    }

    pub fn unrotated(mu: f64) -> Result<Self> {
        Self::new(mu, Frame::Unrotated)
    }

    pub fn mu(&self) -> f64 {
        self.params.mu
    }

    pub fn frame(&self) -> Frame {
        self.params.frame
    }

    /// The same model expressed in `frame`.
    pub fn in_frame(&self, frame: Frame) -> HillModel {
        let mut m = HillModel::new(self.params.mu, frame).expect("mass ratio already validated");
        m.r_min = self.r_min;
        m
    }

    pub fn quadratic(&self) -> Matrix2<f64> {
        self.quad
    }

    /// Ω at a spatial point.
    pub fn potential(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        let r = (x * x + y * y + z * z).sqrt();
        if r == 0.0 {
            return Err(Error::Singularity("collision with the tertiary".into()));
        }
        Ok(self.potential_unchecked(x, y, z))
    }

    fn potential_unchecked(&self, x: f64, y: f64, z: f64) -> f64 {
        let q = &self.quad;
        let r = (x * x + y * y + z * z).sqrt();
        0.5 * (q[(0, 0)] * x * x + 2.0 * q[(0, 1)] * x * y + q[(1, 1)] * y * y) - 0.5 * z * z
            + 1.0 / r
    }

    /// (Ω_x, Ω_y, Ω_z).
    pub fn gradient(&self, x: f64, y: f64, z: f64) -> Result<Vector3<f64>> {
        let r2 = x * x + y * y + z * z;
        if r2 == 0.0 {
            return Err(Error::Singularity("collision with the tertiary".into()));
        }
        Ok(self.gradient_unchecked(x, y, z))
    }

    fn gradient_unchecked(&self, x: f64, y: f64, z: f64) -> Vector3<f64> {
        let q = &self.quad;
        let r2 = x * x + y * y + z * z;
        let r3 = r2 * r2.sqrt();
        Vector3::new(
            q[(0, 0)] * x + q[(0, 1)] * y - x / r3,
            q[(0, 1)] * x + q[(1, 1)] * y - y / r3,
            -z - z / r3,
        )
    }

    /// Planar second partials (Ω_xx, Ω_yy, Ω_xy) at z = 0.
    pub fn partials(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let q = &self.quad;
        let r2 = x * x + y * y;
        let r = r2.sqrt();
        let r3 = r2 * r;
        let r5 = r3 * r2;
        (
            q[(0, 0)] + 3.0 * x * x / r5 - 1.0 / r3,
            q[(1, 1)] + 3.0 * y * y / r5 - 1.0 / r3,
            q[(0, 1)] + 3.0 * x * y / r5,
        )
    }

    /// Jacobi constant of a planar state.
    pub fn jacobi(&self, s: &Vector4<f64>) -> f64 {
        2.0 * self.potential_unchecked(s[0], s[1], 0.0) - s[2] * s[2] - s[3] * s[3]
    }

    /// Jacobi constant of a spatial state.
    pub fn jacobi_spatial(&self, s: &Vector6<f64>) -> f64 {
        2.0 * self.potential_unchecked(s[0], s[1], s[2])
            - s.fixed_rows::<3>(3).norm_squared()
    }

    /// Rotated-frame components of an unrotated planar state.
    pub fn to_rotated(&self, s: &Vector4<f64>) -> Vector4<f64> {
        let rt = self.eig.rotation.transpose();
        let p = rt * Vector2::new(s[0], s[1]);
        let v = rt * Vector2::new(s[2], s[3]);
        Vector4::new(p[0], p[1], v[0], v[1])
    }

    /// Unrotated-frame components of a rotated planar state.
    pub fn to_unrotated(&self, s: &Vector4<f64>) -> Vector4<f64> {
        let r = self.eig.rotation;
        let p = r * Vector2::new(s[0], s[1]);
        let v = r * Vector2::new(s[2], s[3]);
        Vector4::new(p[0], p[1], v[0], v[1])
    }

    pub fn spatial(self) -> SpatialHill {
        SpatialHill(self)
    }
}

impl VectorField<4> for HillModel {
    fn eval(&self, s: &Vector4<f64>) -> Vector4<f64> {
        let g = self.gradient_unchecked(s[0], s[1], 0.0);
        Vector4::new(s[2], s[3], g[0] + 2.0 * s[3], g[1] - 2.0 * s[2])
    }

    fn guard(&self, s: &Vector4<f64>) -> Option<String> {
        let r = s[0].hypot(s[1]);
        (r < self.r_min).then(|| format!("collision guard: r = {r:e} < {:e}", self.r_min))
    }

    fn jacobian(&self, s: &Vector4<f64>) -> Matrix4<f64> {
        let (xx, yy, xy) = self.partials(s[0], s[1]);
        Matrix4::new(
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            xx, xy, 0.0, 2.0, //
            xy, yy, -2.0, 0.0,
        )
    }

    fn id(&self) -> String {
        format!("hill-{:?}(mu={})", self.params.frame, self.params.mu).to_lowercase()
    }
}

/// Spatial Hill field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialHill(pub HillModel);

impl VectorField<6> for SpatialHill {
    fn eval(&self, s: &Vector6<f64>) -> Vector6<f64> {
        let g = self.0.gradient_unchecked(s[0], s[1], s[2]);
        Vector6::new(s[3], s[4], s[5], g[0] + 2.0 * s[4], g[1] - 2.0 * s[3], g[2])
    }

    fn guard(&self, s: &Vector6<f64>) -> Option<String> {
        let r = s.fixed_rows::<3>(0).norm();
        (r < self.0.r_min).then(|| format!("collision guard: r = {r:e} < {:e}", self.0.r_min))
    }

    fn id(&self) -> String {
        format!("{}-spatial", self.0.id())
    }
}

/// A position and velocity in a tagged frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub frame: Frame,
    pub planar: bool,
}

impl PhaseState {
    pub fn planar(x: f64, y: f64, xdot: f64, ydot: f64, frame: Frame) -> Self {
        PhaseState {
            position: Vector3::new(x, y, 0.0),
            velocity: Vector3::new(xdot, ydot, 0.0),
            frame,
            planar: true,
        }
    }

    pub fn spatial(position: Vector3<f64>, velocity: Vector3<f64>, frame: Frame) -> Self {
        PhaseState { position, velocity, frame, planar: false }
    }

    pub fn from_vec4(s: &Vector4<f64>, frame: Frame) -> Self {
        Self::planar(s[0], s[1], s[2], s[3], frame)
    }

    pub fn vec4(&self) -> Vector4<f64> {
        Vector4::new(self.position[0], self.position[1], self.velocity[0], self.velocity[1])
    }

    pub fn vec6(&self) -> Vector6<f64> {
        let p = &self.position;
        let v = &self.velocity;
        Vector6::new(p[0], p[1], p[2], v[0], v[1], v[2])
    }
}

/// Ω (or Ω̄ in the rotated frame) at `p`; `p.z` is ignored unless `spatial`.
pub fn effective_potential(p: &Vector3<f64>, spatial: bool, params: &ModelParams) -> Result<f64> {
    let m = HillModel::new(params.mu, params.frame)?;
    let z = if spatial { p[2] } else { 0.0 };
    m.potential(p[0], p[1], z)
}

/// Velocity and acceleration of `s` in its own frame.
pub fn vector_field(s: &PhaseState, mu: f64) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let m = HillModel::new(mu, s.frame)?;
    let z = if s.planar { 0.0 } else { s.position[2] };
    let g = m.gradient(s.position[0], s.position[1], z)?;
    let v = &s.velocity;
    let acc = Vector3::new(
        g[0] + 2.0 * v[1],
        g[1] - 2.0 * v[0],
        if s.planar { 0.0 } else { g[2] },
    );
    let vel = if s.planar { Vector3::new(v[0], v[1], 0.0) } else { *v };
    Ok((vel, acc))
}

/// `C = −‖v‖² + 2Ω`.
pub fn jacobi_constant(s: &PhaseState, mu: f64) -> Result<f64> {
    let m = HillModel::new(mu, s.frame)?;
    if s.planar {
        m.potential(s.position[0], s.position[1], 0.0)?;
        Ok(m.jacobi(&s.vec4()))
    } else {
        m.potential(s.position[0], s.position[1], s.position[2])?;
        Ok(m.jacobi_spatial(&s.vec6()))
    }
}

/// Rectangular sample grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::Domain(format!("grid needs at least 2×2 samples, got {nx}×{ny}")));
        }
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.1 > r.0;
        if !ok(x_range) || !ok(y_range) {
            return Err(Error::Domain("grid ranges must be finite and increasing".into()));
        }
        Ok(GridSpec { x_range, y_range, nx, ny })
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_range.0 + (self.x_range.1 - self.x_range.0) * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_range.0 + (self.y_range.1 - self.y_range.0) * j as f64 / (self.ny - 1) as f64
    }

    /// Grid nodes in row-major order (y outer, x inner).
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (self.x(i), self.y(j))))
    }
}

/// Allowed-motion mask `2Ω ≥ C` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HillRegion {
    pub grid: GridSpec,
    pub jacobi: f64,
    pub mu: f64,
    pub frame: Frame,
    /// Row-major, y outer.
    pub allowed: Vec<bool>,
}

impl HillRegion {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.allowed[j * self.grid.nx + i]
    }

    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["x", "y", "allowed"]);
        for ((x, y), a) in self.grid.points().zip(&self.allowed) {
            csv.row(&[crate::io::num(x), crate::io::num(y), (*a as u8).to_string()]);
        }
        csv.finish()
    }

    /// Grid metadata for the CSV.
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "mu": self.mu,
            "jacobi": self.jacobi,
            "frame": self.frame,
            "x_range": [self.grid.x_range.0, self.grid.x_range.1],
            "y_range": [self.grid.y_range.0, self.grid.y_range.1],
            "nx": self.grid.nx,
            "ny": self.grid.ny,
            "order": "row-major, y outer",
            "allowed_cells": self.allowed.iter().filter(|a| **a).count(),
        })
    }

    /// Labels 4-connected components of allowed cells; returns the label grid
    /// (0 for forbidden cells) and the component count.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut label = vec![0usize; nx * ny];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..nx * ny {
            if !self.allowed[start] || label[start] != 0 {
                continue;
            }
            count += 1;
            label[start] = count;
            stack.push(start);
            while let Some(k) = stack.pop() {
                let (i, j) = (k % nx, k / nx);
                let mut visit = |n: usize| {
                    if self.allowed[n] && label[n] == 0 {
                        label[n] = count;
                        stack.push(n);
                    }
                };
                if i > 0 {
                    visit(k - 1);
                }
                if i + 1 < nx {
                    visit(k + 1);
                }
                if j > 0 {
                    visit(k - nx);
                }
                if j + 1 < ny {
                    visit(k + nx);
                }
            }
        }
        (label, count)
    }
}

pub fn hill_region_mask(grid: &GridSpec, c: f64, params: &ModelParams) -> Result<HillRegion> {
    let m = HillModel::new(params.mu, params.frame)?;
    let allowed = grid
        .points()
        .map(|(x, y)| {
            if x == 0.0 && y == 0.0 {
                true
            } else {
                2.0 * m.potential_unchecked(x, y, 0.0) >= c
            }
        })
        .collect();
    Ok(HillRegion { grid: *grid, jacobi: c, mu: params.mu, frame: params.frame, allowed })
}

/// Full equilateral restricted four-body configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R4bpConfig {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub primaries: [Vector3<f64>; 3],
}

impl R4bpConfig {
    /// Masses must satisfy `m1 ≥ m2 ≥ m3 ≥ 0` and sum to one. `m3 = 0` is the
    /// restricted three-body limit.
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        if !(m1 >= m2 && m2 >= m3 && m3 >= 0.0) {
            return Err(Error::Domain(format!("masses must satisfy m1 ≥ m2 ≥ m3 ≥ 0, got {m1}, {m2}, {m3}")));
        }
        let primaries = r4bp_primaries(m1, m2, m3)?;
        Ok(R4bpConfig { m1, m2, m3, primaries })
    }

    /// Masses `m1 = (1−μ)(1−m3)`, `m2 = μ(1−m3)`.
    pub fn from_mu(mu: f64, m3: f64) -> Result<Self> {
        check_mu(mu)?;
        Self::new((1.0 - mu) * (1.0 - m3), mu * (1.0 - m3), m3)
    }

    pub fn masses(&self) -> [f64; 3] {
        [self.m1, self.m2, self.m3]
    }

    pub fn potential(&self, p: &Vector3<f64>) -> f64 {
        let mut omega = 0.5 * (p[0] * p[0] + p[1] * p[1]);
        for (m, q) in self.masses().iter().zip(&self.primaries) {
            if *m > 0.0 {
                omega += m / (p - q).norm();
            }
        }
        omega
    }

    pub fn jacobi(&self, s: &Vector6<f64>) -> f64 {
        let p = Vector3::new(s[0], s[1], s[2]);
        2.0 * self.potential(&p) - s.fixed_rows::<3>(3).norm_squared()
    }

    fn collision(&self, p: &Vector3<f64>, radius: f64) -> Option<usize> {
        self.masses()
            .iter()
            .zip(&self.primaries)
            .position(|(m, q)| *m > 0.0 && (p - q).norm() <= radius)
    }

    fn accel(&self, s: &Vector6<f64>) -> Vector3<f64> {
        let p = Vector3::new(s[0], s[1], s[2]);
        let mut g = Vector3::new(p[0], p[1], 0.0);
        for (m, q) in self.masses().iter().zip(&self.primaries) {
            if *m > 0.0 {
                let d = q - p;
                g += d * (m / d.norm().powi(3));
            }
        }
        Vector3::new(g[0] + 2.0 * s[4], g[1] - 2.0 * s[3], g[2])
    }
}

/// Equilateral positions of the three primaries with centre of mass at the
/// origin.
pub fn r4bp_primaries(m1: f64, m2: f64, m3: f64) -> Result<[Vector3<f64>; 3]> {
    if m1 < 0.0 || m2 < 0.0 || m3 < 0.0 || ((m1 + m2 + m3) - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("masses must be nonnegative and sum to 1, got {m1}, {m2}, {m3}")));
    }
    let k = m2 * (m3 - m2) + m1 * (m2 + 2.0 * m3);
    if m2 == 0.0 || k == 0.0 {
        return Err(Error::Domain(format!("degenerate masses (m2 = {m2}, K = {k})")));
    }
    let q = (m2 * m2 + m2 * m3 + m3 * m3).sqrt();
    let ak = k.abs();
    let s3 = 3f64.sqrt();
    let root = (m2.powi(3) / (q * q)).sqrt();
    let x1 = -ak * q / k;
    let x2 = ak * ((m2 - m3) * m3 + m1 * (2.0 * m2 + m3)) / (2.0 * k * q);
    let y2 = -s3 * m3 / (2.0 * m2.powf(1.5)) * root;
    let x3 = ak / (2.0 * q);
    let y3 = s3 / (2.0 * m2.sqrt()) * root;
    Ok([Vector3::new(x1, 0.0, 0.0), Vector3::new(x2, y2, 0.0), Vector3::new(x3, y3, 0.0)])
}

const BODY_NAMES: [&str; 3] = ["m1", "m2", "m3"];

/// Full R4BP field on spatial states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R4bpField {
    pub cfg: R4bpConfig,
    pub r_min: f64,
}

impl R4bpField {
    pub fn new(cfg: R4bpConfig) -> Self {
        R4bpField { cfg, r_min: R_MIN }
    }
}

impl VectorField<6> for R4bpField {
    fn eval(&self, s: &Vector6<f64>) -> Vector6<f64> {
        let a = self.cfg.accel(s);
        Vector6::new(s[3], s[4], s[5], a[0], a[1], a[2])
    }

    fn guard(&self, s: &Vector6<f64>) -> Option<String> {
        self.cfg
            .collision(&Vector3::new(s[0], s[1], s[2]), self.r_min)
            .map(|i| format!("collision guard: near primary {}", BODY_NAMES[i]))
    }

    fn id(&self) -> String {
        format!("r4bp(m1={},m2={},m3={})", self.cfg.m1, self.cfg.m2, self.cfg.m3)
    }
}

/// Derivative of a spatial state under the full R4BP equations.
pub fn r4bp_vector_field(s: &PhaseState, cfg: &R4bpConfig) -> Result<Vector6<f64>> {
    if let Some(i) = cfg.collision(&s.position, 0.0) {
        return Err(Error::Singularity(format!("collision with primary {}", BODY_NAMES[i])));
    }
    Ok(R4bpField::new(*cfg).eval(&s.vec6()))
}

/// Full R4BP field in coordinates centred on `m3` and scaled by `m3^{1/3}`,
/// time unchanged. Its `m3 → 0` limit is the unrotated Hill field.
pub fn scaled_r4bp_field(s: &Vector6<f64>, mu: f64, m3: f64) -> Result<Vector6<f64>> {
    if !(m3 > 0.0) {
        return Err(Error::Domain(format!("scaling needs m3 > 0, got {m3}")));
    }
    let cfg = R4bpConfig::from_mu(mu, m3)?;
    let l = m3.cbrt();
    let p3 = cfg.primaries[2];
    let xi = Vector3::new(s[0], s[1], s[2]);
    let rxi = xi.norm();
    if rxi == 0.0 {
        return Err(Error::Singularity("collision with primary m3".into()));
    }
    let q = xi * l;
    // Forces are evaluated relative to m3 so that the central-configuration
    // cancellation happens between quantities of order one.
    let mut rest = Vector3::new(q[0] + p3[0], q[1] + p3[1], 0.0);
    for i in 0..2 {
        let m = cfg.masses()[i];
        let d = cfg.primaries[i] - p3 - q;
        let r = d.norm();
        if r == 0.0 {
            return Err(Error::Singularity(format!("collision with primary {}", BODY_NAMES[i])));
        }
        rest += d * (m / (r * r * r));
    }
    let g = rest / l - xi / (rxi * rxi * rxi);
    Ok(Vector6::new(s[3], s[4], s[5], g[0] + 2.0 * s[4], g[1] - 2.0 * s[3], g[2]))
}

/// Deterministic sample of the unit ball: radii in `[0.1, 1]`, directions on
/// a Fibonacci sphere, zero velocity.
pub fn unit_ball_samples(n: usize) -> Vec<Vector6<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let u = (k as f64 + 0.5) / n as f64;
            let zc = 1.0 - 2.0 * u;
            let rho = (1.0 - zc * zc).sqrt();
            let phi = golden * k as f64;
            let r = 0.1 + 0.9 * (((k * 7919) % n) as f64 + 0.5) / n as f64;
            Vector6::new(r * rho * phi.cos(), r * rho * phi.sin(), r * zc, 0.0, 0.0, 0.0)
        })
        .collect()
}

/// Sup-norm field differences between the scaled R4BP and the Hill field for
/// each `m3`, with the least-squares log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub mu: f64,
    pub m3: Vec<f64>,
    pub sup_diff: Vec<f64>,
    pub slope: f64,
    pub samples: usize,
}

pub fn field_convergence(mu: f64, m3_values: &[f64], samples: usize) -> Result<ConvergenceStudy> {
    if m3_values.len() < 2 {
        return Err(Error::Domain("need at least two m3 values".into()));
    }
    let hill = HillModel::unrotated(mu)?.spatial();
    let pts = unit_ball_samples(samples);
    let mut sup = Vec::with_capacity(m3_values.len());
    for &m3 in m3_values {
        let mut worst: f64 = 0.0;
        for p in &pts {
            let d = (scaled_r4bp_field(p, mu, m3)? - hill.eval(p)).norm();
            worst = worst.max(d);
        }
        sup.push(worst);
    }
    let xs: Vec<f64> = m3_values.iter().map(|m| m.log10()).collect();
    let ys: Vec<f64> = sup.iter().map(|s| s.log10()).collect();
    Ok(ConvergenceStudy {
        mu,
        m3: m3_values.to_vec(),
        sup_diff: sup,
        slope: fit_slope(&xs, &ys),
        samples,
    })
}

pub(crate) fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Spatial Jacobian of the R4BP field by finite differences, exposed for
/// variational use.
pub fn r4bp_jacobian(cfg: &R4bpConfig, s: &Vector6<f64>) -> Matrix6<f64> {
    R4bpField::new(*cfg).jacobian(s)
}
