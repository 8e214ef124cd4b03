//! Symmetric periodic orbits of the planar rotated Hill problem.
//!
//! Orbits start perpendicular to the x-axis at `(x0, 0, 0, ẏ0)`. A
//! half-period orbit meets the x-axis perpendicularly again at `T/2`; a
//! quarter-period orbit meets the y-axis perpendicularly at `T/4` and is
//! then symmetric about both axes.

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use serde::Serialize;

use crate::equilibria::{equilibrium, EquilibriumInfo, Kind, Label};
use crate::error::{Error, Result};
use crate::integrate::{
    brent, next_crossing, pack_variational, stm, unpack_variational, Direction, Tolerances,
    Variational, VectorField,
};
use crate::io::Csv;
use crate::model::HillModel;
use crate::parallel;

pub const RESIDUAL_TOL: f64 = 1e-11;
pub const MAX_ITERATIONS: usize = 25;
/// Displacement below which a root is not told apart from the symmetric
/// branch.
pub const BRANCH_SEPARATION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    #[serde(rename = "g")]
    GFamily,
    #[serde(rename = "g'")]
    GPrime,
    LyapunovL1,
    LyapunovL2,
    Retrograde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Symmetry {
    /// Perpendicular x-axis crossing at `T/2`.
    Half,
    /// Perpendicular y-axis crossing at `T/4`.
    Quarter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fixed {
    X0,
    Jacobi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub mu: f64,
    pub x0: f64,
    pub ydot0: f64,
    pub period: f64,
    pub jacobi: f64,
    pub stability_index: f64,
    pub family: Family,
    pub symmetric: bool,
    pub symmetry: Symmetry,
    /// Final perpendicularity residual of the corrector.
    pub residual: f64,
    pub iterations: usize,
}

impl PeriodicOrbit {
    pub fn state0(&self) -> Vector4<f64> {
        Vector4::new(self.x0, 0.0, 0.0, self.ydot0)
    }

    /// Direct (prograde) when the angular momentum at the start is positive.
    pub fn is_direct(&self) -> bool {
        self.x0 * self.ydot0 > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectorOptions {
    pub tol: Tolerances,
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Longest time searched for the symmetry crossing.
    pub t_max: f64,
    pub symmetry: Symmetry,
}

impl Default for CorrectorOptions {
    fn default() -> Self {
        CorrectorOptions {
            tol: Tolerances::default(),
            residual_tol: RESIDUAL_TOL,
            max_iterations: MAX_ITERATIONS,
            t_max: 50.0,
            symmetry: Symmetry::Half,
        }
    }
}

struct Shot {
    t: f64,
    residual: f64,
    /// ∂residual/∂(x0, ẏ0) along the constraint surface.
    grad: Vector2<f64>,
}

/// Integrates with the STM to the symmetry crossing and linearizes the
/// perpendicularity residual with respect to the initial `(x0, ẏ0)`.
fn shoot(model: &HillModel, s0: Vector4<f64>, opts: &CorrectorOptions) -> Result<Shot> {
    let (event_ix, res_ix) = match opts.symmetry {
        Symmetry::Half => (1usize, 2usize),
        Symmetry::Quarter => (0, 3),
    };
    let var = Variational(*model);
    let start = pack_variational(&s0, &Matrix4::identity());
    let c = next_crossing(&var, start, opts.t_max, &opts.tol, move |y| y[event_ix], Direction::Any, |_| true)?
        .ok_or_else(|| Error::Domain(format!("no symmetry crossing within t = {}", opts.t_max)))?;
    let (end, phi) = unpack_variational(&c.y);
    let f = model.eval(&end);
    let k = f[res_ix] / f[event_ix];
    let d = |p: usize| phi[(res_ix, p)] - k * phi[(event_ix, p)];
    Ok(Shot { t: c.t, residual: end[res_ix], grad: Vector2::new(d(0), d(3)) })
}

fn ydot_on_level(model: &HillModel, x0: f64, c: f64, sign: f64) -> Result<(f64, f64)> {
    let om = model.potential(x0, 0.0, 0.0)?;
    let v2 = 2.0 * om - c;
    if v2 <= 0.0 {
        return Err(Error::Inadmissible(format!("x0 = {x0} outside the Hill region of C = {c}")));
    }
    let v = sign * v2.sqrt();
    let omx = model.gradient(x0, 0.0, 0.0)?[0];
    Ok((v, omx / v))
}

/// Differential correction of a symmetric periodic orbit from `(x0, ẏ0)`.
pub fn correct_symmetric(guess: (f64, f64), mu: f64, fixed: Fixed) -> Result<PeriodicOrbit> {
    let model = HillModel::rotated(mu)?;
    correct_with(&model, guess, fixed, &CorrectorOptions::default())
}

pub fn correct_with(
    model: &HillModel,
    guess: (f64, f64),
    fixed: Fixed,
    opts: &CorrectorOptions,
) -> Result<PeriodicOrbit> {
    let (mut x0, mut v0) = guess;
    let c_fixed = model.jacobi(&Vector4::new(x0, 0.0, 0.0, v0));
    let sign = v0.signum();
    let mut history = Vec::new();
    for it in 0..=opts.max_iterations {
        let mut dv_dx = 0.0;
        if fixed == Fixed::Jacobi {
            (v0, dv_dx) = ydot_on_level(model, x0, c_fixed, sign)?;
        }
        let shot = shoot(model, Vector4::new(x0, 0.0, 0.0, v0), opts)?;
        history.push(shot.residual.abs());
        if !shot.residual.is_finite() {
            break;
        }
        if shot.residual.abs() <= opts.residual_tol {
            return finish(model, x0, v0, shot.t, shot.residual, it, opts);
        }
        if it == opts.max_iterations {
            break;
        }
        match fixed {
            Fixed::X0 => v0 -= shot.residual / shot.grad[1],
            Fixed::Jacobi => x0 -= shot.residual / (shot.grad[0] + shot.grad[1] * dv_dx),
        }
    }
    Err(Error::NonConvergence { iterations: history.len(), history })
}

fn finish(
    model: &HillModel,
    x0: f64,
    v0: f64,
    t_sym: f64,
    residual: f64,
    iterations: usize,
    opts: &CorrectorOptions,
) -> Result<PeriodicOrbit> {
    let period = match opts.symmetry {
        Symmetry::Half => 2.0 * t_sym,
        Symmetry::Quarter => 4.0 * t_sym,
    };
    let s0 = Vector4::new(x0, 0.0, 0.0, v0);
    let mut orbit = PeriodicOrbit {
        mu: model.mu(),
        x0,
        ydot0: v0,
        period,
        jacobi: model.jacobi(&s0),
        stability_index: f64::NAN,
        family: if x0 * v0 > 0.0 { Family::GFamily } else { Family::Retrograde },
        symmetric: true,
        symmetry: opts.symmetry,
        residual: residual.abs(),
        iterations,
    };
    let (_, idx) = monodromy_with(model, &orbit, &opts.tol)?;
    orbit.stability_index = idx;
    Ok(orbit)
}

/// Transition matrix over one period and the stability index
/// `½(trace − 2)`.
pub fn monodromy(orbit: &PeriodicOrbit, mu: f64) -> Result<(Matrix4<f64>, f64)> {
    let model = HillModel::rotated(mu)?;
    monodromy_with(&model, orbit, &Tolerances::default())
}

fn monodromy_with(model: &HillModel, orbit: &PeriodicOrbit, tol: &Tolerances) -> Result<(Matrix4<f64>, f64)> {
    let (_, phi) = stm(*model, orbit.state0(), orbit.period, tol)?;
    Ok((phi, 0.5 * (phi.trace() - 2.0)))
}

/// Distance between the start and the state after one period.
pub fn periodicity_residual(orbit: &PeriodicOrbit, mu: f64) -> Result<f64> {
    let model = HillModel::rotated(mu)?;
    let end = crate::integrate::flow(&model, orbit.state0(), orbit.period, &Tolerances::default())?;
    Ok((end - orbit.state0()).norm())
}

/// Linear guess for a planar Lyapunov orbit about a saddle-center point:
/// start `amplitude` off the point along x, period `2π/ω`.
pub fn lyapunov_guess(point: &EquilibriumInfo, amplitude: f64, mu: f64) -> Result<(Vector4<f64>, f64)> {
    if point.kind != Kind::SaddleCenter {
        return Err(Error::Domain(format!("{:?} is not a saddle-center point", point.label)));
    }
    crate::model::check_mu(mu)?;
    let (xx, _, _) = point.second_partials;
    let p = &point.charpoly;
    let w2 = 0.5 * (p.a + p.d.sqrt());
    let w = w2.sqrt();
    let s = Vector4::new(
        point.position[0] + amplitude,
        point.position[1],
        0.0,
        -(w2 + xx) * amplitude / 2.0,
    );
    Ok((s, 2.0 * std::f64::consts::PI / w))
}

/// Lyapunov orbit corrected from the linear guess at `amplitude`.
pub fn lyapunov_orbit(mu: f64, label: Label, amplitude: f64) -> Result<PeriodicOrbit> {
    let point = equilibrium(mu, label)?
        .ok_or_else(|| Error::Domain(format!("{label:?} absent at mu = {mu}")))?;
    let (s, _) = lyapunov_guess(&point, amplitude, mu)?;
    let mut orbit = correct_symmetric((s[0], s[3]), mu, Fixed::X0)?;
    orbit.family = lyapunov_family(label)?;
    Ok(orbit)
}

fn lyapunov_family(label: Label) -> Result<Family> {
    match label {
        Label::L1 => Ok(Family::LyapunovL1),
        Label::L2 => Ok(Family::LyapunovL2),
        _ => Err(Error::Domain(format!("{label:?} has no planar Lyapunov family"))),
    }
}

/// Lyapunov orbit of the given Jacobi constant, reached by continuing in
/// amplitude from the linear regime.
pub fn lyapunov_at_energy(mu: f64, label: Label, c: f64) -> Result<PeriodicOrbit> {
    let seed = lyapunov_orbit(mu, label, 1e-4)?;
    if seed.jacobi < c {
        return Err(Error::Domain(format!(
            "C = {c} lies above the Lyapunov family start {}",
            seed.jacobi
        )));
    }
    let dir = if label == Label::L1 { 1.0 } else { -1.0 };
    let control = StepControl { initial: 1e-3, ..StepControl::default() };
    let fam = continue_family_until(&seed, dir, 2000, &control, |o| o.jacobi <= c)?;
    let last = fam.orbits.last().expect("family contains its seed");
    if last.jacobi > c {
        return Err(Error::Domain(format!(
            "family stopped at C = {} before reaching {c}: {}",
            last.jacobi,
            fam.truncated.as_deref().unwrap_or("step budget exhausted")
        )));
    }
    let prev = &fam.orbits[fam.orbits.len().saturating_sub(2)];
    let s = (c - prev.jacobi) / (last.jacobi - prev.jacobi);
    let x0 = prev.x0 + s * (last.x0 - prev.x0);
    let model = HillModel::rotated(mu)?;
    let (v0, _) = ydot_on_level(&model, x0, c, last.ydot0.signum())?;
    let mut orbit = correct_with(&model, (x0, v0), Fixed::Jacobi, &CorrectorOptions::default())?;
    orbit.family = last.family;
    Ok(orbit)
}

/// Adaptive step control for continuation in `x0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    /// Largest accepted change of the stability index per step.
    pub max_index_jump: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { initial: 1e-3, min: 1e-6, max: 1e-2, max_index_jump: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyResult {
    pub orbits: Vec<PeriodicOrbit>,
    pub truncated: Option<String>,
}

impl FamilyResult {
    /// Rows `x0,ydot0,period,jacobi,stability_index`.
    pub fn to_csv(&self) -> String {
        family_csv(&self.orbits)
    }
}

pub fn family_csv(orbits: &[PeriodicOrbit]) -> String {
    let mut csv = Csv::new(&["x0", "ydot0", "period", "jacobi", "stability_index"]);
    for o in orbits {
        csv.floats(&[o.x0, o.ydot0, o.period, o.jacobi, o.stability_index]);
    }
    csv.finish()
}

/// Natural-parameter continuation in `x0` (`direction` = ±1), with a
/// pseudo-arclength step in `(x0, ẏ0)` when the natural step fails.
pub fn continue_family(
    seed: &PeriodicOrbit,
    direction: f64,
    steps: usize,
    control: &StepControl,
) -> Result<FamilyResult> {
    continue_family_until(seed, direction, steps, control, |_| false)
}

/// As [`continue_family`], stopping after the first orbit satisfying `stop`.
pub fn continue_family_until(
    seed: &PeriodicOrbit,
    direction: f64,
    steps: usize,
    control: &StepControl,
    stop: impl Fn(&PeriodicOrbit) -> bool,
) -> Result<FamilyResult> {
    let model = HillModel::rotated(seed.mu)?;
    let opts = CorrectorOptions { symmetry: seed.symmetry, ..CorrectorOptions::default() };
    let mut orbits = vec![seed.clone()];
    let mut h = control.initial;
    let mut tangent = Vector2::new(direction.signum(), 0.0);
    let mut truncated = None;
    while orbits.len() <= steps {
        let last = orbits.last().unwrap().clone();
        let attempt = natural_step(&model, &orbits, direction.signum() * h, &opts)
            .or_else(|_| arclength_step(&model, &last, &tangent, h, &opts));
        match attempt {
            Ok(mut next)
                if (next.stability_index - last.stability_index).abs() <= control.max_index_jump
                    && (next.x0 - last.x0).abs() > 0.0 =>
            {
                next.family = last.family;
                let dz = Vector2::new(next.x0 - last.x0, next.ydot0 - last.ydot0);
                tangent = dz / dz.norm();
                if next.iterations <= 3 {
                    h = (h * 1.5).min(control.max);
                } else if next.iterations > 6 {
                    h = (h * 0.5).max(control.min);
                }
                let done = stop(&next);
                orbits.push(next);
                if done {
                    break;
                }
            }
            outcome => {
                if h <= control.min {
                    truncated = Some(match outcome {
                        Err(e) => format!("step underflow: {e}"),
                        Ok(_) => "step underflow: stability index jump".to_string(),
                    });
                    break;
                }
                h = (h * 0.5).max(control.min);
            }
        }
    }
    Ok(FamilyResult { orbits, truncated })
}

fn natural_step(
    model: &HillModel,
    orbits: &[PeriodicOrbit],
    dx: f64,
    opts: &CorrectorOptions,
) -> Result<PeriodicOrbit> {
    let last = &orbits[orbits.len() - 1];
    let x0 = last.x0 + dx;
    let v0 = match orbits.len() {
        1 => last.ydot0,
        n => {
            let prev = &orbits[n - 2];
            last.ydot0 + (last.ydot0 - prev.ydot0) * dx / (last.x0 - prev.x0)
        }
    };
    correct_with(model, (x0, v0), Fixed::X0, opts)
}

fn arclength_step(
    model: &HillModel,
    last: &PeriodicOrbit,
    tangent: &Vector2<f64>,
    ds: f64,
    opts: &CorrectorOptions,
) -> Result<PeriodicOrbit> {
    let z_pred = Vector2::new(last.x0, last.ydot0) + tangent * ds;
    let mut z = z_pred;
    let mut history = Vec::new();
    for _ in 0..opts.max_iterations {
        let shot = shoot(model, Vector4::new(z[0], 0.0, 0.0, z[1]), opts)?;
        history.push(shot.residual.abs());
        if shot.residual.abs() <= opts.residual_tol {
            return finish(model, z[0], z[1], shot.t, shot.residual, history.len() - 1, opts);
        }
        let m = Matrix2::new(shot.grad[0], shot.grad[1], tangent[0], tangent[1]);
        let rhs = Vector2::new(-shot.residual, -tangent.dot(&(z - z_pred)));
        let dz = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Inconsistent("singular pseudo-arclength system".into()))?;
        z += dz;
    }
    Err(Error::NonConvergence { iterations: history.len(), history })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pitchfork {
    pub jacobi: f64,
    pub x0: f64,
    pub orbit: PeriodicOrbit,
    /// Jacobi constant at which the branches were verified.
    pub verified_at: Vec<BranchCheck>,
}

/// Outcome of the branch search at one Jacobi constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchCheck {
    pub jacobi: f64,
    /// Side of the bifurcation where the symmetric orbit is unstable.
    pub far_side: bool,
    pub symmetric: PeriodicOrbit,
    pub branches: Vec<PeriodicOrbit>,
    /// Largest distance in `x0` between a branch and the symmetric orbit.
    pub branch_distance: f64,
    /// Mismatch of the y-axis mirror relation between the two branches.
    pub mirror_error: f64,
}

/// Locates the crossing of stability index +1 along a family and verifies
/// that two new symmetric orbits exist only on the unstable side.
pub fn detect_pitchfork(family: &[PeriodicOrbit], mu: f64) -> Result<Option<Pitchfork>> {
    detect_pitchfork_with(family, mu, &[2e-3, 5e-4])
}

pub fn detect_pitchfork_with(family: &[PeriodicOrbit], mu: f64, offsets: &[f64]) -> Result<Option<Pitchfork>> {
    let Some(i) = (1..family.len())
        .find(|&i| (family[i - 1].stability_index - 1.0) * (family[i].stability_index - 1.0) < 0.0)
    else {
        return Ok(None);
    };
    let model = HillModel::rotated(mu)?;
    let (a, b) = (&family[i - 1], &family[i]);
    let opts = CorrectorOptions { symmetry: a.symmetry, ..CorrectorOptions::default() };
    let at = |x0: f64| -> Result<PeriodicOrbit> {
        let s = (x0 - a.x0) / (b.x0 - a.x0);
        let v0 = a.ydot0 + s * (b.ydot0 - a.ydot0);
        correct_with(&model, (x0, v0), Fixed::X0, &opts)
    };
    let g = |x0: f64| at(x0).map(|o| o.stability_index - 1.0).unwrap_or(f64::NAN);
    let x_star = brent(g, a.x0, b.x0, 1e-12, 100)
        .ok_or_else(|| Error::Inconsistent("bisection on the stability index failed".into()))?;
    let mut orbit = at(x_star)?;
    orbit.family = a.family;

    // Along the family, the unstable side is where the index exceeds 1.
    let unstable_dc = if a.stability_index > 1.0 { a.jacobi - orbit.jacobi } else { b.jacobi - orbit.jacobi };
    let mut checks = Vec::new();
    for &dc in offsets {
        for far in [true, false] {
            let c = orbit.jacobi + if far { dc } else { -dc } * unstable_dc.signum();
            checks.push(branch_check(&model, &orbit, c, far)?);
        }
    }
    Ok(Some(Pitchfork { jacobi: orbit.jacobi, x0: orbit.x0, orbit, verified_at: checks }))
}

/// Half-period residual at fixed Jacobi constant as a function of `x0`.
fn level_residual(model: &HillModel, x0: f64, c: f64, sign: f64, opts: &CorrectorOptions) -> f64 {
    ydot_on_level(model, x0, c, sign)
        .and_then(|(v, _)| shoot(model, Vector4::new(x0, 0.0, 0.0, v), opts))
        .map(|s| s.residual)
        .unwrap_or(f64::NAN)
}

fn branch_check(model: &HillModel, star: &PeriodicOrbit, c: f64, far_side: bool) -> Result<BranchCheck> {
    let half = CorrectorOptions { symmetry: Symmetry::Half, ..CorrectorOptions::default() };
    let quarter = CorrectorOptions { symmetry: star.symmetry, ..CorrectorOptions::default() };
    let sign = star.ydot0.signum();
    let (v, _) = ydot_on_level(model, star.x0, c, sign)?;
    let symmetric = correct_with(model, (star.x0, v), Fixed::Jacobi, &quarter)?;

    let width = 0.05;
    let n = 201;
    let xs: Vec<f64> = (0..n)
        .map(|k| symmetric.x0 - width + 2.0 * width * k as f64 / (n - 1) as f64)
        .collect();
    let rs = parallel::map(&xs, |_, &x| level_residual(model, x, c, sign, &half));
    let mut branches = Vec::new();
    for k in 1..n {
        let (ra, rb) = (rs[k - 1], rs[k]);
        if !(ra.is_finite() && rb.is_finite()) || ra.signum() == rb.signum() {
            continue;
        }
        let Some(x) = brent(|x| level_residual(model, x, c, sign, &half), xs[k - 1], xs[k], 1e-14, 200)
        else {
            continue;
        };
        if (x - symmetric.x0).abs() < BRANCH_SEPARATION {
            continue;
        }
        let (v, _) = ydot_on_level(model, x, c, sign)?;
        if let Ok(mut o) = correct_with(model, (x, v), Fixed::Jacobi, &half) {
            o.family = Family::GPrime;
            branches.push(o);
        }
    }
    let branch_distance = branches.iter().map(|o| (o.x0 - symmetric.x0).abs()).fold(0.0, f64::max);
    let mirror_error = match branches.as_slice() {
        [p, q] => {
            let far = crate::integrate::flow(model, p.state0(), p.period / 2.0, &half.tol)?;
            (far[0] + q.x0).abs()
        }
        _ => f64::NAN,
    };
    Ok(BranchCheck { jacobi: c, far_side, symmetric, branches, branch_distance, mirror_error })
}

/// The g-family at `mu` from a near-circular direct orbit at `x_start`,
/// continued outward in `x0` until its Jacobi constant drops below `c_stop`.
pub fn g_family(mu: f64, x_start: f64, c_stop: f64, steps: usize) -> Result<FamilyResult> {
    let model = HillModel::rotated(mu)?;
    let opts = CorrectorOptions { symmetry: Symmetry::Quarter, ..CorrectorOptions::default() };
    let guess = x_start.powf(-0.5) - x_start;
    let seed = correct_with(&model, (x_start, guess), Fixed::X0, &opts)?;
    continue_family_until(&seed, 1.0, steps, &StepControl::default(), |o| o.jacobi < c_stop)
}
