//! Adaptive propagation, section crossings and state-transition matrices.
//!
//! Every field in this crate is autonomous, so [`VectorField`] takes only the
//! state. Propagation uses an 8th-order Dormand-Prince pair with a 7th-order
//! continuous extension; crossings are refined on that extension.

mod dop853;
mod tableau;

use nalgebra::{SMatrix, SVector, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::parallel;
use dop853::Stepper;

/// Finite-difference step used for Jacobians that have no closed form.
pub const FD_STEP: f64 = 1e-7;

/// Default collision guard radius for physical frames.
pub const R_MIN: f64 = 1e-5;

/// Autonomous vector field of dimension `N`.
pub trait VectorField<const N: usize>: Sync {
    fn eval(&self, y: &SVector<f64, N>) -> SVector<f64, N>;

    /// Reason to stop propagation at an accepted state, if any.
    fn guard(&self, _y: &SVector<f64, N>) -> Option<String> {
        None
    }

    /// Jacobian of the field. The default uses central differences.
    fn jacobian(&self, y: &SVector<f64, N>) -> SMatrix<f64, N, N> {
        let mut jac = SMatrix::<f64, N, N>::zeros();
        for j in 0..N {
            let h = FD_STEP * y[j].abs().max(1.0);
            let mut yp = *y;
            let mut ym = *y;
            yp[j] += h;
            ym[j] -= h;
            let col = (self.eval(&yp) - self.eval(&ym)) / (2.0 * h);
            jac.set_column(j, &col);
        }
        jac
    }

    fn id(&self) -> String {
        "field".to_string()
    }
}

impl<const N: usize, F: VectorField<N> + ?Sized> VectorField<N> for &F {
    fn eval(&self, y: &SVector<f64, N>) -> SVector<f64, N> {
        (**self).eval(y)
    }
    fn guard(&self, y: &SVector<f64, N>) -> Option<String> {
        (**self).guard(y)
    }
    fn jacobian(&self, y: &SVector<f64, N>) -> SMatrix<f64, N, N> {
        (**self).jacobian(y)
    }
    fn id(&self) -> String {
        (**self).id()
    }
}

/// Error control and limits for a propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { abs: 1e-12, rel: 1e-12, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances { abs: tol, rel: tol, ..Default::default() }
    }
}

/// Which variable the trajectory's time stamps measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeVariable {
    Physical,
    Regularized,
}

/// Continuous extension over one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t: f64,
    pub h: f64,
    cont: [SVector<f64, N>; 8],
}

impl<const N: usize> DenseStep<N> {
    fn constant(t: f64, y: SVector<f64, N>) -> Self {
        let z = SVector::<f64, N>::zeros();
        DenseStep { t, h: 0.0, cont: [y, z, z, z, z, z, z, z] }
    }

    pub fn t_start(&self) -> f64 {
        self.t
    }

    pub fn t_end(&self) -> f64 {
        self.t + self.h
    }

    pub fn y_start(&self) -> SVector<f64, N> {
        self.cont[0]
    }

    pub fn y_end(&self) -> SVector<f64, N> {
        self.cont[0] + self.cont[1]
    }

    /// Interpolated state at time `t` within the step.
    pub fn eval(&self, t: f64) -> SVector<f64, N> {
        if self.h == 0.0 {
            return self.cont[0];
        }
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        let conpar = c[4] + (c[5] + (c[6] + c[7] * s) * s1) * s;
        c[0] + (c[1] + (c[2] + (c[3] + conpar * s1) * s) * s1) * s
    }
}

/// Why a propagation ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Stop {
    Completed,
    Guard(String),
    Requested,
}

/// Propagated trajectory with per-step dense output.
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub times: Vec<f64>,
    pub states: Vec<SVector<f64, N>>,
    pub steps: Vec<DenseStep<N>>,
    pub field_id: String,
    pub tolerances: Tolerances,
    pub time_variable: TimeVariable,
    pub stop: Stop,
}

impl<const N: usize> Trajectory<N> {
    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("trajectory has a first sample")
    }

    pub fn y_final(&self) -> SVector<f64, N> {
        *self.states.last().expect("trajectory has a first sample")
    }

    pub fn completed(&self) -> bool {
        self.stop == Stop::Completed
    }

    /// State at time `t` from the dense output; `None` outside the span.
    pub fn at(&self, t: f64) -> Option<SVector<f64, N>> {
        let t0 = self.times[0];
        let t1 = self.t_final();
        let (lo, hi) = if t1 >= t0 { (t0, t1) } else { (t1, t0) };
        if t < lo || t > hi {
            return None;
        }
        if self.steps.is_empty() {
            return Some(self.states[0]);
        }
        let forward = t1 >= t0;
        let idx = self
            .steps
            .partition_point(|s| if forward { s.t_end() < t } else { s.t_end() > t });
        let idx = idx.min(self.steps.len() - 1);
        Some(self.steps[idx].eval(t))
    }
}

/// Control returned by step observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Summary of a streamed propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<const N: usize> {
    pub t: f64,
    pub y: SVector<f64, N>,
    pub steps: usize,
    pub stop: Stop,
}

/// Propagates from `(t0, y0)` to `t_end`, handing each accepted step to
/// `observer`. A guard stop ends the run with [`Stop::Guard`] and is not an
/// error.
pub fn integrate_with<const N: usize, F, O>(
    field: &F,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    tol: &Tolerances,
    mut observer: O,
) -> Result<Outcome<N>>
where
    F: VectorField<N> + ?Sized,
    O: FnMut(&DenseStep<N>) -> Flow,
{
    if let Some(reason) = field.guard(&y0) {
        return Err(Error::Singularity(reason));
    }
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("non-finite initial state".into()));
    }
    let mut stepper = Stepper::new(field, t0, y0, t_end, *tol);
    let mut stop = Stop::Completed;
    while stepper.t() != t_end {
        let step = stepper.step(t_end)?;
        if step.h == 0.0 {
            break;
        }
        if let Some(reason) = field.guard(stepper.y()) {
            observer(&step);
            stop = Stop::Guard(reason);
            break;
        }
        if observer(&step) == Flow::Stop {
            stop = Stop::Requested;
            break;
        }
    }
    Ok(Outcome { t: stepper.t(), y: *stepper.y(), steps: stepper.steps, stop })
}

/// Propagates and records every accepted step.
pub fn propagate<const N: usize, F>(
    field: &F,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    tol: &Tolerances,
) -> Result<Trajectory<N>>
where
    F: VectorField<N> + ?Sized,
{
    let mut times = vec![t0];
    let mut states = vec![y0];
    let mut steps = Vec::new();
    let out = integrate_with(field, t0, y0, t_end, tol, |s| {
        times.push(s.t_end());
        states.push(s.y_end());
        steps.push(s.clone());
        Flow::Continue
    })?;
    Ok(Trajectory {
        times,
        states,
        steps,
        field_id: field.id(),
        tolerances: *tol,
        time_variable: TimeVariable::Physical,
        stop: out.stop,
    })
}

/// Final state of a propagation; guard stops become singularity errors.
pub fn flow<const N: usize, F>(
    field: &F,
    y0: SVector<f64, N>,
    t: f64,
    tol: &Tolerances,
) -> Result<SVector<f64, N>>
where
    F: VectorField<N> + ?Sized,
{
    let out = integrate_with(field, 0.0, y0, t, tol, |_| Flow::Continue)?;
    match out.stop {
        Stop::Guard(r) => Err(Error::Singularity(r)),
        _ => Ok(out.y),
    }
}

/// Independent propagations of many seeds, in input order.
pub fn propagate_many<const N: usize, F>(
    field: &F,
    seeds: &[SVector<f64, N>],
    t_end: f64,
    tol: &Tolerances,
) -> Vec<Result<Trajectory<N>>>
where
    F: VectorField<N> + ?Sized,
{
    parallel::map(seeds, |_, y0| propagate(field, 0.0, *y0, t_end, tol))
}

/// Required sign change of an event function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Increasing,
    Decreasing,
    Any,
}

impl Direction {
    fn admits(self, from: f64, to: f64) -> bool {
        match self {
            Direction::Increasing => from < 0.0 && to >= 0.0,
            Direction::Decreasing => from > 0.0 && to <= 0.0,
            Direction::Any => true,
        }
    }
}

/// A refined zero of an event function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing<const N: usize> {
    pub t: f64,
    pub y: SVector<f64, N>,
}

/// Tracks sign changes of `g` across consecutive dense steps.
pub struct EventTracker<G> {
    g: G,
    direction: Direction,
    last_sign: f64,
}

impl<G> EventTracker<G> {
    pub fn new(g: G, direction: Direction) -> Self {
        EventTracker { g, direction, last_sign: 0.0 }
    }

    /// Checks one step; returns the refined crossing if the step contains one
    /// in the requested direction. A start point lying exactly on the surface
    /// does not count.
    pub fn check<const N: usize>(&mut self, step: &DenseStep<N>) -> Option<Crossing<N>>
    where
        G: Fn(&SVector<f64, N>) -> f64,
    {
        let g = &self.g;
        if self.last_sign == 0.0 {
            let g0 = g(&step.y_start());
            if g0 != 0.0 {
                self.last_sign = g0.signum();
            }
        }
        let g1 = g(&step.y_end());
        let prev = self.last_sign;
        if g1 != 0.0 {
            self.last_sign = g1.signum();
        } else {
            self.last_sign = -prev;
        }
        if prev == 0.0 || (g1 != 0.0 && g1.signum() == prev) {
            return None;
        }
        if !self.direction.admits(prev, g1) {
            return None;
        }
        let t = if g1 == 0.0 {
            step.t_end()
        } else {
            refine(|t| g(&step.eval(t)), step.t_start(), step.t_end())
        };
        Some(Crossing { t, y: step.eval(t) })
    }
}

/// All crossings of `g` along a recorded trajectory.
pub fn crossings<const N: usize, G>(
    traj: &Trajectory<N>,
    g: G,
    direction: Direction,
) -> Vec<Crossing<N>>
where
    G: Fn(&SVector<f64, N>) -> f64,
{
    let mut tracker = EventTracker::new(g, direction);
    traj.steps.iter().filter_map(|s| tracker.check(s)).collect()
}

/// First crossing of `g` along a recorded trajectory.
pub fn find_crossing<const N: usize, G>(
    traj: &Trajectory<N>,
    g: G,
    direction: Direction,
) -> Option<Crossing<N>>
where
    G: Fn(&SVector<f64, N>) -> f64,
{
    let mut tracker = EventTracker::new(g, direction);
    traj.steps.iter().find_map(|s| tracker.check(s))
}

/// Propagates until `count` crossings accepted by `accept` have been found or
/// `t_max` is reached. Returns the crossings and the run summary.
pub fn collect_crossings<const N: usize, F, G, A>(
    field: &F,
    y0: SVector<f64, N>,
    t_max: f64,
    tol: &Tolerances,
    g: G,
    direction: Direction,
    accept: A,
    count: usize,
) -> Result<(Vec<Crossing<N>>, Outcome<N>)>
where
    F: VectorField<N> + ?Sized,
    G: Fn(&SVector<f64, N>) -> f64,
    A: Fn(&SVector<f64, N>) -> bool,
{
    let mut found = Vec::new();
    let mut tracker = EventTracker::new(g, direction);
    let out = integrate_with(field, 0.0, y0, t_max, tol, |s| {
        if let Some(c) = tracker.check(s) {
            if accept(&c.y) {
                found.push(c);
                if found.len() >= count {
                    return Flow::Stop;
                }
            }
        }
        Flow::Continue
    })?;
    Ok((found, out))
}

/// First accepted crossing, or `None` if the run ends without one.
pub fn next_crossing<const N: usize, F, G, A>(
    field: &F,
    y0: SVector<f64, N>,
    t_max: f64,
    tol: &Tolerances,
    g: G,
    direction: Direction,
    accept: A,
) -> Result<Option<Crossing<N>>>
where
    F: VectorField<N> + ?Sized,
    G: Fn(&SVector<f64, N>) -> f64,
    A: Fn(&SVector<f64, N>) -> bool,
{
    let (mut c, out) = collect_crossings(field, y0, t_max, tol, g, direction, accept, 1)?;
    if let Stop::Guard(r) = out.stop {
        if c.is_empty() {
            return Err(Error::Singularity(r));
        }
    }
    Ok(c.pop())
}

/// Brent's method for a bracketed root of `f` on `[a, b]`.
pub fn brent<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Option<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1 * xm.signum() };
        fb = f(b);
    }
    Some(b)
}

fn refine<F: Fn(f64) -> f64>(g: F, a: f64, b: f64) -> f64 {
    let xtol = 1e-15 * a.abs().max(b.abs()).max(1.0);
    brent(&g, a, b, xtol, 200).unwrap_or(b)
}

/// Planar field augmented with its variational equations. The state holds the
/// base point followed by the 4×4 transition matrix in column-major order.
pub struct Variational<F>(pub F);

impl<F: VectorField<4>> VectorField<20> for Variational<F> {
    fn eval(&self, y: &SVector<f64, 20>) -> SVector<f64, 20> {
        let x = Vector4::new(y[0], y[1], y[2], y[3]);
        let phi = SMatrix::<f64, 4, 4>::from_column_slice(&y.as_slice()[4..]);
        let dphi = self.0.jacobian(&x) * phi;
        let fx = self.0.eval(&x);
        let mut out = SVector::<f64, 20>::zeros();
        out.fixed_rows_mut::<4>(0).copy_from(&fx);
        out.as_mut_slice()[4..].copy_from_slice(dphi.as_slice());
        out
    }

    fn guard(&self, y: &SVector<f64, 20>) -> Option<String> {
        self.0.guard(&Vector4::new(y[0], y[1], y[2], y[3]))
    }

    fn id(&self) -> String {
        format!("variational({})", self.0.id())
    }
}

/// Packs a base state and transition matrix into a variational state.
pub fn pack_variational(x: &Vector4<f64>, phi: &SMatrix<f64, 4, 4>) -> SVector<f64, 20> {
    let mut y = SVector::<f64, 20>::zeros();
    y.fixed_rows_mut::<4>(0).copy_from(x);
    y.as_mut_slice()[4..].copy_from_slice(phi.as_slice());
    y
}

/// Splits a variational state into base state and transition matrix.
pub fn unpack_variational(y: &SVector<f64, 20>) -> (Vector4<f64>, SMatrix<f64, 4, 4>) {
    (
        Vector4::new(y[0], y[1], y[2], y[3]),
        SMatrix::<f64, 4, 4>::from_column_slice(&y.as_slice()[4..]),
    )
}

/// State-transition matrix over `[0, t]` starting from `x0`, with the final
/// base state.
pub fn stm<F: VectorField<4>>(
    field: F,
    x0: Vector4<f64>,
    t: f64,
    tol: &Tolerances,
) -> Result<(Vector4<f64>, SMatrix<f64, 4, 4>)> {
    let var = Variational(field);
    let y = flow(&var, pack_variational(&x0, &SMatrix::identity()), t, tol)?;
    Ok(unpack_variational(&y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Vector2, Matrix4};
    use std::f64::consts::PI;

    struct Oscillator;
    impl VectorField<2> for Oscillator {
        fn eval(&self, y: &Vector2<f64>) -> Vector2<f64> {
            Vector2::new(y[1], -y[0])
        }
    }

    struct Linear(Matrix4<f64>);
    impl VectorField<4> for Linear {
        fn eval(&self, y: &Vector4<f64>) -> Vector4<f64> {
            self.0 * y
        }
        fn jacobian(&self, _y: &Vector4<f64>) -> Matrix4<f64> {
            self.0
        }
    }

    struct Kepler;
    impl VectorField<4> for Kepler {
        fn eval(&self, y: &Vector4<f64>) -> Vector4<f64> {
            let r3 = (y[0] * y[0] + y[1] * y[1]).powf(1.5);
            Vector4::new(y[2], y[3], -y[0] / r3, -y[1] / r3)
        }
    }

    #[test]
    fn oscillator_period_over_hundred_periods() {
        let tol = Tolerances::default();
        let traj = propagate(&Oscillator, 0.0, Vector2::new(1.0, 0.0), 201.0 * PI, &tol).unwrap();
        let ups = crossings(&traj, |y| y[1], Direction::Increasing);
        assert_eq!(ups.len(), 100);
        let period = (ups[99].t - ups[0].t) / 99.0;
        assert!((period - 2.0 * PI).abs() <= 1e-10, "{period}");
        assert!((traj.y_final() - Vector2::new(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn dense_output_matches_solution() {
        let tol = Tolerances::uniform(1e-13);
        let traj = propagate(&Oscillator, 0.0, Vector2::new(1.0, 0.0), 10.0, &tol).unwrap();
        for k in 0..97 {
            let t = 0.1031 * k as f64;
            let y = traj.at(t).unwrap();
            assert_abs_diff_eq!(y[0], t.cos(), epsilon = 1e-10);
            assert_abs_diff_eq!(y[1], -t.sin(), epsilon = 1e-10);
        }
        assert!(traj.at(10.5).is_none());
    }

    #[test]
    fn backward_propagation_returns() {
        let tol = Tolerances::default();
        let y0 = Vector4::new(1.0, 0.0, 0.1, 1.1);
        let y1 = flow(&Kepler, y0, 7.0, &tol).unwrap();
        let traj = propagate(&Kepler, 7.0, y1, 0.0, &tol).unwrap();
        assert!((traj.y_final() - y0).norm() < 1e-9);
        assert!(traj.times.windows(2).all(|w| w[1] < w[0]));
        assert!(traj.at(3.0).is_some());
    }

    #[test]
    fn circle_crosses_axis_at_quarter_period() {
        let tol = Tolerances::default();
        let traj =
            propagate(&Kepler, 0.0, Vector4::new(1.0, 0.0, 0.0, 1.0), 2.0 * PI, &tol).unwrap();
        let c = find_crossing(&traj, |y| y[0], Direction::Decreasing).unwrap();
        assert_abs_diff_eq!(c.t, PI / 2.0, epsilon = 1e-10);
        assert!(c.y[0].abs() <= 1e-12);
        let all = crossings(&traj, |y| y[0], Direction::Any);
        assert_eq!(all.len(), 2);
        assert_abs_diff_eq!(all[1].t, 1.5 * PI, epsilon = 1e-10);
    }

    #[test]
    fn tangency_with_wrong_direction_is_absent() {
        // x = cos t touches x = 1 from below only at the start and end, so g = x - 1
        // never increases through zero inside the span.
        let tol = Tolerances::default();
        let traj = propagate(&Oscillator, 0.0, Vector2::new(0.0, 1.0), PI, &tol).unwrap();
        assert!(find_crossing(&traj, |y| y[0] - 1.0, Direction::Increasing).is_none());
        assert!(find_crossing(&traj, |y| y[0] - 0.5, Direction::Decreasing).is_some());
        assert!(find_crossing(&traj, |y| y[0] - 0.5, Direction::Increasing).is_some());
    }

    #[test]
    fn stm_identity_at_zero_time() {
        let (_, phi) = stm(Kepler, Vector4::new(1.0, 0.0, 0.0, 1.0), 0.0, &Tolerances::default())
            .unwrap();
        assert_abs_diff_eq!(phi, Matrix4::identity(), epsilon = 0.0);
    }

    #[test]
    fn stm_of_linear_field_is_exponential() {
        let a = Matrix4::new(
            0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.3, 0.0, 2.0, 0.3, -1.0, -2.0, 0.0,
        );
        let t = 1.3;
        let (_, phi) = stm(Linear(a), Vector4::new(0.1, 0.2, 0.0, 0.0), t, &Tolerances::default())
            .unwrap();
        let exp = (a * t).exp();
        assert!((phi - exp).abs().max() < 1e-10 * exp.abs().max());
    }

    #[test]
    fn stm_matches_finite_differences() {
        let tol = Tolerances::default();
        let x0 = Vector4::new(1.0, 0.1, 0.05, 1.05);
        let t = 4.0;
        let (_, phi) = stm(Kepler, x0, t, &tol).unwrap();
        assert!((phi.determinant() - 1.0).abs() < 1e-8);
        for j in 0..4 {
            let mut xp = x0;
            let mut xm = x0;
            xp[j] += 1e-7;
            xm[j] -= 1e-7;
            let col = (flow(&Kepler, xp, t, &tol).unwrap() - flow(&Kepler, xm, t, &tol).unwrap())
                / 2e-7;
            let rel = (col - phi.column(j)).norm() / phi.column(j).norm();
            assert!(rel < 1e-5, "column {j}: {rel}");
        }
    }

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 100).unwrap();
        assert_abs_diff_eq!(r, 2f64.cbrt(), epsilon = 1e-14);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    #[test]
    fn many_seeds_keep_order() {
        let seeds: Vec<Vector2<f64>> = (0..8).map(|k| Vector2::new(k as f64, 0.0)).collect();
        let out = propagate_many(&Oscillator, &seeds, PI, &Tolerances::default());
        for (k, tr) in out.iter().enumerate() {
            assert_abs_diff_eq!(tr.as_ref().unwrap().y_final()[0], -(k as f64), epsilon = 1e-9);
        }
    }
}
