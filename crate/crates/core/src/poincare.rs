//! Sections, first-return maps and section cuts.
//!
//! The regularized section `Y = 0, P_Y > 0` is parametrized by `(X, P_X)`;
//! direct orbits about the tertiary cross it with `X > 0`, retrograde ones
//! with `X < 0`. The physical sections `Σ` (`x = 0`, rotated frame) and `Σ′`
//! (`x = −x_{L1}`, unrotated frame) are parametrized by `(y, ẏ)`.

use nalgebra::Vector4;
use serde::Serialize;

use crate::equilibria::{position, Label};
use crate::error::{Error, Result};
use crate::integrate::{
    brent, collect_crossings, integrate_with, next_crossing, Direction, EventTracker, Flow,
    Outcome, Stop, TimeVariable, Tolerances, Trajectory, VectorField,
};
use crate::io::Csv;
use crate::model::{Frame, GridSpec, HillModel};
use crate::parallel;
use crate::regularization::{momentum_on_section, regularized_energy, EnergyContext, RegState, RegularizedField};

/// Regularized radius beyond which an orbit counts as escaped.
pub const R_ESC: f64 = 10.0;
/// Crossings with `|ẋ|` at or below this are tangential and not counted.
pub const TANGENT_TOL: f64 = 1e-10;
pub const DEFAULT_ITERATES: usize = 300;
pub const DEFAULT_GRID: usize = 60;
/// Regularized-time budget per return.
pub const TAU_PER_RETURN: f64 = 100.0;
/// Admissible energy mismatch of a return-map seed.
pub const SEED_ENERGY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SectionId {
    /// `Y = 0`, `P_Y > 0` in regularized coordinates.
    RegY0,
    /// Full plane `x = 0` of the rotated frame.
    Sigma,
    SigmaPlus,
    SigmaMinus,
    /// `x = −x_{L1}` in the unrotated frame.
    SigmaPrime,
}

impl SectionId {
    pub fn label(&self) -> &'static str {
        match self {
            SectionId::RegY0 => "Y0",
            SectionId::Sigma => "sigma",
            SectionId::SigmaPlus => "sigma+",
            SectionId::SigmaMinus => "sigma-",
            SectionId::SigmaPrime => "sigma'",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionDef {
    pub id: SectionId,
    pub frame: Frame,
    pub time_variable: TimeVariable,
    /// Position of the plane along the first coordinate.
    pub offset: f64,
}

impl SectionDef {
    pub fn new(id: SectionId, mu: f64) -> Result<Self> {
        let (frame, time_variable, offset) = match id {
            SectionId::RegY0 => (Frame::Rotated, TimeVariable::Regularized, 0.0),
            SectionId::Sigma | SectionId::SigmaPlus | SectionId::SigmaMinus => {
                (Frame::Rotated, TimeVariable::Physical, 0.0)
            }
            SectionId::SigmaPrime => {
                let l1 = position(mu, Label::L1)?.expect("L1 exists for every mass ratio");
                let m = HillModel::rotated(mu)?;
                let u = m.to_unrotated(&Vector4::new(l1[0], l1[1], 0.0, 0.0));
                (Frame::Unrotated, TimeVariable::Physical, -u[0])
            }
        };
        Ok(SectionDef { id, frame, time_variable, offset })
    }

    /// Event function whose zero set is the section plane.
    pub fn event(&self, s: &Vector4<f64>) -> f64 {
        match self.id {
            SectionId::RegY0 => s[1],
            _ => s[0] - self.offset,
        }
    }

    pub fn direction(&self) -> Direction {
        Direction::Any
    }

    /// Whether a point of the plane belongs to this (sub)section.
    pub fn contains(&self, s: &Vector4<f64>) -> bool {
        match self.id {
            SectionId::RegY0 => s[3] > 0.0,
            SectionId::SigmaPlus => s[1] > 0.0,
            SectionId::SigmaMinus => s[1] < 0.0,
            SectionId::Sigma | SectionId::SigmaPrime => true,
        }
    }

    /// Section coordinates: `(X, P_X)` or `(y, ẏ)`.
    pub fn coords(&self, s: &Vector4<f64>) -> [f64; 2] {
        match self.id {
            SectionId::RegY0 => [s[0], s[2]],
            _ => [s[1], s[3]],
        }
    }

    fn is_tangential(&self, s: &Vector4<f64>) -> bool {
        self.id != SectionId::RegY0 && s[2].abs() <= TANGENT_TOL
    }

    /// Subsection label of a crossing of the physical plane.
    pub fn branch_of(&self, s: &Vector4<f64>) -> SectionId {
        match self.id {
            SectionId::Sigma | SectionId::SigmaPlus | SectionId::SigmaMinus => {
                if s[1] >= 0.0 {
                    SectionId::SigmaPlus
                } else {
                    SectionId::SigmaMinus
                }
            }
            id => id,
        }
    }

    /// Admissibility of `(y, ẏ)` on a physical section at Jacobi constant
    /// `c`: some `ẋ` completes it to a state of that energy.
    pub fn admits(&self, model: &HillModel, c: f64, y: f64, ydot: f64) -> Result<bool> {
        let m = model.in_frame(self.frame);
        let omega = m.potential(self.offset, y, 0.0)?;
        Ok(ydot * ydot <= 2.0 * omega - c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionPoint {
    pub coords: [f64; 2],
    /// 1-based count of transversal crossings of the full plane; 0 for
    /// tangential crossings.
    pub cut_index: usize,
    pub parent: usize,
    pub section: SectionId,
    pub t: f64,
    pub state: Vector4<f64>,
    pub tangential: bool,
}

/// Regularized field that stops when the orbit leaves the ball `R_esc`.
#[derive(Debug, Clone, Copy)]
pub struct Escaping {
    pub field: RegularizedField,
    pub r_esc: f64,
}

impl VectorField<4> for Escaping {
    fn eval(&self, s: &Vector4<f64>) -> Vector4<f64> {
        self.field.eval(s)
    }
    fn jacobian(&self, s: &Vector4<f64>) -> nalgebra::Matrix4<f64> {
        self.field.jacobian(s)
    }
    fn guard(&self, s: &Vector4<f64>) -> Option<String> {
        (s[0].hypot(s[1]) > self.r_esc).then(|| format!("escape beyond R = {}", self.r_esc))
    }
    fn id(&self) -> String {
        self.field.id()
    }
}

/// Successive returns of one seed to the regularized section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnOrbit {
    pub seed: RegState,
    pub points: Vec<SectionPoint>,
    pub escaped: bool,
    /// Set when the run ended before `n` returns for a reason other than
    /// escape.
    pub truncated: Option<String>,
}

/// Options shared by the return-map routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReturnOptions {
    pub tol: Tolerances,
    pub r_esc: f64,
    pub tau_per_return: f64,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        ReturnOptions { tol: Tolerances::default(), r_esc: R_ESC, tau_per_return: TAU_PER_RETURN }
    }
}

/// The next `n` crossings of `Y = 0` with `P_Y > 0`.
pub fn return_map(seed: &RegState, n: usize, mu: f64) -> Result<ReturnOrbit> {
    return_map_with(seed, n, mu, &ReturnOptions::default())
}

pub fn return_map_with(seed: &RegState, n: usize, mu: f64, opts: &ReturnOptions) -> Result<ReturnOrbit> {
    let field = RegularizedField::new(mu)?;
    let s0 = seed.vec();
    if s0[1] != 0.0 || s0[3] <= 0.0 {
        return Err(Error::Domain("seed must satisfy Y = 0 and P_Y > 0".into()));
    }
    let e = field.hamiltonian(&s0) - seed.h_reg;
    if e.abs() > SEED_ENERGY_TOL {
        return Err(Error::Domain(format!("seed energy off its level by {e:e}")));
    }
    signed_returns(field, s0, n, 1.0, opts).map(|(points, escaped, truncated)| ReturnOrbit {
        seed: *seed,
        points,
        escaped,
        truncated,
    })
}

/// Returns to `Y = 0` with `sign·P_Y > 0`.
fn signed_returns(
    field: RegularizedField,
    s0: Vector4<f64>,
    n: usize,
    sign: f64,
    opts: &ReturnOptions,
) -> Result<(Vec<SectionPoint>, bool, Option<String>)> {
    let esc = Escaping { field, r_esc: opts.r_esc };
    let t_max = opts.tau_per_return * n.max(1) as f64;
    let (found, out) = collect_crossings(
        &esc,
        s0,
        t_max,
        &opts.tol,
        |s| s[1],
        Direction::Any,
        |s| sign * s[3] > 0.0,
        n,
    )?;
    let points = found
        .iter()
        .enumerate()
        .map(|(i, c)| SectionPoint {
            coords: [c.y[0], c.y[2]],
            cut_index: i + 1,
            parent: 0,
            section: SectionId::RegY0,
            t: c.t,
            state: c.y,
            tangential: false,
        })
        .collect::<Vec<_>>();
    let escaped = matches!(out.stop, Stop::Guard(_));
    let truncated = (!escaped && points.len() < n).then(|| format!("no return within τ = {t_max}"));
    Ok((points, escaped, truncated))
}

/// Seed on the section from `(X, P_X)`.
pub fn section_seed(x: f64, px: f64, h_reg: f64, mu: f64) -> Result<RegState> {
    let py = momentum_on_section(x, px, h_reg, mu)?;
    Ok(RegState { x, y: 0.0, px, py, h_reg })
}

/// First return of `(X, P_X)`, or `None` on escape or missing return.
pub fn first_return(x: f64, px: f64, h_reg: f64, mu: f64, opts: &ReturnOptions) -> Result<Option<[f64; 2]>> {
    let seed = section_seed(x, px, h_reg, mu)?;
    let orbit = return_map_with(&seed, 1, mu, opts)?;
    Ok(orbit.points.first().map(|p| p.coords))
}

/// One seed's orbit in a scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOrbit {
    pub seed_id: usize,
    pub seed: [f64; 2],
    pub points: Vec<[f64; 2]>,
    pub escaped: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub mu: f64,
    pub h_reg: f64,
    pub iterates: usize,
    pub orbits: Vec<SeedOrbit>,
    /// Grid points without a real `P_Y > 0`.
    pub skipped: usize,
}

impl ScanResult {
    pub fn escape_count(&self) -> usize {
        self.orbits.iter().filter(|o| o.escaped).count()
    }

    pub fn failure_count(&self) -> usize {
        self.orbits.iter().filter(|o| o.failure.is_some()).count()
    }

    /// Rows `seed_id,iter,X,PX`; iterate 0 is the seed itself.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["seed_id", "iter", "X", "PX"]);
        for o in &self.orbits {
            for (k, p) in std::iter::once(&o.seed).chain(o.points.iter()).enumerate() {
                csv.row(&[
                    o.seed_id.to_string(),
                    k.to_string(),
                    crate::io::num(p[0]),
                    crate::io::num(p[1]),
                ]);
            }
        }
        csv.finish()
    }
}

/// Iterates the return map from every admissible point of `grid` (over
/// `(X, P_X)`). Seeds run in parallel; the output keeps grid order.
pub fn scan(h_reg: f64, mu: f64, grid: &GridSpec, iterates: usize) -> Result<ScanResult> {
    scan_with(h_reg, mu, grid, iterates, &ReturnOptions::default())
}

pub fn scan_with(
    h_reg: f64,
    mu: f64,
    grid: &GridSpec,
    iterates: usize,
    opts: &ReturnOptions,
) -> Result<ScanResult> {
    RegularizedField::new(mu)?;
    let seeds: Vec<RegState> = grid
        .points()
        .filter_map(|(x, px)| section_seed(x, px, h_reg, mu).ok())
        .collect();
    let skipped = grid.nx * grid.ny - seeds.len();
    let orbits = parallel::map(&seeds, |i, seed| {
        let mut o = SeedOrbit {
            seed_id: i,
            seed: [seed.x, seed.px],
            points: Vec::new(),
            escaped: false,
            failure: None,
        };
        match return_map_with(seed, iterates, mu, opts) {
            Ok(r) => {
                o.points = r.points.iter().map(|p| p.coords).collect();
                o.escaped = r.escaped;
                o.failure = r.truncated;
            }
            Err(e) => o.failure = Some(e.to_string()),
        }
        o
    });
    Ok(ScanResult { mu, h_reg, iterates, orbits, skipped })
}

/// A fixed point of the return map on the symmetry line `P_X = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub x: f64,
    /// Distance between the point and its first return.
    pub residual: f64,
    /// Trace of the return-map Jacobian.
    pub trace: f64,
    pub stable: bool,
}

/// `P_Y` at the first crossing of `X = 0` starting from `(X, 0, 0, P_Y)`.
/// Zeros are orbits meeting both symmetry lines perpendicularly, hence
/// symmetric periodic orbits.
pub fn symmetry_defect(x: f64, h_reg: f64, mu: f64, opts: &ReturnOptions) -> Result<Option<f64>> {
    let field = RegularizedField::new(mu)?;
    let py = momentum_on_section(x, 0.0, h_reg, mu)?;
    let esc = Escaping { field, r_esc: opts.r_esc };
    let c = next_crossing(
        &esc,
        Vector4::new(x, 0.0, 0.0, py),
        opts.tau_per_return,
        &opts.tol,
        |s| s[0],
        Direction::Any,
        |_| true,
    );
    match c {
        Ok(c) => Ok(c.map(|c| c.y[3])),
        Err(Error::Singularity(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Symmetric fixed points with `X` in `x_range`, located by sampling the
/// symmetry defect on `n` points and refining sign changes.
pub fn symmetric_fixed_points(
    h_reg: f64,
    mu: f64,
    x_range: (f64, f64),
    n: usize,
    opts: &ReturnOptions,
) -> Result<Vec<FixedPoint>> {
    let xs: Vec<f64> = (0..n)
        .map(|i| x_range.0 + (x_range.1 - x_range.0) * i as f64 / (n - 1).max(1) as f64)
        .collect();
    let defects = parallel::map(&xs, |_, &x| {
        if x == 0.0 {
            return None;
        }
        symmetry_defect(x, h_reg, mu, opts).ok().flatten()
    });
    let mut out = Vec::new();
    for i in 1..xs.len() {
        let (Some(a), Some(b)) = (defects[i - 1], defects[i]) else { continue };
        if a.signum() == b.signum() || (xs[i - 1] < 0.0) != (xs[i] < 0.0) {
            continue;
        }
        let g = |x: f64| symmetry_defect(x, h_reg, mu, opts).ok().flatten().unwrap_or(f64::NAN);
        let Some(x) = brent(g, xs[i - 1], xs[i], 1e-13, 200) else { continue };
        // Sign changes across a jump of the first X = 0 crossing are not roots.
        if g(x).abs() > 1e-6 {
            continue;
        }
        if let Ok(fp) = classify_fixed_point(x, 0.0, h_reg, mu, opts) {
            out.push(fp);
        }
    }
    Ok(out)
}

/// Return-map Jacobian at `(X, P_X)` by central differences.
pub fn return_jacobian(x: f64, px: f64, h_reg: f64, mu: f64, opts: &ReturnOptions) -> Result<[[f64; 2]; 2]> {
    let d = 1e-6;
    let eval = |x: f64, px: f64| -> Result<[f64; 2]> {
        first_return(x, px, h_reg, mu, opts)?
            .ok_or_else(|| Error::Domain(format!("no first return from ({x}, {px})")))
    };
    let (xp, xm) = (eval(x + d, px)?, eval(x - d, px)?);
    let (pp, pm) = (eval(x, px + d)?, eval(x, px - d)?);
    Ok([
        [(xp[0] - xm[0]) / (2.0 * d), (pp[0] - pm[0]) / (2.0 * d)],
        [(xp[1] - xm[1]) / (2.0 * d), (pp[1] - pm[1]) / (2.0 * d)],
    ])
}

pub fn classify_fixed_point(x: f64, px: f64, h_reg: f64, mu: f64, opts: &ReturnOptions) -> Result<FixedPoint> {
    let img = first_return(x, px, h_reg, mu, opts)?
        .ok_or_else(|| Error::Domain(format!("no first return from ({x}, {px})")))?;
    let j = return_jacobian(x, px, h_reg, mu, opts)?;
    let trace = j[0][0] + j[1][1];
    Ok(FixedPoint {
        x,
        residual: (img[0] - x).hypot(img[1] - px),
        trace,
        stable: trace.abs() < 2.0,
    })
}

/// Ordered transversal crossings of a recorded trajectory with a physical
/// section. Crossings of the full plane are counted; only those inside the
/// requested subsection are returned.
pub fn physical_cuts(traj: &Trajectory<4>, section: &SectionDef, max_cuts: usize) -> Vec<SectionPoint> {
    let mut cutter = Cutter::new(*section, 0, max_cuts);
    for step in &traj.steps {
        if cutter.feed(step) == Flow::Stop {
            break;
        }
    }
    cutter.points
}

/// Propagates `y0` with `field` and cuts it against `section` on the fly,
/// stopping after `max_cuts` counted crossings or at `t_max` (which may be
/// negative for backward propagation).
pub fn cut_stream<F: VectorField<4> + ?Sized>(
    field: &F,
    y0: Vector4<f64>,
    t_max: f64,
    tol: &Tolerances,
    section: &SectionDef,
    max_cuts: usize,
    parent: usize,
) -> Result<(Vec<SectionPoint>, Outcome<4>)> {
    let mut cutter = Cutter::new(*section, parent, max_cuts);
    let out = integrate_with(field, 0.0, y0, t_max, tol, |s| cutter.feed(s))?;
    Ok((cutter.points, out))
}

struct Cutter {
    section: SectionDef,
    tracker: EventTracker<Box<dyn Fn(&Vector4<f64>) -> f64 + Send + Sync>>,
    parent: usize,
    max_cuts: usize,
    count: usize,
    points: Vec<SectionPoint>,
}

impl Cutter {
    fn new(section: SectionDef, parent: usize, max_cuts: usize) -> Self {
        let g: Box<dyn Fn(&Vector4<f64>) -> f64 + Send + Sync> = Box::new(move |s| section.event(s));
        Cutter {
            section,
            tracker: EventTracker::new(g, section.direction()),
            parent,
            max_cuts,
            count: 0,
            points: Vec::new(),
        }
    }

    fn feed(&mut self, step: &crate::integrate::DenseStep<4>) -> Flow {
        if let Some(c) = self.tracker.check(step) {
            let tangential = self.section.is_tangential(&c.y);
            if !tangential {
                self.count += 1;
            }
            if self.section.contains(&c.y) {
                self.points.push(SectionPoint {
                    coords: self.section.coords(&c.y),
                    cut_index: if tangential { 0 } else { self.count },
                    parent: self.parent,
                    section: self.section.branch_of(&c.y),
                    t: c.t,
                    state: c.y,
                    tangential,
                });
            }
            if self.count >= self.max_cuts {
                return Flow::Stop;
            }
        }
        Flow::Continue
    }
}

/// Rows `branch,cut_index,y,ydot` for counted cuts.
pub fn cuts_csv(points: &[SectionPoint]) -> String {
    let mut csv = Csv::new(&["branch", "cut_index", "y", "ydot"]);
    for p in points.iter().filter(|p| !p.tangential) {
        csv.row(&[
            p.section.label().to_string(),
            p.cut_index.to_string(),
            crate::io::num(p.coords[0]),
            crate::io::num(p.coords[1]),
        ]);
    }
    csv.finish()
}

/// Boundary `ẏ² = 2Ω(0, y) − C` of the admissible part of `Σ`, sampled at
/// `n` values of `y`. Each maximal admissible interval yields one closed
/// polyline of `(ẏ, y)` points, upper branch first.
pub fn tangency_curve(c: f64, mu: f64, y_range: (f64, f64), n: usize) -> Result<Vec<Vec<[f64; 2]>>> {
    let m = HillModel::rotated(mu)?;
    let mut pieces = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    for i in 0..n {
        let y = y_range.0 + (y_range.1 - y_range.0) * i as f64 / (n - 1).max(1) as f64;
        let rhs = match m.potential(0.0, y, 0.0) {
            Ok(om) => 2.0 * om - c,
            Err(_) => f64::INFINITY,
        };
        if rhs >= 0.0 && rhs.is_finite() {
            current.push((y, rhs.sqrt()));
        } else if !current.is_empty() {
            pieces.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    Ok(pieces
        .into_iter()
        .map(|piece| {
            let mut poly: Vec<[f64; 2]> = piece.iter().map(|&(y, v)| [v, y]).collect();
            poly.extend(piece.iter().rev().map(|&(y, v)| [-v, y]));
            poly
        })
        .collect())
}

/// Settings for [`portrait_census`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensusOptions {
    pub nx: usize,
    pub npx: usize,
    pub px_range: (f64, f64),
    pub iterates: usize,
    /// Offset of the twin seed along `X`.
    pub twin_offset: f64,
    /// Twin separation above which a seed counts as chaotic.
    pub chaos_threshold: f64,
    pub fixed_point_range: (f64, f64),
    pub fixed_point_samples: usize,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            nx: 24,
            npx: 12,
            px_range: (-0.3, 0.3),
            iterates: 200,
            twin_offset: 1e-9,
            chaos_threshold: 1e-3,
            fixed_point_range: (-1.2, 1.2),
            fixed_point_samples: 241,
        }
    }
}

/// Scripted summary of a section portrait: symmetric fixed points, and for
/// seeds with `0 < X` inside the L1 radius, escapes and twin-divergence chaos.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitCensus {
    pub mu: f64,
    pub jacobi: f64,
    pub fixed_points: Vec<FixedPoint>,
    pub inner_seeds: usize,
    pub escapes: usize,
    pub chaotic: usize,
}

impl PortraitCensus {
    /// Fixed points on the direct side `X > 0`.
    pub fn direct(&self) -> Vec<FixedPoint> {
        self.fixed_points.iter().copied().filter(|f| f.x > 0.0).collect()
    }

    pub fn retrograde(&self) -> Vec<FixedPoint> {
        self.fixed_points.iter().copied().filter(|f| f.x < 0.0).collect()
    }

    pub fn chaotic_fraction(&self) -> f64 {
        self.chaotic as f64 / self.inner_seeds.max(1) as f64
    }
}

pub fn portrait_census(c: f64, mu: f64, opts: &CensusOptions) -> Result<PortraitCensus> {
    let h = regularized_energy(c)?;
    let ctx = EnergyContext::new(c)?;
    let ret = ReturnOptions::default();
    let fixed_points = symmetric_fixed_points(h, mu, opts.fixed_point_range, opts.fixed_point_samples, &ret)?;
    let x_l1 = position(mu, Label::L1)?
        .ok_or_else(|| Error::Domain(format!("no L1 at mu = {mu}")))?[0];
    let x_max = (x_l1 / (ctx.alpha * ctx.alpha)).sqrt();
    let mut seeds = Vec::new();
    for i in 0..opts.nx {
        for j in 0..opts.npx {
            let x = x_max * (i as f64 + 0.5) / opts.nx as f64;
            let px = opts.px_range.0 + (opts.px_range.1 - opts.px_range.0) * (j as f64 + 0.5) / opts.npx as f64;
            if let (Ok(a), Ok(b)) = (section_seed(x, px, h, mu), section_seed(x + opts.twin_offset, px, h, mu)) {
                seeds.push((a, b));
            }
        }
    }
    let verdicts = parallel::map(&seeds, |_, (a, b)| -> Result<(bool, f64)> {
        let ra = return_map_with(a, opts.iterates, mu, &ret)?;
        let rb = return_map_with(b, opts.iterates, mu, &ret)?;
        let sep = ra
            .points
            .iter()
            .zip(&rb.points)
            .map(|(p, q)| (p.coords[0] - q.coords[0]).hypot(p.coords[1] - q.coords[1]))
            .fold(0.0, f64::max);
        Ok((ra.escaped || rb.escaped, sep))
    });
    let mut escapes = 0;
    let mut chaotic = 0;
    for v in verdicts {
        let (escaped, sep) = v?;
        if escaped {
            escapes += 1;
        } else if sep > opts.chaos_threshold {
            chaotic += 1;
        }
    }
    Ok(PortraitCensus { mu, jacobi: c, fixed_points, inner_seeds: seeds.len(), escapes, chaotic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::propagate;
    use crate::regularization::regularized_energy;

    fn h(c: f64) -> f64 {
        regularized_energy(c).unwrap()
    }

    #[test]
    fn retrograde_fixed_point_at_high_energy() {
        let (mu, hr) = (0.1, h(13.57209));
        let opts = ReturnOptions::default();
        let fps = symmetric_fixed_points(hr, mu, (-0.9, -0.05), 35, &opts).unwrap();
        assert_eq!(fps.len(), 1, "{fps:?}");
        let fp = fps[0];
        assert!(fp.residual < 1e-8, "{}", fp.residual);
        assert!(fp.stable);
        let orbit = return_map(&section_seed(fp.x, 0.0, hr, mu).unwrap(), 3, mu).unwrap();
        for p in &orbit.points {
            assert!((p.coords[0] - fp.x).abs() < 1e-8 && p.coords[1].abs() < 1e-8);
        }
    }

    #[test]
    fn returns_lie_on_section_and_level() {
        let mu = 0.1;
        let hr = h(4.329636);
        let f = RegularizedField::new(mu).unwrap();
        let seed = section_seed(0.3, 0.05, hr, mu).unwrap();
        let orbit = return_map(&seed, 20, mu).unwrap();
        assert_eq!(orbit.points.len(), 20);
        for p in &orbit.points {
            assert!(p.state[1].abs() <= 1e-12);
            assert!(p.state[3] > 0.0);
            assert!((f.hamiltonian(&p.state) - hr).abs() <= 1e-10);
        }
    }

    #[test]
    fn reversibility_of_the_map() {
        // (X, P_X) -> (X, -P_X) conjugates the map to its inverse, so
        // reflecting the first image and mapping it lands on the reflected seed.
        let (mu, hr) = (0.1, h(4.329636));
        let opts = ReturnOptions::default();
        let (x0, p0) = (0.35, 0.02);
        let img = first_return(x0, p0, hr, mu, &opts).unwrap().unwrap();
        let back = first_return(img[0], -img[1], hr, mu, &opts).unwrap().unwrap();
        assert!((back[0] - x0).abs() < 1e-8 && (back[1] + p0).abs() < 1e-8, "{back:?}");
    }

    #[test]
    fn commutes_with_double_cover() {
        let mu = 0.1;
        let hr = h(4.5);
        let f = RegularizedField::new(mu).unwrap();
        let s = section_seed(0.3, 0.04, hr, mu).unwrap().vec();
        let opts = ReturnOptions::default();
        let (a, ..) = signed_returns(f, s, 4, 1.0, &opts).unwrap();
        let (b, ..) = signed_returns(f, -s, 4, -1.0, &opts).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p.state + q.state).norm() < 1e-9);
        }
    }

    #[test]
    fn seeds_are_validated() {
        let hr = h(4.5);
        let mut seed = section_seed(0.2, 0.1, hr, 0.1).unwrap();
        seed.px += 1e-6;
        assert!(matches!(return_map(&seed, 1, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn scan_is_deterministic_and_flags_escapes() {
        let grid = GridSpec::new((-0.8, 0.8), (-0.3, 0.3), 6, 4).unwrap();
        let hr = h(4.110353);
        let a = scan(hr, 0.1, &grid, 15).unwrap();
        let b = parallel::sequential(|| scan(hr, 0.1, &grid, 15).unwrap());
        assert_eq!(a, b);
        assert!(a.escape_count() > 0);
        assert!(a.to_csv().starts_with("seed_id,iter,X,PX\n"));
    }

    #[test]
    fn loop_alternates_between_subsections() {
        let m = HillModel::rotated(0.00095).unwrap();
        let r: f64 = 0.3;
        let s0 = Vector4::new(r, 0.0, 0.0, r.powf(-0.5) - r);
        let traj = propagate(&m, 0.0, s0, 5.0, &Tolerances::default()).unwrap();
        let sigma = SectionDef::new(SectionId::Sigma, 0.00095).unwrap();
        let cuts = physical_cuts(&traj, &sigma, 8);
        assert_eq!(cuts.len(), 8);
        let c0 = m.jacobi(&s0);
        for (k, p) in cuts.iter().enumerate() {
            assert_eq!(p.cut_index, k + 1);
            assert!(p.state[0].abs() <= 1e-12);
            assert!((m.jacobi(&p.state) - c0).abs() <= 1e-10, "{:e}", m.jacobi(&p.state) - c0);
            assert!(sigma.admits(&m, c0, p.coords[0], p.coords[1]).unwrap());
            let expected = if k % 2 == 0 { SectionId::SigmaPlus } else { SectionId::SigmaMinus };
            assert_eq!(p.section, expected);
        }
        let plus = SectionDef::new(SectionId::SigmaPlus, 0.00095).unwrap();
        let only_plus = physical_cuts(&traj, &plus, 8);
        assert_eq!(only_plus.len(), 4);
        assert_eq!(only_plus.iter().map(|p| p.cut_index).collect::<Vec<_>>(), vec![1, 3, 5, 7]);
    }

    #[test]
    fn tangency_curve_properties() {
        let (c, mu) = (4.3, 0.00095);
        let m = HillModel::rotated(mu).unwrap();
        let curves = tangency_curve(c, mu, (-1.0, 1.0), 400).unwrap();
        assert!(!curves.is_empty());
        for p in curves.iter().flatten() {
            let om = m.potential(0.0, p[1], 0.0).unwrap();
            assert!((p[0] * p[0] + c - 2.0 * om).abs() <= 1e-12 * om.max(1.0));
        }
        let all = tangency_curve(-1e9, mu, (0.1, 2.0), 50).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].len(), 100);
    }

    #[test]
    fn outer_section_passes_through_l2() {
        let mu = 0.00095;
        let s = SectionDef::new(SectionId::SigmaPrime, mu).unwrap();
        let l2 = position(mu, Label::L2).unwrap().unwrap();
        let u = HillModel::rotated(mu).unwrap().to_unrotated(&Vector4::new(l2[0], l2[1], 0.0, 0.0));
        assert!((u[0] - s.offset).abs() < 1e-15);
        assert_eq!(s.frame, Frame::Unrotated);
    }
}
