//! Equilibrium points of the rotated Hill model, their linear stability and
//! the critical mass ratio at which L3/L4 lose linear stability.

use std::cmp::Ordering;

use nalgebra::{Complex, Matrix4, Rotation3, Schur, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::Csv;
use crate::model::HillModel;
use crate::parallel;

/// Value quoted in the paper for the critical mass ratio.
pub const MU0_PAPER: f64 = 0.00898964;

/// Threshold on |D| below which a point is classified as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Real parts smaller than this count as zero when classifying numerically.
pub const NUMERIC_RE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Label {
    L1,
    L2,
    L3,
    L4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    /// ±Λ, ±iω.
    SaddleCenter,
    /// Two purely imaginary pairs.
    CenterCenter,
    /// ±α ± iω.
    ComplexSaddle,
    /// Two real pairs; not reached by the Hill model but kept for completeness.
    SaddleSaddle,
    Degenerate,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::SaddleCenter => "SaddleCenter",
            Kind::CenterCenter => "CenterCenter",
            Kind::ComplexSaddle => "ComplexSaddle",
            Kind::SaddleSaddle => "SaddleSaddle",
            Kind::Degenerate => "Degenerate",
        }
    }
}

/// Coefficients of `λ⁴ + Aλ² + B` and the discriminant `D = A² − 4B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharPoly {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumInfo {
    pub label: Label,
    /// Rotated-frame position, z = 0.
    pub position: Vector2<f64>,
    pub jacobi: f64,
    /// (Ω_xx, Ω_yy, Ω_xy).
    pub second_partials: (f64, f64, f64),
    pub charpoly: CharPoly,
    /// Roots of the characteristic polynomial, sorted.
    pub eigenvalues: [Complex<f64>; 4],
    pub kind: Kind,
}

/// Closed-form position of an equilibrium; `None` for L3/L4 at μ = 0.
pub fn position(mu: f64, label: Label) -> Result<Option<Vector2<f64>>> {
    let m = HillModel::rotated(mu)?;
    let (l1, l2) = (m.eig.lambda1, m.eig.lambda2);
    let x = l2.powf(-1.0 / 3.0);
    Ok(match label {
        Label::L1 => Some(Vector2::new(x, 0.0)),
        Label::L2 => Some(Vector2::new(-x, 0.0)),
        Label::L3 | Label::L4 if l1 == 0.0 => None,
        Label::L3 => Some(Vector2::new(0.0, l1.powf(-1.0 / 3.0))),
        Label::L4 => Some(Vector2::new(0.0, -l1.powf(-1.0 / 3.0))),
    })
}

/// Full record for one equilibrium; `None` when the point is absent.
pub fn equilibrium(mu: f64, label: Label) -> Result<Option<EquilibriumInfo>> {
    let Some(p) = position(mu, label)? else {
        return Ok(None);
    };
    let m = HillModel::rotated(mu)?;
    let partials = m.partials(p[0], p[1]);
    let charpoly = charpoly(partials);
    Ok(Some(EquilibriumInfo {
        label,
        position: p,
        jacobi: 2.0 * m.potential(p[0], p[1], 0.0)?,
        second_partials: partials,
        charpoly,
        eigenvalues: charpoly_roots(&charpoly),
        kind: classify(&charpoly),
    }))
}

/// All equilibria present at `mu`: L1, L2 and, for μ > 0, L3, L4.
pub fn equilibrium_points(mu: f64) -> Result<Vec<EquilibriumInfo>> {
    let mut out = Vec::with_capacity(4);
    for label in [Label::L1, Label::L2, Label::L3, Label::L4] {
        if let Some(e) = equilibrium(mu, label)? {
            out.push(e);
        }
    }
    Ok(out)
}

pub fn charpoly((xx, yy, xy): (f64, f64, f64)) -> CharPoly {
    let a = 4.0 - xx - yy;
    let b = xx * yy - xy * xy;
    CharPoly { a, b, d: a * a - 4.0 * b }
}

/// Linearization of the planar field at an equilibrium.
pub fn linearize(point: &EquilibriumInfo) -> Matrix4<f64> {
    let (xx, yy, xy) = point.second_partials;
    Matrix4::new(
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        xx, xy, 0.0, 2.0, //
        xy, yy, -2.0, 0.0,
    )
}

pub fn classify(p: &CharPoly) -> Kind {
    if p.d.abs() <= DEGENERACY_TOL {
        Kind::Degenerate
    } else if p.b < 0.0 {
        Kind::SaddleCenter
    } else if p.d < 0.0 {
        Kind::ComplexSaddle
    } else if p.a > 0.0 {
        Kind::CenterCenter
    } else {
        Kind::SaddleSaddle
    }
}

/// Descending real part, then descending imaginary part. Real parts are
/// compared on a 1e−9 grid so that rounding noise on purely imaginary
/// eigenvalues does not change the order.
pub fn sort_eigenvalues(v: &mut [Complex<f64>]) {
    let key = |z: &Complex<f64>| (z.re * 1e9).round() + 0.0;
    v.sort_by(|a, b| match key(b).total_cmp(&key(a)) {
        Ordering::Equal => b.im.total_cmp(&a.im),
        o => o,
    });
}

pub fn charpoly_roots(p: &CharPoly) -> [Complex<f64>; 4] {
    let sq = Complex::new(p.d, 0.0).sqrt();
    let w1 = (Complex::new(-p.a, 0.0) + sq) / 2.0;
    let w2 = (Complex::new(-p.a, 0.0) - sq) / 2.0;
    let (r1, r2) = (w1.sqrt(), w2.sqrt());
    let mut roots = [r1, -r1, r2, -r2];
    sort_eigenvalues(&mut roots);
    roots
}

/// Eigenvalues of the 4×4 linearization by a general eigen-solver, sorted.
pub fn numeric_eigenvalues(point: &EquilibriumInfo) -> Result<[Complex<f64>; 4]> {
    eigenvalues4(&linearize(point))
}

/// Eigenvalues of a real 4×4 matrix via the real Schur form. The QR
/// iteration can stall on the highly structured linearizations; in that case
/// the transpose and then a fixed orthogonal similarity are tried, neither of
/// which changes the spectrum.
pub fn eigenvalues4(m: &Matrix4<f64>) -> Result<[Complex<f64>; 4]> {
    const MAX_ITER: usize = 10_000;
    let q = Rotation3::from_euler_angles(0.3, -0.7, 1.1).to_homogeneous();
    let candidates = [*m, m.transpose(), q * m * q.transpose()];
    for c in candidates {
        if let Some(schur) = Schur::try_new(c, f64::EPSILON, MAX_ITER) {
            let ev = schur.complex_eigenvalues();
            let mut out = [ev[0], ev[1], ev[2], ev[3]];
            sort_eigenvalues(&mut out);
            return Ok(out);
        }
    }
    Err(Error::NonConvergence { iterations: MAX_ITER, history: vec![] })
}

/// Classification from eigenvalues alone.
pub fn classify_numeric(eigs: &[Complex<f64>; 4]) -> Kind {
    let hyperbolic: Vec<&Complex<f64>> =
        eigs.iter().filter(|z| z.re.abs() > NUMERIC_RE_TOL).collect();
    let real = |z: &&Complex<f64>| z.im.abs() <= NUMERIC_RE_TOL;
    match hyperbolic.len() {
        0 => Kind::CenterCenter,
        2 if hyperbolic.iter().all(real) => Kind::SaddleCenter,
        4 if hyperbolic.iter().all(real) => Kind::SaddleSaddle,
        4 => Kind::ComplexSaddle,
        _ => Kind::Degenerate,
    }
}

/// Discriminant at L3 as a function of μ, from the closed-form partials.
pub fn l3_discriminant(mu: f64) -> Result<f64> {
    equilibrium(mu, Label::L3)?
        .map(|e| e.charpoly.d)
        .ok_or_else(|| Error::Domain("L3 does not exist at mu = 0".into()))
}

/// One row of the L3 stability sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub mu: f64,
    pub charpoly: CharPoly,
    pub kind: Kind,
}

/// L3 coefficients at each μ, in input order.
pub fn stability_sweep(mus: &[f64]) -> Result<Vec<SweepRow>> {
    parallel::map(mus, |_, &mu| {
        let e = equilibrium(mu, Label::L3)?
            .ok_or_else(|| Error::Domain("L3 does not exist at mu = 0".into()))?;
        Ok(SweepRow { mu, charpoly: e.charpoly, kind: e.kind })
    })
    .into_iter()
    .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = Csv::new(&["mu", "A", "B", "D", "kind"]);
    for r in rows {
        let n = crate::io::num;
        csv.row(&[n(r.mu), n(r.charpoly.a), n(r.charpoly.b), n(r.charpoly.d), r.kind.as_str().into()]);
    }
    csv.finish()
}

/// Critical mass ratio as computed here, next to the paper's numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuCritical {
    /// Root of D(μ) at L3 by bisection.
    pub computed_root: f64,
    /// First μ at which the numerical L3 eigenvalues leave the imaginary axis.
    pub eigenvalue_transition: f64,
    pub paper_value: f64,
    /// The paper's closed-form expression, evaluated.
    pub paper_closed_form: f64,
    /// D at L3 evaluated at the paper's value.
    pub discriminant_at_paper_value: f64,
    pub discrepancy: f64,
    pub discrepancy_flag: bool,
}

/// Threshold on |computed − paper| that raises the discrepancy flag.
pub const DISCREPANCY_THRESHOLD: f64 = 1e-4;

/// Step of the eigenvalue sweep that brackets the transition.
pub const ORACLE_SWEEP_STEP: f64 = 1e-5;

fn bisect<F: Fn(f64) -> bool>(pred: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    // pred(lo) false, pred(hi) true
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn critical_mass_ratio(tol: f64) -> Result<MuCritical> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    // D at L3 is positive for small μ; find the first sign change on a coarse grid.
    let grid: Vec<f64> = (1..=500).map(|k| 0.5 * k as f64 / 500.0).collect();
    let mut lo = 1e-9;
    if l3_discriminant(lo)? <= 0.0 {
        return Err(Error::Inconsistent("D at L3 is not positive near mu = 0".into()));
    }
    let mut hi = None;
    for &mu in &grid {
        if l3_discriminant(mu)? < 0.0 {
            hi = Some(mu);
            break;
        }
        lo = mu;
    }
    let hi = hi.ok_or_else(|| Error::Inconsistent("no sign change of D at L3 on (0, 1/2]".into()))?;
    let computed_root = bisect(|mu| l3_discriminant(mu).map(|d| d < 0.0).unwrap_or(false), lo, hi, tol);

    let unstable = |mu: f64| -> bool {
        match equilibrium(mu, Label::L3) {
            Ok(Some(e)) => numeric_eigenvalues(&e)
                .map(|ev| ev.iter().any(|z| z.re.abs() > NUMERIC_RE_TOL))
                .unwrap_or(false),
            _ => false,
        }
    };
    let mut prev = ORACLE_SWEEP_STEP;
    let mut bracket = None;
    let n = (0.5 / ORACLE_SWEEP_STEP).round() as usize;
    for k in 2..=n {
        let mu = k as f64 * ORACLE_SWEEP_STEP;
        if unstable(mu) {
            bracket = Some((prev, mu));
            break;
        }
        prev = mu;
    }
    let (a, b) = bracket
        .ok_or_else(|| Error::Inconsistent("L3 eigenvalues never leave the imaginary axis".into()))?;
    let eigenvalue_transition = bisect(unstable, a, b, tol);

    let paper_closed_form =
        (112.0 - (2.0 * (1979.0 + 37.0 * 12097f64.sqrt())).sqrt()) / 224.0;
    let discrepancy = (computed_root - MU0_PAPER).abs();
    Ok(MuCritical {
        computed_root,
        eigenvalue_transition,
        paper_value: MU0_PAPER,
        paper_closed_form,
        discriminant_at_paper_value: l3_discriminant(MU0_PAPER)?,
        discrepancy,
        discrepancy_flag: discrepancy > DISCREPANCY_THRESHOLD,
    })
}

/// μ as a function of d on [0, 1/2].
pub fn mu_from_d(d: f64) -> f64 {
    (3.0 - (9.0 - 12.0 * (1.0 - d * d)).max(0.0).sqrt()) / 6.0
}
