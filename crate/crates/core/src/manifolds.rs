//! Invariant manifolds of planar Lyapunov orbits and their section cuts.
//!
//! Seeds are placed along the orbit at fractions `s ∈ [0, 1)` of the
//! period, displaced by `ε` along the transported (un)stable eigenvector
//! normalized in position. Cut curves are polylines ordered by `s`; new seeds
//! are inserted wherever neighbouring images on a cut drift apart.

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::equilibria::eigenvalues4;
use crate::error::{Error, Result};
use crate::integrate::{pack_variational, propagate, unpack_variational, Tolerances, Trajectory, Variational};
use crate::io::Csv;
use crate::model::{Frame, HillModel};
use crate::orbits::PeriodicOrbit;
use crate::parallel;
use crate::poincare::{cut_stream, SectionDef, SectionId, SectionPoint};

pub const EPSILON: f64 = 1e-6;
pub const N_SEEDS: usize = 200;
pub const INSERT_THRESHOLD: f64 = 1e-3;
pub const REFINE_TOL: f64 = 1e-8;
/// Seeds closer than this in orbit fraction are not split further.
pub const MIN_SPACING: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Stable,
    Unstable,
}

impl Sense {
    pub fn label(&self) -> &'static str {
        match self {
            Sense::Stable => "stable",
            Sense::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Inner,
    Outer,
}

/// A one-sided branch of `W^s` or `W^u` of a periodic orbit.
#[derive(Debug, Clone)]
pub struct ManifoldBranch {
    pub orbit: PeriodicOrbit,
    pub sense: Sense,
    pub side: Side,
    pub epsilon: f64,
    /// Multiplier of the seeding eigenvector.
    pub multiplier: f64,
    pub params: Vec<f64>,
    /// Rotated-frame seed states, one per parameter.
    pub seeds: Vec<Vector4<f64>>,
    orbit_traj: Trajectory<20>,
    v0: Vector4<f64>,
    sign: f64,
}

impl ManifoldBranch {
    /// Rotated-frame seed at fraction `s` of the period.
    pub fn seed_at(&self, s: f64) -> Vector4<f64> {
        let t = s.rem_euclid(1.0) * self.orbit.period;
        let y = self.orbit_traj.at(t).expect("time within the recorded period");
        let (x, phi) = unpack_variational(&y);
        let v = phi * self.v0;
        let n = v[0].hypot(v[1]);
        x + v * (self.sign * self.epsilon / n)
    }

    pub fn jacobi(&self) -> f64 {
        self.orbit.jacobi
    }
}

/// Null vector of `m − λI` from its smallest singular value.
fn eigenvector(m: &Matrix4<f64>, lambda: f64) -> Vector4<f64> {
    let svd = (m - Matrix4::identity() * lambda).svd(false, true);
    let vt = svd.v_t.expect("requested");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("four singular values");
    vt.row(k).transpose()
}

/// Seeds `n` points of one branch of the orbit's stable or unstable
/// manifold.
pub fn seed_manifold(orbit: &PeriodicOrbit, sense: Sense, side: Side, epsilon: f64, n: usize) -> Result<ManifoldBranch> {
    if !(orbit.stability_index > 1.0) {
        return Err(Error::Domain(format!(
            "orbit with stability index {} has no hyperbolic manifolds",
            orbit.stability_index
        )));
    }
    if n == 0 || !(epsilon > 0.0) {
        return Err(Error::Domain("need n > 0 seeds and epsilon > 0".into()));
    }
    let model = HillModel::rotated(orbit.mu)?;
    let var = Variational(model);
    let start = pack_variational(&orbit.state0(), &Matrix4::identity());
    let traj = propagate(&var, 0.0, start, orbit.period, &Tolerances::default())?;
    let (_, mono) = unpack_variational(&traj.y_final());
    let eigs = eigenvalues4(&mono)?;
    let lambda_u = eigs
        .iter()
        .filter(|z| z.im.abs() < 1e-8 * z.norm().max(1.0))
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let multiplier = match sense {
        Sense::Unstable => lambda_u,
        Sense::Stable => 1.0 / lambda_u,
    };
    let v0 = eigenvector(&mono, multiplier);
    // Inner: the displaced start moves toward the tertiary.
    let x0 = orbit.state0();
    let radial = v0[0] * x0[0] + v0[1] * x0[1];
    let sign = match side {
        Side::Inner => -radial.signum(),
        Side::Outer => radial.signum(),
    };
    let mut branch = ManifoldBranch {
        orbit: orbit.clone(),
        sense,
        side,
        epsilon,
        multiplier,
        params: (0..n).map(|i| i as f64 / n as f64).collect(),
        seeds: Vec::new(),
        orbit_traj: traj,
        v0,
        sign,
    };
    branch.seeds = branch.params.iter().map(|&s| branch.seed_at(s)).collect();
    Ok(branch)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GlobalizeOptions {
    pub max_cuts: usize,
    pub insert_threshold: f64,
    pub max_seeds: usize,
    /// Time budget per seed (absolute value).
    pub t_max: f64,
    pub tol: Tolerances,
}

impl Default for GlobalizeOptions {
    fn default() -> Self {
        GlobalizeOptions {
            max_cuts: 6,
            insert_threshold: INSERT_THRESHOLD,
            max_seeds: 20_000,
            t_max: 3000.0,
            tol: Tolerances::default(),
        }
    }
}

/// Points of one cut index, in seed order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutCurve {
    pub sense: Sense,
    pub cut_index: usize,
    pub section: SectionId,
    /// `(y, ẏ)` per point.
    pub points: Vec<[f64; 2]>,
    /// Seed parameter per point.
    pub params: Vec<f64>,
    /// Subsection per point.
    pub branches: Vec<SectionId>,
    /// `link[i]` is true when points `i` and `i + 1` (cyclically) come from
    /// neighbouring seeds on the same subsection and are joined by a segment.
    pub link: Vec<bool>,
    pub closed: bool,
}

impl CutCurve {
    /// Segments `(i, j)` of the polyline.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.points.len();
        (0..n).filter(move |&i| self.link[i] && n > 1).map(move |i| (i, (i + 1) % n))
    }

    /// Number of crossings between non-adjacent segments.
    pub fn self_intersections(&self) -> usize {
        let segs: Vec<_> = self.segments().collect();
        let mut count = 0;
        for a in 0..segs.len() {
            for b in a + 1..segs.len() {
                let (i, j) = segs[a];
                let (k, l) = segs[b];
                if i == k || i == l || j == k || j == l {
                    continue;
                }
                let p = &self.points;
                if segment_intersection(p[i], p[j], p[k], p[l]).is_some() {
                    count += 1;
                }
            }
        }
        count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Globalized {
    pub sense: Sense,
    pub side: Side,
    pub section: SectionDef,
    pub jacobi: f64,
    pub curves: Vec<CutCurve>,
    pub seeds: usize,
    /// Seeds stopped by the collision guard or an integration failure.
    pub dropped: usize,
    /// True when `max_seeds` stopped the refinement.
    pub capped: bool,
    /// Largest distance from the origin over all cut points and stop states.
    pub max_radius: f64,
    /// Largest Jacobi-constant deviation of a cut from the orbit.
    pub jacobi_drift: f64,
}

impl Globalized {
    pub fn curve(&self, cut_index: usize) -> Option<&CutCurve> {
        self.curves.iter().find(|c| c.cut_index == cut_index)
    }
}

#[derive(Debug, Clone)]
struct SeedRun {
    cuts: Vec<SectionPoint>,
    dropped: bool,
    max_radius: f64,
}

fn run_seed(
    branch: &ManifoldBranch,
    model: &HillModel,
    section: &SectionDef,
    s: f64,
    opts: &GlobalizeOptions,
) -> SeedRun {
    let rotated = HillModel::rotated(branch.orbit.mu).expect("validated mass ratio");
    let mut y0 = branch.seed_at(s);
    if section.frame == Frame::Unrotated {
        y0 = rotated.to_unrotated(&y0);
    }
    let t_max = match branch.sense {
        Sense::Unstable => opts.t_max,
        Sense::Stable => -opts.t_max,
    };
    match cut_stream(model, y0, t_max, &opts.tol, section, opts.max_cuts, 0) {
        Ok((points, out)) => {
            let cuts: Vec<SectionPoint> = points.into_iter().filter(|p| !p.tangential).collect();
            let max_radius = cuts
                .iter()
                .map(|p| p.state[0].hypot(p.state[1]))
                .chain(std::iter::once(out.y[0].hypot(out.y[1])))
                .fold(0.0, f64::max);
            SeedRun { cuts, dropped: matches!(out.stop, crate::integrate::Stop::Guard(_)), max_radius }
        }
        Err(_) => SeedRun { cuts: Vec::new(), dropped: true, max_radius: f64::NAN },
    }
}

/// Propagates the branch (unstable forward, stable backward) to `max_cuts`
/// crossings of `section` and assembles the cut curves, inserting seeds
/// where neighbouring images on a cut separate by more than the threshold.
pub fn globalize(branch: &ManifoldBranch, section: &SectionDef, opts: &GlobalizeOptions) -> Result<Globalized> {
    let model = HillModel::new(branch.orbit.mu, section.frame)?;
    let mut params = branch.params.clone();
    let mut runs = parallel::map(&params, |_, &s| run_seed(branch, &model, section, s, opts));
    let mut capped = false;
    loop {
        let n = params.len();
        let mut inserts = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            let (a, b) = (&runs[i], &runs[j]);
            let far = (1..=opts.max_cuts).any(|k| match (cut_k(a, k), cut_k(b, k)) {
                (Some(p), Some(q)) => dist(p.coords, q.coords) > opts.insert_threshold,
                _ => false,
            });
            let hi = if j == 0 { params[j] + 1.0 } else { params[j] };
            if far && hi - params[i] > MIN_SPACING {
                inserts.push(0.5 * (params[i] + hi) % 1.0);
            }
        }
        if inserts.is_empty() {
            break;
        }
        if n + inserts.len() > opts.max_seeds {
            capped = true;
            break;
        }
        let new_runs = parallel::map(&inserts, |_, &s| run_seed(branch, &model, section, s, opts));
        let mut merged: Vec<(f64, SeedRun)> = params.into_iter().zip(runs).chain(inserts.into_iter().zip(new_runs)).collect();
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        (params, runs) = merged.into_iter().unzip();
    }

    let c0 = branch.orbit.jacobi;
    let jacobi_drift = runs
        .iter()
        .flat_map(|r| r.cuts.iter())
        .map(|p| (model.jacobi(&p.state) - c0).abs())
        .fold(0.0, f64::max);
    let curves = (1..=opts.max_cuts)
        .map(|k| assemble(branch.sense, section, k, &params, &runs))
        .filter(|c| !c.points.is_empty())
        .collect();
    Ok(Globalized {
        sense: branch.sense,
        side: branch.side,
        section: *section,
        jacobi: c0,
        curves,
        seeds: params.len(),
        dropped: runs.iter().filter(|r| r.dropped).count(),
        capped,
        max_radius: runs.iter().map(|r| r.max_radius).fold(0.0, f64::max),
        jacobi_drift,
    })
}

fn cut_k(run: &SeedRun, k: usize) -> Option<&SectionPoint> {
    run.cuts.iter().find(|p| p.cut_index == k)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn assemble(sense: Sense, section: &SectionDef, k: usize, params: &[f64], runs: &[SeedRun]) -> CutCurve {
    let mut points = Vec::new();
    let mut ps = Vec::new();
    let mut branches = Vec::new();
    let mut ranks = Vec::new();
    for (rank, (s, run)) in params.iter().zip(runs).enumerate() {
        if let Some(p) = cut_k(run, k) {
            points.push(p.coords);
            ps.push(*s);
            branches.push(p.section);
            ranks.push(rank);
        }
    }
    let n = points.len();
    let closed = n == params.len() && n > 2;
    let link = (0..n)
        .map(|i| {
            let adjacent = if i + 1 < n { ranks[i + 1] == ranks[i] + 1 } else { closed };
            adjacent && branches[i] == branches[(i + 1) % n]
        })
        .collect();
    CutCurve { sense, cut_index: k, section: section.id, points, params: ps, branches, link, closed }
}

/// Intersection of segments `ab` and `cd` as `(point, t_ab, t_cd)`.
pub fn segment_intersection(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> Option<([f64; 2], f64, f64)> {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [d[0] - c[0], d[1] - c[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den == 0.0 {
        return None;
    }
    let q = [c[0] - a[0], c[1] - a[1]];
    let t = (q[0] * s[1] - q[1] * s[0]) / den;
    let u = (q[0] * r[1] - q[1] * r[0]) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u))
        .then(|| ([a[0] + t * r[0], a[1] + t * r[1]], t, u))
}

/// One intersection between a `W^u` cut and a `W^s` cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intersection {
    pub point: [f64; 2],
    pub branch: SectionId,
    /// Seed-parameter brackets `(s_a, s_b)` on each manifold.
    pub unstable_params: (f64, f64),
    pub stable_params: (f64, f64),
    /// Final bracket size in section coordinates.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomoclinicRecord {
    pub n_u: usize,
    pub n_s: usize,
    pub section: SectionId,
    pub points: Vec<Intersection>,
    pub jacobi: f64,
}

fn curve_intersections(u: &CutCurve, s: &CutCurve) -> Vec<Intersection> {
    let s_segs: Vec<(usize, usize)> = s.segments().collect();
    if s_segs.is_empty() {
        return Vec::new();
    }
    // Uniform bucket grid over the stable curve's bounding box.
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &s.points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let cells = (s_segs.len() as f64).sqrt().ceil().max(1.0) as usize;
    let size = [(hi[0] - lo[0]).max(1e-12) / cells as f64, (hi[1] - lo[1]).max(1e-12) / cells as f64];
    let cell_range = |a: [f64; 2], b: [f64; 2]| {
        let idx = |v: f64, d: usize| (((v - lo[d]) / size[d]).floor().max(0.0) as usize).min(cells - 1);
        let r0 = (idx(a[0].min(b[0]), 0), idx(a[0].max(b[0]), 0));
        let r1 = (idx(a[1].min(b[1]), 1), idx(a[1].max(b[1]), 1));
        (r0, r1)
    };
    let mut grid = vec![Vec::new(); cells * cells];
    for (n, &(k, l)) in s_segs.iter().enumerate() {
        let ((i0, i1), (j0, j1)) = cell_range(s.points[k], s.points[l]);
        for i in i0..=i1 {
            for j in j0..=j1 {
                grid[i * cells + j].push(n);
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = Vec::new();
    for (i, j) in u.segments() {
        let (a, b) = (u.points[i], u.points[j]);
        if a[0].max(b[0]) < lo[0] || a[0].min(b[0]) > hi[0] || a[1].max(b[1]) < lo[1] || a[1].min(b[1]) > hi[1] {
            continue;
        }
        let ((i0, i1), (j0, j1)) = cell_range(a, b);
        seen.clear();
        for ci in i0..=i1 {
            for cj in j0..=j1 {
                seen.extend_from_slice(&grid[ci * cells + cj]);
            }
        }
        seen.sort_unstable();
        seen.dedup();
        for &n in &seen {
            let (k, l) = s_segs[n];
            if s.branches[k] != u.branches[i] {
                continue;
            }
            if let Some((p, _, _)) = segment_intersection(a, b, s.points[k], s.points[l]) {
                out.push(Intersection {
                    point: p,
                    branch: u.branches[i],
                    unstable_params: (u.params[i], u.params[j]),
                    stable_params: (s.params[k], s.params[l]),
                    accuracy: dist(a, b).max(dist(s.points[k], s.points[l])),
                });
            }
        }
    }
    out
}

/// Scans index pairs by increasing `n_u + n_s` and returns every record at
/// the smallest sum with an intersection, balanced pairs first.
///
/// Successive crossings of one homoclinic orbit shift `(n_u, n_s)` to
/// `(n_u + 1, n_s − 1)`, so all records of a given sum describe the same
/// orbits; the balanced pair `(⌊S/2⌋, ⌈S/2⌉)` and its partner lead the list.
pub fn first_intersection(cuts_u: &[CutCurve], cuts_s: &[CutCurve], jacobi: f64) -> Vec<HomoclinicRecord> {
    intersections_from(cuts_u, cuts_s, jacobi, 2).map(|(_, r)| r).unwrap_or_default()
}

fn intersections_from(
    cuts_u: &[CutCurve],
    cuts_s: &[CutCurve],
    jacobi: f64,
    min_total: usize,
) -> Option<(usize, Vec<HomoclinicRecord>)> {
    let max_u = cuts_u.iter().map(|c| c.cut_index).max().unwrap_or(0);
    let max_s = cuts_s.iter().map(|c| c.cut_index).max().unwrap_or(0);
    for total in min_total..=max_u + max_s {
        let mut records = Vec::new();
        for n_u in 1..total {
            let n_s = total - n_u;
            let (Some(u), Some(s)) = (
                cuts_u.iter().find(|c| c.cut_index == n_u),
                cuts_s.iter().find(|c| c.cut_index == n_s),
            ) else {
                continue;
            };
            let points = curve_intersections(u, s);
            if !points.is_empty() {
                records.push(HomoclinicRecord { n_u, n_s, section: u.section, points, jacobi });
            }
        }
        if !records.is_empty() {
            records.sort_by_key(|r| (r.n_u.abs_diff(r.n_s), r.n_u.max(r.n_s), r.n_s));
            return Some((total, records));
        }
    }
    None
}

/// Refined points coarser than this are treated as polyline artifacts.
pub const CONFIRM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomoclinicReport {
    pub records: Vec<HomoclinicRecord>,
    /// Polyline crossings discarded because refinement did not converge.
    pub rejected: usize,
}

/// Like [`first_intersection`], but every candidate is refined on the
/// manifolds themselves and index sums whose crossings all fail to
/// converge are skipped.
pub fn first_confirmed_intersection(
    unstable: &ManifoldBranch,
    stable: &ManifoldBranch,
    gu: &Globalized,
    gs: &Globalized,
    opts: &GlobalizeOptions,
) -> Result<HomoclinicReport> {
    let mut rejected = 0;
    let mut from = 2;
    while let Some((total, mut records)) = intersections_from(&gu.curves, &gs.curves, gu.jacobi, from) {
        for r in &mut records {
            refine_record(r, unstable, stable, &gu.section, opts, REFINE_TOL)?;
            let before = r.points.len();
            r.points.retain(|p| p.accuracy <= CONFIRM_TOL);
            rejected += before - r.points.len();
        }
        records.retain(|r| !r.points.is_empty());
        if !records.is_empty() {
            return Ok(HomoclinicReport { records, rejected });
        }
        from = total + 1;
    }
    Ok(HomoclinicReport { records: Vec::new(), rejected })
}

/// Sharpens every intersection point of `record` by bisecting the seed
/// parameters of both bracketing segments until both are shorter than
/// `tol` in section coordinates.
pub fn refine_record(
    record: &mut HomoclinicRecord,
    unstable: &ManifoldBranch,
    stable: &ManifoldBranch,
    section: &SectionDef,
    opts: &GlobalizeOptions,
    tol: f64,
) -> Result<()> {
    let model = HillModel::new(unstable.orbit.mu, section.frame)?;
    let point_of = |b: &ManifoldBranch, s: f64, k: usize| -> Option<[f64; 2]> {
        let o = GlobalizeOptions { max_cuts: k, ..*opts };
        let run = run_seed(b, &model, section, s, &o);
        cut_k(&run, k).map(|p| p.coords)
    };
    let (nu, ns) = (record.n_u, record.n_s);
    let refined = parallel::map(&record.points, |_, ip| {
        let mut ip = *ip;
        let (mut ua, mut ub) = ip.unstable_params;
        let (mut sa, mut sb) = ip.stable_params;
        if ub < ua {
            ub += 1.0;
        }
        if sb < sa {
            sb += 1.0;
        }
        let (mut pua, mut pub_) = (point_of(unstable, ua, nu)?, point_of(unstable, ub, nu)?);
        let (mut psa, mut psb) = (point_of(stable, sa, ns)?, point_of(stable, sb, ns)?);
        for _ in 0..60 {
            let acc = dist(pua, pub_).max(dist(psa, psb));
            if let Some((p, ..)) = segment_intersection(pua, pub_, psa, psb) {
                ip.point = p;
                ip.accuracy = acc;
            }
            if acc <= tol {
                break;
            }
            let (um, sm) = (0.5 * (ua + ub), 0.5 * (sa + sb));
            let (pum, psm) = (point_of(unstable, um, nu)?, point_of(stable, sm, ns)?);
            let halves_u = [(ua, um, pua, pum), (um, ub, pum, pub_)];
            let halves_s = [(sa, sm, psa, psm), (sm, sb, psm, psb)];
            // Prefer the halves that still cross; otherwise follow the closest pair.
            let mut next = None;
            let mut best = f64::INFINITY;
            for hu in halves_u {
                for hs in halves_s {
                    let gap = if segment_intersection(hu.2, hu.3, hs.2, hs.3).is_some() {
                        -1.0
                    } else {
                        segment_distance(hu.2, hu.3, hs.2, hs.3)
                    };
                    if gap < best {
                        best = gap;
                        next = Some((hu, hs));
                    }
                }
            }
            let Some((hu, hs)) = next else { break };
            (ua, ub, pua, pub_) = hu;
            (sa, sb, psa, psb) = hs;
        }
        ip.unstable_params = (ua % 1.0, ub % 1.0);
        ip.stable_params = (sa % 1.0, sb % 1.0);
        Some(ip)
    });
    record.points = refined
        .into_iter()
        .zip(&record.points)
        .map(|(r, orig)| r.unwrap_or(*orig))
        .collect();
    Ok(())
}

/// Rows `sense,cut_index,point_order,y,ydot`.
pub fn manifolds_csv(sets: &[&Globalized]) -> String {
    let mut csv = Csv::new(&["sense", "cut_index", "point_order", "y", "ydot"]);
    for g in sets {
        for c in &g.curves {
            for (i, p) in c.points.iter().enumerate() {
                csv.row(&[
                    g.sense.label().to_string(),
                    c.cut_index.to_string(),
                    i.to_string(),
                    crate::io::num(p[0]),
                    crate::io::num(p[1]),
                ]);
            }
        }
    }
    csv.finish()
}

/// Largest distance from a point of `a` to the mirror image of the nearest
/// point of `b` under `(y, ẏ) ↦ (−y, ẏ)`, relative to the curve scale.
pub fn mirror_mismatch(a: &CutCurve, b: &CutCurve) -> f64 {
    let mirrored: Vec<[f64; 2]> = b.points.iter().map(|p| [-p[0], p[1]]).collect();
    a.points
        .iter()
        .map(|p| {
            let mut best = f64::INFINITY;
            for (i, j) in b.segments() {
                best = best.min(point_segment_distance(*p, mirrored[i], mirrored[j]));
            }
            best
        })
        .fold(0.0, f64::max)
}

fn segment_distance(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> f64 {
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0) };
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}
