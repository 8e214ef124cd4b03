use anyhow::{Context, Result};
use serde_json::json;

use hill4bp::equilibria::{critical_mass_ratio, equilibrium_points, stability_sweep, sweep_csv, Label};
use hill4bp::integrate::{propagate, Tolerances, VectorField};
use hill4bp::io::{num, Csv};
use hill4bp::manifolds::{
    first_confirmed_intersection, globalize, manifolds_csv, seed_manifold, GlobalizeOptions, Globalized, Sense, Side,
};
use hill4bp::model::{
    field_convergence, hill_region_mask, scaled_r4bp_field, unit_ball_samples, Frame, GridSpec, HillModel, ModelParams,
};
use hill4bp::orbits::{detect_pitchfork, g_family, lyapunov_at_energy, lyapunov_orbit, PeriodicOrbit};
use hill4bp::poincare::{scan, symmetric_fixed_points, ReturnOptions, SectionDef, SectionId};
use hill4bp::regularization::regularized_energy;

use crate::manifest::Outputs;
use crate::{
    Command, CompareArgs, ConvergenceArgs, EquilibriaArgs, FrameArg, GfamilyArgs, HillRegionArgs, LyapunovArgs,
    ManifoldsArgs, MuCriticalArgs, PoincareArgs, PointArg, RegionArg,
};

pub fn run(cmd: &Command) -> Result<Outputs> {
    match cmd {
        Command::Equilibria(a) => equilibria(a),
        Command::MuCritical(a) => mu_critical(a),
        Command::HillRegion(a) => hill_region(a),
        Command::Poincare(a) => poincare(a),
        Command::Gfamily(a) => gfamily(a),
        Command::Lyapunov(a) => lyapunov(a),
        Command::Manifolds(a) => manifolds(a),
        Command::CompareR4bp(a) => compare_r4bp(a),
        Command::Convergence(a) => convergence(a),
    }
}

fn equilibria(a: &EquilibriaArgs) -> Result<Outputs> {
    let points = equilibrium_points(a.mu)?;
    let mut out = Outputs::default();
    let mut csv = Csv::new(&["label", "x", "y", "jacobi", "kind"]);
    for p in &points {
        csv.row(&[
            format!("{:?}", p.label),
            num(p.position[0]),
            num(p.position[1]),
            num(p.jacobi),
            p.kind.as_str().to_string(),
        ]);
    }
    out.file("equilibria.csv", csv.finish());
    let c_l1 = points.iter().find(|p| p.label == Label::L1).map(|p| p.jacobi);
    let report = json!({ "mu": a.mu, "C_L1": c_l1, "points": points });
    out.json("equilibria.json", &report)?;
    out.summary = json!({
        "mu": a.mu,
        "C_L1": c_l1,
        "points": points.iter().map(|p| json!({
            "label": p.label, "x": p.position[0], "y": p.position[1], "jacobi": p.jacobi, "kind": p.kind,
        })).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn mu_critical(a: &MuCriticalArgs) -> Result<Outputs> {
    let r = critical_mass_ratio(a.tol)?;
    let mus: Vec<f64> = (1..=a.points).map(|k| 0.5 * k as f64 / a.points as f64).collect();
    let rows = stability_sweep(&mus)?;
    let mut out = Outputs::default();
    if r.discrepancy_flag {
        out.warn(format!(
            "computed critical mass ratio {:.10} differs from the paper value {} by {:.3e}",
            r.computed_root, r.paper_value, r.discrepancy
        ));
    }
    out.json("mu_critical.json", &r)?;
    out.file("mu_critical_sweep.csv", sweep_csv(&rows));
    out.summary = serde_json::to_value(r)?;
    Ok(out)
}

fn hill_region(a: &HillRegionArgs) -> Result<Outputs> {
    let frame = match a.frame {
        FrameArg::Rotated => Frame::Rotated,
        FrameArg::Unrotated => Frame::Unrotated,
    };
    let grid = GridSpec::new((a.xmin, a.xmax), (a.ymin, a.ymax), a.nx, a.ny)?;
    let region = hill_region_mask(&grid, a.jacobi, &ModelParams::new(a.mu, frame)?)?;
    let (_, components) = region.components();
    let mut out = Outputs::default();
    out.file("hill_region.csv", region.to_csv());
    let mut desc = region.descriptor();
    desc["components"] = json!(components);
    out.json("hill_region.json", &desc)?;
    out.summary = desc;
    Ok(out)
}

fn poincare(a: &PoincareArgs) -> Result<Outputs> {
    let h = regularized_energy(a.jacobi)?;
    let grid = GridSpec::new((a.xmin, a.xmax), (a.pxmin, a.pxmax), a.grid, a.grid)?;
    let res = scan(h, a.mu, &grid, a.iterates)?;
    let fixed = symmetric_fixed_points(h, a.mu, (a.xmin, a.xmax), 241, &ReturnOptions::default())?;
    let mut out = Outputs::default();
    if res.skipped > 0 {
        out.warn(format!("{} grid points have no admissible P_Y and were skipped", res.skipped));
    }
    if res.failure_count() > 0 {
        out.warn(format!("{} seeds stopped early (integration failure or tangency)", res.failure_count()));
    }
    out.file("poincare.csv", res.to_csv());
    let report = json!({
        "mu": a.mu,
        "jacobi": a.jacobi,
        "h_reg": h,
        "seeds": res.orbits.len(),
        "skipped": res.skipped,
        "escapes": res.escape_count(),
        "failures": res.failure_count(),
        "fixed_points": fixed,
    });
    out.json("poincare.json", &report)?;
    out.summary = report;
    Ok(out)
}

fn gfamily(a: &GfamilyArgs) -> Result<Outputs> {
    let fam = g_family(a.mu, a.x_start, a.c_stop, a.steps)?;
    let pitchfork = detect_pitchfork(&fam.orbits, a.mu)?;
    let mut out = Outputs::default();
    if let Some(t) = &fam.truncated {
        out.warn(format!("continuation truncated: {t}"));
    }
    if pitchfork.is_none() {
        out.warn("no stability-index crossing of +1 along the computed family");
    }
    out.file("gfamily.csv", fam.to_csv());
    out.json("gfamily_pitchfork.json", &pitchfork)?;
    out.summary = json!({
        "orbits": fam.orbits.len(),
        "pitchfork": pitchfork.as_ref().map(|p| json!({
            "jacobi": p.jacobi,
            "x0": p.x0,
            "branches": p.verified_at.iter().map(|c| json!({
                "jacobi": c.jacobi, "far_side": c.far_side, "count": c.branches.len(),
            })).collect::<Vec<_>>(),
        })),
    });
    Ok(out)
}

fn label(p: PointArg) -> Label {
    match p {
        PointArg::L1 => Label::L1,
        PointArg::L2 => Label::L2,
    }
}

fn orbit_samples(o: &PeriodicOrbit, samples: usize) -> Result<String> {
    let m = HillModel::rotated(o.mu)?;
    let traj = propagate(&m, 0.0, o.state0(), o.period, &Tolerances::default())?;
    let mut csv = Csv::new(&["t", "x", "y", "xdot", "ydot"]);
    for k in 0..=samples.max(1) {
        let t = o.period * k as f64 / samples.max(1) as f64;
        let s = traj.at(t).context("sample outside the propagated period")?;
        csv.floats(&[t, s[0], s[1], s[2], s[3]]);
    }
    Ok(csv.finish())
}

fn lyapunov(a: &LyapunovArgs) -> Result<Outputs> {
    let o = match (a.jacobi, a.amplitude) {
        (Some(c), _) => lyapunov_at_energy(a.mu, label(a.point), c)?,
        (None, Some(amp)) => lyapunov_orbit(a.mu, label(a.point), amp)?,
        (None, None) => lyapunov_orbit(a.mu, label(a.point), 1e-3)?,
    };
    let mut out = Outputs::default();
    out.file("lyapunov.csv", orbit_samples(&o, a.samples)?);
    out.json("lyapunov.json", &o)?;
    out.summary = serde_json::to_value(&o)?;
    Ok(out)
}

fn manifold_summary(g: &Globalized) -> serde_json::Value {
    json!({
        "sense": g.sense,
        "seeds": g.seeds,
        "dropped": g.dropped,
        "capped": g.capped,
        "max_radius": g.max_radius,
        "jacobi_drift": g.jacobi_drift,
        "cuts": g.curves.iter().map(|c| json!({
            "cut_index": c.cut_index,
            "points": c.points.len(),
            "closed": c.closed,
            "self_intersections": c.self_intersections(),
        })).collect::<Vec<_>>(),
    })
}

fn manifolds(a: &ManifoldsArgs) -> Result<Outputs> {
    let orbit = lyapunov_at_energy(a.mu, Label::L1, a.jacobi)?;
    let (side, id) = match a.region {
        RegionArg::Inner => (Side::Inner, SectionId::Sigma),
        RegionArg::Outer => (Side::Outer, SectionId::SigmaPrime),
    };
    let section = SectionDef::new(id, a.mu)?;
    let opts = GlobalizeOptions { max_cuts: a.max_cuts, max_seeds: a.max_seeds, ..GlobalizeOptions::default() };
    let ub = seed_manifold(&orbit, Sense::Unstable, side, a.epsilon, a.seeds)?;
    let sb = seed_manifold(&orbit, Sense::Stable, side, a.epsilon, a.seeds)?;
    let gu = globalize(&ub, &section, &opts)?;
    let gs = globalize(&sb, &section, &opts)?;
    let report = first_confirmed_intersection(&ub, &sb, &gu, &gs, &opts)?;
    let mut out = Outputs::default();
    for g in [&gu, &gs] {
        if g.dropped > 0 {
            out.warn(format!("{} {} seeds dropped by the collision guard", g.dropped, g.sense.label()));
        }
        if g.capped {
            out.warn(format!("{} manifold reached the seed cap {} before the spacing target", g.sense.label(), a.max_seeds));
        }
    }
    if report.rejected > 0 {
        out.warn(format!("{} polyline crossings did not survive refinement", report.rejected));
    }
    if report.records.is_empty() {
        out.warn(format!("no homoclinic intersection up to cut {}", a.max_cuts));
    }
    out.file("manifolds.csv", manifolds_csv(&[&gu, &gs]));
    let doc = json!({
        "mu": a.mu,
        "jacobi": orbit.jacobi,
        "region": a.region,
        "section": section.id.label(),
        "orbit": orbit,
        "unstable": manifold_summary(&gu),
        "stable": manifold_summary(&gs),
        "rejected_crossings": report.rejected,
        "homoclinic": report.records,
    });
    out.json("manifolds_homoclinic.json", &doc)?;
    out.summary = json!({
        "first_pairs": report.records.iter().map(|r| [r.n_u, r.n_s]).collect::<Vec<_>>(),
        "seeds": [gu.seeds, gs.seeds],
    });
    Ok(out)
}

fn compare_r4bp(a: &CompareArgs) -> Result<Outputs> {
    let hill = HillModel::unrotated(a.mu)?.spatial();
    let mut csv = Csv::new(&["x", "y", "z", "diff"]);
    let mut sup: f64 = 0.0;
    let mut sum = 0.0;
    let pts = unit_ball_samples(a.samples);
    for p in &pts {
        let d = (scaled_r4bp_field(p, a.mu, a.m3)? - hill.eval(p)).norm();
        sup = sup.max(d);
        sum += d;
        csv.floats(&[p[0], p[1], p[2], d]);
    }
    let mut out = Outputs::default();
    out.file("compare_r4bp.csv", csv.finish());
    let report = json!({
        "mu": a.mu,
        "m3": a.m3,
        "samples": pts.len(),
        "sup_diff": sup,
        "mean_diff": sum / pts.len().max(1) as f64,
    });
    out.json("compare_r4bp.json", &report)?;
    out.summary = report;
    Ok(out)
}

fn convergence(a: &ConvergenceArgs) -> Result<Outputs> {
    let s = field_convergence(a.mu, &a.m3, a.samples)?;
    let mut csv = Csv::new(&["m3", "sup_diff"]);
    for (m, d) in s.m3.iter().zip(&s.sup_diff) {
        csv.floats(&[*m, *d]);
    }
    let mut out = Outputs::default();
    out.file("convergence.csv", csv.finish());
    out.json("convergence.json", &s)?;
    out.summary = serde_json::to_value(&s)?;
    Ok(out)
}
