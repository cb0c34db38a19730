use std::f64::consts::PI;

use num_complex::Complex64;
use serde_json::{json, Value};
use wqed2d::analysis::{relative_marginal, GapOptions, Interval};
use wqed2d::config::RunConfig;
use wqed2d::dispersion::Dispersion;
use wqed2d::dynamics::{correlator, evolve, initial_pair_state, sector_projections, time_grid};
use wqed2d::finitesize::{decay_scaling, track_states, TrackContext, TrackOptions, TrackedPoint, TrackedState};
use wqed2d::freespace::{freespace_band_gaps, freespace_scaling, freespace_sr_scan};
use wqed2d::impurity::{mean_separation_scan, ImpurityModel};
use wqed2d::kernels::CouplingKernel;
use wqed2d::lattice::{LatticeSpec, Momentum2};
use wqed2d::linalg::norm;
use wqed2d::singleexc::{band_gap_interval, band_path, finite_momenta, single_exc_scaling};
use wqed2d::twoexc::{classify_states, com_label, diagonalize_pair_sector, PairSector, StateClass};
use wqed2d::Error;

use crate::output::{fmt_num, Cell, OutputDir, Plot, Table};
use crate::CliError;

type Out = Result<(), CliError>;

/// Times at which `dynamics` dumps full snapshots.
const SNAPSHOT_TIMES: [f64; 3] = [0.0, 20.0, 300.0];

const TRACKED: [TrackedState; 6] = [
    TrackedState::GammaBound,
    TrackedState::MBound,
    TrackedState::RepulsiveI,
    TrackedState::RepulsiveII,
    TrackedState::GammaResonance,
    TrackedState::MResonance,
];

fn track_opts(cfg: &RunConfig) -> TrackOptions {
    TrackOptions { grid_n: cfg.grid_n, l_sum: cfg.l_sum, ..TrackOptions::default() }
}

fn dispersion(cfg: &RunConfig, k0d: f64) -> Result<Dispersion, Error> {
    Dispersion::new(cfg.kernel, k0d, cfg.l_sum)
}

fn gap_cells(gap: Option<Interval>) -> [Cell; 3] {
    match gap {
        Some(g) => [g.width().into(), g.lo.into(), g.hi.into()],
        None => [0.0.into(), Cell::Missing, Cell::Missing],
    }
}

fn gap_json(gap: Option<Interval>) -> Value {
    gap.map_or(Value::Null, |g| json!({"lo": g.lo, "hi": g.hi, "width": g.width()}))
}

pub fn bands(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let disp = dispersion(cfg, cfg.k0d.value())?;
    let path = band_path(&disp, cfg.points_per_segment)?;
    let mut t = Table::new(&["s", "kx", "ky", "energy", "decay", "divergent"]).with_plot(Plot::Lines { x: 0, ys: vec![3] });
    for p in &path {
        t.push(vec![p.s.into(), p.k.kx.into(), p.k.ky.into(), p.energy.into(), p.decay.into(), p.divergent.into()]);
    }
    out.csv("bands.csv", &t)?;
    Ok(())
}

pub fn gap_scan(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    use rayon::prelude::*;
    let opts = GapOptions::default();
    let list = cfg.k0d_list();
    let gaps: Vec<Option<Interval>> = list
        .par_iter()
        .map(|&k| band_gap_interval(&dispersion(cfg, k)?, cfg.grid_n, &opts))
        .collect::<Result<_, Error>>()?;
    let mut t = Table::new(&["k0d", "gap", "gap_lo", "gap_hi"]).with_plot(Plot::Lines { x: 0, ys: vec![1] });
    for (k, g) in list.iter().zip(gaps) {
        let mut row = vec![Cell::from(*k)];
        row.extend(gap_cells(g));
        t.push(row);
    }
    out.csv("gap_scan.csv", &t)?;
    Ok(())
}

pub fn single_scaling(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let point = cfg.momentum.require_point()?;
    let r = single_exc_scaling(point, cfg.kernel, cfg.k0d.value(), &cfg.sizes)?;
    let mut t = Table::new(&["l", "n", "decay"]).with_plot(Plot::LogLog { x: 1, y: 2 });
    for (&l, &(n, decay)) in cfg.sizes.iter().zip(&r.points) {
        t.push(vec![l.into(), n.into(), decay.into()]);
    }
    out.csv("single_scaling.csv", &t)?;
    out.json("single_scaling_fit.json", &json!({"point": point, "k0d": r.k0d, "fit": r.fit}))?;
    Ok(())
}

fn on_grid(k: Momentum2, l: usize) -> bool {
    let grid = finite_momenta(l);
    let near = |v: f64| grid.iter().any(|&g| Momentum2::new(v, 0.0).torus_distance(&Momentum2::new(g, 0.0)) < 1e-9);
    near(k.kx) && near(k.ky)
}

fn class_name(c: StateClass) -> String {
    serde_json::to_value(c).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn twobody_spectrum(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let k = cfg.momentum.momentum();
    if !on_grid(k, cfg.l) {
        return Err(Error::InvalidArgument(format!(
            "K = {} is not a momentum of the {l}x{l} array (multiples of 2pi/{l})",
            cfg.momentum,
            l = cfg.l
        ))
        .into());
    }
    let lattice = cfg.lattice()?;
    let disp = dispersion(cfg, cfg.k0d.value())?;
    let gap = ImpurityModel::new(&disp, k, cfg.grid_n, &GapOptions::default())?.gap;
    let sector = diagonalize_pair_sector(&lattice, cfg.kernel)?;
    let mut selected = Vec::new();
    for s in 0..sector.num_states() {
        let amps = sector.amplitudes(s);
        let (label, _) = com_label(&amps, &sector.basis, cfg.l);
        if label.torus_distance(&k) < 1e-9 {
            selected.push(s);
        }
    }
    let states: Vec<_> = selected.iter().map(|&s| sector.state(s)).collect::<Result<_, Error>>()?;
    let marginals: Vec<_> = states
        .iter()
        .map(|st| relative_marginal(&st.amplitudes, &sector.basis, cfg.l))
        .collect::<Result<_, Error>>()?;
    let classes = if states.is_empty() { vec![] } else { classify_states(&states, &marginals, gap, &Default::default())? };
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| states[a].energy.re.total_cmp(&states[b].energy.re));
    let mut listing = Vec::new();
    for &i in &order {
        let st = &states[i];
        let class = class_name(classes[i]);
        let mut entry = json!({
            "state": selected[i],
            "energy_re": st.energy.re,
            "energy_im": st.energy.im,
            "decay": st.decay(),
            "ipr": st.ipr,
            "class": class,
        });
        if classes[i] != StateClass::Continuum {
            let name = format!("states/{}_{}.csv", class, selected[i]);
            let mg = &marginals[i];
            let mut t = Table::new(&["r_x", "r_y", "probability"]).with_plot(Plot::Heatmap { x: 0, y: 1, z: 2 });
            for (r, p) in mg.basis.vectors().iter().zip(&mg.probs) {
                t.push(vec![r.0.into(), r.1.into(), (*p).into()]);
            }
            out.csv(&name, &t)?;
            entry["relative_csv"] = Value::from(name);
        }
        listing.push(entry);
    }
    out.json(
        "twobody_spectrum.json",
        &json!({"K": [k.kx, k.ky], "k0d": cfg.k0d.value(), "l": cfg.l, "continuum_gap": gap_json(gap), "states": listing}),
    )?;
    Ok(())
}

pub fn boundstate(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let k = cfg.momentum.momentum();
    let disp = dispersion(cfg, cfg.k0d.value())?;
    let model = ImpurityModel::new(&disp, k, cfg.grid_n, &GapOptions::default())?;
    let bs = model.bound_state(cfg.l_r)?;
    let body = match &bs {
        None => Value::Null,
        Some(b) => json!({"energy": b.energy, "mean_separation": b.mean_separation, "p_csv": "p_r.csv"}),
    };
    if let Some(b) = &bs {
        let mut t = Table::new(&["r_x", "r_y", "probability"]).with_plot(Plot::Heatmap { x: 0, y: 1, z: 2 });
        for (r, p) in b.vectors.iter().zip(&b.p) {
            t.push(vec![r.0.into(), r.1.into(), (*p).into()]);
        }
        out.csv("p_r.csv", &t)?;
    }
    out.json(
        "boundstate.json",
        &json!({"K": [k.kx, k.ky], "k0d": cfg.k0d.value(), "continuum_gap": gap_json(model.gap), "bound_state": body}),
    )?;
    Ok(())
}

pub fn bs_scan(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let k = cfg.momentum.momentum();
    let scan = mean_separation_scan(|k0d| dispersion(cfg, k0d), k, &cfg.k0d_list(), cfg.grid_n, cfg.l_r, &GapOptions::default())?;
    let mut t = Table::new(&["k0d", "energy", "mean_separation"]).with_plot(Plot::Lines { x: 0, ys: vec![2] });
    for r in &scan.rows {
        t.push(vec![r.k0d.into(), r.energy.into(), r.mean_separation.into()]);
    }
    out.csv("bs_scan.csv", &t)?;
    let argmin = scan.argmin.map(|i| json!({"k0d": scan.rows[i].k0d, "mean_separation": scan.rows[i].mean_separation}));
    out.json("bs_scan_summary.json", &json!({"K": [k.kx, k.ky], "minimum": argmin}))?;
    Ok(())
}

fn context(cfg: &RunConfig, k0d: f64) -> Result<TrackContext, Error> {
    let opts = track_opts(cfg);
    match cfg.kernel {
        CouplingKernel::Waveguide2D => TrackContext::new(cfg.kernel, k0d, &opts),
        CouplingKernel::FreeSpaceZZ => Ok(TrackContext::gapless(cfg.kernel, k0d, &opts)),
    }
}

fn tracked_header(prefix: &str) -> Vec<String> {
    let mut h = vec![prefix.to_string()];
    h.extend(TRACKED.iter().map(|w| w.name().to_string()));
    h
}

pub fn finite_size(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let lattice_l = cfg.l;
    let mut rows: Vec<(f64, Vec<Option<TrackedPoint>>)> = Vec::new();
    for k0d in cfg.k0d_list() {
        let lattice = LatticeSpec::new(lattice_l, k0d)?;
        let ctx = context(cfg, k0d)?;
        let sector = diagonalize_pair_sector(&lattice, cfg.kernel)?;
        log::info!("k0d = {:.4} pi done", k0d / PI);
        rows.push((k0d, track_states(&sector, &TRACKED, &ctx)?));
    }
    let header = tracked_header("k0d");
    let mut t = Table { header, rows: Vec::new(), plot: Plot::Lines { x: 0, ys: (1..=TRACKED.len()).collect() } };
    for (k0d, tracked) in &rows {
        let mut row = vec![Cell::from(*k0d)];
        row.extend(tracked.iter().map(|p| Cell::from(p.as_ref().map(|p| p.decay))));
        t.push(row);
    }
    out.csv("finite_size.csv", &t)?;
    Ok(())
}

pub fn scaling(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let k0d = cfg.k0d.value();
    let opts = track_opts(cfg);
    // states missing at some size are reported individually
    let mut results = Vec::new();
    for w in TRACKED {
        let r = match cfg.kernel {
            CouplingKernel::Waveguide2D => decay_scaling(cfg.kernel, k0d, &cfg.sizes, &[w], &opts),
            CouplingKernel::FreeSpaceZZ => freespace_scaling(k0d, &cfg.sizes, &[w], &opts),
        };
        match r {
            Ok(mut v) => results.push((w, Some(v.remove(0)))),
            Err(Error::NotEnoughData(msg)) => {
                log::warn!("{}: {msg}", w.name());
                results.push((w, None));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut header = vec!["l".to_string(), "n".to_string()];
    header.extend(TRACKED.iter().map(|w| w.name().to_string()));
    let mut t = Table { header, rows: Vec::new(), plot: Plot::None };
    for (i, &l) in cfg.sizes.iter().enumerate() {
        let mut row = vec![Cell::from(l), Cell::from(l * l)];
        row.extend(results.iter().map(|(_, r)| Cell::from(r.as_ref().map(|r| r.points[i].decay))));
        t.push(row);
    }
    out.csv("scaling.csv", &t)?;
    let fits: serde_json::Map<String, Value> = results
        .iter()
        .map(|(w, r)| (w.name().to_string(), r.as_ref().map_or(Value::Null, |r| json!(r.fit))))
        .collect();
    out.json("scaling_fit.json", &json!({"kernel": cfg.kernel, "k0d": k0d, "sizes": cfg.sizes, "fits": fits}))?;
    Ok(())
}

fn lab_density(state: &[Complex64], sector: &PairSector, n_sites: usize) -> Vec<f64> {
    let mut n = vec![0.0; n_sites];
    let total: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    for (p, z) in state.iter().enumerate() {
        let (i, j) = sector.basis.pair(p);
        n[i] += z.norm_sqr() / total;
        n[j] += z.norm_sqr() / total;
    }
    n
}

pub fn dynamics(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let lattice = cfg.lattice()?;
    let sector = diagonalize_pair_sector(&lattice, cfg.kernel)?;
    let psi0 = initial_pair_state(&lattice, None, cfg.ell)?;
    let times = time_grid(cfg.t_max, cfg.samples, &SNAPSHOT_TIMES)?;
    let (traj, propagator) = evolve(&sector, &psi0, &times)?;
    let mut t = Table::new(&["t", "correlator", "norm"]).with_plot(Plot::Lines { x: 0, ys: vec![1] });
    for ((time, state), n) in traj.times.iter().zip(&traj.states).zip(&traj.norms) {
        let c = if *n > 0.0 { Cell::Num(correlator(state, &lattice, cfg.ell)?) } else { Cell::Missing };
        t.push(vec![(*time).into(), c, (*n).into()]);
    }
    out.csv("dynamics.csv", &t)?;
    for mark in SNAPSHOT_TIMES {
        let Some(idx) = traj.times.iter().position(|&x| (x - mark).abs() < 1e-9 * cfg.t_max.max(1.0)) else {
            continue;
        };
        let state = &traj.states[idx];
        if norm(state) == 0.0 {
            continue;
        }
        let tag = fmt_num(mark);
        let mg = relative_marginal(&normalized(state), &sector.basis, cfg.l)?;
        let mut rel = Table::new(&["r_x", "r_y", "probability"]).with_plot(Plot::Heatmap { x: 0, y: 1, z: 2 });
        for (r, p) in mg.basis.vectors().iter().zip(&mg.probs) {
            rel.push(vec![r.0.into(), r.1.into(), (*p).into()]);
        }
        out.csv(&format!("snapshots/relative_t{tag}.csv"), &rel)?;
        let mut lab = Table::new(&["x", "y", "density"]).with_plot(Plot::Heatmap { x: 0, y: 1, z: 2 });
        for (i, d) in lab_density(state, &sector, lattice.num_sites()).into_iter().enumerate() {
            let (x, y) = lattice.coords(i)?;
            lab.push(vec![x.into(), y.into(), d.into()]);
        }
        out.csv(&format!("snapshots/lab_t{tag}.csv"), &lab)?;
    }
    let weights = sector_projections(&psi0, &sector);
    let energies = sector.energies();
    let mut proj = Table::new(&["state", "energy_re", "energy_im", "weight"]);
    for (s, (e, w)) in energies.iter().zip(&weights).enumerate() {
        proj.push(vec![s.into(), e.re.into(), e.im.into(), (*w).into()]);
    }
    out.csv("projections.csv", &proj)?;
    out.json("dynamics_summary.json", &json!({"propagator": propagator, "dual_condition": sector.cond(), "times": traj.times.len()}))?;
    Ok(())
}

fn normalized(state: &[Complex64]) -> Vec<Complex64> {
    let n = norm(state);
    state.iter().map(|z| z / n).collect()
}

pub fn freespace_sr_scan_cmd(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let point = cfg.momentum.require_point()?;
    let scan = freespace_sr_scan(point, &cfg.k0d_list(), cfg.l, &track_opts(cfg))?;
    let mut t = Table::new(&["k0d", "energy", "decay", "state", "score"]).with_plot(Plot::Lines { x: 0, ys: vec![2] });
    for r in &scan.rows {
        match &r.resonance {
            Some(p) => t.push(vec![r.k0d.into(), p.energy.re.into(), p.decay.into(), p.state.into(), p.score.into()]),
            None => t.push(vec![r.k0d.into(), Cell::Missing, Cell::Missing, Cell::Missing, Cell::Missing]),
        }
    }
    out.csv("freespace_sr_scan.csv", &t)?;
    let minimum = scan.minimum().map(|(k0d, p)| json!({"k0d": k0d, "decay": p.decay, "energy": p.energy.re}));
    out.json("freespace_sr_summary.json", &json!({"point": point, "l": scan.l, "minimum": minimum}))?;
    Ok(())
}

pub fn freespace_bands(cfg: &RunConfig, out: &mut OutputDir) -> Out {
    let disp = Dispersion::new(CouplingKernel::FreeSpaceZZ, cfg.k0d.value(), cfg.l_sum)?;
    let path = band_path(&disp, cfg.points_per_segment)?;
    let mut t = Table::new(&["s", "kx", "ky", "energy", "decay", "divergent"]).with_plot(Plot::Lines { x: 0, ys: vec![3] });
    for p in &path {
        t.push(vec![p.s.into(), p.k.kx.into(), p.k.ky.into(), p.energy.into(), p.decay.into(), p.divergent.into()]);
    }
    out.csv("freespace_bands.csv", &t)?;
    let list = cfg.k0d_list();
    let gaps = freespace_band_gaps(&list, cfg.grid_n, cfg.l_sum, &GapOptions::default())?;
    let mut g = Table::new(&["k0d", "gap", "gap_lo", "gap_hi"]).with_plot(Plot::Lines { x: 0, ys: vec![1] });
    for (k, gap) in list.iter().zip(gaps) {
        let mut row = vec![Cell::from(*k)];
        row.extend(gap_cells(gap));
        g.push(row);
    }
    out.csv("freespace_gap_scan.csv", &g)?;
    Ok(())
}
