//! End-to-end checks of the headline results. Every check prints one
//! PASS/FAIL line; the process exits nonzero if any check fails.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use faer::Mat;
use num_complex::Complex64;
use wqed2d::analysis::GapOptions;
use wqed2d::config::linspace;
use wqed2d::dispersion::Dispersion;
use wqed2d::dynamics::{correlator, evolve, initial_pair_state, time_grid};
use wqed2d::finitesize::{decay_scaling, TrackOptions, TrackedState};
use wqed2d::freespace::{freespace_band_gaps, freespace_no_bs_check, freespace_scaling, freespace_sr_scan, resonance_state};
use wqed2d::impurity::{mean_separation_scan, ImpurityModel};
use wqed2d::kernels::{coupling_matrix, green, CouplingKernel};
use wqed2d::lattice::{LatticeSpec, Momentum2};
use wqed2d::linalg::eig;
use wqed2d::singleexc::{band_gap, band_path, finite_modes, single_exc_scaling, SymmetryPoint};
use wqed2d::specfun::{bessel_j0, bessel_j1, bessel_y0, bessel_y1};
use wqed2d::twoexc::{build_pair_hamiltonian, diagonalize_pair_sector};

const WG: CouplingKernel = CouplingKernel::Waveguide2D;
const FS: CouplingKernel = CouplingKernel::FreeSpaceZZ;

struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.lines.push((name.to_string(), ok));
    }
}

fn within(x: f64, centre: f64, tol: f64) -> bool {
    (x - centre).abs() <= tol
}

fn pi(x: f64) -> f64 {
    x / PI
}

fn criterion_1(r: &mut Report) {
    let open: Vec<(f64, f64)> = linspace(0.4 * PI, 0.95 * PI, 12).into_iter().map(|k| (k, band_gap(k, 301).unwrap())).collect();
    let closed: Vec<(f64, f64)> = linspace(1.05 * PI, 1.2 * PI, 4).into_iter().map(|k| (k, band_gap(k, 301).unwrap())).collect();
    let fine = linspace(0.9 * PI, 1.1 * PI, 41);
    let closing = fine.iter().copied().find(|&k| band_gap(k, 301).unwrap() == 0.0);
    let min_open = open.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_closed = closed.iter().map(|p| p.1).fold(0.0, f64::max);
    let ok = min_open > 0.0 && max_closed == 0.0 && closing.is_some_and(|k| within(k, PI, 0.05 * PI));
    r.check(
        "1 waveguide band-gap closing",
        ok,
        format!(
            "min gap on [0.4pi, 0.95pi] = {min_open:.4}, max gap on [1.05pi, 1.2pi] = {max_closed:.4}, closes at {}",
            closing.map_or("none".into(), |k| format!("{:.3}pi", pi(k)))
        ),
    );
}

fn criterion_2(r: &mut Report) {
    let gap_at = |k0d: f64| {
        let disp = Dispersion::new(WG, k0d, 300).unwrap();
        ImpurityModel::new(&disp, Momentum2::m_point(), 301, &GapOptions::default()).unwrap().gap
    };
    let (below, above) = (gap_at(0.65 * PI), gap_at(0.75 * PI));
    r.check(
        "2 M-point pair-gap closing near pi/sqrt2",
        below.is_some() && above.is_none(),
        format!("gap at 0.65pi = {below:?}, gap at 0.75pi = {above:?}"),
    );
}

fn criterion_3(r: &mut Report) {
    let list = linspace(0.3 * PI, 1.1 * PI, 41);
    let scan_min = |k: Momentum2| {
        let s = mean_separation_scan(|k0d| Dispersion::new(WG, k0d, 300), k, &list, 301, 40, &GapOptions::default()).unwrap();
        s.argmin.map(|i| s.rows[i].k0d)
    };
    let (g, m) = (scan_min(Momentum2::gamma()), scan_min(Momentum2::m_point()));
    let ok = match (g, m) {
        (Some(g), Some(m)) => {
            within(g, 0.74 * PI, 0.04 * PI) && within(m, 0.52 * PI, 0.04 * PI) && within(m / g, 1.0 / SQRT_2, 0.1 / SQRT_2)
        }
        _ => false,
    };
    let fmt = |x: Option<f64>| x.map_or("none".into(), |k| format!("{:.3}pi", pi(k)));
    let ratio = g.zip(m).map_or(f64::NAN, |(g, m)| m / g);
    r.check("3 bound-state localization minima", ok, format!("Gamma min {}, M min {}, ratio {ratio:.4}", fmt(g), fmt(m)));
}

fn criterion_4(r: &mut Report) {
    let k0d = 0.5 * PI;
    let k = Momentum2::m_point();
    let disp = Dispersion::new(WG, k0d, 300).unwrap();
    let model = ImpurityModel::new(&disp, k, 501, &GapOptions::default()).unwrap();
    let e_imp = model.bound_state_energy().unwrap();
    let e_rel = model
        .gap
        .and_then(|gap| wqed2d::twoexc::relative_bound_state(k, WG, k0d, 40, gap).unwrap())
        .map(|b| b.energy);
    let diff = e_imp.zip(e_rel).map(|(a, b)| (a - b).abs());
    r.check(
        "4 impurity vs relative-coordinate bound state",
        diff.is_some_and(|d| d < 2e-2),
        format!("E_impurity = {e_imp:?}, E_relative = {e_rel:?}, |diff| = {diff:?}"),
    );
}

/// Two bosons on `n` sites with on-site repulsion `u`, in the occupation basis.
fn two_boson_hamiltonian(g: &Mat<Complex64>, u: f64) -> Mat<Complex64> {
    let n = g.nrows();
    let states: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let index: HashMap<(usize, usize), usize> = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    let mut h = Mat::<Complex64>::zeros(states.len(), states.len());
    for (col, &(i, j)) in states.iter().enumerate() {
        let mut occ = vec![0usize; n];
        occ[i] += 1;
        occ[j] += 1;
        for b in 0..n {
            if occ[b] == 0 {
                continue;
            }
            for a in 0..n {
                // b_a^dag b_b on a normalized Fock state
                let mut next = occ.clone();
                let mut amp = (next[b] as f64).sqrt();
                next[b] -= 1;
                amp *= (next[a] as f64 + 1.0).sqrt();
                next[a] += 1;
                let sites: Vec<usize> = (0..n).flat_map(|s| std::iter::repeat(s).take(next[s])).collect();
                let row = index[&(sites[0], sites[1])];
                h[(row, col)] += g[(a, b)] * amp;
            }
        }
        if i == j {
            h[(col, col)] += Complex64::new(u, 0.0);
        }
    }
    h
}

fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

fn criterion_5(r: &mut Report) {
    let u = 1e6;
    let lat = LatticeSpec::new(3, 0.52 * PI).unwrap();
    let n = lat.num_sites();
    let g = Mat::<Complex64>::from_fn(n, n, |a, b| {
        if a == b {
            Complex64::new(0.0, -0.5)
        } else {
            green(WG, lat.k0d() * lat.distance(a, b).unwrap()).unwrap()
        }
    });
    let low_spectrum = |u: f64| {
        let boson = eig(two_boson_hamiltonian(&g, u).as_ref()).unwrap();
        let mut low: Vec<Complex64> = boson.values.iter().copied().filter(|e| e.norm() < u / 2.0).collect();
        sort_spectrum(&mut low);
        low
    };
    let mut hard = eig(build_pair_hamiltonian(&lat, WG).unwrap().as_ref()).unwrap().values.clone();
    sort_spectrum(&mut hard);
    let max_diff = |a: &[Complex64]| {
        if a.len() == hard.len() {
            a.iter().zip(&hard).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        }
    };
    let (low, low2) = (low_spectrum(u), low_spectrum(2.0 * u));
    let err = max_diff(&low);
    r.check(
        "5 hardcore pair basis vs two bosons at U = 1e6",
        err < 1e-6,
        format!("{} vs {} states, max |dE| = {err:.3e}, U |dE| = {:.4}", low.len(), hard.len(), u * err),
    );
    // the O(1/U) virtual double-occupancy shift cancels in 2 E(2U) - E(U)
    let extrapolated: Vec<Complex64> = low.iter().zip(&low2).map(|(a, b)| 2.0 * b - a).collect();
    let err_inf = max_diff(&extrapolated);
    r.check(
        "5x two bosons extrapolated to U -> infinity (supplementary)",
        err_inf < 1e-6,
        format!("max |dE| = {err_inf:.3e} after removing the 1/U term"),
    );
}

fn criterion_6(r: &mut Report) {
    let opts = TrackOptions::default();
    let which = [TrackedState::GammaBound, TrackedState::MBound, TrackedState::RepulsiveII];
    let res = decay_scaling(WG, 0.52 * PI, &[4, 6, 8, 10], &which, &opts).unwrap();
    let exp = |w: TrackedState| res.iter().find(|s| s.tracked == w).unwrap();
    let (g, m, rep) = (exp(TrackedState::GammaBound), exp(TrackedState::MBound), exp(TrackedState::RepulsiveII));
    let decays = |s: &wqed2d::finitesize::DecayScaling| s.points.iter().map(|p| format!("{:.4e}", p.decay)).collect::<Vec<_>>().join(", ");
    r.check(
        "6a Gamma bound-state scaling exponent",
        within(g.fit.exponent, -1.5, 0.4),
        format!("exponent {:.3} +- {:.3}, decays [{}]", g.fit.exponent, g.fit.stderr, decays(g)),
    );
    r.check(
        "6b M bound-state scaling exponent",
        within(m.fit.exponent, -1.5, 0.4),
        format!("exponent {:.3} +- {:.3}, decays [{}]", m.fit.exponent, m.fit.stderr, decays(m)),
    );
    r.check(
        "6c repulsive type-II scaling exponent",
        within(rep.fit.exponent, -3.0, 0.5),
        format!("exponent {:.3} +- {:.3}, decays [{}]", rep.fit.exponent, rep.fit.stderr, decays(rep)),
    );
    let (mg, gg) = (m.points.last().unwrap().decay, g.points.last().unwrap().decay);
    r.check("6d M bound state below Gamma bound state at L = 10", mg < gg, format!("{mg:.4e} vs {gg:.4e}"));
}

fn criterion_7(r: &mut Report) {
    let sizes = [6, 8, 10, 12, 14];
    let m = single_exc_scaling(SymmetryPoint::M, WG, 0.52 * PI, &sizes).unwrap();
    let g = single_exc_scaling(SymmetryPoint::Gamma, WG, 0.52 * PI, &sizes).unwrap();
    let ok = within(m.fit.exponent, -2.92, 0.4) && within(g.fit.exponent, -1.52, 0.4);
    r.check(
        "7 single-excitation scaling exponents",
        ok,
        format!("M {:.3} +- {:.3}, Gamma {:.3} +- {:.3}", m.fit.exponent, m.fit.stderr, g.fit.exponent, g.fit.stderr),
    );
}

fn criterion_8(r: &mut Report) {
    let opts = TrackOptions::default();
    let mut minima = Vec::new();
    for (point, centre, lo, hi) in [(SymmetryPoint::Gamma, 1.09, 0.95, 1.25), (SymmetryPoint::M, 0.73, 0.59, 0.89)] {
        let scan = freespace_sr_scan(point, &linspace(lo * PI, hi * PI, 17), 10, &opts).unwrap();
        let (k0d, p) = scan.minimum().unwrap();
        let name = point.name();
        r.check(
            &format!("8a free-space {name} resonance minimum location"),
            within(k0d, centre * PI, 0.06 * PI),
            format!("minimum at {:.3}pi", pi(k0d)),
        );
        r.check(&format!("8b free-space {name} resonance minimum decay"), p.decay < 0.1, format!("decay {:.4} gamma0", p.decay));
        minima.push((point, k0d));
    }
    for ((point, k0d), (centre, tol)) in minima.into_iter().zip([(-1.2, 0.4), (-0.7, 0.4)]) {
        let s = freespace_scaling(k0d, &[4, 6, 8, 10], &[resonance_state(point).unwrap()], &opts).unwrap().remove(0);
        let decays: Vec<String> = s.points.iter().map(|p| format!("{:.4}", p.decay)).collect();
        r.check(
            &format!("8c free-space {} resonance scaling exponent", point.name()),
            within(s.fit.exponent, centre, tol),
            format!("exponent {:.3} +- {:.3} at {:.3}pi, decays [{}]", s.fit.exponent, s.fit.stderr, pi(k0d), decays.join(", ")),
        );
    }
}

fn criterion_9(r: &mut Report) {
    let final_correlator = |k0d: f64, ell: usize| {
        let lat = LatticeSpec::new(10, k0d).unwrap();
        let sector = diagonalize_pair_sector(&lat, WG).unwrap();
        let psi0 = initial_pair_state(&lat, None, ell).unwrap();
        let times = time_grid(300.0, 301, &[20.0]).unwrap();
        let (traj, _) = evolve(&sector, &psi0, &times).unwrap();
        let monotone = traj.norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        (correlator(traj.states.last().unwrap(), &lat, ell).unwrap(), monotone)
    };
    let (c1, m1) = final_correlator(0.52 * PI, 1);
    let (c2, m2) = final_correlator(0.52 * PI, 2);
    let (c_far, m3) = final_correlator(1.2 * PI, 1);
    let ok = c1 >= 5.0 * c2 && c1 >= 5.0 * c_far && m1 && m2 && m3;
    r.check(
        "9 pair dynamics at long times",
        ok,
        format!("C1(300) = {c1:.4e}, C2(300) of l=2 run = {c2:.4e}, C1(300) at 1.2pi = {c_far:.4e}, norms nonincreasing: {}", m1 && m2 && m3),
    );
}

fn criterion_10(r: &mut Report) {
    let wronskian = linspace(-1.0, 3.0, 401)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .map(|z| {
            let w = bessel_j1(z).unwrap() * bessel_y0(z).unwrap() - bessel_j0(z).unwrap() * bessel_y1(z).unwrap();
            (w - 2.0 / (PI * z)).abs() * z
        })
        .fold(0.0, f64::max);
    r.check("10a Bessel Wronskian", wronskian <= 1e-10, format!("max |z W - 2/pi| = {wronskian:.2e}"));

    let mut min_eig = f64::INFINITY;
    for kernel in [WG, FS] {
        for l in [4, 7, 10] {
            let lat = LatticeSpec::new(l, 0.52 * PI).unwrap();
            let g = coupling_matrix(&lat, kernel).unwrap();
            let n = g.nrows();
            let gamma = Mat::<f64>::from_fn(n, n, |a, b| -(g[(a, b)].im + g[(b, a)].im));
            let vals = gamma.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
            min_eig = vals.iter().copied().fold(min_eig, f64::min);
        }
    }
    r.check("10b dissipator positive semidefinite", min_eig >= -1e-8, format!("min eigenvalue {min_eig:.3e}"));

    let lat = LatticeSpec::new(6, 0.52 * PI).unwrap();
    let single: f64 = finite_modes(&lat, WG).unwrap().iter().map(|m| m.decay()).sum();
    let sector = diagonalize_pair_sector(&lat, WG).unwrap();
    let pair: f64 = sector.energies().iter().map(|e| -2.0 * e.im).sum();
    let n = lat.num_sites() as f64;
    let dim = n * (n - 1.0) / 2.0;
    let (e1, e2) = ((single - n).abs() / n, (pair - 2.0 * dim).abs() / (2.0 * dim));
    r.check("10c decay-rate trace identities", e1 < 1e-10 && e2 < 1e-10, format!("relative errors {e1:.2e} (single), {e2:.2e} (pair)"));

    let disp = Dispersion::new(WG, 0.52 * PI, 300).unwrap();
    let mut c4v = 0.0_f64;
    for (kx, ky) in [(0.3, 0.7), (1.1, -0.4), (-2.0, 0.9), (0.05, 2.9)] {
        let e = disp.energy(Momentum2::new(kx, ky)).unwrap();
        for (a, b) in [(ky, kx), (-kx, ky), (kx, -ky), (-ky, kx), (-kx, -ky), (ky, -kx), (-ky, -kx)] {
            c4v = c4v.max((disp.energy(Momentum2::new(a, b)).unwrap() - e).norm());
        }
    }
    r.check("10d point-group symmetry of the dispersion", c4v <= 1e-10, format!("max deviation {c4v:.2e}"));

    let run = || {
        let path = band_path(&Dispersion::new(WG, 0.8 * PI, 120).unwrap(), 20).unwrap();
        let modes = finite_modes(&LatticeSpec::new(5, 0.8 * PI).unwrap(), WG).unwrap();
        let pairs = diagonalize_pair_sector(&LatticeSpec::new(4, 0.8 * PI).unwrap(), WG).unwrap().energies();
        let energies: Vec<(f64, f64)> = modes.iter().map(|m| (m.energy.re, m.energy.im)).collect();
        let pairs: Vec<(f64, f64)> = pairs.iter().map(|e| (e.re, e.im)).collect();
        serde_json::to_string(&(path, energies, pairs)).unwrap()
    };
    let (a, b) = (run(), run());
    r.check("10e determinism", a == b, format!("{} bytes, identical: {}", a.len(), a == b));
}

/// Claims about the free-space continuum that the waveguide criteria do
/// not cover.
fn freespace_continuum(r: &mut Report) {
    let list = [0.4 * PI, 0.6 * PI, 0.8 * PI, 1.0 * PI, 1.2 * PI];
    let gaps = freespace_band_gaps(&list, 301, 300, &GapOptions::default()).unwrap();
    let open: Vec<String> = list
        .iter()
        .zip(&gaps)
        .filter_map(|(k, g)| g.map(|g| format!("{:.1}pi: [{:.3}, {:.3}]", pi(*k), g.lo, g.hi)))
        .collect();
    r.check("fs-a free-space band has no gap", open.is_empty(), format!("open gaps {open:?}"));
    for point in [SymmetryPoint::Gamma, SymmetryPoint::M] {
        let c = freespace_no_bs_check(point.momentum(), 0.6 * PI, 301, 300, &GapOptions::default()).unwrap();
        r.check(
            &format!("fs-b free-space {} pair continuum gapless, no bound state", point.name()),
            c.holds(),
            format!("gap {:?}, bound state {:?}", c.gap.map(|g| (g.lo, g.hi)), c.bound_state_energy),
        );
    }
}

fn main() {
    let mut report = Report { lines: Vec::new() };
    let checks: [(&str, fn(&mut Report)); 11] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
        ("free space", freespace_continuum),
    ];
    for (name, f) in checks {
        let t = Instant::now();
        f(&mut report);
        println!("     ({name} took {:.1} s)", t.elapsed().as_secs_f64());
    }
    let failed: Vec<&str> = report.lines.iter().filter(|l| !l.1).map(|l| l.0.as_str()).collect();
    println!("\n{} of {} checks passed", report.lines.len() - failed.len(), report.lines.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join("; "));
        std::process::exit(1);
    }
}
