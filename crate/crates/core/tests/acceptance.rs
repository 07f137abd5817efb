//! The acceptance criteria, run in order with one pass/fail line each.
//! Criterion 6 reuses the ε = 0.01 run of criterion 5.
//!
//! The lines bypass output capture, so a plain `cargo test` shows them.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::Array1;
use weaknull::estimates::*;
use weaknull::fieldgrid::*;
use weaknull::norms::quadrature::pl_integral;
use weaknull::norms::{mixed_norm, MixedNormSpec, WeightSpec};
use weaknull::picard::*;
use weaknull::regions::{enumerate_regions, DyadicRegion};
use weaknull::wavesolver::dalembert::exact_w;
use weaknull::wavesolver::*;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_abs_err(h: &SolutionHistory, exact: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let w = &h.w_u;
    let (mut e, mut s) = (0.0f64, 0.0f64);
    for n in 0..w.nt() {
        for j in 0..w.nr() {
            let x = exact(w.t(n), w.r(j));
            e = e.max((w.get(n, j) - x).abs());
            s = s.max(x.abs());
        }
    }
    (e, s)
}

fn solver_order() -> Outcome {
    let start = Instant::now();
    let p = Profile::bump(1.0);
    let t_max = 16.0;
    let errs: Vec<(f64, f64)> = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&dr| {
            let g = GridSpec::new(dr, DEFAULT_CFL, t_max + 8.0, t_max).unwrap();
            let h = solve(&InitialData::u_only(p), &SolveConfig::new(g, Mode::Homogeneous)).unwrap();
            max_abs_err(&h, |t, r| exact_w(&p, t, r))
        })
        .collect();
    let elapsed = start.elapsed();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0].0 / w[1].0).log2()).collect();
    let rel = errs[2].0 / errs[2].1;
    let pass = orders.iter().all(|&o| o >= 1.9) && rel <= 1e-3 && elapsed <= Duration::from_secs(10);
    outcome(pass, format!("orders {orders:.3?}, relative error at 1/64 {rel:.2e}, {:.1} s", elapsed.as_secs_f64()))
}

fn identity_suite() -> Outcome {
    let horizon = 8.0;
    let (mut worst_rel, mut worst_order, mut signs) = (0.0f64, f64::INFINITY, true);
    let mut degenerate = Vec::new();
    for fam in Family::standard() {
        for kind in [IdentityKind::Plus { p: DEFAULT_P, u: 2 }, IdentityKind::Minus { delta: DEFAULT_DELTA }] {
            let r = check_identity_refined(kind, fam, 1.0 / 32.0, horizon).unwrap();
            signs &= r.signs_ok;
            // (∂t + ∂r)W ≡ 0 on the outgoing wave: every term of the plus
            // identity vanishes and the relative residual is 0/0
            if fam == Family::Outgoing && r.name == "plus" {
                degenerate.push(r.residual);
                continue;
            }
            worst_rel = worst_rel.max(r.relative_residual);
            worst_order = worst_order.min(r.observed_order.unwrap_or(f64::NEG_INFINITY));
        }
    }
    let degenerate_ok = degenerate.iter().all(|&r| r <= 1e-9);
    let pass = worst_rel <= 1e-3 && worst_order >= 1.8 && signs && degenerate_ok;
    outcome(
        pass,
        format!(
            "max relative residual {worst_rel:.2e}, min order {worst_order:.3}, signs ok {signs}, outgoing/plus all-zero terms, absolute residual {:.1e}",
            degenerate.first().copied().unwrap_or(0.0)
        ),
    )
}

fn box_scaling_commutator(dr: f64) -> f64 {
    let g = GridSpec::new(dr, 0.5, 12.0, 8.0).unwrap();
    let w = SpaceTimeField::from_fn(g, Parity::Odd, |t, r| r * (-(t - r - 3.0).powi(2)).exp());
    let u = divide_by_r(&w).unwrap();
    let su = derivative(&u, DerivativeDirection::S).unwrap();
    let rsu = su.map_with_coords(Parity::Odd, |_, r, v| r * v);
    let box_su = divide_by_r(&box_radial(&rsu).unwrap()).unwrap();
    let box_u = divide_by_r(&box_radial(&w).unwrap()).unwrap();
    let s_box_u = derivative(&box_u, DerivativeDirection::S).unwrap();
    let res = box_su.sub(&s_box_u).unwrap().sub(&box_u.scale(2.0)).unwrap();
    let mut e = 0.0f64;
    for n in 4..res.nt() - 4 {
        for j in g.j_at_or_above(1.0)..res.nr() - 4 {
            e = e.max(res.get(n, j).abs());
        }
    }
    e
}

fn algebraic_exactness() -> Outcome {
    use DerivativeDirection::*;
    let g = GridSpec::new(1.0 / 16.0, 0.5, 12.0, 8.0).unwrap();
    let u = SpaceTimeField::from_fn(g, Parity::Even, |t, r| 1.0 + t * t - r * r * t);
    let v = SpaceTimeField::from_fn(g, Parity::Even, |t, r| t * r * r + 2.0 * t);
    let d = |f: &SpaceTimeField, k| derivative(f, k).unwrap();
    let (ut, ur, vt, vr, ug, vg) = (d(&u, Dt), d(&u, Dr), d(&v, Dt), d(&v, Dr), d(&u, Good), d(&v, Good));
    let mut null_rel = 0.0f64;
    for n in 0..u.nt() {
        for j in 0..u.nr() {
            let raw = ut.get(n, j) * vt.get(n, j) - ur.get(n, j) * vr.get(n, j);
            let null = ug.get(n, j) * vt.get(n, j) - ur.get(n, j) * vg.get(n, j);
            let scale = (ut.get(n, j) * vt.get(n, j)).abs() + (ur.get(n, j) * vr.get(n, j)).abs();
            if scale > 0.0 {
                null_rel = null_rel.max((raw - null).abs() / scale);
            }
        }
    }
    let w = SpaceTimeField::from_fn(g, Parity::Odd, |t, r| r * (1.0 + t * r + 0.5 * t * t));
    let s_rel = check_scaling_identity(&w, "polynomial").unwrap().relative_residual;
    let (a, b) = (box_scaling_commutator(1.0 / 16.0), box_scaling_commutator(1.0 / 32.0));
    let order = (a / b).log2();
    let pass = null_rel <= 1e-12 && s_rel <= 1e-12 && order >= 1.8;
    outcome(pass, format!("null form {null_rel:.1e}, scaling identity {s_rel:.1e}, [Box,S]-2Box order {order:.3}"))
}

// A generic factor perturbs every rounding; a power of two scales exactly,
// so its gap isolates the algebraic homogeneity of the check.
const GENERIC_C: f64 = 3.7;
const EXACT_C: f64 = 4.0;

#[derive(Default)]
struct Stability {
    drift: f64,
    scale_gap: f64,
    exact_gap: f64,
    not_finite: bool,
}

fn gap(a: &EstimateReport, b: &EstimateReport) -> f64 {
    if a.ratio == b.ratio { 0.0 } else { (a.ratio - b.ratio).abs() / b.ratio.abs() }
}

impl Stability {
    /// `reps`: coarse, fine, fine × GENERIC_C, fine × EXACT_C.
    fn add(&mut self, reps: [EstimateReport; 4]) {
        let [coarse, fine, generic, exact] = reps;
        self.not_finite |= !(coarse.ratio.is_finite() && fine.ratio.is_finite());
        self.drift = self.drift.max(fine.clone().with_coarse(&coarse).refinement_drift.unwrap());
        self.scale_gap = self.scale_gap.max(gap(&generic, &fine));
        self.exact_gap = self.exact_gap.max(gap(&exact, &fine));
    }
}

fn row<'a>(rows: &'a mut BTreeMap<&'static str, Stability>, name: &'static str) -> &'a mut Stability {
    rows.entry(name).or_default()
}

fn traveling(tau: u64, kind: KsRegion, second: bool, dr: f64, c: f64) -> EstimateReport {
    let id = format!("traveling(tau={tau})");
    let grid = registry::family_grid(dr, 2.5 * tau as f64).unwrap();
    let f = registry::traveling_bump(kind.track(), tau as f64, kind.scale());
    let source = Source::closed_form(grid, Parity::Even, move |t, r| c * f(t, r));
    if second {
        second_derivative_ks(&source, tau, kind, &id).unwrap()
    } else {
        spacetime_ks(&source, tau, kind, &id).unwrap()
    }
}

fn inequality_stability() -> Outcome {
    let (coarse_dr, fine_dr, horizon) = (1.0 / 32.0, 1.0 / 64.0, 8.0);
    let mut rows: BTreeMap<&str, Stability> = BTreeMap::new();
    let checks = [
        ("hardy", EnergyCheck::Hardy { p: DEFAULT_P }),
        ("le", EnergyCheck::Le),
        ("mr", EnergyCheck::Mr { p: DEFAULT_P }),
        ("newle", EnergyCheck::Newle { p: DEFAULT_P, delta: DEFAULT_DELTA }),
    ];
    for fam in Family::standard() {
        let coarse = Subject::family(fam, &registry::family_grid(coarse_dr, horizon).unwrap()).unwrap();
        let fine = Subject::family(fam, &registry::family_grid(fine_dr, horizon).unwrap()).unwrap();
        let (generic, exact) = (fine.scaled(GENERIC_C), fine.scaled(EXACT_C));
        for (name, c) in checks {
            let run = |s: &Subject| c.run(s).unwrap();
            row(&mut rows, name).add([run(&coarse), run(&fine), run(&generic), run(&exact)]);
        }
    }
    for fam in [FrameFamily::Translate, FrameFamily::Dilate] {
        for &big_r in &FRAME_SCALES {
            let at = |dr: f64, c: f64| {
                let grid = GridSpec::new(dr, 0.5, 4.0 * big_r as f64 + 8.0, 0.0).unwrap();
                let f = registry::frame_bump(fam, big_r as f64);
                let h: Array1<f64> = (0..grid.nr()).map(|j| c * f(grid.r(j))).collect();
                check_weighted_sobolev(h.view(), &grid, big_r, "frame").unwrap()
            };
            row(&mut rows, "weighted_sobolev").add([at(coarse_dr, 1.0), at(fine_dr, 1.0), at(fine_dr, GENERIC_C), at(fine_dr, EXACT_C)]);
        }
    }
    let mut ks_cases: Vec<(&str, u64, KsRegion, bool)> = Vec::new();
    for &(tau, s) in &KS_CASES {
        ks_cases.push(("mtt_r", tau, KsRegion::R(s), false));
        ks_cases.push(("mtt_u", tau, KsRegion::U(s), false));
        ks_cases.push(("crt", tau, KsRegion::R(s), true));
    }
    for &(tau, s) in &CUT_CASES {
        ks_cases.push(("cut", tau, KsRegion::U(s), true));
    }
    for (name, tau, kind, second) in ks_cases {
        let at = |dr: f64, c: f64| traveling(tau, kind, second, dr, c);
        row(&mut rows, name).add([at(coarse_dr, 1.0), at(fine_dr, 1.0), at(fine_dr, GENERIC_C), at(fine_dr, EXACT_C)]);
    }
    let pass = rows.values().all(|s| !s.not_finite && s.scale_gap <= 1e-10 && s.exact_gap <= 1e-10 && s.drift <= 0.05);
    let detail = rows
        .iter()
        .map(|(k, s)| {
            let finite = if s.not_finite { " NOT FINITE" } else { "" };
            format!("{k} drift {:.3} scale x{GENERIC_C} {:.0e} x{EXACT_C} {:.0e}{finite}", s.drift, s.scale_gap, s.exact_gap)
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(pass, detail)
}

fn picard_contraction(records: &[IterationRecord], elapsed: Duration) -> Outcome {
    let ratios: Vec<f64> = records.iter().filter(|r| r.k >= 3).filter_map(|r| r.contraction_ratio).collect();
    let pass = records.len() == 6 && ratios.len() == 4 && ratios.iter().all(|&q| q <= 0.5) && elapsed <= Duration::from_secs(600);
    outcome(pass, format!("ratios k>=3 {:?}, {:.0} s", ratios.iter().map(|q| format!("{q:.2e}")).collect::<Vec<_>>(), elapsed.as_secs_f64()))
}

fn boundedness(runs: &[Vec<IterationRecord>]) -> Outcome {
    let rep = check_boundedness(runs).unwrap();
    let k_ok = runs.iter().all(|r| r.len() == 6);
    let pass = k_ok && rep.pass && rep.max_normalized <= 1.0 + BOUND_SLACK && rep.linear_ok && rep.quadratic_ok;
    let quad: Vec<f64> = rep.quadratic.iter().map(|q| q.1).collect();
    outcome(
        pass,
        format!(
            "C0 {:.4}, max M_k/(2 C0 eps) {:.4}, M1 halving ratios {:?}, (M2-M1)/eps^2 {quad:.5?}",
            rep.fitted_c0,
            rep.max_normalized,
            rep.linearity.iter().map(|l| format!("{:.4}", l.1)).collect::<Vec<_>>()
        ),
    )
}

fn decay() -> Outcome {
    let t_max = 256.0;
    let g = GridSpec::for_horizon(1.0 / 16.0, DEFAULT_CFL, t_max, RADIAL_PAD).unwrap();
    let data = InitialData::calibrated(0.01, DEFAULT_N).unwrap();
    let window = RecordWindow { t_min: t_max, r_min: 0.0, r_max: 1.0 };
    let h = solve(&data, &SolveConfig::new(g, Mode::Semilinear).with_stride(1).with_window(window)).unwrap();
    let fit = fit_decay(&h, DEFAULT_DELTA).unwrap();
    let pass = (fit.exponent_u + 1.0).abs() <= 0.15 && fit.t_sup_u_variation <= 2.0 && fit.exponent_v >= fit.exponent_u - 0.05;
    outcome(
        pass,
        format!(
            "exponent_u {:.4}, exponent_v {:.4}, t sup|u| variation {:.3} on [{}, {}]",
            fit.exponent_u, fit.exponent_v, fit.t_sup_u_variation, fit.window.0, fit.window.1
        ),
    )
}

fn covering() -> bool {
    let g = GridSpec::new(1.0 / 8.0, 1.0, 132.0, 128.0).unwrap();
    [4u64, 8, 16, 32, 64].iter().all(|&tau| {
        let regions = enumerate_regions(tau, &g).unwrap();
        (g.n_at_or_above(tau as f64)..=g.n_at_or_below(2.0 * tau as f64).unwrap()).all(|n| {
            let t = g.t(n);
            (0..=g.j_at_or_below(t + 2.0).unwrap()).all(|j| regions.iter().any(|q| q.contains(t, g.r(j))))
        })
    })
}

fn additivity_gap() -> f64 {
    let g = GridSpec::new(1.0 / 8.0, 1.0, 68.0, 64.0).unwrap();
    let f = SpaceTimeField::from_fn(g, Parity::Even, |t, r| (0.3 * r).cos() * (-(t - r) * (t - r) / 50.0).exp());
    let mut gap = 0.0f64;
    for w in [WeightSpec::default(), WeightSpec::bracket(0.5)] {
        for tau in [4u64, 8, 16, 32] {
            let slab = MixedNormSpec::l2l2(w).on(DyadicRegion::r_kind(tau, 1, 0).unwrap());
            let parts: f64 = enumerate_regions(tau, &g)
                .unwrap()
                .into_iter()
                .map(|q| mixed_norm(&f, &MixedNormSpec { region: Some(q), ..slab }).unwrap().powi(2))
                .sum();
            let inner: Vec<f64> = (0..g.nt())
                .map(|n| {
                    let t = g.t(n);
                    let row = Array1::from_shape_fn(g.nr(), |j| {
                        let r = g.r(j);
                        let v = w.smooth_part(t, r) * f.get(n, j);
                        FOUR_PI * v * v * r * r
                    });
                    pl_integral(row.view(), 0.0, g.dr, 0.0, t + 2.0)
                })
                .collect();
            let whole = pl_integral(Array1::from(inner).view(), 0.0, g.dt, tau as f64, 2.0 * tau as f64);
            gap = gap.max((parts - whole).abs() / whole);
        }
    }
    gap
}

fn tree(dir: &Path, base: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            tree(&p, base, out);
        } else {
            let mut bytes = fs::read(&p).unwrap();
            if p.file_name().is_some_and(|n| n == "manifest.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("written_at_unix");
                bytes = serde_json::to_vec(&v).unwrap();
            }
            out.insert(p.strip_prefix(base).unwrap().display().to_string(), bytes);
        }
    }
}

fn reproducible() -> bool {
    let commands: [&[&str]; 3] = [
        &["solve", "--mode", "semilinear", "--eps", "0.05", "--dr", "1/8", "--t-max", "8"],
        &["picard", "--eps", "0.01", "--kmax", "4", "--dr", "1/8", "--t-max", "8"],
        &["estimates", "--check", "le", "--check", "cut", "--dr", "1/8", "--dr", "1/16"],
    ];
    let snapshot = || {
        let dir = tempfile::tempdir().unwrap();
        for c in commands {
            let mut argv = vec!["weaknull"];
            argv.extend_from_slice(c);
            argv.extend_from_slice(&["--out", dir.path().to_str().unwrap()]);
            weaknull::cli::run(argv);
        }
        let mut files = BTreeMap::new();
        tree(dir.path(), dir.path(), &mut files);
        files
    };
    let (a, b) = (snapshot(), snapshot());
    !a.is_empty() && a == b
}

fn structural() -> Outcome {
    let (cover, gap, same) = (covering(), additivity_gap(), reproducible());
    outcome(cover && gap <= 1e-10 && same, format!("covering {cover}, additivity gap {gap:.1e}, byte-identical reruns {same}"))
}

#[test]
fn acceptance() {
    let mut lines = Vec::new();
    let mut report = |n: usize, name: &str, o: Outcome| {
        let line = format!("[{}] {n}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        // written to the handle directly, so libtest does not capture it
        writeln!(std::io::stderr(), "{line}").unwrap();
        lines.push((o.pass, line));
    };
    report(1, "solver order", solver_order());
    report(2, "identity suite", identity_suite());
    report(3, "algebraic exactness", algebraic_exactness());
    report(4, "inequality stability", inequality_stability());

    let start = Instant::now();
    let central = run_iteration(&PicardConfig::calibrated(0.01, 1.0 / 32.0, 64.0).unwrap()).unwrap();
    report(5, "Picard contraction", picard_contraction(&central, start.elapsed()));

    let runs: Vec<Vec<IterationRecord>> = [0.02, 0.01, 0.005, 0.0025]
        .iter()
        .map(|&eps| {
            if eps == 0.01 {
                central.clone()
            } else {
                run_iteration(&PicardConfig::calibrated(eps, 1.0 / 32.0, 64.0).unwrap()).unwrap()
            }
        })
        .collect();
    report(6, "boundedness", boundedness(&runs));
    report(7, "decay", decay());
    report(8, "structural", structural());

    let failed: Vec<&String> = lines.iter().filter(|l| !l.0).map(|l| &l.1).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}
