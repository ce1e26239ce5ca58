//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Pass criterion numbers as arguments to run a subset.

use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use curlheat::diffops;
use curlheat::fields::{GridSpec, ScalarField, VectorField};
use curlheat::geometry::{ChartDescriptor, PatchKind};
use curlheat::harness::{
    convergence_study, estimate_probe, geometry_study, mms_generate, radii_schedule, temporal_study, AnalyticField, ConvergenceTable,
    MmsFamily, ProbeConfig, ScheduleVariant,
};
use curlheat::norms::{sobolev_chain, Regime};
use curlheat::solver::{solve, Scheme, SolverConfig};
use curlheat::system::{check_compatibility, constant_scalar, ProblemSpec};
use curlheat_cli::{parse_config, run};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
    /// Upper bound on wall time, if the criterion states one.
    budget: Option<Duration>,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into(), budget: None }
}

fn order_ok(orders: &[f64], lo: f64, hi: f64) -> bool {
    !orders.is_empty() && orders.iter().all(|o| (lo..=hi).contains(o))
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Sum of a few random Fourier modes per component.
fn random_smooth(grid: &GridSpec, rng: &mut ChaCha8Rng) -> VectorField {
    let modes: Vec<[f64; 5]> = (0..9)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0), rng.gen_range(0.0..6.3)])
        .collect();
    VectorField::sample(grid, |x| {
        std::array::from_fn(|c| {
            modes[3 * c..3 * c + 3].iter().map(|m| m[0] * (m[1] * x[0] + m[2] * x[1] + m[3] * x[2] + m[4]).sin()).sum()
        })
    })
    .unwrap()
}

fn interior_max(s: &ScalarField) -> f64 {
    let g = s.grid();
    (0..g.len()).filter(|&i| g.is_interior(i)).map(|i| s.values()[i].abs()).fold(0.0, f64::max)
}

fn criterion_1() -> Verdict {
    let grid = GridSpec::unit(33).unwrap();
    let h = grid.spacing()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_dc: f64 = 0.0;
    let mut worst_id: f64 = 0.0;
    let mut pass = true;
    for _ in 0..3 {
        let w = random_smooth(&grid, &mut rng);
        let dc = interior_max(&diffops::div(&diffops::curl(&w)));
        let bound = 1e-12 * (1.0 + w.max_abs() / (h * h));
        pass &= dc <= bound;
        worst_dc = worst_dc.max(dc / bound);

        let u = random_smooth(&grid, &mut rng);
        let cc = diffops::curl_curl(&u);
        let gd = diffops::grad(&diffops::div(&u));
        let lap = diffops::vector_laplacian(&u);
        let r = cc.lin_comb(1.0, &gd.lin_comb(1.0, &lap, -1.0).unwrap(), -1.0).unwrap();
        let id = (0..3).map(|c| interior_max(r.component(c))).fold(0.0, f64::max);
        let bound = 1e-12 * (1.0 + u.max_abs() / (h * h));
        pass &= id <= bound;
        worst_id = worst_id.max(id / bound);
    }
    Verdict {
        pass,
        detail: format!("33³: div curl at {worst_dc:.2e} of bound, curl² identity at {worst_id:.2e} of bound"),
        budget: Some(Duration::from_secs(10)),
    }
}

const DOMAIN: [[f64; 2]; 2] = [[-0.5, 0.5], [-0.5, 0.5]];

fn chart(kind: PatchKind, depth: f64) -> ChartDescriptor {
    ChartDescriptor { kind, domain: DOMAIN, depth }
}

fn criterion_2() -> Verdict {
    let charts = [chart(PatchKind::Sphere { radius: 2.0 }, 1.0), chart(PatchKind::Cylinder { radius: 1.0 }, 0.5), chart(PatchKind::Flat, 1.0)];
    let fields = [AnalyticField::poly(), AnalyticField::trig()];
    let table = geometry_study(&charts, &fields, &[9, 17, 33]).unwrap();
    let mut pass = true;
    let mut lo: f64 = f64::INFINITY;
    let mut hi: f64 = f64::NEG_INFINITY;
    let mut flat: f64 = 0.0;
    let mut robin: f64 = 0.0;
    let mut bad = Vec::new();
    for (label, metric) in table.groups() {
        let values: Vec<f64> = table.series(&label, &metric).iter().map(|r| r.value).collect();
        if metric == "robin" {
            if label.starts_with("sphere") {
                robin = robin.max(values.iter().copied().fold(0.0, f64::max));
            }
        } else if label.starts_with("flat") {
            flat = flat.max(values.iter().copied().fold(0.0, f64::max));
        } else {
            let orders = table.orders(&label, &metric);
            for &o in &orders {
                lo = lo.min(o);
                hi = hi.max(o);
            }
            if !order_ok(&orders, 1.8, 2.2) {
                bad.push(format!("{label}.{metric} {orders:.3?}"));
            }
        }
    }
    pass &= bad.is_empty() && flat <= 1e-12 && robin <= 1e-8;
    Verdict {
        pass,
        detail: format!("curved orders in [{lo:.3}, {hi:.3}]{}; flat gap {flat:.1e}; sphere |H + 1| ≤ {robin:.1e}", if bad.is_empty() { String::new() } else { format!(", out of window: {}", bad.join("; ")) }),
        budget: Some(Duration::from_secs(60)),
    }
}

fn criterion_3() -> Verdict {
    let charts = [chart(PatchKind::Sphere { radius: 2.0 }, 1.0), chart(PatchKind::StretchedSphere { radius: 2.0, stretch: 0.3 }, 1.0)];
    let fields = [AnalyticField::solenoidal_trig()];
    let table = geometry_study(&charts, &fields, &[9, 17, 33]).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    let mut report = Vec::new();
    for (label, metric) in table.groups() {
        let values: Vec<f64> = table.series(&label, &metric).iter().map(|r| r.value).collect();
        let orders = table.orders(&label, &metric);
        if metric.ends_with(".corrected") {
            let ok = order_ok(&orders, 1.8, 2.2);
            pass &= ok;
            if label.starts_with("sphere") || !ok {
                lines.push(format!("{metric} {orders:.2?}"));
            }
        } else if metric.ends_with(".printed") {
            report.push(format!("{label}.{metric} {}", sci(&values)));
        }
    }
    pass &= !report.is_empty();
    for r in &report {
        println!("    printed-terms report: {r}");
    }
    verdict(pass, format!("sphere pairwise orders: {}; printed-vs-corrected report rows: {}", lines.join(", "), report.len()))
}

fn criterion_4() -> Verdict {
    let fam = MmsFamily::trigonometric();
    let joint: ConvergenceTable = convergence_study(&fam, &[9, 17, 33], Scheme::CrankNicolson, 0.5, 8).unwrap();
    let label = "trig/cn";
    let e: Vec<f64> = joint.series(label, "l2").iter().map(|r| r.value).collect();
    let o = joint.orders(label, "l2");
    let temporal = temporal_study(&fam, 33, &[16, 32, 64], Scheme::BackwardEuler, 0.5).unwrap();
    let d: Vec<f64> = temporal.series("trig/be/n33", "richardson.l2").iter().map(|r| r.value).collect();
    let ot = temporal.orders("trig/be/n33", "richardson.l2");
    Verdict {
        pass: order_ok(&o, 1.8, 2.2) && order_ok(&ot, 0.8, 1.2),
        detail: format!("CN 9³/17³/33³ L² errors {} orders {o:.3?}; BE 33³ Richardson {} order {ot:.3?}", sci(&e), sci(&d)),
        budget: Some(Duration::from_secs(300)),
    }
}

fn criterion_5() -> Verdict {
    let fam = MmsFamily::trigonometric();
    let grid = GridSpec::half_space(17, 1.0, 1.0).unwrap();
    let h = grid.spacing()[2];
    let prob = mms_generate(&fam, &grid, 0.5, 1.0 / 32.0).unwrap();
    let mut pass = true;
    let (mut div, mut dir, mut neu): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for scheme in [Scheme::BackwardEuler, Scheme::CrankNicolson] {
        let series = solve(&prob.spec, &SolverConfig { scheme, ..SolverConfig::default() }).unwrap();
        for (d, u) in series.diagnostics.iter().zip(&series.snapshots) {
            let rel = d.div_inf / u.max_abs();
            pass &= rel <= 1e-8 && d.bc_dirichlet_res == 0.0 && d.bc_neumann_res <= 10.0 * h * h;
            div = div.max(rel);
            dir = dir.max(d.bc_dirichlet_res);
            neu = neu.max(d.bc_neumann_res);
        }
    }
    verdict(pass, format!("17³, BE and CN, 16 steps: max ‖div u‖∞/‖u‖∞ = {div:.2e}, max |u_T| on Σ = {dir:e}, max |∂u₃/∂ν| = {neu:.2e} (10h² = {:.2e})", 10.0 * h * h))
}

fn perturbed(p: &ProblemSpec, eps: f64) -> ProblemSpec {
    let mut q = p.clone();
    let f = p.f.clone();
    q.f = Arc::new(move |t, x| {
        let mut v = f(t, x);
        v[0] += eps;
        v
    });
    q
}

fn criterion_6() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [9, 17, 33] {
        let grid = GridSpec::half_space(n, 1.0, 1.0).unwrap();
        let prob = mms_generate(&MmsFamily::trigonometric(), &grid, 0.5, 0.1).unwrap();
        let r = check_compatibility(&prob.spec).unwrap();
        let scale = 1.0 + prob.spec.u0.max_abs() + prob.spec.sample_f(0.0).unwrap().max_abs();
        let bound = 10.0 * r.h * r.h * scale;
        pass &= r.max <= bound;
        parts.push(format!("{n}³ {:.2e} ≤ {bound:.2e}", r.max));
    }
    let eps = 0.125;
    let grid = GridSpec::half_space(17, 1.0, 1.0).unwrap();
    let prob = mms_generate(&MmsFamily::polynomial(), &grid, 0.5, 0.1).unwrap();
    let base = check_compatibility(&prob.spec).unwrap().max;
    let pert = check_compatibility(&perturbed(&prob.spec, eps)).unwrap().max;
    pass &= (pert - eps).abs() <= 1e-12;
    verdict(pass, format!("MMS residual {}; ε = {eps} perturbation gives {pert:e} over base {base:.1e}", parts.join(", ")))
}

fn criterion_7() -> Verdict {
    let grid = GridSpec::half_space(13, 1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pass = true;
    let mut runs = 0;
    let mut worst: f64 = f64::NEG_INFINITY;
    for (a, c) in [(1.0, 0.0), (0.7, 0.3), (2.0, 1.5)] {
        let [nx, ny, _] = grid.counts();
        let comps: [ScalarField; 3] = std::array::from_fn(|_| {
            let v = (0..grid.len()).map(|i| if grid.is_interior(i) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
            ScalarField::new(grid.clone(), v).unwrap()
        });
        let mut c3 = comps[2].values().to_vec();
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let idx = i + nx * j;
                c3[idx] = (4.0 * c3[idx + nx * ny] - c3[idx + 2 * nx * ny]) / 3.0;
            }
        }
        let [c1, c2, _] = comps;
        let u0 = VectorField::new([c1, c2, ScalarField::new(grid.clone(), c3).unwrap()]).unwrap();
        let mut p = ProblemSpec::new(u0, 0.25, 0.025);
        p.a = constant_scalar(a);
        p.c = constant_scalar(c);
        p.tol_div = f64::INFINITY;
        for scheme in [Scheme::BackwardEuler, Scheme::CrankNicolson] {
            let s = solve(&p, &SolverConfig { scheme, ..SolverConfig::default() }).unwrap();
            for w in s.diagnostics.windows(2) {
                pass &= w[1].energy <= w[0].energy;
                worst = worst.max((w[1].energy - w[0].energy) / w[0].energy);
            }
            runs += 1;
        }
    }
    verdict(pass, format!("{runs} runs of 10 steps on 13³: largest relative energy change per step {worst:.3e}"))
}

fn criterion_8() -> Verdict {
    let chain = sobolev_chain(2.0, 3).unwrap();
    let ps: Vec<f64> = chain.iter().map(|e| e.p).collect();
    let last = chain.last().unwrap().regime;
    let holder_half = matches!(last, Regime::Holder { alpha_max } if (alpha_max - 0.5).abs() < 1e-12);
    let chain_ok = ps.len() == 3 && (ps[1] - 10.0 / 3.0).abs() < 1e-12 && (ps[2] - 10.0).abs() < 1e-12 && holder_half;
    let s = radii_schedule(0.5, 1.0, 2, ScheduleVariant::Printed).unwrap();
    let radii_ok = s.radii == [0.75, 0.875] && s.nested;
    verdict(chain_ok && radii_ok, format!("chain {ps:?} ending in {last:?}; radii {:?}", s.radii))
}

fn criterion_9() -> Verdict {
    let report = estimate_probe(&MmsFamily::trigonometric(), &ProbeConfig::default()).unwrap();
    let v = report.max_variation();
    let s = &report.scaling;
    let inc = &report.incompatible;
    verdict(
        v < 0.2 && s.relative_difference <= 1e-12 && inc.delta > 0.0,
        format!(
            "α = 0.3: variation {:.3?} between the two finest grids; λ-scaling relative difference {:.1e}; incompatible delta {:.3e}",
            report.variation, s.relative_difference, inc.delta
        ),
    )
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn criterion_10() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        "command=solve seed=11\n[problem]\nn=9\ndt=0.05\nt_final=0.2\nsnapshots=true\n",
        "command=mms-convergence\n[problem]\nt_final=0.25\n[study]\nresolutions=5,9\nbase_steps=2\n",
        "command=verify-geometry\n[study]\nresolutions=9,17\ncharts=sphere,flat\nfields=poly,solenoidal-trig\n",
        "command=chain p0=2 steps=3",
    ];
    let mut pass = true;
    let mut files = 0;
    for (i, text) in configs.iter().enumerate() {
        let mut outs = Vec::new();
        for rep in 0..2 {
            let mut cfg = parse_config(text).unwrap();
            cfg.out = tmp.path().join(format!("c{i}-{rep}"));
            run(&cfg).unwrap();
            outs.push(csv_files(&cfg.out));
        }
        pass &= !outs[0].is_empty() && outs[0] == outs[1];
        files += outs[0].len();
    }
    let snaps = tmp.path().join("c0-0").join("snapshots");
    let mut round_trips = 0;
    for entry in fs::read_dir(&snaps).unwrap() {
        let path = entry.unwrap().path();
        let bytes = fs::read(&path).unwrap();
        let u = VectorField::read_snapshot(bytes.as_slice()).unwrap();
        let mut again = Vec::new();
        u.write_snapshot(&mut again).unwrap();
        pass &= again == bytes;
        round_trips += 1;
    }
    let grid = GridSpec::half_space(9, 1.0, 1.0).unwrap();
    let u = random_smooth(&grid, &mut ChaCha8Rng::seed_from_u64(10));
    let mut buf = Vec::new();
    u.write_snapshot(&mut buf).unwrap();
    let back = VectorField::read_snapshot(buf.as_slice()).unwrap();
    let bits = |v: &VectorField| -> Vec<u64> { (0..3).flat_map(|c| v.component(c).values().iter().map(|x| x.to_bits()).collect::<Vec<_>>()).collect() };
    pass &= back.grid() == u.grid() && bits(&back) == bits(&u);
    pass &= round_trips > 0;
    verdict(pass, format!("{files} CSV artifacts identical across repeated runs; {round_trips} snapshot files and an in-memory field round-trip bit-exactly"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("operator identities", criterion_1),
        ("geometry oracle equivalence", criterion_2),
        ("T̃ consistency", criterion_3),
        ("MMS convergence", criterion_4),
        ("constraint maintenance", criterion_5),
        ("compatibility detection", criterion_6),
        ("energy decay", criterion_7),
        ("bootstrap bookkeeping", criterion_8),
        ("estimate probe", criterion_9),
        ("reproducibility", criterion_10),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let k = i + 1;
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let mut v = f();
        let elapsed = start.elapsed();
        if let Some(b) = v.budget {
            if elapsed > b {
                v.pass = false;
                v.detail.push_str(&format!("; over time budget {:?}", b));
            }
        }
        println!("{} criterion {k} ({name}): {} [{:.1} s]", if v.pass { "PASS" } else { "FAIL" }, v.detail, elapsed.as_secs_f64());
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
