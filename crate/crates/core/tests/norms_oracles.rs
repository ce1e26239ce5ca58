use std::sync::Arc;

use curlheat::fields::{GridSpec, Mask, ScalarField, VectorField};
use curlheat::harness::MmsFamily;
use curlheat::norms::{estimate_ratio, holder_parabolic, holder_static, lq_norm, lq_norm_field, w21q_norm, NormReport, SpaceTime};
use curlheat::system::ProblemSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn series(grid: &GridSpec, times: &[f64], f: impl Fn(f64, [f64; 3]) -> [f64; 3]) -> Vec<VectorField> {
    times.iter().map(|&t| VectorField::sample(grid, |x| f(t, x)).unwrap()).collect()
}

fn random_series(grid: &GridSpec, levels: usize, seed: u64) -> Vec<VectorField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..levels)
        .map(|_| {
            let comps: [ScalarField; 3] =
                std::array::from_fn(|_| ScalarField::new(grid.clone(), (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap());
            VectorField::new(comps).unwrap()
        })
        .collect()
}

#[test]
fn constant_field_gives_volume_power() {
    let grid = GridSpec::half_space(9, 1.0, 1.0).unwrap();
    let times = [0.0, 0.125, 0.25, 0.375, 0.5];
    let fields = series(&grid, &times, |_, _| [3.0, 0.0, 4.0]);
    let st = SpaceTime::new(&times, &fields).unwrap();
    let mask = Mask::full(&grid);
    for q in [1.0, 2.0, 3.5] {
        let v = lq_norm(&st, q, &mask).unwrap();
        let expected = 5.0 * (4.0f64 * 0.5).powf(1.0 / q);
        assert!((v - expected).abs() < 1e-13 * expected, "q={q}: {v} vs {expected}");
    }
    assert_eq!(lq_norm(&st, f64::INFINITY, &mask).unwrap(), 5.0);
    let static_norm = lq_norm_field(&fields[0], 2.0, &mask).unwrap();
    assert!((static_norm - 5.0 * 2.0).abs() < 1e-13);
}

#[test]
fn sup_norm_is_max_abs() {
    let grid = GridSpec::unit(6).unwrap();
    let fields = random_series(&grid, 3, 4);
    let times = [0.0, 0.1, 0.2];
    let st = SpaceTime::new(&times, &fields).unwrap();
    let expected = fields.iter().map(|f| f.max_norm()).fold(0.0, f64::max);
    assert_eq!(lq_norm(&st, f64::INFINITY, &Mask::full(&grid)).unwrap(), expected);
}

#[test]
fn l2_matches_direct_summation() {
    let grid = GridSpec::half_space(7, 1.0, 0.5).unwrap();
    let times = [0.0, 0.2, 0.4, 0.6];
    let fields = random_series(&grid, times.len(), 9);
    let st = SpaceTime::new(&times, &fields).unwrap();
    let mask = Mask::half_ball(&grid, 0.8).unwrap();
    let [nx, ny, nz] = grid.counts();
    let [hx, hy, hz] = grid.spacing();
    let end = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut sum = 0.0;
    for n in (0..times.len()).rev() {
        let wt = if n == 0 || n == times.len() - 1 { 0.1 } else { 0.2 };
        for k in (0..nz).rev() {
            for j in (0..ny).rev() {
                for i in (0..nx).rev() {
                    let idx = grid.index(i, j, k);
                    if !mask.contains(idx) {
                        continue;
                    }
                    let v = fields[n].at(idx);
                    let w = hx * hy * hz * end(i, nx) * end(j, ny) * end(k, nz) * wt;
                    sum += w * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                }
            }
        }
    }
    let got = lq_norm(&st, 2.0, &mask).unwrap();
    assert!((got - sum.sqrt()).abs() <= 1e-13 * got);
}

#[test]
fn w21q_trivial_cases() {
    let grid = GridSpec::unit(7).unwrap();
    let times = [0.0, 0.25, 0.5, 0.75, 1.0];
    let mask = Mask::full(&grid);
    let zero = series(&grid, &times, |_, _| [0.0; 3]);
    assert_eq!(w21q_norm(&SpaceTime::new(&times, &zero).unwrap(), 2.0, &mask).unwrap().total, 0.0);

    let linear = series(&grid, &times, |t, _| [t, 0.0, 0.0]);
    let w = w21q_norm(&SpaceTime::new(&times, &linear).unwrap(), 3.0, &mask).unwrap();
    assert!(w.grad < 1e-13 && w.hessian < 1e-12);
    assert!((w.time - 1.0).abs() < 1e-12, "{}", w.time);
}

#[test]
fn w21q_converges_to_analytic_value() {
    let grid = GridSpec::unit(33).unwrap();
    let times: Vec<f64> = (0..=64).map(|n| n as f64 / 64.0).collect();
    let fields = series(&grid, &times, |t, x| [x[0].sin() * (-t).exp(), 0.0, 0.0]);
    let w = w21q_norm(&SpaceTime::new(&times, &fields).unwrap(), 2.0, &Mask::full(&grid)).unwrap();
    let time_int = (1.0 - (-2.0f64).exp()) / 2.0;
    let sin2 = 0.5 - (2.0f64).sin() / 4.0;
    let cos2 = 0.5 + (2.0f64).sin() / 4.0;
    let u = (time_int * sin2).sqrt();
    let grad = (time_int * cos2).sqrt();
    for (got, want) in [(w.u, u), (w.grad, grad), (w.hessian, u), (w.time, u), (w.total, 3.0 * u + grad)] {
        assert!((got - want).abs() < 0.05 * want, "{got} vs {want}");
    }
}

#[test]
fn holder_of_constant_and_linear() {
    let grid = GridSpec::unit(5).unwrap();
    let mask = Mask::full(&grid);
    let c = VectorField::sample(&grid, |_| [0.0, -2.5, 0.0]).unwrap();
    for order in 0..=2 {
        let h = holder_static(&c, 0.5, order, &mask).unwrap();
        assert!((h.total - 2.5).abs() < 1e-12, "order {order}: {:?}", h.parts);
    }
    let lin = VectorField::sample(&grid, |x| [x[0], 0.0, 0.0]).unwrap();
    let h = holder_static(&lin, 0.5, 0, &mask).unwrap();
    assert!(h.exact_pairs);
    assert!((h.parts["semi.u"] - 1.0).abs() < 1e-15);
    let times = [0.0];
    let st = SpaceTime::new(&times, std::slice::from_ref(&lin)).unwrap();
    assert_eq!(holder_parabolic(&st, 0.5, 0, &mask).unwrap().parts["semi.u"], h.parts["semi.u"]);
}

#[test]
fn holder_rejects_bad_alpha() {
    let grid = GridSpec::unit(4).unwrap();
    let u = VectorField::zeros(&grid);
    for a in [0.0, 1.0, 1.5, -0.2] {
        assert!(holder_static(&u, a, 0, &Mask::full(&grid)).is_err());
    }
}

#[test]
fn exact_regime_equals_brute_force() {
    let grid = GridSpec::unit(5).unwrap();
    let times = [0.0, 0.3, 0.6];
    let fields = random_series(&grid, times.len(), 11);
    let st = SpaceTime::new(&times, &fields).unwrap();
    let mask = Mask::half_ball(&grid, 1.2).unwrap();
    let alpha = 0.4;
    let h = holder_parabolic(&st, alpha, 0, &mask).unwrap();
    assert!(h.exact_pairs);
    let pts: Vec<(usize, usize)> = (0..times.len()).flat_map(|l| mask.indices().map(move |i| (l, i))).collect();
    let mut best: f64 = 0.0;
    for &(l1, i1) in &pts {
        for &(l2, i2) in &pts {
            let (x, y) = (grid.point_at(i1), grid.point_at(i2));
            let dx = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
            let dt = (times[l1] - times[l2]).abs();
            let d = dx.powf(alpha) + dt.powf(alpha / 2.0);
            if d == 0.0 {
                continue;
            }
            let (a, b) = (fields[l1].at(i1), fields[l2].at(i2));
            let diff = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
            best = best.max(diff / d);
        }
    }
    assert!((h.parts["semi.u"] - best).abs() <= 1e-13 * best);
}

#[test]
fn holder_is_monotone_in_order_and_region() {
    let grid = GridSpec::half_space(7, 1.0, 1.0).unwrap();
    let times = [0.0, 0.1, 0.2, 0.3];
    let fields = series(&grid, &times, |t, x| [x[0].sin() * x[2], (x[1] + t).cos(), x[0] * x[1] * (-t).exp()]);
    let st = SpaceTime::new(&times, &fields).unwrap();
    let small = Mask::half_ball(&grid, 0.6).unwrap();
    let large = Mask::half_ball(&grid, 1.0).unwrap();
    let mut prev = 0.0;
    for order in 0..=2 {
        let s = holder_parabolic(&st, 0.3, order, &small).unwrap();
        let l = holder_parabolic(&st, 0.3, order, &large).unwrap();
        assert!(s.exact_pairs && l.exact_pairs);
        assert!(s.total <= l.total);
        assert!(prev <= s.total);
        prev = s.total;
    }
    let rs = NormReport::compute(&st, &small, &[2.0], &[0.5]).unwrap();
    let rl = NormReport::compute(&st, &large, &[2.0], &[0.5]).unwrap();
    for (k, v) in &rs.values {
        assert!(*v <= rl.values[k], "{k}");
    }
}

#[test]
fn report_keys_and_json() {
    let grid = GridSpec::unit(5).unwrap();
    let times = [0.0, 0.5, 1.0];
    let fields = random_series(&grid, 3, 2);
    let st = SpaceTime::new(&times, &fields).unwrap();
    let r = NormReport::compute(&st, &Mask::full(&grid), &[2.0, 10.0], &[0.5]).unwrap();
    for key in ["lq.2", "w21q.10", "holder.0.5.c2a", "holder.0.5.ca", "holder.0.5.c1a"] {
        assert!(r.values.contains_key(key), "{key}");
    }
    let json = r.to_json().unwrap();
    let back: NormReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
}

fn exact_problem(fam: &MmsFamily, grid: &GridSpec, times: &[f64]) -> (ProblemSpec, Vec<VectorField>) {
    let fields = series(grid, times, |t, x| fam.exact(t, x));
    let mut p = ProblemSpec::new(fields[0].clone(), *times.last().unwrap(), times[1] - times[0]);
    let f = fam.clone();
    p.f = Arc::new(move |t, x| f.forcing(t, x));
    p.a = fam.coef_a.clone();
    p.c = fam.coef_c.clone();
    p.b = fam.coef_b.clone();
    (p, fields)
}

#[test]
fn estimate_ratio_degenerate_and_scaling() {
    let grid = GridSpec::half_space(9, 1.0, 1.0).unwrap();
    let times = [0.0, 0.1, 0.2, 0.3];
    let (p0, z) = exact_problem(&MmsFamily::constant(0.0), &grid, &times);
    let r0 = estimate_ratio(&SpaceTime::new(&times, &z).unwrap(), &p0, 0.3, 0.5, 0.9).unwrap();
    assert_eq!(r0.ratio, 0.0);
    assert!(r0.degenerate);

    let fam = MmsFamily::trigonometric();
    let (p1, u1) = exact_problem(&fam, &grid, &times);
    let (p2, u2) = exact_problem(&fam.scaled(7.5), &grid, &times);
    let a = estimate_ratio(&SpaceTime::new(&times, &u1).unwrap(), &p1, 0.3, 0.5, 0.9).unwrap();
    let b = estimate_ratio(&SpaceTime::new(&times, &u2).unwrap(), &p2, 0.3, 0.5, 0.9).unwrap();
    assert!(a.ratio > 0.0);
    assert!((a.ratio - b.ratio).abs() <= 1e-12 * a.ratio, "{} vs {}", a.ratio, b.ratio);
}
