use curlheat::diffops;
use curlheat::fields::{GridSpec, Mask, ScalarField, VectorField};
use curlheat::harness::{radii_schedule, ScheduleVariant};
use curlheat::norms::{lq_norm_field, sobolev_chain};
use curlheat::solver::{energy, LerayProjector};
use proptest::prelude::*;

fn grid() -> GridSpec {
    GridSpec::half_space(7, 1.0, 1.0).unwrap()
}

/// Field built from one Fourier mode per component.
fn modal(grid: &GridSpec, m: &[f64]) -> VectorField {
    VectorField::sample(grid, |x| std::array::from_fn(|c| {
        let p = &m[4 * c..4 * c + 4];
        (p[0] * x[0] + p[1] * x[1] + p[2] * x[2] + p[3]).sin()
    }))
    .unwrap()
}

/// Zero outer values, with `u₃` on Σ given by the one-sided Neumann extension.
fn admissible(u: &VectorField) -> VectorField {
    let g = u.grid().clone();
    let [nx, ny, _] = g.counts();
    let layer = nx * ny;
    let mut comps: [Vec<f64>; 3] = std::array::from_fn(|c| {
        u.component(c).values().iter().enumerate().map(|(i, &v)| if g.is_interior(i) { v } else { 0.0 }).collect()
    });
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let idx = i + nx * j;
            comps[2][idx] = (4.0 * comps[2][idx + layer] - comps[2][idx + 2 * layer]) / 3.0;
        }
    }
    let [a, b, c] = comps.map(|v| ScalarField::new(g.clone(), v).unwrap());
    VectorField::new([a, b, c]).unwrap()
}

fn modes() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 12)
}

fn interior_max(s: &ScalarField) -> f64 {
    let g = s.grid();
    (0..g.len()).filter(|&i| g.is_interior(i)).map(|i| s.values()[i].abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lq_is_a_norm(m in modes(), n in modes(), s in -4.0..4.0f64, q in 1.0..12.0f64) {
        let g = grid();
        let mask = Mask::full(&g);
        let (u, v) = (modal(&g, &m), modal(&g, &n));
        let nu = lq_norm_field(&u, q, &mask).unwrap();
        let nv = lq_norm_field(&v, q, &mask).unwrap();
        let scaled = lq_norm_field(&u.scale(s), q, &mask).unwrap();
        prop_assert!((scaled - s.abs() * nu).abs() <= 1e-12 * (1.0 + nu));
        let sum = lq_norm_field(&u.lin_comb(1.0, &v, 1.0).unwrap(), q, &mask).unwrap();
        prop_assert!(sum <= nu + nv + 1e-12);
    }

    #[test]
    fn div_curl_and_curl_grad_vanish(m in modes()) {
        let g = grid();
        let u = modal(&g, &m);
        let dc = diffops::div(&diffops::curl(&u));
        prop_assert!(interior_max(&dc) <= 1e-10);
        let cg = diffops::curl(&diffops::grad(u.component(0)));
        for c in 0..3 {
            prop_assert!(interior_max(cg.component(c)) <= 1e-10);
        }
    }

    #[test]
    fn projection_is_idempotent_and_contracting(m in modes()) {
        let g = grid();
        let p = LerayProjector::new(&g, 1e-12, 10_000);
        let u = modal(&g, &m);
        let (pu, stats) = p.project(&u).unwrap();
        prop_assert!(stats.div_after <= 1e-9 * (1.0 + stats.div_before));
        let v = admissible(&u);
        let (pv, _) = p.project(&v).unwrap();
        prop_assert!(energy(&pv) <= energy(&v) * (1.0 + 1e-12));
        let (ppu, _) = p.project(&pu).unwrap();
        let d = ppu.lin_comb(1.0, &pu, -1.0).unwrap().max_abs();
        prop_assert!(d <= 1e-8 * (1.0 + pu.max_abs()));
    }

    #[test]
    fn projection_removes_gradients(m in modes()) {
        let g = grid();
        let p = LerayProjector::new(&g, 1e-12, 10_000);
        let psi = modal(&g, &m).component(1).clone();
        let gp = p.gradient(&psi).unwrap();
        let (out, _) = p.project(&gp).unwrap();
        prop_assert!(out.max_abs() <= 1e-8 * (1.0 + gp.max_abs()));
    }

    #[test]
    fn schedules_stay_nested(r in 0.05..2.0f64, gap in 0.01..2.0f64, k in 1usize..12) {
        let r0 = r + gap;
        for variant in [ScheduleVariant::Printed, ScheduleVariant::Decreasing] {
            let s = radii_schedule(r, r0, k, variant).unwrap();
            prop_assert_eq!(s.radii.len(), k);
            prop_assert!(s.nested);
            let increasing = s.radii.windows(2).all(|w| w[1] > w[0]);
            if k > 1 {
                prop_assert_eq!(increasing, variant == ScheduleVariant::Printed);
            }
        }
    }

    #[test]
    fn chain_exponents_increase(p0 in 1.1..4.9f64, steps in 1usize..6) {
        let chain = sobolev_chain(p0, steps).unwrap();
        prop_assert!(!chain.is_empty());
        prop_assert!(chain.windows(2).all(|w| w[1].p > w[0].p));
    }
}
