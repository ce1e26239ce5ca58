//! First-order remainders `φ_j`, divergence rearrangements `ζ_j`, and the two
//! reduced forms of `T̃_j`.
//!
//! Notation: `s_j = √G_jj`, `√G = s₁s₂`, `W = ũ₁∂₁s₂ + ũ₂∂₂s₁ + ũ₃∂₃√G`.
//! Metric factors and their first derivatives are analytic; derivatives of
//! products with the field are grid differences.
//!
//! Three published terms do not follow from the expansion they summarize:
//! in `φ₂` the product `∂₂ũ₁ ∂₁s₁` (printed with `ũ₂`), in `φ₃` the term
//! `∂₃(ũ₂ ∂₂s₂)` (printed with `ũ₃`), and in `ζ₃` the factors `∂₃(1/s₂)` and
//! `W/√G` (printed as `∂₃(1/G₂₂)` and `W/G`). [`TermVariant`] selects either.

use crate::diffops::{partial_raw, second_raw};
use crate::fields::{ScalarField, VectorField};

use super::CurvilinearVectorField;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermVariant {
    /// Terms exactly as published.
    Printed,
    /// Terms as they follow from expanding the nested `T̃_j` and the
    /// divergence identity.
    Corrected,
}

#[derive(Clone, Debug)]
pub struct LowerOrderTerms {
    pub phi: [ScalarField; 3],
    /// Meaningful only for divergence-free input.
    pub zeta: [ScalarField; 3],
}

struct Ctx<'a> {
    u: &'a CurvilinearVectorField,
    n: usize,
}

impl<'a> Ctx<'a> {
    fn d(&self, v: &[f64], a: usize) -> Vec<f64> {
        partial_raw(self.u.chart().grid(), v, a)
    }

    fn dd(&self, v: &[f64], a: usize, b: usize) -> Vec<f64> {
        let grid = self.u.chart().grid();
        if a == b {
            second_raw(grid, v, a)
        } else {
            partial_raw(grid, &partial_raw(grid, v, a), b)
        }
    }

    fn map(&self, f: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..self.n).map(f).collect()
    }

    fn field(&self, v: Vec<f64>) -> ScalarField {
        ScalarField::from_parts(self.u.chart().grid().clone(), v)
    }
}

pub fn lower_order_terms(u: &CurvilinearVectorField, variant: TermVariant) -> LowerOrderTerms {
    let chart = u.chart();
    let n = chart.grid().len();
    let cx = Ctx { u, n };
    let [s1, s2] = chart.sqrt_metric();
    let ds = |j: usize, a: usize| chart.sqrt_metric_derivative(j, a);
    let c = u.frame_components().components();
    let (u1, u2, u3) = (c[0].values(), c[1].values(), c[2].values());
    let du: [[Vec<f64>; 3]; 3] = std::array::from_fn(|j| std::array::from_fn(|a| cx.d(c[j].values(), a)));

    // Analytic metric derivatives.
    let d_inv_sg = |a: usize, i: usize| -(ds(0, a)[i] / s1[i] + ds(1, a)[i] / s2[i]) / (s1[i] * s2[i]);
    let d_inv_s = |j: usize, a: usize, i: usize| {
        let s = if j == 0 { s1[i] } else { s2[i] };
        -ds(j, a)[i] / (s * s)
    };
    let d_inv_s2 = |j: usize, a: usize, i: usize| {
        let s = if j == 0 { s1[i] } else { s2[i] };
        -2.0 * ds(j, a)[i] / (s * s * s)
    };
    // ∂_a(s_p / s_q).
    let d_ratio = |p: usize, q: usize, a: usize, i: usize| {
        let sp = if p == 0 { s1[i] } else { s2[i] };
        let sq = if q == 0 { s1[i] } else { s2[i] };
        (ds(p, a)[i] - sp * ds(q, a)[i] / sq) / sq
    };

    let prod = |a: &[f64], b: &[f64]| cx.map(|i| a[i] * b[i]);
    let u1s1 = prod(u1, s1);
    let u2s2 = prod(u2, s2);
    // ∂₁(ũ₂s₂) - ∂₂(ũ₁s₁)
    let p12 = {
        let (a, b) = (cx.d(&u2s2, 0), cx.d(&u1s1, 1));
        cx.map(|i| a[i] - b[i])
    };
    // ∂₃(ũ₁s₁) - ∂₁ũ₃
    let q13 = {
        let a = cx.d(&u1s1, 2);
        cx.map(|i| a[i] - du[2][0][i])
    };
    // ∂₂ũ₃ - ∂₃(ũ₂s₂)
    let s23 = {
        let a = cx.d(&u2s2, 2);
        cx.map(|i| du[2][1][i] - a[i])
    };

    let phi1 = {
        let a = cx.d(&prod(u2, ds(1, 1)), 0);
        let b = cx.d(&prod(u1, ds(0, 1)), 1);
        let cc = cx.d(&prod(u1, ds(0, 2)), 2);
        cx.map(|i| {
            (du[1][1][i] * ds(1, 0)[i] + a[i] - du[0][1][i] * ds(0, 1)[i] - b[i]) / (s2[i] * s2[i] * s1[i])
                + d_inv_sg(1, i) * p12[i] / s2[i]
                - (du[0][2][i] * ds(0, 2)[i] + cc[i]) / s1[i]
                - d_ratio(1, 0, 2, i) * q13[i] / s2[i]
        })
    };

    let phi2 = {
        let dd = cx.d(&prod(u2, ds(1, 2)), 2);
        let e = cx.d(&prod(u2, ds(1, 0)), 0);
        let f = cx.d(&prod(u1, ds(0, 1)), 0);
        let x = match variant {
            TermVariant::Printed => &du[1][1],
            TermVariant::Corrected => &du[0][1],
        };
        cx.map(|i| {
            -(du[1][2][i] * ds(1, 2)[i] + dd[i]) / s2[i] + d_ratio(0, 1, 2, i) * s23[i] / s1[i]
                - (du[1][0][i] * ds(1, 0)[i] + e[i] - x[i] * ds(0, 0)[i] - f[i]) / (s1[i] * s1[i] * s2[i])
                - d_inv_sg(0, i) * p12[i] / s1[i]
        })
    };

    let phi3 = {
        let g = cx.d(&prod(u1, ds(0, 0)), 2);
        let y = match variant {
            TermVariant::Printed => cx.d(&prod(u3, ds(1, 1)), 2),
            TermVariant::Corrected => cx.d(&prod(u2, ds(1, 1)), 2),
        };
        cx.map(|i| {
            let sg = s1[i] * s2[i];
            (du[0][0][i] * ds(0, 2)[i] + g[i]) / (s1[i] * s1[i])
                + d_ratio(1, 0, 0, i) * q13[i] / sg
                + (du[1][1][i] * ds(1, 2)[i] + y[i]) / (s2[i] * s2[i])
                - d_ratio(0, 1, 1, i) * s23[i] / sg
        })
    };

    let w = cx.map(|i| u1[i] * ds(1, 0)[i] + u2[i] * ds(0, 1)[i] + u3[i] * (ds(0, 2)[i] * s2[i] + s1[i] * ds(1, 2)[i]));
    let zeta1 = {
        let t = cx.d(&cx.map(|i| w[i] / (s1[i] * s1[i] * s2[i])), 0);
        cx.map(|i| -du[0][0][i] * d_inv_s2(0, 0, i) - du[1][1][i] * d_inv_sg(0, i) - du[2][2][i] * d_inv_s(0, 0, i) - t[i])
    };
    let zeta2 = {
        let t = cx.d(&cx.map(|i| w[i] / (s2[i] * s2[i] * s1[i])), 1);
        cx.map(|i| -du[0][0][i] * d_inv_sg(1, i) - du[1][1][i] * d_inv_s2(1, 1, i) - du[2][2][i] * d_inv_s(1, 1, i) - t[i])
    };
    let zeta3 = match variant {
        TermVariant::Corrected => {
            let t = cx.d(&cx.map(|i| w[i] / (s1[i] * s2[i])), 2);
            cx.map(|i| -du[0][0][i] * d_inv_s(0, 2, i) - du[1][1][i] * d_inv_s(1, 2, i) - t[i])
        }
        TermVariant::Printed => {
            let t = cx.d(&cx.map(|i| w[i] / (s1[i] * s1[i] * s2[i] * s2[i])), 2);
            cx.map(|i| -du[0][0][i] * d_inv_s(0, 2, i) - du[1][1][i] * d_inv_s2(1, 2, i) - t[i])
        }
    };

    LowerOrderTerms {
        phi: [cx.field(phi1), cx.field(phi2), cx.field(phi3)],
        zeta: [cx.field(zeta1), cx.field(zeta2), cx.field(zeta3)],
    }
}

/// `T̃_j` as second-order principal terms plus `φ_j` (no use of `div u = 0`).
pub fn curlcurl_phi_form(u: &CurvilinearVectorField, variant: TermVariant) -> VectorField {
    let chart = u.chart();
    let n = chart.grid().len();
    let cx = Ctx { u, n };
    let [s1, s2] = chart.sqrt_metric();
    let c = u.frame_components().components();
    let lot = lower_order_terms(u, variant);
    let phi: [&[f64]; 3] = std::array::from_fn(|j| lot.phi[j].values());
    let h = |j: usize, a: usize, b: usize| cx.dd(c[j].values(), a, b);
    let (u1_22, u1_33, u2_12, u3_13) = (h(0, 1, 1), h(0, 2, 2), h(1, 0, 1), h(2, 0, 2));
    let (u2_11, u2_33, u1_12, u3_23) = (h(1, 0, 0), h(1, 2, 2), h(0, 0, 1), h(2, 1, 2));
    let (u3_11, u3_22, u1_13, u2_23) = (h(2, 0, 0), h(2, 1, 1), h(0, 0, 2), h(1, 1, 2));
    let t1 = cx.map(|i| {
        -u1_22[i] / (s2[i] * s2[i]) - u1_33[i] + u2_12[i] / (s1[i] * s2[i]) + u3_13[i] / s1[i] + phi[0][i]
    });
    let t2 = cx.map(|i| {
        -u2_11[i] / (s1[i] * s1[i]) - u2_33[i] + u1_12[i] / (s1[i] * s2[i]) + u3_23[i] / s2[i] + phi[1][i]
    });
    let t3 = cx.map(|i| {
        -u3_11[i] / (s1[i] * s1[i]) - u3_22[i] / (s2[i] * s2[i]) + u1_13[i] / s1[i] + u2_23[i] / s2[i] + phi[2][i]
    });
    VectorField::from_parts(chart.grid(), [t1, t2, t3])
}

/// `T̃_j = -(1/G₁₁)∂₁₁ũ_j - (1/G₂₂)∂₂₂ũ_j - ∂₃₃ũ_j + ζ_j + φ_j`; valid for
/// divergence-free `u`.
pub fn curlcurl_principal_form(u: &CurvilinearVectorField, variant: TermVariant) -> VectorField {
    let chart = u.chart();
    let n = chart.grid().len();
    let cx = Ctx { u, n };
    let [s1, s2] = chart.sqrt_metric();
    let c = u.frame_components().components();
    let lot = lower_order_terms(u, variant);
    let comps: [Vec<f64>; 3] = std::array::from_fn(|j| {
        let v = c[j].values();
        let (a, b, cc) = (cx.dd(v, 0, 0), cx.dd(v, 1, 1), cx.dd(v, 2, 2));
        let (phi, zeta) = (lot.phi[j].values(), lot.zeta[j].values());
        cx.map(|i| -a[i] / (s1[i] * s1[i]) - b[i] / (s2[i] * s2[i]) - cc[i] + zeta[i] + phi[i])
    });
    VectorField::from_parts(chart.grid(), comps)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{build_chart, chart_grid, pushforward, FlatPatch, SpherePatch, SurfacePatch};

    #[test]
    fn flat_and_zero_cases_vanish() {
        let dom = [[-0.5, 0.5], [-0.5, 0.5]];
        let p: Arc<dyn SurfacePatch> = Arc::new(FlatPatch { domain: dom });
        let g = chart_grid(p.as_ref(), 1.0, 7).unwrap();
        let flat = build_chart(p, 1.0, g).unwrap();
        let u = pushforward(|[x, y, z]| [x * y, z.sin(), y * z * z], &flat).unwrap();
        for variant in [TermVariant::Printed, TermVariant::Corrected] {
            let lot = lower_order_terms(&u, variant);
            for f in lot.phi.iter().chain(&lot.zeta) {
                assert_eq!(f.max_abs(), 0.0);
            }
        }
        let p: Arc<dyn SurfacePatch> = Arc::new(SpherePatch::new(2.0, dom));
        let g = chart_grid(p.as_ref(), 1.0, 7).unwrap();
        let sph = build_chart(p, 1.0, g).unwrap();
        let zero = pushforward(|_| [0.0; 3], &sph).unwrap();
        let lot = lower_order_terms(&zero, TermVariant::Corrected);
        for f in lot.phi.iter().chain(&lot.zeta) {
            assert_eq!(f.max_abs(), 0.0);
        }
    }
}
