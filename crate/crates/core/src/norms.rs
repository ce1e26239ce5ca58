//! Discrete space-time norms: `Lq`, `W^{2,1}_q`, parabolic Hölder norms, the
//! Sobolev exponent chain and the Schauder estimate ratio.
//!
//! Space-time integrals use trapezoid weights in every direction, restricted to
//! the nodes of a [`Mask`]. Derivatives come from full-grid differences and are
//! then restricted, so nodes at the mask edge see their outside neighbours.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffops::StencilPolicy;
use crate::error::{Error, Result};
use crate::fields::{GridSpec, Mask, VectorField};
use crate::solver::SolutionSeries;
use crate::system::ProblemSpec;

/// Largest point count for which Hölder seminorms use every pair.
pub const ALL_PAIRS_LIMIT: usize = 20_000;
pub const PAIR_WINDOW: usize = 8;
pub const RANDOM_PAIRS: usize = 20_000;
/// Seed of the random pairs in the sampled regime.
pub const DEFAULT_PAIR_SEED: u64 = 0x005e_ed0f_c0de;

/// Borrowed space-time samples on a uniform time grid.
#[derive(Clone, Copy, Debug)]
pub struct SpaceTime<'a> {
    pub times: &'a [f64],
    pub fields: &'a [VectorField],
}

impl<'a> SpaceTime<'a> {
    pub fn new(times: &'a [f64], fields: &'a [VectorField]) -> Result<Self> {
        if times.is_empty() || times.len() != fields.len() {
            return Err(Error::InvalidArgument(format!("{} times for {} fields", times.len(), fields.len())));
        }
        for f in &fields[1..] {
            crate::fields::same_grid(f.grid(), fields[0].grid())?;
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("times must increase".into()));
        }
        Ok(Self { times, fields })
    }

    pub fn from_series(series: &'a SolutionSeries) -> Result<Self> {
        Self::new(&series.times, &series.snapshots)
    }

    pub fn grid(&self) -> &GridSpec {
        self.fields[0].grid()
    }

    fn time_weights(&self) -> Vec<f64> {
        let t = self.times;
        let n = t.len();
        if n == 1 {
            return vec![1.0];
        }
        (0..n)
            .map(|i| {
                let left = if i > 0 { t[i] - t[i - 1] } else { 0.0 };
                let right = if i + 1 < n { t[i + 1] - t[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// `∂ₜu` at level `i`: centered inside, second-order one-sided at the ends.
    fn time_derivative(&self, i: usize) -> VectorField {
        let n = self.times.len();
        let grid = self.grid();
        let f = self.fields;
        let t = self.times;
        if n == 1 {
            return VectorField::zeros(grid);
        }
        if n == 2 {
            let h = t[1] - t[0];
            return f[1].lin_comb(1.0 / h, &f[0], -1.0 / h).expect("same grid");
        }
        let (a, b, c, w) = if i == 0 {
            (0, 1, 2, [-3.0, 4.0, -1.0])
        } else if i + 1 == n {
            (n - 3, n - 2, n - 1, [1.0, -4.0, 3.0])
        } else {
            (i - 1, i, i + 1, [-1.0, 0.0, 1.0])
        };
        let h = 0.5 * (t[c] - t[a]);
        let comps: [Vec<f64>; 3] = std::array::from_fn(|k| {
            let (x, y, z) = (f[a].component(k).values(), f[b].component(k).values(), f[c].component(k).values());
            (0..grid.len()).map(|m| (w[0] * x[m] + w[1] * y[m] + w[2] * z[m]) / (2.0 * h)).collect()
        });
        VectorField::from_parts(grid, comps)
    }
}

/// Exponent of an `Lq` norm; `q = ∞` is the max.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(q: f64) -> Result<Self> {
        if q == f64::INFINITY {
            Ok(Self::Infinity)
        } else if q >= 1.0 && q.is_finite() {
            Ok(Self::Finite(q))
        } else {
            Err(Error::InvalidArgument(format!("Lq exponent must be ≥ 1, got {q}")))
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(q) => write!(f, "{q}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

fn trapezoid(i: usize, n: usize) -> f64 {
    if n > 1 && (i == 0 || i + 1 == n) {
        0.5
    } else {
        1.0
    }
}

fn space_weights(grid: &GridSpec, mask: &Mask) -> Vec<(usize, f64)> {
    let [nx, ny, nz] = grid.counts();
    let [hx, hy, hz] = grid.spacing();
    let cell = hx * hy * hz;
    mask.indices()
        .map(|idx| {
            let [i, j, k] = grid.ijk(idx);
            (idx, cell * trapezoid(i, nx) * trapezoid(j, ny) * trapezoid(k, nz))
        })
        .collect()
}

/// Accumulates `Σ w |v|^q` with `|v|` the Euclidean norm of the node values.
struct LqAccumulator {
    q: Exponent,
    sum: f64,
}

impl LqAccumulator {
    fn new(q: Exponent) -> Self {
        Self { q, sum: 0.0 }
    }

    fn add(&mut self, weight: f64, norm: f64) {
        match self.q {
            Exponent::Infinity => self.sum = self.sum.max(norm),
            Exponent::Finite(q) => self.sum += weight * norm.powf(q),
        }
    }

    fn finish(&self) -> f64 {
        match self.q {
            Exponent::Infinity => self.sum,
            Exponent::Finite(q) => self.sum.powf(1.0 / q),
        }
    }
}

fn node_norm(fields: &[&[f64]], idx: usize) -> f64 {
    fields.iter().map(|v| v[idx] * v[idx]).sum::<f64>().sqrt()
}

/// `Lq` norm of the per-level node vectors produced by `level`.
fn lq_levels(st: &SpaceTime, q: Exponent, mask: &Mask, level: impl Fn(usize) -> Vec<Vec<f64>>) -> f64 {
    let sw = space_weights(st.grid(), mask);
    let tw = st.time_weights();
    let mut acc = LqAccumulator::new(q);
    for (n, wt) in tw.iter().enumerate() {
        let comps = level(n);
        let slices: Vec<&[f64]> = comps.iter().map(|v| v.as_slice()).collect();
        for &(idx, ws) in &sw {
            acc.add(ws * wt, node_norm(&slices, idx));
        }
    }
    acc.finish()
}

/// `Lq` norm of a static field over the mask.
pub fn lq_norm_field(u: &VectorField, q: f64, mask: &Mask) -> Result<f64> {
    mask_grid_check(u.grid(), mask)?;
    let q = Exponent::new(q)?;
    let comps: Vec<&[f64]> = (0..3).map(|c| u.component(c).values()).collect();
    let mut acc = LqAccumulator::new(q);
    for (idx, w) in space_weights(u.grid(), mask) {
        acc.add(w, node_norm(&comps, idx));
    }
    Ok(acc.finish())
}

fn mask_grid_check<'g>(grid: &'g GridSpec, mask: &Mask) -> Result<&'g GridSpec> {
    if mask.len() != grid.len() {
        return Err(Error::GridMismatch(format!("mask has {} nodes, grid {}", mask.len(), grid.len())));
    }
    Ok(grid)
}

/// Space-time `Lq` norm over `mask × [t₀, T]`.
pub fn lq_norm(st: &SpaceTime, q: f64, mask: &Mask) -> Result<f64> {
    mask_grid_check(st.grid(), mask)?;
    let q = Exponent::new(q)?;
    Ok(lq_levels(st, q, mask, |n| components(&st.fields[n])))
}

fn gradient_components(pol: &StencilPolicy, u: &VectorField) -> Vec<Vec<f64>> {
    (0..3).flat_map(|c| (0..3).map(move |a| (c, a))).map(|(c, a)| pol.partial(u.component(c), a).into_values()).collect()
}

fn hessian_components(pol: &StencilPolicy, u: &VectorField) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(27);
    for c in 0..3 {
        let h = pol.hessian(u.component(c));
        for row in h {
            for e in row {
                out.push(e.into_values());
            }
        }
    }
    out
}

fn components(u: &VectorField) -> Vec<Vec<f64>> {
    (0..3).map(|c| u.component(c).values().to_vec()).collect()
}

/// Parts of the `W^{2,1}_q` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct W21q {
    pub u: f64,
    pub grad: f64,
    pub hessian: f64,
    pub time: f64,
    pub total: f64,
}

pub fn w21q_norm(st: &SpaceTime, q: f64, mask: &Mask) -> Result<W21q> {
    mask_grid_check(st.grid(), mask)?;
    let q = Exponent::new(q)?;
    let pol = StencilPolicy::default();
    let parts = [
        lq_levels(st, q, mask, |n| components(&st.fields[n])),
        lq_levels(st, q, mask, |n| gradient_components(&pol, &st.fields[n])),
        lq_levels(st, q, mask, |n| hessian_components(&pol, &st.fields[n])),
        lq_levels(st, q, mask, |n| components(&st.time_derivative(n))),
    ];
    Ok(W21q { u: parts[0], grad: parts[1], hessian: parts[2], time: parts[3], total: parts.iter().sum() })
}

/// Space-time sample points of a mask: `(node, level)` with coordinates.
struct Points {
    node: Vec<usize>,
    level: Vec<usize>,
    coord: Vec<[f64; 4]>,
    /// Point id by `(level, node)`; `usize::MAX` outside the mask.
    lookup: Vec<usize>,
}

impl Points {
    fn new(grid: &GridSpec, times: &[f64], mask: &Mask) -> Self {
        let n = grid.len();
        let mut lookup = vec![usize::MAX; n * times.len()];
        let (mut node, mut level, mut coord) = (Vec::new(), Vec::new(), Vec::new());
        for (l, &t) in times.iter().enumerate() {
            for idx in mask.indices() {
                let [x, y, z] = grid.point_at(idx);
                lookup[l * n + idx] = node.len();
                node.push(idx);
                level.push(l);
                coord.push([x, y, z, t]);
            }
        }
        Self { node, level, coord, lookup }
    }

    fn len(&self) -> usize {
        self.node.len()
    }
}

/// Pairs `(i, j)` of point ids over which Hölder quotients are maximized.
fn pair_set(points: &Points, grid: &GridSpec, levels: usize, seed: u64) -> (Vec<(u32, u32)>, bool) {
    let n = points.len();
    if n <= ALL_PAIRS_LIMIT {
        let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i as u32, j as u32));
            }
        }
        return (pairs, true);
    }
    let counts = grid.counts();
    let nodes = grid.len();
    let mut pairs = Vec::new();
    for p in 0..n {
        let idx = points.node[p];
        let ijk = grid.ijk(idx);
        let l = points.level[p];
        for axis in 0..4 {
            for off in 1..=PAIR_WINDOW {
                let target = if axis < 3 {
                    if ijk[axis] + off >= counts[axis] {
                        break;
                    }
                    l * nodes + idx + off * grid.stride(axis)
                } else {
                    if l + off >= levels {
                        break;
                    }
                    (l + off) * nodes + idx
                };
                let q = points.lookup[target];
                if q != usize::MAX {
                    pairs.push((p as u32, q as u32));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_PAIRS {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            pairs.push((a as u32, b as u32));
        }
    }
    (pairs, false)
}

/// Values `features[f][point]`; a point's feature vector is `features[..][p]`.
struct Features(Vec<Vec<f64>>);

impl Features {
    fn gather(points: &Points, levels: usize, level: impl Fn(usize) -> Vec<Vec<f64>>) -> Self {
        let mut out: Vec<Vec<f64>> = Vec::new();
        let per_level = points.len() / levels;
        for l in 0..levels {
            let comps = level(l);
            if out.is_empty() {
                out = vec![Vec::with_capacity(points.len()); comps.len()];
            }
            for (o, c) in out.iter_mut().zip(&comps) {
                o.extend(points.node[l * per_level..(l + 1) * per_level].iter().map(|&idx| c[idx]));
            }
        }
        Self(out)
    }

    fn sup(&self) -> f64 {
        let n = self.0.first().map_or(0, |v| v.len());
        (0..n).map(|p| self.0.iter().map(|v| v[p] * v[p]).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    fn diff(&self, a: usize, b: usize) -> f64 {
        self.0.iter().map(|v| (v[a] - v[b]) * (v[a] - v[b])).sum::<f64>().sqrt()
    }
}

fn parabolic_distance(a: &[f64; 4], b: &[f64; 4], alpha: f64) -> f64 {
    let dx = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2);
    let dt = (a[3] - b[3]).abs();
    let space = if dx > 0.0 { dx.powf(0.5 * alpha) } else { 0.0 };
    let time = if dt > 0.0 { dt.powf(0.5 * alpha) } else { 0.0 };
    space + time
}

fn seminorm(points: &Points, pairs: &[(u32, u32)], feats: &[&Features], alpha: f64) -> Vec<f64> {
    let mut out = vec![0.0f64; feats.len()];
    for &(a, b) in pairs {
        let (a, b) = (a as usize, b as usize);
        let d = parabolic_distance(&points.coord[a], &points.coord[b], alpha);
        if d == 0.0 {
            continue;
        }
        for (o, f) in out.iter_mut().zip(feats) {
            *o = o.max(f.diff(a, b) / d);
        }
    }
    out
}

/// Time Hölder quotient at fixed nodes, `|u(t) - u(s)| / |t - s|^γ`.
fn time_seminorm(points: &Points, f: &Features, gamma: f64, levels: usize, nodes: usize) -> f64 {
    let mut best: f64 = 0.0;
    let per_level = points.len() / levels.max(1);
    for p in 0..per_level {
        let idx = points.node[p];
        for l in 0..levels {
            for m in l + 1..levels {
                let (a, b) = (points.lookup[l * nodes + idx], points.lookup[m * nodes + idx]);
                let dt = (points.coord[b][3] - points.coord[a][3]).abs();
                best = best.max(f.diff(a, b) / dt.powf(gamma));
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderNorm {
    pub alpha: f64,
    pub order: u8,
    /// Named sup and seminorm parts.
    pub parts: BTreeMap<String, f64>,
    pub total: f64,
    /// Whether every pair of points was used.
    pub exact_pairs: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Parabolic Hölder norm of order 0, 1 or 2 over `mask × times`:
///
/// - order 0: `sup|u| + [u]`
/// - order 1: adds `sup|∇u| + [∇u]` and the `(1+α)/2` time quotient of `u`
/// - order 2: adds `sup|∇²u| + sup|∂ₜu| + [∇²u] + [∂ₜu]`
///
/// where `[v] = sup |v(P) - v(Q)| / (|x - y|^α + |t - s|^{α/2})`.
pub fn holder_parabolic(st: &SpaceTime, alpha: f64, order: u8, mask: &Mask) -> Result<HolderNorm> {
    holder_parabolic_seeded(st, alpha, order, mask, DEFAULT_PAIR_SEED)
}

/// [`holder_parabolic`] with an explicit seed for the sampled pairs.
pub fn holder_parabolic_seeded(st: &SpaceTime, alpha: f64, order: u8, mask: &Mask, seed: u64) -> Result<HolderNorm> {
    check_alpha(alpha)?;
    if order > 2 {
        return Err(Error::InvalidArgument(format!("Hölder order must be 0, 1 or 2, got {order}")));
    }
    mask_grid_check(st.grid(), mask)?;
    let grid = st.grid();
    let pol = StencilPolicy::default();
    let points = Points::new(grid, st.times, mask);
    let levels = st.times.len();
    let (pairs, exact_pairs) = pair_set(&points, grid, levels, seed);

    let mut named: Vec<(&str, Features)> = vec![("u", Features::gather(&points, levels, |n| components(&st.fields[n])))];
    if order >= 1 {
        named.push(("grad", Features::gather(&points, levels, |n| gradient_components(&pol, &st.fields[n]))));
    }
    if order >= 2 {
        named.push(("hessian", Features::gather(&points, levels, |n| hessian_components(&pol, &st.fields[n]))));
        named.push(("dt", Features::gather(&points, levels, |n| components(&st.time_derivative(n)))));
    }
    let feats: Vec<&Features> = named.iter().map(|(_, f)| f).collect();
    let semis = seminorm(&points, &pairs, &feats, alpha);
    let mut parts = BTreeMap::new();
    for ((name, f), s) in named.iter().zip(&semis) {
        parts.insert(format!("sup.{name}"), f.sup());
        parts.insert(format!("semi.{name}"), *s);
    }
    if order >= 1 {
        let gamma = 0.5 * (1.0 + alpha);
        parts.insert("time.u".to_string(), time_seminorm(&points, &named[0].1, gamma, levels, grid.len()));
    }
    let total = parts.values().sum();
    Ok(HolderNorm { alpha, order, parts, total, exact_pairs })
}

/// Spatial `C^{k+α}` norm of a static field (sup norms of derivatives up to
/// order `k` plus their `α` seminorms).
pub fn holder_static(u: &VectorField, alpha: f64, order: u8, mask: &Mask) -> Result<HolderNorm> {
    check_alpha(alpha)?;
    if order > 2 {
        return Err(Error::InvalidArgument(format!("Hölder order must be 0, 1 or 2, got {order}")));
    }
    let times = [0.0];
    mask_grid_check(u.grid(), mask)?;
    let pol = StencilPolicy::default();
    let points = Points::new(u.grid(), &times, mask);
    let (pairs, exact_pairs) = pair_set(&points, u.grid(), 1, DEFAULT_PAIR_SEED);
    let mut named: Vec<(&str, Features)> = vec![("u", Features::gather(&points, 1, |_| components(u)))];
    if order >= 1 {
        named.push(("grad", Features::gather(&points, 1, |_| gradient_components(&pol, u))));
    }
    if order >= 2 {
        named.push(("hessian", Features::gather(&points, 1, |_| hessian_components(&pol, u))));
    }
    let feats: Vec<&Features> = named.iter().map(|(_, f)| f).collect();
    let semis = seminorm(&points, &pairs, &feats, alpha);
    let mut parts = BTreeMap::new();
    for ((name, f), s) in named.iter().zip(&semis) {
        parts.insert(format!("sup.{name}"), f.sup());
        parts.insert(format!("semi.{name}"), *s);
    }
    let total = parts.values().sum();
    Ok(HolderNorm { alpha, order, parts, total, exact_pairs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    Sobolev,
    /// Hölder continuity for every `α < alpha_max`.
    Holder { alpha_max: f64 },
    /// `p = 5`: the map `5p/(5 - p)` is undefined and no Hölder exponent is
    /// available.
    Borderline,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub p: f64,
    pub regime: Regime,
}

fn regime(p: f64) -> Regime {
    if p < 5.0 {
        Regime::Sobolev
    } else if p == 5.0 {
        Regime::Borderline
    } else {
        Regime::Holder { alpha_max: 1.0 - 5.0 / p }
    }
}

/// Parabolic embedding chain `p ↦ 5p/(5 - p)` in space-time dimension 5,
/// starting at `p0` and applying at most `steps` maps. Stops once `p ≥ 5`.
pub fn sobolev_chain(p0: f64, steps: usize) -> Result<Vec<ChainEntry>> {
    if !(p0 >= 1.0 && p0.is_finite()) {
        return Err(Error::InvalidArgument(format!("chain start must be ≥ 1, got {p0}")));
    }
    let mut out = vec![ChainEntry { p: p0, regime: regime(p0) }];
    let mut p = p0;
    for _ in 0..steps {
        if p >= 5.0 {
            break;
        }
        p = 5.0 * p / (5.0 - p);
        out.push(ChainEntry { p, regime: regime(p) });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRatio {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// `0/0` was reported as zero.
    pub degenerate: bool,
    pub rhs_parts: BTreeMap<String, f64>,
}

/// `‖u‖_{C^{2+α,1+α/2}(Q_R)}` divided by
/// `‖f‖_{C^{α,α/2}(Q_R₀)} + ‖u‖_{L²(Q_R₀)} + ‖∇u‖_{L²(Q_R₀)} + ‖u⁰‖_{C^{2+α}(B_R₀)}`.
pub fn estimate_ratio(st: &SpaceTime, p: &ProblemSpec, alpha: f64, r: f64, r0: f64) -> Result<EstimateRatio> {
    check_alpha(alpha)?;
    if !(r > 0.0 && r < r0) {
        return Err(Error::InvalidArgument(format!("need 0 < R < R₀, got R = {r}, R₀ = {r0}")));
    }
    let grid = st.grid();
    let inner = Mask::half_ball(grid, r)?;
    let outer = Mask::half_ball(grid, r0)?;
    let lhs = holder_parabolic(st, alpha, 2, &inner)?.total;

    let forcing: Vec<VectorField> = st.times.iter().map(|&t| p.sample_f(t)).collect::<Result<_>>()?;
    let fst = SpaceTime::new(st.times, &forcing)?;
    let f_norm = holder_parabolic(&fst, alpha, 0, &outer)?.total;
    let u_l2 = lq_norm(st, 2.0, &outer)?;
    let pol = StencilPolicy::default();
    let grad_l2 = lq_levels(st, Exponent::Finite(2.0), &outer, |n| gradient_components(&pol, &st.fields[n]));
    let u0_norm = holder_static(&st.fields[0], alpha, 2, &outer)?.total;
    let mut rhs_parts = BTreeMap::new();
    rhs_parts.insert("f.holder".to_string(), f_norm);
    rhs_parts.insert("u.l2".to_string(), u_l2);
    rhs_parts.insert("grad_u.l2".to_string(), grad_l2);
    rhs_parts.insert("u0.holder".to_string(), u0_norm);
    let rhs: f64 = rhs_parts.values().sum();
    let (ratio, degenerate) = if rhs == 0.0 { (0.0, lhs == 0.0) } else { (lhs / rhs, false) };
    if rhs == 0.0 && lhs != 0.0 {
        return Err(Error::InvalidArgument(format!("estimate ratio undefined: lhs = {lhs:e} with zero data")));
    }
    Ok(EstimateRatio { lhs, rhs, ratio, degenerate, rhs_parts })
}

/// Named norm values with a region descriptor, serialized with fixed keys
/// such as `lq.2`, `w21q.10`, `holder.0.5.c2a`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    /// `None` for the whole grid.
    pub radius: Option<f64>,
    pub t_start: f64,
    pub t_end: f64,
    pub values: BTreeMap<String, f64>,
}

impl NormReport {
    pub fn compute(st: &SpaceTime, mask: &Mask, qs: &[f64], alphas: &[f64]) -> Result<Self> {
        Self::compute_seeded(st, mask, qs, alphas, DEFAULT_PAIR_SEED)
    }

    pub fn compute_seeded(st: &SpaceTime, mask: &Mask, qs: &[f64], alphas: &[f64], seed: u64) -> Result<Self> {
        let mut values = BTreeMap::new();
        for &q in qs {
            let e = Exponent::new(q)?;
            values.insert(format!("lq.{e}"), lq_norm(st, q, mask)?);
            values.insert(format!("w21q.{e}"), w21q_norm(st, q, mask)?.total);
        }
        for &a in alphas {
            for (order, tag) in [(0u8, "ca"), (1, "c1a"), (2, "c2a")] {
                values.insert(format!("holder.{a}.{tag}"), holder_parabolic_seeded(st, a, order, mask, seed)?.total);
            }
        }
        let radius = Some(mask.radius()).filter(|r| r.is_finite());
        Ok(Self { radius, t_start: st.times[0], t_end: *st.times.last().expect("non-empty"), values })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_from_two() {
        let c = sobolev_chain(2.0, 10).unwrap();
        assert_eq!(c.len(), 3);
        assert!((c[1].p - 10.0 / 3.0).abs() < 1e-14);
        assert!((c[2].p - 10.0).abs() < 1e-12);
        match c[2].regime {
            Regime::Holder { alpha_max } => assert!((alpha_max - 0.5).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chain_borderline_and_errors() {
        let c = sobolev_chain(2.5, 5).unwrap();
        assert_eq!(c[1].p, 5.0);
        assert_eq!(c[1].regime, Regime::Borderline);
        assert_eq!(c.len(), 2);
        assert!(sobolev_chain(0.5, 3).is_err());
    }

    #[test]
    fn exponent_display() {
        assert_eq!(Exponent::new(2.0).unwrap().to_string(), "2");
        assert_eq!(Exponent::new(f64::INFINITY).unwrap().to_string(), "inf");
        assert!(Exponent::new(0.5).is_err());
    }
}
