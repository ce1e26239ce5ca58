//! Uniform box grids over the half-space model domain and the fields sampled on them.
//!
//! Node storage is row-major with `x` fastest, then `y`, then `z`:
//! `index(i, j, k) = i + nx * (j + ny * k)`. The face `z = z0` is the flat
//! boundary Σ; every other face is an outer face.
//!
//! Sign convention (used everywhere in the crate): the domain lies in `z > 0`,
//! so the unit outer normal on Σ is `ν = (0, 0, -1)` and `∂/∂ν = -∂/∂z`.

mod snapshot;

pub use snapshot::{read_snapshot, write_snapshot, Snapshot};

use crate::error::{Error, Result};

/// Minimum node count per axis: room for centered and one-sided second-order stencils.
pub const MIN_NODES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    FlatSigma,
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Face {
    pub const ALL: [Face; 6] = [Face::XMin, Face::XMax, Face::YMin, Face::YMax, Face::ZMin, Face::ZMax];
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    extents: [[f64; 2]; 3],
    counts: [usize; 3],
    spacing: [f64; 3],
}

impl GridSpec {
    /// Builds a grid over `extents` with `counts` nodes per axis. The third
    /// extent must start at `z = 0`, which is the flat boundary Σ.
    pub fn new(extents: [[f64; 2]; 3], counts: [usize; 3]) -> Result<Self> {
        for axis in 0..3 {
            let [lo, hi] = extents[axis];
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidGrid(format!("axis {axis}: extent [{lo}, {hi}] is empty or non-finite")));
            }
            if counts[axis] < MIN_NODES {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: {} nodes, need at least {MIN_NODES}",
                    counts[axis]
                )));
            }
        }
        if extents[2][0] != 0.0 {
            return Err(Error::InvalidGrid(format!("z extent must start at 0 (flat boundary), got {}", extents[2][0])));
        }
        let spacing = std::array::from_fn(|a| (extents[a][1] - extents[a][0]) / (counts[a] - 1) as f64);
        Ok(Self { extents, counts, spacing })
    }

    /// `[0,1]^3` with `n` nodes per axis.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new([[0.0, 1.0]; 3], [n; 3])
    }

    /// `[-half_width, half_width]^2 x [0, depth]` with `n` nodes per axis; the
    /// origin sits on Σ so centered half-balls fit inside.
    pub fn half_space(n: usize, half_width: f64, depth: f64) -> Result<Self> {
        Self::new([[-half_width, half_width], [-half_width, half_width], [0.0, depth]], [n; 3])
    }

    pub fn extents(&self) -> [[f64; 2]; 3] {
        self.extents
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn boundary_tag(&self, face: Face) -> BoundaryTag {
        match face {
            Face::ZMin => BoundaryTag::FlatSigma,
            _ => BoundaryTag::Outer,
        }
    }

    /// Stride of one step along `axis` in the flat node array.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.counts[0],
            _ => self.counts[0] * self.counts[1],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.counts[0] * (j + self.counts[1] * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let nx = self.counts[0];
        let ny = self.counts[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.extents[axis][0] + i as f64 * self.spacing[axis]
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.coord(0, i), self.coord(1, j), self.coord(2, k)]
    }

    #[inline]
    pub fn point_at(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.ijk(idx);
        self.point(i, j, k)
    }

    /// True when the node lies on no face of the box.
    #[inline]
    pub fn is_interior(&self, idx: usize) -> bool {
        let ijk = self.ijk(idx);
        (0..3).all(|a| ijk[a] > 0 && ijk[a] + 1 < self.counts[a])
    }

    /// True when the node is at least `margin` nodes away from every face.
    #[inline]
    pub fn is_deep_interior(&self, idx: usize, margin: usize) -> bool {
        let ijk = self.ijk(idx);
        (0..3).all(|a| ijk[a] >= margin && ijk[a] + margin < self.counts[a])
    }

    /// Largest distance from the origin to any grid node.
    pub fn max_radius(&self) -> f64 {
        let mut r2: f64 = 0.0;
        for &x in &self.extents[0] {
            for &y in &self.extents[1] {
                for &z in &self.extents[2] {
                    r2 = r2.max(x * x + y * y + z * z);
                }
            }
        }
        r2.sqrt()
    }

    /// Same box with `(n - 1) * factor + 1` nodes per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.extents, self.counts.map(|n| (n - 1) * factor + 1))
    }
}

fn check_finite(grid: &GridSpec, values: &[f64]) -> Result<()> {
    if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
        let [i, j, k] = grid.ijk(idx);
        return Err(Error::NonFinite { i, j, k, value: values[idx] });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        check_finite(&grid, &values)?;
        Ok(Self { grid, values })
    }

    /// Operator outputs built from finite inputs skip the finiteness scan.
    pub(crate) fn from_parts(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { values: vec![0.0; grid.len()], grid: grid.clone() }
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![value; grid.len()])
    }

    /// Evaluates `f` at every node; a non-finite sample is reported with its node.
    pub fn sample(grid: &GridSpec, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.len()).map(|idx| f(grid.point_at(idx))).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &ScalarField, beta: f64) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(Self::from_parts(self.grid.clone(), values))
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        same_grid(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self::from_parts(self.grid.clone(), values))
    }

    /// Restriction to the `z = 0` layer.
    pub fn sigma_trace(&self) -> SurfaceField {
        let [nx, ny, _] = self.grid.counts;
        SurfaceField { counts: [nx, ny], values: self.values[..nx * ny].to_vec() }
    }
}

pub(crate) fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.counts, b.counts)));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comps: [ScalarField; 3],
}

impl VectorField {
    pub fn new(comps: [ScalarField; 3]) -> Result<Self> {
        same_grid(comps[0].grid(), comps[1].grid())?;
        same_grid(comps[0].grid(), comps[2].grid())?;
        Ok(Self { comps })
    }

    pub(crate) fn from_parts(grid: &GridSpec, values: [Vec<f64>; 3]) -> Self {
        let [a, b, c] = values;
        Self {
            comps: [
                ScalarField::from_parts(grid.clone(), a),
                ScalarField::from_parts(grid.clone(), b),
                ScalarField::from_parts(grid.clone(), c),
            ],
        }
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self { comps: std::array::from_fn(|_| ScalarField::zeros(grid)) }
    }

    pub fn sample(grid: &GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self> {
        let mut values: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(grid.len()));
        for idx in 0..grid.len() {
            let v = f(grid.point_at(idx));
            for c in 0..3 {
                values[c].push(v[c]);
            }
        }
        for vals in &values {
            check_finite(grid, vals)?;
        }
        Ok(Self::from_parts(grid, values))
    }

    pub fn grid(&self) -> &GridSpec {
        self.comps[0].grid()
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        &self.comps[c]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.comps
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.comps[0].values[idx], self.comps[1].values[idx], self.comps[2].values[idx]]
    }

    /// Largest pointwise Euclidean length.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid().len())
            .map(|idx| {
                let v = self.at(idx);
                (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    pub fn lin_comb(&self, alpha: f64, other: &VectorField, beta: f64) -> Result<Self> {
        let [a, b, c] = std::array::from_fn(|i| self.comps[i].lin_comb(alpha, &other.comps[i], beta));
        Self::new([a?, b?, c?])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { comps: std::array::from_fn(|c| self.comps[c].map(|v| s * v)) }
    }

    pub fn write_snapshot(&self, w: impl std::io::Write) -> Result<()> {
        write_snapshot(w, self.grid(), &[self.comps[0].values(), self.comps[1].values(), self.comps[2].values()])
    }

    pub fn read_snapshot(r: impl std::io::Read) -> Result<Self> {
        let snap = read_snapshot(r)?;
        if snap.components.len() != 3 {
            return Err(Error::Snapshot(format!("expected 3 components, found {}", snap.components.len())));
        }
        let mut it = snap.components.into_iter();
        let comps = std::array::from_fn(|_| ScalarField::new(snap.grid.clone(), it.next().unwrap()));
        let [a, b, c] = comps;
        Self::new([a?, b?, c?])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    entries: [[ScalarField; 3]; 3],
}

impl MatrixField {
    pub fn new(entries: [[ScalarField; 3]; 3]) -> Result<Self> {
        for row in &entries {
            for e in row {
                same_grid(entries[0][0].grid(), e.grid())?;
            }
        }
        Ok(Self { entries })
    }

    pub fn sample(grid: &GridSpec, f: impl Fn([f64; 3]) -> [[f64; 3]; 3]) -> Result<Self> {
        let mut values: [[Vec<f64>; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| Vec::with_capacity(grid.len())));
        for idx in 0..grid.len() {
            let m = f(grid.point_at(idx));
            for r in 0..3 {
                for c in 0..3 {
                    values[r][c].push(m[r][c]);
                }
            }
        }
        let mut rows = values.into_iter();
        let entries: [[Result<ScalarField>; 3]; 3] = std::array::from_fn(|_| {
            let mut cols = rows.next().unwrap().into_iter();
            std::array::from_fn(|_| ScalarField::new(grid.clone(), cols.next().unwrap()))
        });
        let mut out: Vec<Vec<ScalarField>> = Vec::with_capacity(3);
        for row in entries {
            out.push(row.into_iter().collect::<Result<Vec<_>>>()?);
        }
        let entries = std::array::from_fn(|r| std::array::from_fn(|c| out[r][c].clone()));
        Ok(Self { entries })
    }

    pub fn identity(grid: &GridSpec) -> Self {
        Self::constant(grid, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn constant(grid: &GridSpec, m: [[f64; 3]; 3]) -> Self {
        Self {
            entries: std::array::from_fn(|r| {
                std::array::from_fn(|c| ScalarField::from_parts(grid.clone(), vec![m[r][c]; grid.len()]))
            }),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.entries[0][0].grid()
    }

    pub fn entry(&self, r: usize, c: usize) -> &ScalarField {
        &self.entries[r][c]
    }

    pub fn at(&self, idx: usize) -> [[f64; 3]; 3] {
        std::array::from_fn(|r| std::array::from_fn(|c| self.entries[r][c].values[idx]))
    }

    /// Largest absolute row sum over all nodes (the induced ∞-norm bound).
    pub fn max_row_sum(&self) -> f64 {
        (0..self.grid().len())
            .map(|idx| {
                let m = self.at(idx);
                m.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Values on the `z = 0` face, `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceField {
    counts: [usize; 2],
    values: Vec<f64>,
}

impl SurfaceField {
    pub fn new(counts: [usize; 2], values: Vec<f64>) -> Result<Self> {
        if values.len() != counts[0] * counts[1] {
            return Err(Error::GridMismatch(format!("{} values for a {}x{} surface", values.len(), counts[0], counts[1])));
        }
        Ok(Self { counts, values })
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i + self.counts[0] * j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute value over nodes not on the outer edge of Σ.
    pub fn max_abs_interior(&self) -> f64 {
        let [nx, ny] = self.counts;
        let mut m: f64 = 0.0;
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }
}

/// Boolean node mask for the half-ball `B_R^+ = {|x| <= R, z >= 0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    radius: f64,
    inside: Vec<bool>,
}

impl Mask {
    pub fn half_ball(grid: &GridSpec, radius: f64) -> Result<Self> {
        let max = grid.max_radius();
        if !(radius > 0.0 && radius.is_finite() && radius <= max * (1.0 + 1e-12)) {
            return Err(Error::RadiusOutOfRange { radius, max });
        }
        let r2 = radius * radius;
        let inside = (0..grid.len())
            .map(|idx| {
                let [x, y, z] = grid.point_at(idx);
                x * x + y * y + z * z <= r2 * (1.0 + 1e-12)
            })
            .collect();
        Ok(Self { radius, inside })
    }

    /// Mask selecting every node.
    pub fn full(grid: &GridSpec) -> Self {
        Self { radius: f64::INFINITY, inside: vec![true; grid.len()] }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn len(&self) -> usize {
        self.inside.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inside.is_empty()
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.inside.iter().zip(&other.inside).all(|(&a, &b)| !a || b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }
}

/// Returns the field together with the half-ball mask of the given radius.
pub fn subgrid_restrict(field: &VectorField, radius: f64) -> Result<(VectorField, Mask)> {
    let mask = Mask::half_ball(field.grid(), radius)?;
    Ok((field.clone(), mask))
}

/// Traces of a vector field on Σ.
#[derive(Clone, Debug)]
pub struct BoundaryTrace {
    /// `(u1, u2)` at `z = 0`.
    pub tangential: [SurfaceField; 2],
    /// `u3` at `z = 0`.
    pub normal: SurfaceField,
    /// `∂u3/∂ν = -∂u3/∂z` at `z = 0`, one-sided second order.
    pub normal_derivative: SurfaceField,
}

pub fn boundary_trace(u: &VectorField) -> Result<BoundaryTrace> {
    let grid = u.grid();
    let [nx, ny, nz] = grid.counts();
    if nz < 3 {
        return Err(Error::StencilTooThin { axis: 2, needed: 3, got: nz });
    }
    let hz = grid.spacing()[2];
    let u3 = u.component(2).values();
    let layer = nx * ny;
    let normal_derivative = (0..layer).map(|p| -(-3.0 * u3[p] + 4.0 * u3[p + layer] - u3[p + 2 * layer]) / (2.0 * hz)).collect();
    Ok(BoundaryTrace {
        tangential: [u.component(0).sigma_trace(), u.component(1).sigma_trace()],
        normal: u.component(2).sigma_trace(),
        normal_derivative: SurfaceField { counts: [nx, ny], values: normal_derivative },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = GridSpec::new([[0.0, 2.0], [-1.0, 1.0], [0.0, 0.5]], [5, 9, 6]).unwrap();
        assert_eq!(g.spacing(), [0.5, 0.25, 0.1]);
        assert_eq!(g.boundary_tag(Face::ZMin), BoundaryTag::FlatSigma);
        let sigma_faces = Face::ALL.iter().filter(|&&f| g.boundary_tag(f) == BoundaryTag::FlatSigma).count();
        assert_eq!(sigma_faces, 1);
        assert!(GridSpec::new([[0.0, 1.0]; 3], [3, 4, 4]).is_err());
        assert!(GridSpec::new([[0.0, 1.0], [0.0, 1.0], [0.5, 1.0]], [4; 3]).is_err());
        let idx = g.index(3, 7, 2);
        assert_eq!(g.ijk(idx), [3, 7, 2]);
    }

    #[test]
    fn sample_zero_and_affine() {
        let g = GridSpec::unit(5).unwrap();
        let zero = VectorField::sample(&g, |_| [0.0; 3]).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let s = ScalarField::sample(&g, |[x, y, z]| x + y + z).unwrap();
        assert_eq!(s.get(0, 0, 0), 0.0);
        assert_eq!(s.get(4, 4, 4), 3.0);
    }

    #[test]
    fn sample_matches_direct_evaluation_bitwise() {
        let g = GridSpec::unit(17).unwrap();
        let f = |[x, y, z]: [f64; 3]| (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin() * z * z;
        let s = ScalarField::sample(&g, f).unwrap();
        for k in 0..17 {
            for j in 0..17 {
                for i in 0..17 {
                    assert_eq!(s.get(i, j, k).to_bits(), f(g.point(i, j, k)).to_bits());
                }
            }
        }
    }

    #[test]
    fn sample_rejects_non_finite_with_node() {
        let g = GridSpec::unit(4).unwrap();
        let err = ScalarField::sample(&g, |[x, _, _]| if x > 0.9 { f64::NAN } else { 0.0 }).unwrap_err();
        assert!(matches!(err, Error::NonFinite { i: 3, j: 0, k: 0, .. }));
        assert!(ScalarField::new(g.clone(), vec![f64::INFINITY; g.len()]).is_err());
    }

    #[test]
    fn half_ball_masks() {
        let g = GridSpec::unit(5).unwrap();
        let full = Mask::half_ball(&g, 3f64.sqrt()).unwrap();
        assert_eq!(full.count(), g.len());
        let half = Mask::half_ball(&g, 0.5).unwrap();
        for idx in 0..g.len() {
            let [x, y, z] = g.point_at(idx);
            assert_eq!(half.contains(idx), (x * x + y * y + z * z).sqrt() <= 0.5);
        }
        assert!(Mask::half_ball(&g, 0.0).is_err());
        assert!(Mask::half_ball(&g, 2.0).is_err());
    }

    #[test]
    fn half_ball_count_matches_brute_force() {
        let g = GridSpec::half_space(33, 1.0, 1.0).unwrap();
        let mask = Mask::half_ball(&g, 0.5).unwrap();
        // Integer lattice count: x = -1 + i/16, z = k/32.
        let mut count = 0;
        for k in 0..33i64 {
            for j in 0..33i64 {
                for i in 0..33i64 {
                    let (x, y, z) = ((i - 16) as f64 / 16.0, (j - 16) as f64 / 16.0, k as f64 / 32.0);
                    if x * x + y * y + z * z <= 0.25 {
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(mask.count(), count);
    }

    #[test]
    fn traces_of_simple_fields() {
        let g = GridSpec::unit(6).unwrap();
        let u = VectorField::sample(&g, |[_, _, z]| [z, z, 2.5]).unwrap();
        let tr = boundary_trace(&u).unwrap();
        assert_eq!(tr.tangential[0].max_abs(), 0.0);
        assert_eq!(tr.tangential[1].max_abs(), 0.0);
        assert!(tr.normal.values().iter().all(|&v| v == 2.5));
        assert_eq!(tr.normal_derivative.max_abs(), 0.0);

        let u = VectorField::sample(&g, |[_, _, z]| [0.0, 0.0, z * z]).unwrap();
        let tr = boundary_trace(&u).unwrap();
        assert!(tr.normal_derivative.max_abs() < 1e-15);
    }

    #[test]
    fn normal_derivative_second_order() {
        let f = |[x, y, z]: [f64; 3]| [0.0, 0.0, (x + 2.0 * z).sin() * (y - z).cos()];
        let dnu = |[x, y, _]: [f64; 3]| -(2.0 * x.cos() * y.cos() + x.sin() * y.sin());
        let err = |n: usize| {
            let g = GridSpec::unit(n).unwrap();
            let tr = boundary_trace(&VectorField::sample(&g, f).unwrap()).unwrap();
            let mut e: f64 = 0.0;
            for j in 0..n {
                for i in 0..n {
                    e = e.max((tr.normal_derivative.get(i, j) - dnu(g.point(i, j, 0))).abs());
                }
            }
            e
        };
        let (e1, e2, e3) = (err(9), err(17), err(33));
        for order in [(e1 / e2).log2(), (e2 / e3).log2()] {
            assert!((1.8..=2.2).contains(&order), "order {order}");
        }
    }
}
