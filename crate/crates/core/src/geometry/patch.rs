//! Surface patches in principal-curvature coordinates.
//!
//! Orientation convention: `ρ₁ × ρ₂` points into the domain, so the frame
//! `(E₁, E₂, n)` is right-handed with `n` the inward unit normal, and
//! `∂ⱼn = -κⱼ ρⱼ`. Under this convention a sphere seen from inside has
//! `κ = +1/R` and the metric factors shrink with depth.

use std::fmt;

use crate::error::{Error, Result};

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Fourth-order central difference of a vector-valued map.
pub(crate) fn fd4<const N: usize>(f: impl Fn(f64) -> [f64; N], x: f64, h: f64) -> [f64; N] {
    let (a, b, c, d) = (f(x - 2.0 * h), f(x - h), f(x + h), f(x + 2.0 * h));
    std::array::from_fn(|i| (a[i] - 8.0 * b[i] + 8.0 * c[i] - d[i]) / (12.0 * h))
}

pub trait SurfacePatch: Send + Sync {
    /// The parametrization `ρ(y₁, y₂)`.
    fn rho(&self, y: [f64; 2]) -> [f64; 3];

    /// Principal curvatures `(κ₁, κ₂)` along the coordinate lines.
    fn curvatures(&self, y: [f64; 2]) -> [f64; 2];

    /// Diagonal of the first fundamental form `(g₁₁, g₂₂)`.
    fn first_form(&self, y: [f64; 2]) -> [f64; 2];

    /// Parameter rectangle `[[y1_lo, y1_hi], [y2_lo, y2_hi]]`.
    fn domain(&self) -> [[f64; 2]; 2];

    /// `(ρ₁, ρ₂)`; the default differentiates `rho` numerically.
    fn tangents(&self, y: [f64; 2]) -> [[f64; 3]; 2] {
        let dom = self.domain();
        let h1 = 1e-3 * (dom[0][1] - dom[0][0]);
        let h2 = 1e-3 * (dom[1][1] - dom[1][0]);
        [fd4(|s| self.rho([s, y[1]]), y[0], h1), fd4(|s| self.rho([y[0], s]), y[1], h2)]
    }

    /// Inward unit normal `ρ₁ × ρ₂ / |ρ₁ × ρ₂|`.
    fn normal(&self, y: [f64; 2]) -> [f64; 3] {
        let [t1, t2] = self.tangents(y);
        let n = cross(t1, t2);
        let l = norm3(n);
        n.map(|c| c / l)
    }

    /// Structured-text descriptor, when the patch is one of the built-ins.
    fn descriptor(&self) -> Option<PatchKind> {
        None
    }
}

/// `ρ = (y₁, y₂, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatPatch {
    pub domain: [[f64; 2]; 2],
}

impl SurfacePatch for FlatPatch {
    fn rho(&self, y: [f64; 2]) -> [f64; 3] {
        [y[0], y[1], 0.0]
    }
    fn curvatures(&self, _: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
    fn first_form(&self, _: [f64; 2]) -> [f64; 2] {
        [1.0, 1.0]
    }
    fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }
    fn tangents(&self, _: [f64; 2]) -> [[f64; 3]; 2] {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    }
    fn normal(&self, _: [f64; 2]) -> [f64; 3] {
        [0.0, 0.0, 1.0]
    }
    fn descriptor(&self) -> Option<PatchKind> {
        Some(PatchKind::Flat)
    }
}

/// Sphere of radius `R` seen from inside, in latitude/longitude
/// `(λ, φ) = (y₁ + εy₁², y₂ + εy₂²)`. With `ε = 0` the coordinates are plain
/// latitude and longitude; `ε ≠ 0` keeps the coordinate lines principal but
/// makes `√g₁₁` depend on `y₁` and `√g₂₂` on `y₂`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePatch {
    pub radius: f64,
    pub stretch: f64,
    pub domain: [[f64; 2]; 2],
}

impl SpherePatch {
    pub fn new(radius: f64, domain: [[f64; 2]; 2]) -> Self {
        Self { radius, stretch: 0.0, domain }
    }

    pub fn stretched(radius: f64, stretch: f64, domain: [[f64; 2]; 2]) -> Self {
        Self { radius, stretch, domain }
    }

    fn angles(&self, y: [f64; 2]) -> (f64, f64, f64, f64) {
        let e = self.stretch;
        (y[0] + e * y[0] * y[0], y[1] + e * y[1] * y[1], 1.0 + 2.0 * e * y[0], 1.0 + 2.0 * e * y[1])
    }
}

impl SurfacePatch for SpherePatch {
    fn rho(&self, y: [f64; 2]) -> [f64; 3] {
        let (l, p, _, _) = self.angles(y);
        let r = self.radius;
        [r * l.cos() * p.cos(), r * l.cos() * p.sin(), r * l.sin()]
    }
    fn curvatures(&self, _: [f64; 2]) -> [f64; 2] {
        [1.0 / self.radius, 1.0 / self.radius]
    }
    fn first_form(&self, y: [f64; 2]) -> [f64; 2] {
        let (l, _, dl, dp) = self.angles(y);
        let r = self.radius;
        [r * r * dl * dl, r * r * l.cos().powi(2) * dp * dp]
    }
    fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }
    fn tangents(&self, y: [f64; 2]) -> [[f64; 3]; 2] {
        let (l, p, dl, dp) = self.angles(y);
        let r = self.radius;
        [
            [-r * dl * l.sin() * p.cos(), -r * dl * l.sin() * p.sin(), r * dl * l.cos()],
            [-r * dp * l.cos() * p.sin(), r * dp * l.cos() * p.cos(), 0.0],
        ]
    }
    fn normal(&self, y: [f64; 2]) -> [f64; 3] {
        let (l, p, _, _) = self.angles(y);
        [-l.cos() * p.cos(), -l.cos() * p.sin(), -l.sin()]
    }
    fn descriptor(&self) -> Option<PatchKind> {
        Some(if self.stretch == 0.0 {
            PatchKind::Sphere { radius: self.radius }
        } else {
            PatchKind::StretchedSphere { radius: self.radius, stretch: self.stretch }
        })
    }
}

/// Cylinder of radius `R` around the `x₃` axis, seen from inside:
/// `ρ = (R cos y₁, -R sin y₁, y₂)`, so `κ₁ = 1/R` and `κ₂ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderPatch {
    pub radius: f64,
    pub domain: [[f64; 2]; 2],
}

impl SurfacePatch for CylinderPatch {
    fn rho(&self, y: [f64; 2]) -> [f64; 3] {
        [self.radius * y[0].cos(), -self.radius * y[0].sin(), y[1]]
    }
    fn curvatures(&self, _: [f64; 2]) -> [f64; 2] {
        [1.0 / self.radius, 0.0]
    }
    fn first_form(&self, _: [f64; 2]) -> [f64; 2] {
        [self.radius * self.radius, 1.0]
    }
    fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }
    fn tangents(&self, y: [f64; 2]) -> [[f64; 3]; 2] {
        let r = self.radius;
        [[-r * y[0].sin(), -r * y[0].cos(), 0.0], [0.0, 0.0, 1.0]]
    }
    fn normal(&self, y: [f64; 2]) -> [f64; 3] {
        [-y[0].cos(), y[0].sin(), 0.0]
    }
    fn descriptor(&self) -> Option<PatchKind> {
        Some(PatchKind::Cylinder { radius: self.radius })
    }
}

type Map2<T> = Box<dyn Fn([f64; 2]) -> T + Send + Sync>;

/// Patch assembled from user closures; tangents fall back to numerical
/// differentiation when no closure is given.
pub struct ClosurePatch {
    rho: Map2<[f64; 3]>,
    kappa: Map2<[f64; 2]>,
    g: Map2<[f64; 2]>,
    tangents: Option<Map2<[[f64; 3]; 2]>>,
    domain: [[f64; 2]; 2],
}

impl ClosurePatch {
    pub fn new(
        rho: impl Fn([f64; 2]) -> [f64; 3] + Send + Sync + 'static,
        kappa: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        g: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        domain: [[f64; 2]; 2],
    ) -> Self {
        Self { rho: Box::new(rho), kappa: Box::new(kappa), g: Box::new(g), tangents: None, domain }
    }

    pub fn with_tangents(mut self, t: impl Fn([f64; 2]) -> [[f64; 3]; 2] + Send + Sync + 'static) -> Self {
        self.tangents = Some(Box::new(t));
        self
    }
}

impl fmt::Debug for ClosurePatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosurePatch").field("domain", &self.domain).finish_non_exhaustive()
    }
}

impl SurfacePatch for ClosurePatch {
    fn rho(&self, y: [f64; 2]) -> [f64; 3] {
        (self.rho)(y)
    }
    fn curvatures(&self, y: [f64; 2]) -> [f64; 2] {
        (self.kappa)(y)
    }
    fn first_form(&self, y: [f64; 2]) -> [f64; 2] {
        (self.g)(y)
    }
    fn domain(&self) -> [[f64; 2]; 2] {
        self.domain
    }
    fn tangents(&self, y: [f64; 2]) -> [[f64; 3]; 2] {
        match &self.tangents {
            Some(t) => t(y),
            None => {
                let dom = self.domain;
                let h1 = 1e-3 * (dom[0][1] - dom[0][0]);
                let h2 = 1e-3 * (dom[1][1] - dom[1][0]);
                [fd4(|s| self.rho([s, y[1]]), y[0], h1), fd4(|s| self.rho([y[0], s]), y[1], h2)]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatchKind {
    Flat,
    Sphere { radius: f64 },
    Cylinder { radius: f64 },
    StretchedSphere { radius: f64, stretch: f64 },
}

/// Serializable description of a built-in chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartDescriptor {
    pub kind: PatchKind,
    pub domain: [[f64; 2]; 2],
    pub depth: f64,
}

impl ChartDescriptor {
    pub fn patch(&self) -> Box<dyn SurfacePatch> {
        match self.kind {
            PatchKind::Flat => Box::new(FlatPatch { domain: self.domain }),
            PatchKind::Sphere { radius } => Box::new(SpherePatch::new(radius, self.domain)),
            PatchKind::Cylinder { radius } => Box::new(CylinderPatch { radius, domain: self.domain }),
            PatchKind::StretchedSphere { radius, stretch } => Box::new(SpherePatch::stretched(radius, stretch, self.domain)),
        }
    }

    /// `key = value` lines: `type`, `radius`, `stretch`, `y1`, `y2`, `depth`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match self.kind {
            PatchKind::Flat => s.push_str("type = flat\n"),
            PatchKind::Sphere { radius } => s.push_str(&format!("type = sphere\nradius = {radius}\n")),
            PatchKind::Cylinder { radius } => s.push_str(&format!("type = cylinder\nradius = {radius}\n")),
            PatchKind::StretchedSphere { radius, stretch } => {
                s.push_str(&format!("type = stretched-sphere\nradius = {radius}\nstretch = {stretch}\n"))
            }
        }
        s.push_str(&format!("y1 = {} {}\n", self.domain[0][0], self.domain[0][1]));
        s.push_str(&format!("y2 = {} {}\n", self.domain[1][0], self.domain[1][1]));
        s.push_str(&format!("depth = {}\n", self.depth));
        s
    }

    /// Parses `(line, key, value)` triples; unknown keys are rejected.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (usize, &'a str, &'a str)>) -> Result<Self> {
        let mut kind = None;
        let mut radius = None;
        let mut stretch = None;
        let mut domain = [[-0.5, 0.5], [-0.5, 0.5]];
        let mut depth = 0.5;
        let bad = |line: usize, key: &str, message: String| Error::Config { line, key: key.to_string(), message };
        let num = |line: usize, key: &str, v: &str| v.trim().parse::<f64>().map_err(|e| bad(line, key, e.to_string()));
        let interval = |line: usize, key: &str, v: &str| -> Result<[f64; 2]> {
            let parts: Vec<&str> = v.split([' ', ',']).filter(|p| !p.is_empty()).collect();
            if parts.len() != 2 {
                return Err(bad(line, key, "expected two numbers".into()));
            }
            Ok([num(line, key, parts[0])?, num(line, key, parts[1])?])
        };
        let mut type_line = 0;
        for (line, key, value) in pairs {
            match key {
                "type" => {
                    kind = Some(value.trim().to_string());
                    type_line = line;
                }
                "radius" => radius = Some(num(line, key, value)?),
                "stretch" => stretch = Some(num(line, key, value)?),
                "y1" => domain[0] = interval(line, key, value)?,
                "y2" => domain[1] = interval(line, key, value)?,
                "depth" => depth = num(line, key, value)?,
                _ => return Err(bad(line, key, "unknown chart key".into())),
            }
        }
        let kind = match kind.as_deref() {
            Some("flat") | None => PatchKind::Flat,
            Some("sphere") => PatchKind::Sphere { radius: radius.unwrap_or(2.0) },
            Some("cylinder") => PatchKind::Cylinder { radius: radius.unwrap_or(1.0) },
            Some("stretched-sphere") => PatchKind::StretchedSphere { radius: radius.unwrap_or(2.0), stretch: stretch.unwrap_or(0.3) },
            Some(other) => return Err(bad(type_line, "type", format!("unknown chart type {other:?}"))),
        };
        Ok(Self { kind, domain, depth })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let pairs: Vec<(usize, &str, &str)> = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("").trim();
                if l.is_empty() {
                    return None;
                }
                let (k, v) = l.split_once('=').unwrap_or((l, ""));
                Some((i + 1, k.trim(), v.trim()))
            })
            .collect();
        Self::from_pairs(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_consistency(p: &dyn SurfacePatch) {
        let dom = p.domain();
        for a in 0..5 {
            for b in 0..5 {
                let y = [
                    dom[0][0] + (dom[0][1] - dom[0][0]) * a as f64 / 4.0,
                    dom[1][0] + (dom[1][1] - dom[1][0]) * b as f64 / 4.0,
                ];
                let [t1, t2] = p.tangents(y);
                let h1 = 1e-3 * (dom[0][1] - dom[0][0]);
                let h2 = 1e-3 * (dom[1][1] - dom[1][0]);
                let f1 = fd4(|s| p.rho([s, y[1]]), y[0], h1);
                let f2 = fd4(|s| p.rho([y[0], s]), y[1], h2);
                for i in 0..3 {
                    assert!((t1[i] - f1[i]).abs() < 1e-9 && (t2[i] - f2[i]).abs() < 1e-9);
                }
                let g = p.first_form(y);
                assert!((dot3(t1, t1) - g[0]).abs() < 1e-12 && (dot3(t2, t2) - g[1]).abs() < 1e-12);
                assert!(dot3(t1, t2).abs() < 1e-12);
                let n = p.normal(y);
                let c = cross(t1, t2);
                assert!((dot3(n, c) - norm3(c)).abs() < 1e-12);
                // Weingarten: ∂ⱼn = -κⱼ ρⱼ.
                let k = p.curvatures(y);
                let dn1 = fd4(|s| p.normal([s, y[1]]), y[0], h1);
                let dn2 = fd4(|s| p.normal([y[0], s]), y[1], h2);
                for i in 0..3 {
                    assert!((dn1[i] + k[0] * t1[i]).abs() < 1e-9);
                    assert!((dn2[i] + k[1] * t2[i]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn builtins_are_self_consistent() {
        let dom = [[-0.6, 0.6], [-0.7, 0.5]];
        check_consistency(&FlatPatch { domain: dom });
        check_consistency(&SpherePatch::new(2.0, dom));
        check_consistency(&SpherePatch::stretched(2.0, 0.3, dom));
        check_consistency(&CylinderPatch { radius: 1.0, domain: dom });
    }

    #[test]
    fn descriptor_roundtrip() {
        for kind in [
            PatchKind::Flat,
            PatchKind::Sphere { radius: 2.0 },
            PatchKind::Cylinder { radius: 0.75 },
            PatchKind::StretchedSphere { radius: 2.0, stretch: 0.25 },
        ] {
            let d = ChartDescriptor { kind, domain: [[-0.5, 0.5], [-0.25, 0.125]], depth: 0.4 };
            assert_eq!(ChartDescriptor::from_text(&d.to_text()).unwrap(), d);
        }
        let err = ChartDescriptor::from_text("type = sphere\nwobble = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
    }
}
