//! Radial grids, nodal fields and weighted `L^q` norms.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Ratio `r_1 / r_max` used by [`RadialGrid::default_log`].
pub const DEFAULT_INNER_RATIO: f64 = 1e-4;
pub const DEFAULT_NODES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    LogUniform,
    Uniform,
    /// Arbitrary strictly increasing nodes.
    Irregular,
}

/// Strictly increasing positive nodes `r_1 < ... < r_M`. The origin is never a
/// node.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>, spacing: Spacing) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {}", nodes.len())));
        }
        if !(nodes[0] > 0.0) {
            return Err(Error::InvalidGrid(format!("first node {} must be positive", nodes[0])));
        }
        if nodes.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidGrid("non-finite node".into()));
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!("nodes not strictly increasing at index {i}")));
        }
        Ok(Self { nodes, spacing })
    }

    pub fn log_uniform(r_min: f64, r_max: f64, m: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || m < 2 {
            return Err(Error::InvalidGrid(format!(
                "log grid needs 0 < r_min < r_max, m >= 2 (got {r_min}, {r_max}, {m})"
            )));
        }
        let (a, b) = (r_min.ln(), r_max.ln());
        let h = (b - a) / (m - 1) as f64;
        let mut nodes: Vec<f64> = (0..m).map(|i| (a + h * i as f64).exp()).collect();
        nodes[0] = r_min;
        nodes[m - 1] = r_max;
        Self::from_nodes(nodes, Spacing::LogUniform)
    }

    pub fn uniform(r_min: f64, r_max: f64, m: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || m < 2 {
            return Err(Error::InvalidGrid(format!(
                "uniform grid needs 0 < r_min < r_max, m >= 2 (got {r_min}, {r_max}, {m})"
            )));
        }
        let h = (r_max - r_min) / (m - 1) as f64;
        let mut nodes: Vec<f64> = (0..m).map(|i| r_min + h * i as f64).collect();
        nodes[m - 1] = r_max;
        Self::from_nodes(nodes, Spacing::Uniform)
    }

    /// Log-uniform grid on `[r_max·10⁻⁴, r_max]`.
    pub fn default_log(r_max: f64, m: usize) -> Result<Self> {
        Self::log_uniform(r_max * DEFAULT_INNER_RATIO, r_max, m)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Cell faces between consecutive nodes: geometric means on log grids,
    /// arithmetic means otherwise.
    pub fn faces(&self) -> Vec<f64> {
        self.nodes
            .windows(2)
            .map(|w| match self.spacing {
                Spacing::LogUniform => (w[0] * w[1]).sqrt(),
                _ => 0.5 * (w[0] + w[1]),
            })
            .collect()
    }

    /// Index `i` with `nodes[i] <= r < nodes[i+1]`, clamped to the grid.
    fn bracket(&self, r: f64) -> usize {
        let n = self.nodes.len();
        match self.nodes.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        }
    }
}

/// Surface area `ω_{d-1} = 2π^{d/2}/Γ(d/2)` of the unit sphere in (possibly
/// fractional) dimension `d`.
pub fn sphere_area(dim: f64) -> f64 {
    2.0 * PI.powf(0.5 * dim) / libm::tgamma(0.5 * dim)
}

/// Nodal values of a radial function in dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
    pub dim: f64,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, dim: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!("field has {} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(Self { grid, values, dim })
    }

    pub fn zeros(grid: Arc<RadialGrid>, dim: f64) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values, dim }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, dim: f64, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self { grid, values, dim }
    }

    pub fn from_profile(grid: Arc<RadialGrid>, dim: f64, profile: &Profile) -> Self {
        Self::from_fn(grid, dim, |r| profile.eval(r))
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self { grid: self.grid.clone(), values, dim: self.dim }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `(ω_{N-1} ∫ |u|^q r^{N-1+weight} dr)^{1/q}` by the trapezoidal rule on
    /// the grid; `q = ∞` gives `max |u|`.
    pub fn lq_norm(&self, q: f64, weight_exponent: f64) -> f64 {
        if q.is_infinite() {
            return self.max_abs();
        }
        assert!(q >= 1.0, "lq_norm needs q >= 1, got {q}");
        let r = self.nodes();
        let k = self.dim - 1.0 + weight_exponent;
        let integrand: Vec<f64> = r.iter().zip(&self.values).map(|(&r, &u)| u.abs().powf(q) * r.powf(k)).collect();
        let integral = trapezoid(r, &integrand);
        (sphere_area(self.dim) * integral).powf(1.0 / q)
    }

    /// Signed `ω_{N-1} ∫ u r^{N-1+weight} dr` by the trapezoidal rule.
    pub fn integral(&self, weight_exponent: f64) -> f64 {
        let r = self.nodes();
        let k = self.dim - 1.0 + weight_exponent;
        let integrand: Vec<f64> = r.iter().zip(&self.values).map(|(&r, &u)| u * r.powf(k)).collect();
        sphere_area(self.dim) * trapezoid(r, &integrand)
    }

    /// Linear interpolation in `ln r`, constant extrapolation at both ends.
    pub fn interpolate(&self, r: f64) -> f64 {
        let nodes = self.nodes();
        if r <= nodes[0] {
            return self.values[0];
        }
        if r >= nodes[nodes.len() - 1] {
            return self.values[nodes.len() - 1];
        }
        let i = self.grid.bracket(r);
        let (x0, x1) = (nodes[i].ln(), nodes[i + 1].ln());
        let s = (r.ln() - x0) / (x1 - x0);
        self.values[i] * (1.0 - s) + self.values[i + 1] * s
    }

    pub fn sub(&self, other: &RadialField) -> RadialField {
        debug_assert_eq!(self.len(), other.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Self { grid: self.grid.clone(), values, dim: self.dim }
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1])).sum()
}

/// Named radial profiles used for initial data and forcing.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    /// `amplitude · exp(-((r - center)/width)²)`
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    /// Smooth bump `amplitude · exp(1 - 1/(1 - (r/support)²))` on `r < support`.
    Bump {
        support: f64,
        amplitude: f64,
    },
    /// `amplitude · r^{-exponent}`
    Power {
        exponent: f64,
        amplitude: f64,
    },
}

impl Profile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Gaussian { center, width, amplitude } => {
                let z = (r - center) / width;
                amplitude * (-z * z).exp()
            }
            Profile::Bump { support, amplitude } => {
                let x = r / support;
                if x < 1.0 {
                    amplitude * (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
            Profile::Power { exponent, amplitude } => amplitude * r.powf(-exponent),
        }
    }

    pub fn scaled(&self, c: f64) -> Profile {
        match *self {
            Profile::Zero => Profile::Zero,
            Profile::Gaussian { center, width, amplitude } => {
                Profile::Gaussian { center, width, amplitude: amplitude * c }
            }
            Profile::Bump { support, amplitude } => Profile::Bump { support, amplitude: amplitude * c },
            Profile::Power { exponent, amplitude } => Profile::Power { exponent, amplitude: amplitude * c },
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Profile::Zero => true,
            Profile::Gaussian { amplitude, .. }
            | Profile::Bump { amplitude, .. }
            | Profile::Power { amplitude, .. } => amplitude == 0.0,
        }
    }

    /// Parses `zero`, `gaussian(center, width, amplitude)`, `bump(support,
    /// amplitude)` or `power(exponent, amplitude)`.
    pub fn parse(text: &str) -> Result<Profile> {
        let s = text.trim();
        if s.eq_ignore_ascii_case("zero") {
            return Ok(Profile::Zero);
        }
        let open = s.find('(').ok_or_else(|| Error::Config(format!("unknown profile '{text}'")))?;
        if !s.ends_with(')') {
            return Err(Error::Config(format!("profile '{text}' is missing ')'")));
        }
        let name = s[..open].trim().to_ascii_lowercase();
        let args: Vec<f64> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad argument in profile '{text}': {e}")))?;
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!("profile '{name}' takes {n} arguments, got {}", args.len())))
            }
        };
        match name.as_str() {
            "gaussian" => {
                want(3)?;
                if args[1] <= 0.0 {
                    return Err(Error::Config("gaussian width must be positive".into()));
                }
                Ok(Profile::Gaussian { center: args[0], width: args[1], amplitude: args[2] })
            }
            "bump" => {
                want(2)?;
                if args[0] <= 0.0 {
                    return Err(Error::Config("bump support must be positive".into()));
                }
                Ok(Profile::Bump { support: args[0], amplitude: args[1] })
            }
            "power" => {
                want(2)?;
                Ok(Profile::Power { exponent: args[0], amplitude: args[1] })
            }
            other => Err(Error::Config(format!("unknown profile '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_construction() {
        let g = RadialGrid::log_uniform(1e-3, 10.0, 64).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.r_min(), 1e-3);
        assert_eq!(g.r_max(), 10.0);
        let ratios: Vec<f64> = g.nodes().windows(2).map(|w| w[1] / w[0]).collect();
        assert!(ratios.iter().all(|q| (q - ratios[0]).abs() < 1e-12));
        assert!(RadialGrid::from_nodes(vec![0.0, 1.0], Spacing::Irregular).is_err());
        assert!(RadialGrid::from_nodes(vec![1.0, 1.0], Spacing::Irregular).is_err());
        assert!(RadialGrid::log_uniform(1.0, 0.5, 10).is_err());
        let d = RadialGrid::default_log(50.0, 32).unwrap();
        assert_relative_eq!(d.r_min(), 5e-3);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(2.0), 2.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(sphere_area(3.0), 4.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(sphere_area(4.0), 2.0 * PI * PI, max_relative = 1e-12);
    }

    #[test]
    fn indicator_volume() {
        // ≈1 on [1,2] with steep edges; exact volume (4π/3)(8-1) ≈ 29.32
        let g = Arc::new(RadialGrid::uniform(1e-3, 3.0, 6001).unwrap());
        let f = RadialField::from_fn(g, 3.0, |r| if (1.0..=2.0).contains(&r) { 1.0 } else { 0.0 });
        let v = f.lq_norm(1.0, 0.0);
        assert_relative_eq!(v, 4.0 * PI / 3.0 * 7.0, max_relative = 2e-3);
    }

    #[test]
    fn norm_homogeneity_and_zero() {
        let g = Arc::new(RadialGrid::log_uniform(1e-3, 10.0, 400).unwrap());
        let f =
            RadialField::from_profile(g.clone(), 3.0, &Profile::Gaussian { center: 0.0, width: 1.0, amplitude: 1.0 });
        for q in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_relative_eq!(f.scaled(-2.5).lq_norm(q, 0.0), 2.5 * f.lq_norm(q, 0.0), max_relative = 1e-12);
        }
        assert_eq!(RadialField::zeros(g, 3.0).lq_norm(2.0, 0.0), 0.0);
    }

    #[test]
    fn gaussian_l2_norm() {
        // ∫ e^{-2r²} dx over R³ = (π/2)^{3/2}
        let g = Arc::new(RadialGrid::log_uniform(1e-4, 8.0, 2000).unwrap());
        let f = RadialField::from_profile(g, 3.0, &Profile::Gaussian { center: 0.0, width: 1.0, amplitude: 1.0 });
        assert_relative_eq!(f.lq_norm(2.0, 0.0), (PI / 2.0).powf(0.75), max_relative = 1e-5);
    }

    #[test]
    fn interpolation_is_exact_at_nodes() {
        let g = Arc::new(RadialGrid::log_uniform(1e-2, 5.0, 100).unwrap());
        let f = RadialField::from_fn(g.clone(), 3.0, |r| r.ln());
        for &r in g.nodes() {
            assert_relative_eq!(f.interpolate(r), r.ln(), epsilon = 1e-12);
        }
        // linear in ln r is reproduced exactly between nodes
        assert_relative_eq!(f.interpolate(0.3), 0.3_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(Profile::parse("zero").unwrap(), Profile::Zero);
        assert_eq!(
            Profile::parse("gaussian(0, 1.5, 1e-3)").unwrap(),
            Profile::Gaussian { center: 0.0, width: 1.5, amplitude: 1e-3 }
        );
        assert_eq!(Profile::parse(" bump(2,3) ").unwrap(), Profile::Bump { support: 2.0, amplitude: 3.0 });
        assert!(matches!(Profile::parse("sombrero(1)"), Err(Error::Config(_))));
        assert!(matches!(Profile::parse("bump(1)"), Err(Error::Config(_))));
        assert!(matches!(Profile::parse("gaussian(0, x, 1)"), Err(Error::Config(_))));
        let b = Profile::Bump { support: 2.0, amplitude: 1.0 };
        assert_eq!(b.eval(0.0), 1.0);
        assert_eq!(b.eval(2.0), 0.0);
    }
}
