//! Measure-valued states: a sampled density plus point masses.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};

/// Sample points `0 = x₀ < x₁ < … < x_G`.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    /// `x_k = k·dx` for `k < len`.
    Uniform { dx: f64, len: usize },
    Points(Arc<[f64]>),
}

impl Grid {
    pub fn uniform(dx: f64, len: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || len == 0 {
            return Err(Error::InvalidParameter(format!("uniform grid needs dx > 0 and len >= 1 (dx = {dx}, len = {len})")));
        }
        Ok(Grid::Uniform { dx, len })
    }

    pub fn points(xs: Vec<f64>) -> Result<Self> {
        if xs.first() != Some(&0.0) {
            return Err(Error::InvalidParameter("grid must start at x = 0".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidParameter("grid must be strictly increasing and finite".into()));
        }
        Ok(Grid::Points(xs.into()))
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Uniform { len, .. } => *len,
            Grid::Points(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, k: usize) -> f64 {
        match self {
            Grid::Uniform { dx, .. } => k as f64 * dx,
            Grid::Points(p) => p[k],
        }
    }

    pub fn last(&self) -> f64 {
        self.x(self.len() - 1)
    }

    /// Index of `x` if it is a grid node (within `1e-9` of the local spacing).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = match self {
            Grid::Uniform { dx, len } => {
                let k = (x / dx).round();
                if k < 0.0 || k >= *len as f64 {
                    return None;
                }
                k as usize
            }
            Grid::Points(p) => {
                let i = p.partition_point(|v| *v < x);
                let cands = [i.checked_sub(1), Some(i)];
                cands
                    .into_iter()
                    .flatten()
                    .filter(|&j| j < p.len())
                    .min_by(|&a, &b| (p[a] - x).abs().total_cmp(&(p[b] - x).abs()))?
            }
        };
        let h = self.spacing_at(k);
        if (self.x(k) - x).abs() <= 1e-9 * h {
            Some(k)
        } else {
            None
        }
    }

    fn spacing_at(&self, k: usize) -> f64 {
        let n = self.len();
        if n == 1 {
            return 1.0;
        }
        if k + 1 < n {
            self.x(k + 1) - self.x(k)
        } else {
            self.x(k) - self.x(k - 1)
        }
    }

    /// Trapezoid weight of node `k`.
    pub fn weight(&self, k: usize) -> f64 {
        let n = self.len();
        if n == 1 {
            return 0.0;
        }
        let left = if k > 0 { self.x(k) - self.x(k - 1) } else { 0.0 };
        let right = if k + 1 < n { self.x(k + 1) - self.x(k) } else { 0.0 };
        0.5 * (left + right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// One component of a solution at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureState {
    grid: Grid,
    density: Vec<f64>,
    atoms: Vec<Atom>,
}

/// Densities down to this value count as nonnegative (rounding in
/// cancelling sums).
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

impl MeasureState {
    pub fn new(grid: Grid, density: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "density has {} values for a {}-point grid",
                density.len(),
                grid.len()
            )));
        }
        if let Some((k, v)) = density.iter().enumerate().find(|(_, v)| !(**v >= -NEGATIVITY_TOLERANCE) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("density at node {k} is {v}")));
        }
        let end = grid.last();
        for (i, a) in atoms.iter().enumerate() {
            if !(a.mass >= 0.0 && a.mass.is_finite()) {
                return Err(Error::InvalidParameter(format!("atom {i} has mass {}", a.mass)));
            }
            if !(a.location >= 0.0 && a.location <= end) {
                return Err(Error::InvalidParameter(format!("atom {i} at {} lies outside [0, {end}]", a.location)));
            }
            if atoms[..i].iter().any(|b| b.location == a.location) {
                return Err(Error::InvalidParameter(format!("two atoms at x = {}", a.location)));
            }
        }
        Ok(MeasureState { grid, density, atoms })
    }

    pub fn zero(grid: Grid) -> Self {
        let n = grid.len();
        MeasureState {
            grid,
            density: alloc::vec![0.0; n],
            atoms: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Density at `x` by linear interpolation; zero past the grid.
    pub fn density_at(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < 0.0 || x > g.last() {
            return 0.0;
        }
        if let Some(k) = g.index_of(x) {
            return self.density[k];
        }
        let k = match g {
            Grid::Uniform { dx, .. } => (x / dx).floor() as usize,
            Grid::Points(p) => p.partition_point(|v| *v <= x) - 1,
        };
        let (x0, x1) = (g.x(k), g.x(k + 1));
        let u = (x - x0) / (x1 - x0);
        (1.0 - u) * self.density[k] + u * self.density[k + 1]
    }

    pub fn smooth_mass(&self) -> f64 {
        self.density.iter().enumerate().map(|(k, v)| self.grid.weight(k) * v).sum()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Trapezoid integral of the density plus all atom masses.
    pub fn total_mass(&self) -> f64 {
        self.smooth_mass() + self.atom_mass()
    }
}

pub fn total_mass(state: &MeasureState) -> f64 {
    state.total_mass()
}
