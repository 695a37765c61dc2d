use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invariant, Result};
use crate::model::ModelParams;

/// Smallest admissible grid.
pub const MIN_GRID_POINTS: usize = 129;
/// Smallest admissible number of Fourier modes.
pub const MIN_MODES: usize = 16;
/// Required ratio between the wall potential at the grid ends and the top window energy.
pub const WALL_DOMINANCE: f64 = 10.0;

/// Mixed representation: Fourier modes `k_j = 2πj/L`, `j ∈ {-J..J}`, along the
/// cylinder and a uniform grid along x. Vectors are stored mode-major,
/// `index = mode * n_x + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub x: Vec<f64>,
    pub dx: f64,
    pub j_max: i64,
    pub length: f64,
    /// Top energy the grid extent was sized for.
    pub e_ref: f64,
}

/// Optional overrides for [`Basis::auto`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BasisOptions {
    pub dx: Option<f64>,
    pub n_x: Option<usize>,
    pub j_max: Option<i64>,
}

impl Basis {
    /// Symmetric grid over `[-half_width, half_width]` with `n_x` points.
    pub fn new(half_width: f64, n_x: usize, j_max: i64, length: f64, e_ref: f64) -> Result<Self> {
        if n_x < MIN_GRID_POINTS {
            return invariant(format!("n_x >= {MIN_GRID_POINTS} required (n_x={n_x})"));
        }
        if !(half_width > 0.0) || !(length > 0.0) {
            return invariant("grid half-width and L must be positive");
        }
        if j_max < 0 {
            return invariant("J >= 0 required");
        }
        let x = symmetric_grid(half_width, n_x);
        Ok(Self {
            dx: 2.0 * half_width / (n_x - 1) as f64,
            x,
            j_max,
            length,
            e_ref,
        })
    }

    /// Grid and modes sized for `params` and a top window energy `e_top`:
    /// the walls reach `10·e_top` at the grid ends, the spacing resolves the
    /// magnetic length and the modes cover every orbit centre on the grid.
    pub fn auto(params: &ModelParams, e_top: f64, opts: BasisOptions) -> Result<Self> {
        params.validate()?;
        let target = WALL_DOMINANCE * e_top.max(params.b_field);
        let depth = params
            .wall_left
            .depth_for_energy(target)
            .max(params.wall_right.depth_for_energy(target));
        // a hair past the depth so the dominance check passes despite rounding
        let half = 0.5 * params.length + depth * (1.0 + 1e-9);
        let n_x = match opts.n_x {
            Some(n) => n,
            None => {
                let dx = opts.dx.unwrap_or_else(|| default_dx(params.b_field));
                let n = (2.0 * half / dx).ceil() as usize + 1;
                let n = n.max(MIN_GRID_POINTS);
                n | 1
            }
        };
        let j_max = opts
            .j_max
            .unwrap_or_else(|| default_j_max(params.length, params.b_field, half));
        Self::new(half, n_x, j_max, params.length, e_top)
    }

    pub fn n_x(&self) -> usize {
        self.x.len()
    }

    pub fn n_modes(&self) -> usize {
        (2 * self.j_max + 1) as usize
    }

    pub fn dim(&self) -> usize {
        self.n_x() * self.n_modes()
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Mode labels `j` in storage order.
    pub fn modes(&self) -> impl Iterator<Item = i64> + '_ {
        -self.j_max..=self.j_max
    }

    /// `k_j = 2πj/L` for the mode at storage position `idx`.
    pub fn k(&self, idx: usize) -> f64 {
        2.0 * PI * (idx as i64 - self.j_max) as f64 / self.length
    }

    pub fn k_values(&self) -> Vec<f64> {
        (0..self.n_modes()).map(|i| self.k(i)).collect()
    }

    pub fn index(&self, mode_idx: usize, i: usize) -> usize {
        mode_idx * self.n_x() + i
    }

    /// Same spacing and modes, keeping only grid points inside `[lo, hi]`.
    /// Used for the wall-free bulk reference; the point count may drop below
    /// [`MIN_GRID_POINTS`].
    pub fn restrict_x(&self, lo: f64, hi: f64) -> Self {
        let x: Vec<f64> = self.x.iter().copied().filter(|&x| x >= lo && x <= hi).collect();
        Self {
            x,
            dx: self.dx,
            j_max: self.j_max,
            length: self.length,
            e_ref: self.e_ref,
        }
    }

    pub fn check_modes(&self) -> Result<()> {
        if self.n_modes() < MIN_MODES {
            return invariant(format!(
                "2J+1 >= {MIN_MODES} modes required to resolve the impurity bump (2J+1={})",
                self.n_modes()
            ));
        }
        Ok(())
    }
}

/// Grid spacing resolving the magnetic length `1/√B` by at least a factor 7.
pub fn default_dx(b_field: f64) -> f64 {
    0.1f64.min(0.14 / b_field.sqrt())
}

/// Mode cutoff: the larger of the bump-resolution rule `⌈16L/2π⌉` and the
/// number of modes whose orbit centre `k/B` lies on the grid.
pub fn default_j_max(length: f64, b_field: f64, half_width: f64) -> i64 {
    let bump = (length * 4.0 * 4.0 / (2.0 * PI)).ceil() as i64;
    let orbit = (b_field * half_width * length / (2.0 * PI)).ceil() as i64;
    bump.max(orbit)
}

/// Grid points mirror-symmetric bit for bit: `x[n-1-i] == -x[i]`.
fn symmetric_grid(half_width: f64, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let step = 2.0 * half_width / (n - 1) as f64;
    for i in 0..n / 2 {
        let v = -half_width + i as f64 * step;
        x[i] = v;
        x[n - 1 - i] = -v;
    }
    x
}
