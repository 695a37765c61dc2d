use serde::{Deserialize, Serialize};

use crate::error::{invariant, Result};

/// Which confining wall a profile describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallSide {
    Left,
    Right,
}

impl WallSide {
    pub fn opposite(self) -> Self {
        match self {
            WallSide::Left => WallSide::Right,
            WallSide::Right => WallSide::Left,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            WallSide::Left => "left",
            WallSide::Right => "right",
        }
    }
}

/// Polynomial confining wall `c·|x ∓ L/2|^m`, zero on the interior side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallProfile {
    pub c: f64,
    pub m: u32,
    pub side: WallSide,
}

impl WallProfile {
    pub const DEFAULT_C: f64 = 1.0;
    pub const DEFAULT_M: u32 = 4;

    pub fn new(c: f64, m: u32, side: WallSide) -> Result<Self> {
        let w = Self { c, m, side };
        w.validate()?;
        Ok(w)
    }

    pub fn default_for(side: WallSide) -> Self {
        Self {
            c: Self::DEFAULT_C,
            m: Self::DEFAULT_M,
            side,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return invariant(format!("wall stiffness c > 0 required (c={})", self.c));
        }
        if self.m < 3 {
            // m = 2 has a jump in the second derivative at the junction.
            return invariant(format!("wall exponent m >= 3 required (m={})", self.m));
        }
        Ok(())
    }

    /// Position of the junction between the interior and the wall.
    pub fn junction(&self, length: f64) -> f64 {
        match self.side {
            WallSide::Left => -0.5 * length,
            WallSide::Right => 0.5 * length,
        }
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        eval_wall(x, self, length)
    }

    /// Distance beyond the junction at which the wall reaches `energy`.
    pub fn depth_for_energy(&self, energy: f64) -> f64 {
        (energy.max(0.0) / self.c).powf(1.0 / self.m as f64)
    }

    /// The same profile reflected onto the other side.
    pub fn mirrored(&self) -> Self {
        Self {
            side: self.side.opposite(),
            ..*self
        }
    }
}

/// Wall potential at `x`: `c·|x ∓ L/2|^m` on the exterior side, zero inside.
pub fn eval_wall(x: f64, wall: &WallProfile, length: f64) -> f64 {
    let half = 0.5 * length;
    let depth = match wall.side {
        WallSide::Left => -half - x,
        WallSide::Right => x - half,
    };
    if depth <= 0.0 {
        0.0
    } else {
        wall.c * depth.powi(wall.m as i32)
    }
}

/// The full physical configuration of one cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Magnetic field strength.
    #[serde(rename = "B")]
    pub b_field: f64,
    /// Circumference of the cylinder and distance between the walls.
    #[serde(rename = "L")]
    pub length: f64,
    /// Disorder amplitude bound (bump height).
    #[serde(rename = "V0")]
    pub v0: f64,
    pub wall_left: WallProfile,
    pub wall_right: WallProfile,
    /// Flux through the cylinder in flux quanta.
    pub flux: f64,
    /// Offset of the band window above the first Landau level.
    pub epsilon: f64,
    /// Half-width of the gap window around 2B.
    pub delta: f64,
}

impl ModelParams {
    pub const DEFAULT_EPSILON: f64 = 0.05;
    pub const DEFAULT_DELTA: f64 = 0.3;

    /// Symmetric default walls, zero flux and default window offsets.
    pub fn new(b_field: f64, length: f64, v0: f64) -> Self {
        Self {
            b_field,
            length,
            v0,
            wall_left: WallProfile::default_for(WallSide::Left),
            wall_right: WallProfile::default_for(WallSide::Right),
            flux: 0.0,
            epsilon: Self::DEFAULT_EPSILON,
            delta: Self::DEFAULT_DELTA,
        }
    }

    pub fn with_flux(mut self, flux: f64) -> Self {
        self.flux = flux;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn wall(&self, side: WallSide) -> &WallProfile {
        match side {
            WallSide::Left => &self.wall_left,
            WallSide::Right => &self.wall_right,
        }
    }

    /// Momentum shift produced by the flux line, `2π·flux/L`.
    pub fn flux_shift(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.flux / self.length
    }

    /// `U_ℓ(x) + U_r(x)`.
    pub fn walls_at(&self, x: f64) -> f64 {
        eval_wall(x, &self.wall_left, self.length) + eval_wall(x, &self.wall_right, self.length)
    }

    /// Left and right walls are mirror images, `U_ℓ(x) = U_r(-x)`.
    pub fn walls_symmetric(&self) -> bool {
        self.wall_left.c == self.wall_right.c && self.wall_left.m == self.wall_right.m
    }

    /// Checks that hold for every run.
    pub fn validate(&self) -> Result<()> {
        if !(self.b_field > 0.0 && self.b_field.is_finite()) {
            return invariant(format!("B > 0 required (B={})", self.b_field));
        }
        if !(self.length >= 4.0 && self.length.is_finite()) {
            return invariant(format!("L >= 4 required (L={})", self.length));
        }
        if !(self.v0 >= 0.0 && self.v0.is_finite()) {
            return invariant(format!("V0 >= 0 required (V0={})", self.v0));
        }
        if !(self.epsilon > 0.0) {
            return invariant(format!("epsilon > 0 required (epsilon={})", self.epsilon));
        }
        if !(self.delta > 0.0) {
            return invariant(format!("delta > 0 required (delta={})", self.delta));
        }
        if !self.flux.is_finite() {
            return invariant("flux must be finite");
        }
        if self.wall_left.side != WallSide::Left || self.wall_right.side != WallSide::Right {
            return invariant("wall_left/wall_right sides are swapped");
        }
        self.wall_left.validate()?;
        self.wall_right.validate()
    }

    /// Preconditions of the band-window (three-set decomposition) experiment.
    pub fn validate_band_experiment(&self) -> Result<()> {
        self.validate()?;
        if !(self.b_field > 4.0 * self.v0) {
            return invariant(format!(
                "B > 4·V0 required for theorem1 (B={}, V0={})",
                self.b_field, self.v0
            ));
        }
        Ok(())
    }

    /// Preconditions of the gap-window experiment: the window must sit inside
    /// `(B + V0 + ε, 3B − V0 − ε)`.
    pub fn validate_gap_experiment(&self) -> Result<()> {
        self.validate()?;
        let b = self.b_field;
        let lower_ok = b + self.v0 + self.epsilon < 2.0 * b - self.delta;
        let upper_ok = 2.0 * b + self.delta < 3.0 * b - self.v0 - self.epsilon;
        if !lower_ok {
            return invariant(format!(
                "gap window containment B + V0 + epsilon < 2B - delta violated ({} >= {})",
                b + self.v0 + self.epsilon,
                2.0 * b - self.delta
            ));
        }
        if !upper_ok {
            return invariant(format!(
                "gap window containment 2B + delta < 3B - V0 - epsilon violated ({} >= {})",
                2.0 * b + self.delta,
                3.0 * b - self.v0 - self.epsilon
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_values() {
        let left = WallProfile::new(1.0, 4, WallSide::Left).unwrap();
        assert_eq!(eval_wall(0.0, &left, 8.0), 0.0);
        assert_eq!(eval_wall(-4.0, &left, 8.0), 0.0);
        assert_eq!(eval_wall(-5.0, &left, 8.0), 1.0);
        assert_eq!(eval_wall(5.0, &left, 8.0), 0.0);
        let right = left.mirrored();
        assert_eq!(eval_wall(5.0, &right, 8.0), 1.0);
        assert_eq!(eval_wall(-5.0, &right, 8.0), 0.0);
    }

    #[test]
    fn wall_monotone_outside() {
        let left = WallProfile::default_for(WallSide::Left);
        let right = left.mirrored();
        let length = 10.0;
        let h = 1e-4;
        for i in 0..1000 {
            let s = 1e-3 + 3.0 * i as f64 / 1000.0;
            let xl = -5.0 - s;
            assert!(eval_wall(xl - h, &left, length) > eval_wall(xl, &left, length));
            let xr = 5.0 + s;
            assert!(eval_wall(xr + h, &right, length) > eval_wall(xr, &right, length));
        }
    }

    #[test]
    fn wall_rejects_low_exponent() {
        assert!(WallProfile::new(1.0, 2, WallSide::Left).is_err());
        assert!(WallProfile::new(0.0, 4, WallSide::Left).is_err());
    }

    #[test]
    fn band_precondition() {
        let p = ModelParams::new(1.0, 8.0, 0.3);
        let err = p.validate_band_experiment().unwrap_err().to_string();
        assert!(err.contains("B > 4·V0"), "{err}");
        assert!(ModelParams::new(2.0, 8.0, 0.3).validate_band_experiment().is_ok());
    }

    #[test]
    fn gap_containment() {
        let p = ModelParams::new(2.0, 9.0, 0.1).with_delta(0.3);
        assert!(p.validate_gap_experiment().is_ok());
        let bad = p.clone().with_delta(1.9);
        let err = bad.validate_gap_experiment().unwrap_err().to_string();
        assert!(err.contains("B + V0 + epsilon < 2B - delta"), "{err}");
    }

    #[test]
    fn small_cylinder_rejected() {
        assert!(ModelParams::new(2.0, 3.0, 0.1).validate().is_err());
    }
}
