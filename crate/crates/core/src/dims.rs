//! SI quantities with run-time dimension checking.

use std::fmt;
use std::ops::{Div, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents of metre, kilogram, second, ampere, kelvin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dim(pub [i8; 5]);

impl Dim {
    pub const NONE: Dim = Dim([0, 0, 0, 0, 0]);
    pub const LENGTH: Dim = Dim([1, 0, 0, 0, 0]);
    pub const MASS: Dim = Dim([0, 1, 0, 0, 0]);
    pub const TIME: Dim = Dim([0, 0, 1, 0, 0]);
    pub const CURRENT: Dim = Dim([0, 0, 0, 1, 0]);
    pub const TEMPERATURE: Dim = Dim([0, 0, 0, 0, 1]);
    pub const VELOCITY: Dim = Dim([1, 0, -1, 0, 0]);
    pub const FORCE: Dim = Dim([1, 1, -2, 0, 0]);
    pub const ENERGY: Dim = Dim([2, 1, -2, 0, 0]);
    pub const CHARGE: Dim = Dim([0, 0, 1, 1, 0]);
    pub const AREA: Dim = Dim([2, 0, 0, 0, 0]);
    pub const NUMBER_DENSITY: Dim = Dim([-3, 0, 0, 0, 0]);
    pub const MAGNETIC_FIELD: Dim = Dim([0, 1, -2, -1, 0]);
    /// J/T = A·m²
    pub const MAGNETIC_MOMENT: Dim = Dim([2, 0, 0, 1, 0]);
    /// J/K
    pub const ENTROPY: Dim = Dim([2, 1, -2, 0, -1]);
    /// T·m/A
    pub const PERMEABILITY: Dim = Dim([1, 1, -2, -2, 0]);

    pub fn powi(self, n: i8) -> Dim {
        Dim(self.0.map(|e| e * n))
    }

    /// Square root; fails on odd exponents.
    pub fn sqrt(self) -> Result<Dim> {
        if self.0.iter().any(|e| e % 2 != 0) {
            return Err(Error::DimensionMismatch(format!("no square root of {self}")));
        }
        Ok(Dim(self.0.map(|e| e / 2)))
    }
}

impl Mul for Dim {
    type Output = Dim;
    fn mul(self, o: Dim) -> Dim {
        Dim(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }
}

impl Div for Dim {
    type Output = Dim;
    fn div(self, o: Dim) -> Dim {
        Dim(std::array::from_fn(|i| self.0[i] - o.0[i]))
    }
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let named = [
            (Dim::NONE, "1"),
            (Dim::LENGTH, "m"),
            (Dim::MASS, "kg"),
            (Dim::TIME, "s"),
            (Dim::VELOCITY, "m/s"),
            (Dim::FORCE, "N"),
            (Dim::ENERGY, "J"),
            (Dim::CHARGE, "C"),
            (Dim::CURRENT, "A"),
            (Dim::TEMPERATURE, "K"),
            (Dim::MAGNETIC_FIELD, "T"),
            (Dim::MAGNETIC_MOMENT, "J/T"),
        ];
        if let Some((_, s)) = named.iter().find(|(d, _)| d == self) {
            return f.write_str(s);
        }
        let mut parts = Vec::new();
        for (e, u) in self.0.iter().zip(["m", "kg", "s", "A", "K"]) {
            match e {
                0 => {}
                1 => parts.push(u.to_string()),
                _ => parts.push(format!("{u}^{e}")),
            }
        }
        f.write_str(&parts.join("·"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub dim: Dim,
}

impl Quantity {
    pub const fn new(value: f64, dim: Dim) -> Self {
        Quantity { value, dim }
    }

    pub fn add(self, o: Quantity) -> Result<Quantity> {
        if self.dim != o.dim {
            return Err(Error::DimensionMismatch(format!("cannot add {} and {}", self.dim, o.dim)));
        }
        Ok(Quantity::new(self.value + o.value, self.dim))
    }

    pub fn sub(self, o: Quantity) -> Result<Quantity> {
        self.add(Quantity::new(-o.value, o.dim))
    }

    pub fn sqrt(self) -> Result<Quantity> {
        Ok(Quantity::new(self.value.sqrt(), self.dim.sqrt()?))
    }

    pub fn powi(self, n: i8) -> Quantity {
        Quantity::new(self.value.powi(n.into()), self.dim.powi(n))
    }

    /// The value, provided the dimension is `want`.
    pub fn get(self, want: Dim) -> Result<f64> {
        if self.dim != want {
            return Err(Error::DimensionMismatch(format!("expected {want}, found {}", self.dim)));
        }
        Ok(self.value)
    }

    pub fn expect(self, want: Dim) -> Result<Quantity> {
        self.get(want).map(|_| self)
    }
}

impl Mul for Quantity {
    type Output = Quantity;
    fn mul(self, o: Quantity) -> Quantity {
        Quantity::new(self.value * o.value, self.dim * o.dim)
    }
}

impl Div for Quantity {
    type Output = Quantity;
    fn div(self, o: Quantity) -> Quantity {
        Quantity::new(self.value / o.value, self.dim / o.dim)
    }
}

impl Mul<f64> for Quantity {
    type Output = Quantity;
    fn mul(self, k: f64) -> Quantity {
        Quantity::new(self.value * k, self.dim)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} {}", self.value, self.dim)
    }
}

/// CODATA 2018 values.
pub mod si {
    use super::{Dim, Quantity};

    pub const ELEMENTARY_CHARGE: Quantity = Quantity::new(1.602_176_634e-19, Dim::CHARGE);
    pub const ELECTRON_MASS: Quantity = Quantity::new(9.109_383_701_5e-31, Dim::MASS);
    pub const BOLTZMANN: Quantity = Quantity::new(1.380_649e-23, Dim::ENTROPY);
    pub const SPEED_OF_LIGHT: Quantity = Quantity::new(299_792_458.0, Dim::VELOCITY);
    pub const VACUUM_PERMEABILITY: Quantity = Quantity::new(1.256_637_062_12e-6, Dim::PERMEABILITY);
    /// Joules per electronvolt.
    pub const ELECTRON_VOLT: Quantity = Quantity::new(1.602_176_634e-19, Dim::ENERGY);
}
