use crate::error::{Error, Result};

/// Physical constants of the penalized system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    /// Rossby number; `f64::INFINITY` switches the rotation term off.
    pub epsilon: f64,
    /// Kinematic viscosity.
    pub nu: f64,
    /// Thermal diffusivity.
    pub nu_prime: f64,
    /// Froude number in `(0, 1]`.
    pub froude: f64,
}

impl Params {
    pub fn new(epsilon: f64, nu: f64, nu_prime: f64, froude: f64) -> Result<Self> {
        let p = Params {
            epsilon,
            nu,
            nu_prime,
            froude,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same checks as [`Params::new`], except that zero viscosities are
    /// accepted (inviscid linear tests).
    pub fn inviscid(epsilon: f64, froude: f64) -> Result<Self> {
        let p = Params {
            epsilon,
            nu: 0.0,
            nu_prime: 0.0,
            froude,
        };
        p.check_eps_froude()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.check_eps_froude()?;
        for (name, v) in [("nu", self.nu), ("nu_prime", self.nu_prime)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn check_eps_froude(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.froude > 0.0 && self.froude <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "froude must lie in (0, 1], got {}",
                self.froude
            )));
        }
        Ok(())
    }

    pub fn min_viscosity(&self) -> f64 {
        self.nu.min(self.nu_prime)
    }

    pub fn max_viscosity(&self) -> f64 {
        self.nu.max(self.nu_prime)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Params { epsilon, ..self }
    }
}
