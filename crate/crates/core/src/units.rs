//! Conversion between physical couplings and the internal `hbar = m = 1` units.
//!
//! A term `C_kn (Delta^k S)^n` carries a length scale `l` through
//! `|C_kn| = hbar^2 l^(2(kn-1)) / m`, and an energy scale
//! `E_kn = (hbar^(2kn) / (|C_kn| m^kn))^(1/(kn-1)) = hbar^2 / (m l^2)`.
//! Writing `l^2 = q lambda_c^2` with the Compton wavelength `lambda_c = hbar/(m c)`
//! gives the SMPE form `C = q hbar^4 / (m^3 c^2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants and the characteristic length of a nonlinear term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitsCard {
    pub hbar: f64,
    pub m: f64,
    pub c: f64,
    /// Characteristic length `l_c`.
    pub l_c: f64,
    /// Sign of the coupling, `+1` or `-1`.
    pub sign: f64,
}

impl UnitsCard {
    pub fn new(hbar: f64, m: f64, c: f64, l_c: f64, sign: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("m", m), ("c", c), ("l_c", l_c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::invalid(format!("sign must be +1 or -1, got {sign}")));
        }
        Ok(UnitsCard { hbar, m, c, l_c, sign })
    }

    /// Card whose length is fixed by a Compton quotient: `l_c = sqrt(q) lambda_c`.
    pub fn from_compton_quotient(hbar: f64, m: f64, c: f64, q: f64, sign: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::invalid("Compton quotient must be positive"));
        }
        UnitsCard::new(hbar, m, c, q.sqrt() * hbar / (m * c), sign)
    }

    /// `lambda_c = hbar / (m c)`.
    pub fn compton_wavelength(&self) -> f64 {
        self.hbar / (self.m * self.c)
    }

    /// `q = l_c^2 / lambda_c^2`.
    pub fn compton_quotient(&self) -> f64 {
        (self.l_c / self.compton_wavelength()).powi(2)
    }
}

fn order(k: u32, n: u32) -> Result<i32> {
    let kn = k.checked_mul(n).ok_or_else(|| Error::invalid("k*n overflows"))?;
    match kn {
        0 => Err(Error::invalid("k and n must be at least 1")),
        1 => Err(Error::NoFundamentalLength),
        _ => Ok(kn as i32),
    }
}

/// `C_kn = sign * hbar^2 l_c^(2(kn-1)) / m`.
pub fn coupling_from_length(card: &UnitsCard, k: u32, n: u32) -> Result<f64> {
    let kn = order(k, n)?;
    Ok(card.sign * card.hbar.powi(2) * card.l_c.powi(2 * (kn - 1)) / card.m)
}

/// The same coupling written through the Compton quotient,
/// `sign * q^(kn-1) hbar^(2kn) / (m^(2kn-1) c^(2(kn-1)))`.
pub fn coupling_from_compton(card: &UnitsCard, k: u32, n: u32) -> Result<f64> {
    let kn = order(k, n)?;
    let kn = kn as f64;
    // Logarithms keep SI-scale inputs clear of underflow for large kn.
    let log = (kn - 1.0) * card.compton_quotient().ln() + 2.0 * kn * card.hbar.ln()
        - (2.0 * kn - 1.0) * card.m.ln()
        - 2.0 * (kn - 1.0) * card.c.ln();
    Ok(card.sign * log.exp())
}

/// `C = q hbar^4 / (m^3 c^2)` with the card's sign.
pub fn smpe_coupling_from_compton(card: &UnitsCard) -> f64 {
    card.sign * card.compton_quotient() * card.hbar.powi(4) / (card.m.powi(3) * card.c.powi(2))
}

/// Both energy-scale formulas: from the coupling and from the length.
pub fn energy_scale_forms(card: &UnitsCard, k: u32, n: u32) -> Result<(f64, f64)> {
    let kn = order(k, n)?;
    let c = coupling_from_length(card, k, n)?.abs();
    let kn = kn as f64;
    let from_coupling = ((2.0 * kn * card.hbar.ln() - c.ln() - kn * card.m.ln()) / (kn - 1.0)).exp();
    let from_length = card.hbar.powi(2) / (card.m * card.l_c.powi(2));
    Ok((from_coupling, from_length))
}

/// `E_kn = hbar^2 / (m l_c^2)`, after checking it against the coupling form.
pub fn energy_scale(card: &UnitsCard, k: u32, n: u32) -> Result<f64> {
    let (a, b) = energy_scale_forms(card, k, n)?;
    if ((a - b) / b).abs() > 1e-10 {
        return Err(Error::invalid(format!("energy-scale forms disagree: {a} vs {b}")));
    }
    Ok(b)
}

/// Coupling in internal units when lengths are measured in `length_unit`:
/// `sign * (l_c / length_unit)^(2(kn-1))`.
pub fn internal_coupling(card: &UnitsCard, k: u32, n: u32, length_unit: f64) -> Result<f64> {
    let kn = order(k, n)?;
    if !(length_unit.is_finite() && length_unit > 0.0) {
        return Err(Error::invalid("length unit must be positive"));
    }
    Ok(card.sign * (card.l_c / length_unit).powi(2 * (kn - 1)))
}

/// Action-valued phase `hbar * S` from the dimensionless phase.
pub fn phase_to_action(card: &UnitsCard, s: f64) -> f64 {
    card.hbar * s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(l_c: f64) -> UnitsCard {
        UnitsCard::new(1.0, 1.0, 1.0, l_c, 1.0).unwrap()
    }

    #[test]
    fn coupling_examples() {
        assert!((coupling_from_length(&unit(0.1), 1, 2).unwrap() - 0.01).abs() < 1e-15);
        for (k, n) in [(1, 2), (2, 1), (2, 2), (3, 3)] {
            assert_eq!(coupling_from_length(&unit(1.0), k, n).unwrap(), 1.0);
        }
        assert!((coupling_from_length(&unit(0.5), 2, 2).unwrap() - 0.015625).abs() < 1e-15);
    }

    #[test]
    fn first_order_term_has_no_scale() {
        assert!(matches!(coupling_from_length(&unit(1.0), 1, 1), Err(Error::NoFundamentalLength)));
        assert!(matches!(energy_scale(&unit(1.0), 1, 1), Err(Error::NoFundamentalLength)));
    }

    #[test]
    fn energy_examples() {
        assert!((energy_scale(&unit(0.1), 1, 2).unwrap() - 100.0).abs() < 1e-10);
        assert_eq!(energy_scale(&unit(1.0), 1, 2).unwrap(), 1.0);
        let e1 = energy_scale(&unit(0.3), 1, 2).unwrap();
        let e2 = energy_scale(&unit(0.03), 1, 2).unwrap();
        assert!((e2 / e1 - 100.0).abs() < 1e-9);
    }

    #[test]
    fn sign_and_validation() {
        let card = UnitsCard::new(1.0, 1.0, 1.0, 0.1, -1.0).unwrap();
        assert!((coupling_from_length(&card, 1, 2).unwrap() + 0.01).abs() < 1e-15);
        assert!(UnitsCard::new(1.0, 1.0, 1.0, 0.1, 0.5).is_err());
        assert!(UnitsCard::new(0.0, 1.0, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn compton_quotient_round_trip() {
        let card = UnitsCard::from_compton_quotient(1.054571817e-34, 9.1093837e-31, 2.99792458e8, 4.0, 1.0).unwrap();
        assert!((card.compton_quotient() - 4.0).abs() < 1e-12);
        assert!((card.l_c - 2.0 * card.compton_wavelength()).abs() / card.l_c < 1e-15);
    }

    #[test]
    fn internal_units() {
        let card = unit(0.2);
        assert!((internal_coupling(&card, 1, 2, 2.0).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(phase_to_action(&UnitsCard::new(2.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 3.0), 6.0);
    }
}
