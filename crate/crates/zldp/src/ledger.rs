//! Registry of every literal constant, with a `paper` profile holding the
//! asymptotic values and a `desk` profile rescaled for finite heights.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Paper,
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(format!("unknown profile '{other}' (expected paper|desk)")),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub profile: Profile,
    /// Numerator of 𝔰 = s_multiplier / ((2-α)²α²).
    pub s_multiplier: f64,
    /// Scale F in ℬ = 3F/(2α(2-α)²) + 1/(4α) and 𝒞 = 3F/(2α²(2-α)) + 1/(4(2-α)).
    pub barrier_factor: f64,
    pub a_const: f64,
    pub d_const: f64,
    /// Exponent of the mollifier Ω cap and of the ladder-end inequality.
    pub e_omega: f64,
    /// Decay exponent in the mollifier inequality.
    pub e_m: f64,
    /// Exponent of the Ω cap for well-factorable slots.
    pub e_q: f64,
    /// Prefactor in the ladder-end inequality.
    pub e_c: f64,
    /// Length budget exp(length_fraction · e^t).
    pub length_fraction: f64,
    /// Coefficient budget exp(coeff_fraction · e^t) for well-factorable slots.
    pub coeff_fraction: f64,
    pub majorant_a: f64,
    /// ν = Δ^{nu_exponent · A}.
    pub nu_exponent: f64,
    /// Band limit Δ^{band_exponent · A}.
    pub band_exponent: f64,
    pub sieve_limit: u64,
    pub tuple_cap: usize,
    /// Largest integer admitted in an explicit mollifier expansion.
    pub length_cap: u64,
}

impl ConstantsLedger {
    pub fn paper() -> Self {
        Self {
            profile: Profile::Paper,
            s_multiplier: 2e6,
            barrier_factor: 1e6,
            a_const: 1e3,
            d_const: 1e4,
            e_omega: 1e5,
            e_m: 1e5,
            e_q: 1e4,
            e_c: 1e6,
            length_fraction: 0.01,
            coeff_fraction: 1.0 / 500.0,
            majorant_a: 20.0,
            nu_exponent: 10.0,
            band_exponent: 2.0,
            sieve_limit: crate::primes::DEFAULT_SIEVE_CAP,
            tuple_cap: 1_000_000,
            length_cap: 10_000_000,
        }
    }

    pub fn desk() -> Self {
        Self {
            profile: Profile::Desk,
            s_multiplier: 1.0,
            barrier_factor: 1.0,
            a_const: 10.0,
            d_const: 10.0,
            e_omega: 3.0,
            e_m: 5.0,
            e_q: 2.0,
            e_c: 1e-2,
            length_fraction: 1.0,
            coeff_fraction: 1.0 / 500.0,
            majorant_a: 2.0,
            nu_exponent: 5.0,
            band_exponent: 2.0,
            sieve_limit: crate::primes::DEFAULT_SIEVE_CAP,
            tuple_cap: 1_000_000,
            length_cap: 10_000_000,
        }
    }

    pub fn for_profile(p: Profile) -> Self {
        match p {
            Profile::Paper => Self::paper(),
            Profile::Desk => Self::desk(),
        }
    }

    /// Sets a field from a dotted-key suffix, e.g. "e_omega".
    pub fn set(&mut self, key: &str, v: f64) -> Result<(), String> {
        let int = |v: f64| -> Result<u64, String> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(format!("ledger.{key} must be a non-negative integer"))
            }
        };
        match key {
            "s_multiplier" => self.s_multiplier = v,
            "barrier_factor" => self.barrier_factor = v,
            "a_const" => self.a_const = v,
            "d_const" => self.d_const = v,
            "e_omega" => self.e_omega = v,
            "e_m" => self.e_m = v,
            "e_q" => self.e_q = v,
            "e_c" => self.e_c = v,
            "length_fraction" => self.length_fraction = v,
            "coeff_fraction" => self.coeff_fraction = v,
            "majorant_a" => self.majorant_a = v,
            "nu_exponent" => self.nu_exponent = v,
            "band_exponent" => self.band_exponent = v,
            "sieve_limit" => self.sieve_limit = int(v)?,
            "tuple_cap" => self.tuple_cap = int(v)? as usize,
            "length_cap" => self.length_cap = int(v)?,
            _ => return Err(format!("unknown ledger key 'ledger.{key}'")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_literals() {
        let p = ConstantsLedger::paper();
        assert_eq!(p.s_multiplier, 2_000_000.0);
        assert_eq!(p.barrier_factor, 1_000_000.0);
        assert_eq!(p.a_const, 1000.0);
        assert_eq!(p.d_const, 10000.0);
        assert_eq!(p.e_omega, 100_000.0);
        assert_eq!(p.e_c, 1_000_000.0);
        assert_eq!(p.length_fraction, 0.01);
        assert_eq!(p.majorant_a, 20.0);
    }

    #[test]
    fn set_and_reject() {
        let mut d = ConstantsLedger::desk();
        d.set("e_omega", 4.0).unwrap();
        assert_eq!(d.e_omega, 4.0);
        assert!(d.set("nope", 1.0).is_err());
        assert!(d.set("tuple_cap", 1.5).is_err());
        assert_eq!("desk".parse::<Profile>().unwrap(), Profile::Desk);
    }
}
