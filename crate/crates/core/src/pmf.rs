//! Exact probability mass functions over rational supports.
//!
//! Null distributions are carried as `(support, probs)` pairs where both
//! sides are exact rationals. Supports are strictly increasing; probabilities
//! sum to exactly 1 (Monte Carlo estimates are exact counts over the sample
//! size, so the invariant holds there too). Serialized form writes every
//! rational as an `"n/d"` string to survive JSON round-trips losslessly.

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rank::Rat;

/// How a null PMF was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PmfMethod {
    /// Exhaustive enumeration of the outcome space.
    ExactEnumeration,
    /// A closed-form expression evaluated exactly.
    ClosedForm,
    /// Seeded Monte Carlo; probabilities are exact sample fractions.
    MonteCarlo,
}

/// Provenance of a Monte Carlo PMF: everything needed to reproduce it
/// bit-exactly on another machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct McMeta {
    pub seed: u64,
    pub sample_count: u64,
    /// Generator identifier, including the chunking scheme.
    pub algorithm: String,
}

/// An exact PMF over a strictly increasing rational support.
#[derive(Debug, Clone, PartialEq)]
pub struct NullPmf {
    support: Vec<Rat>,
    probs: Vec<BigRational>,
    method: PmfMethod,
    mc_meta: Option<McMeta>,
}

impl NullPmf {
    /// Build and validate: equal lengths, strictly increasing support,
    /// nonnegative probabilities summing to exactly 1.
    pub fn new(
        support: Vec<Rat>,
        probs: Vec<BigRational>,
        method: PmfMethod,
        mc_meta: Option<McMeta>,
    ) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::InvalidPmf(format!(
                "support has {} points, probs {}",
                support.len(),
                probs.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidPmf("empty support".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPmf(
                "support must be strictly increasing".into(),
            ));
        }
        if probs.iter().any(|p| p.is_negative()) {
            return Err(Error::InvalidPmf("negative probability".into()));
        }
        let total: BigRational = probs.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidPmf(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        if (method == PmfMethod::MonteCarlo) != mc_meta.is_some() {
            return Err(Error::InvalidPmf(
                "Monte Carlo metadata present iff method is monte-carlo".into(),
            ));
        }
        Ok(NullPmf {
            support,
            probs,
            method,
            mc_meta,
        })
    }

    /// Build from integer outcome counts on an already-sorted support.
    pub fn from_counts(
        support: Vec<Rat>,
        counts: &[u64],
        method: PmfMethod,
        mc_meta: Option<McMeta>,
    ) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidPmf("zero total count".into()));
        }
        let denom = BigInt::from(total);
        let mut kept_support = Vec::new();
        let mut probs = Vec::new();
        for (x, &c) in support.iter().zip(counts) {
            if c > 0 {
                kept_support.push(*x);
                probs.push(BigRational::new(BigInt::from(c), denom.clone()));
            }
        }
        NullPmf::new(kept_support, probs, method, mc_meta)
    }

    pub fn support(&self) -> &[Rat] {
        &self.support
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    pub fn method(&self) -> PmfMethod {
        self.method
    }

    pub fn mc_meta(&self) -> Option<&McMeta> {
        self.mc_meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Probability of an exact support point, 0 if absent.
    pub fn prob_of(&self, x: Rat) -> BigRational {
        match self.support.binary_search(&x) {
            Ok(i) => self.probs[i].clone(),
            Err(_) => BigRational::zero(),
        }
    }

    /// Exact mean.
    pub fn mean(&self) -> BigRational {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| big_rat(*x) * p)
            .sum()
    }

    /// Exact variance.
    pub fn variance(&self) -> BigRational {
        let m = self.mean();
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| {
                let d = big_rat(*x) - &m;
                &d * &d * p
            })
            .sum()
    }

    /// Expected counts for `n` draws, one per support point, as f64.
    pub fn expected_counts(&self, n: u64) -> Vec<f64> {
        let n = BigRational::from(BigInt::from(n));
        self.probs
            .iter()
            .map(|p| big_to_f64(&(p * &n)))
            .collect()
    }
}

/// Widen a machine rational to a big rational.
pub fn big_rat(x: Rat) -> BigRational {
    BigRational::new(BigInt::from(*x.numer()), BigInt::from(*x.denom()))
}

/// f64 value of a big rational (numerator/denominator division in f64).
pub fn big_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fall back for magnitudes outside f64 integer range.
        let n = x.numer().to_f64().unwrap_or(f64::MAX);
        let d = x.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

fn rat_to_string(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn big_to_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

fn parse_rat(s: &str) -> std::result::Result<Rat, String> {
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| format!("expected n/d, got {s:?}"))?;
    let n: i64 = n.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let d: i64 = d.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if d == 0 {
        return Err(format!("{s:?}: zero denominator"));
    }
    Ok(Rat::new(n, d))
}

fn parse_big(s: &str) -> std::result::Result<BigRational, String> {
    let (n, d) = s
        .split_once('/')
        .ok_or_else(|| format!("expected n/d, got {s:?}"))?;
    let n: BigInt = n.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    let d: BigInt = d.trim().parse().map_err(|e| format!("{s:?}: {e}"))?;
    if d.is_zero() {
        return Err(format!("{s:?}: zero denominator"));
    }
    Ok(BigRational::new(n, d))
}

#[derive(Serialize, Deserialize)]
struct PmfWire {
    support: Vec<String>,
    probs: Vec<String>,
    method: PmfMethod,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_meta: Option<McMeta>,
}

impl Serialize for NullPmf {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PmfWire {
            support: self.support.iter().map(rat_to_string).collect(),
            probs: self.probs.iter().map(big_to_string).collect(),
            method: self.method,
            mc_meta: self.mc_meta.clone(),
        }
        .serialize(serializer)
    }
}

/// Serde adapter serializing a [`Rat`] as an exact `"n/d"` string.
pub mod rat_string {
    use super::{parse_rat, rat_to_string, Rat};
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let text = String::deserialize(d)?;
        parse_rat(&text).map_err(D::Error::custom)
    }
}

impl<'de> Deserialize<'de> for NullPmf {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = PmfWire::deserialize(deserializer)?;
        let support = wire
            .support
            .iter()
            .map(|s| parse_rat(s))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        let probs = wire
            .probs
            .iter()
            .map(|s| parse_big(s))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        NullPmf::new(support, probs, wire.method, wire.mc_meta).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves() -> NullPmf {
        NullPmf::new(
            vec![Rat::new(-1, 2), Rat::new(1, 2)],
            vec![
                BigRational::new(1.into(), 4.into()),
                BigRational::new(3.into(), 4.into()),
            ],
            PmfMethod::ClosedForm,
            None,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        let p = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        assert!(NullPmf::new(vec![], vec![], PmfMethod::ClosedForm, None).is_err());
        // unsorted support
        assert!(NullPmf::new(
            vec![Rat::new(1, 2), Rat::new(-1, 2)],
            vec![p(1, 2), p(1, 2)],
            PmfMethod::ClosedForm,
            None,
        )
        .is_err());
        // sum != 1
        assert!(NullPmf::new(
            vec![Rat::new(0, 1), Rat::new(1, 1)],
            vec![p(1, 2), p(1, 3)],
            PmfMethod::ClosedForm,
            None,
        )
        .is_err());
        // MC metadata mismatch
        assert!(NullPmf::new(
            vec![Rat::new(0, 1)],
            vec![p(1, 1)],
            PmfMethod::MonteCarlo,
            None,
        )
        .is_err());
    }

    #[test]
    fn moments_exact() {
        let pmf = halves();
        // mean = -1/2 * 1/4 + 1/2 * 3/4 = 1/4
        assert_eq!(pmf.mean(), BigRational::new(1.into(), 4.into()));
        // var = (3/4)^2/4 + (1/4)^2 * 3/4 = 3/16
        assert_eq!(pmf.variance(), BigRational::new(3.into(), 16.into()));
    }

    #[test]
    fn counts_drop_zero_cells() {
        let support = vec![Rat::new(0, 1), Rat::new(1, 1), Rat::new(2, 1)];
        let pmf =
            NullPmf::from_counts(support, &[3, 0, 1], PmfMethod::ExactEnumeration, None).unwrap();
        assert_eq!(pmf.len(), 2);
        assert_eq!(pmf.prob_of(Rat::new(0, 1)), BigRational::new(3.into(), 4.into()));
        assert_eq!(pmf.prob_of(Rat::new(1, 1)), BigRational::zero());
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let pmf = halves();
        let text = serde_json::to_string(&pmf).unwrap();
        let back: NullPmf = serde_json::from_str(&text).unwrap();
        assert_eq!(back, pmf);
        // A denominator beyond f64's 53-bit mantissa still survives.
        let big = NullPmf::new(
            vec![Rat::new(0, 1), Rat::new(1, 1)],
            vec![
                BigRational::new(1.into(), BigInt::from(10u64.pow(18))),
                BigRational::new(
                    BigInt::from(10u64.pow(18) - 1),
                    BigInt::from(10u64.pow(18)),
                ),
            ],
            PmfMethod::ExactEnumeration,
            None,
        )
        .unwrap();
        let text = serde_json::to_string(&big).unwrap();
        let back: NullPmf = serde_json::from_str(&text).unwrap();
        assert_eq!(back, big);
    }

    #[test]
    fn expected_counts_scale() {
        let pmf = halves();
        let e = pmf.expected_counts(80);
        assert_eq!(e, vec![20.0, 60.0]);
    }
}
