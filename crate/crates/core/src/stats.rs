//! Hypothesis tests of observed statistics against null distributions:
//! Pearson chi-squared goodness of fit with low-expectation bin pooling,
//! exact one-sample binomial tests, and Bonferroni annotation.

use num::{BigInt, BigRational};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::pmf::{big_to_f64, rat_string, NullPmf};
use crate::rank::Rat;

/// One pooled goodness-of-fit bin: an inclusive range of adjacent null
/// support points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofBin {
    #[serde(with = "rat_string")]
    pub lo: Rat,
    #[serde(with = "rat_string")]
    pub hi: Rat,
    pub observed: u64,
    pub expected: f64,
}

/// Chi-squared goodness-of-fit result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    /// Pearson chi-squared statistic over the pooled bins.
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// The bin merge that was applied, outermost support first.
    pub pooled_bins: Vec<GofBin>,
    /// Total observation count.
    pub n: u64,
}

/// Count observed values onto a null support, erroring on any value the
/// null assigns zero probability (such a value can never be binned).
pub fn histogram_on_support(null: &NullPmf, values: &[Rat]) -> Result<Vec<u64>> {
    let mut hist = vec![0u64; null.len()];
    for v in values {
        match null.support().binary_search(v) {
            Ok(i) => hist[i] += 1,
            Err(_) => {
                return Err(Error::ValueOffSupport(format!(
                    "{v} is not a null support point"
                )))
            }
        }
    }
    Ok(hist)
}

/// Pearson chi-squared test of an observed histogram (aligned to the null
/// support) against a null PMF.
///
/// Bins with expected count below 5 are pooled from both tails inward
/// until every expected count reaches 5, merging the lower-support tail
/// first on ties; pooling decisions compare exact rational expectations,
/// so the merge is identical across platforms. Fewer than two surviving
/// bins leaves the test undefined.
pub fn chisq_gof(observed: &[u64], null: &NullPmf) -> Result<GofResult> {
    if observed.len() != null.len() {
        return Err(Error::ShapeMismatch {
            left: observed.len(),
            right: null.len(),
        });
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::InvalidParameter("empty observed histogram".into()));
    }

    struct Bin {
        lo: usize,
        hi: usize,
        obs: u64,
        exp: BigRational,
    }
    let n_big = BigRational::from(BigInt::from(n));
    let mut bins: Vec<Bin> = observed
        .iter()
        .enumerate()
        .map(|(i, &obs)| Bin {
            lo: i,
            hi: i,
            obs,
            exp: &null.probs()[i] * &n_big,
        })
        .collect();

    let five = BigRational::from(BigInt::from(5));
    loop {
        if bins.len() < 2 {
            return Err(Error::DegenerateGof(bins.len()));
        }
        let deficient: Vec<usize> = (0..bins.len())
            .filter(|&i| bins[i].exp < five)
            .collect();
        let (Some(&l), Some(&r)) = (deficient.first(), deficient.last()) else {
            break;
        };
        // Merge the lower tail inward on ties; a deficient bin sitting at
        // an edge can only merge toward the center.
        let (src, dst) = if bins[l].exp <= bins[r].exp {
            if l + 1 < bins.len() {
                (l, l + 1)
            } else {
                (l, l - 1)
            }
        } else if r > 0 {
            (r, r - 1)
        } else {
            (r, r + 1)
        };
        let removed = bins.remove(src);
        let dst = if dst > src { dst - 1 } else { dst };
        bins[dst].lo = bins[dst].lo.min(removed.lo);
        bins[dst].hi = bins[dst].hi.max(removed.hi);
        bins[dst].obs += removed.obs;
        bins[dst].exp += removed.exp;
    }

    let mut statistic = 0.0;
    let mut pooled = Vec::with_capacity(bins.len());
    for b in &bins {
        let e = big_to_f64(&b.exp);
        let d = b.obs as f64 - e;
        statistic += d * d / e;
        pooled.push(GofBin {
            lo: null.support()[b.lo],
            hi: null.support()[b.hi],
            observed: b.obs,
            expected: e,
        });
    }
    let dof = bins.len() - 1;
    let p_value = if statistic == 0.0 {
        1.0
    } else {
        gamma_ur(dof as f64 / 2.0, statistic / 2.0)
    };
    Ok(GofResult {
        statistic,
        dof,
        p_value,
        pooled_bins: pooled,
        n,
    })
}

/// Which tail(s) of the binomial a test sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestDirection {
    /// P(X ≤ observed).
    Below,
    /// P(X ≥ observed).
    Above,
    /// Minimum-likelihood two-sided: sum of all outcome probabilities not
    /// exceeding the observed outcome's.
    TwoSided,
}

/// One-sample binomial test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinomResult {
    pub successes: u64,
    pub n: u64,
    pub null_rate: f64,
    pub p_value: f64,
    pub direction: TestDirection,
}

/// Exact one-sample binomial test of `successes` out of `n` against
/// `null_rate`. The two-sided p-value uses the minimum-likelihood
/// convention: the sum of P(X = j) over every j whose probability does not
/// exceed P(X = successes), with a relative slack of 1e-7 absorbing
/// floating-point noise in the comparison.
pub fn binom_test(
    successes: u64,
    n: u64,
    null_rate: f64,
    direction: TestDirection,
) -> Result<BinomResult> {
    if successes > n || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "need successes <= n with n >= 1, got {successes}/{n}"
        )));
    }
    if !(null_rate > 0.0 && null_rate < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "null rate must be inside (0, 1), got {null_rate}"
        )));
    }
    let pmf = binom_pmf(n, null_rate);
    let k = successes as usize;
    let p_value: f64 = match direction {
        TestDirection::Below => pmf[..=k].iter().sum(),
        TestDirection::Above => pmf[k..].iter().sum(),
        TestDirection::TwoSided => {
            let cutoff = pmf[k] * (1.0 + 1e-7);
            pmf.iter().filter(|&&p| p <= cutoff).sum()
        }
    };
    Ok(BinomResult {
        successes,
        n,
        null_rate,
        p_value: p_value.min(1.0),
        direction,
    })
}

/// Full Bin(n, rate) PMF via log-gamma, numerically stable for large n.
fn binom_pmf(n: u64, rate: f64) -> Vec<f64> {
    use statrs::function::gamma::ln_gamma;
    let ln_n1 = ln_gamma(n as f64 + 1.0);
    let (ln_p, ln_q) = (rate.ln(), (1.0 - rate).ln());
    (0..=n)
        .map(|k| {
            let kf = k as f64;
            let ln_c = ln_n1 - ln_gamma(kf + 1.0) - ln_gamma((n - k) as f64 + 1.0);
            (ln_c + kf * ln_p + (n - k) as f64 * ln_q).exp()
        })
        .collect()
}

/// A p-value annotated with its Bonferroni-adjusted rejection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustedP {
    pub p_value: f64,
    /// `alpha / family_size`.
    pub threshold: f64,
    pub reject: bool,
}

/// Annotate each p-value with the Bonferroni threshold `alpha/family_size`
/// and a reject flag.
pub fn bonferroni(p_values: &[f64], family_size: usize, alpha: f64) -> Result<Vec<AdjustedP>> {
    if family_size == 0 {
        return Err(Error::InvalidParameter(
            "Bonferroni family size must be at least 1".into(),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be inside (0, 1), got {alpha}"
        )));
    }
    let threshold = alpha / family_size as f64;
    Ok(p_values
        .iter()
        .map(|&p| AdjustedP {
            p_value: p,
            threshold,
            reject: p < threshold,
        })
        .collect())
}

/// Population standard deviation; `None` on an empty slice.
pub fn population_std(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt())
}

/// Exact mean of rationals. `None` on an empty slice.
pub fn rat_mean(values: &[Rat]) -> Option<Rat> {
    if values.is_empty() {
        return None;
    }
    let sum: Rat = values.iter().sum();
    Some(sum / Rat::new(values.len() as i64, 1))
}

/// Lower median of rationals: the `⌈n/2⌉`-th smallest value, always an
/// actual element (so medians of statistics stay on their exact support).
pub fn rat_lower_median(values: &[Rat]) -> Option<Rat> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort();
    Some(sorted[(sorted.len() - 1) / 2])
}

impl GofResult {
    /// Expected count of the smallest pooled bin (diagnostic).
    pub fn min_expected(&self) -> f64 {
        self.pooled_bins
            .iter()
            .map(|b| b.expected)
            .fold(f64::INFINITY, f64::min)
    }
}
