//! (N+1)th-price auction for the high-priority queue and the order-statistic
//! quantities a mean-field bidder needs: the probability of winning with a
//! bid, and the expected price conditional on winning, when every opponent
//! draws its bid i.i.d. from a public belief.
//!
//! Ties at the admission cutoff are broken uniformly at random, and both
//! `win_probability` and `expected_payment` are exact under that rule.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClientId;

/// Ascending discrete bid values in `[0, 5]` (cents).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidSet {
    values: Vec<f64>,
}

impl Default for BidSet {
    fn default() -> Self {
        BidSet::uniform(0.0, 5.0, 21)
    }
}

impl BidSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::config("market.bids", "bid set is empty"));
        }
        if !values.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("market.bids", "bids must be strictly ascending"));
        }
        if values[0] < 0.0 || values[values.len() - 1] > 5.0 {
            return Err(Error::config("market.bids", "bids must lie in [0, 5]"));
        }
        Ok(BidSet { values })
    }

    /// `count` evenly spaced bids from `lo` to `hi` inclusive.
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Self {
        let values = if count == 1 {
            vec![lo]
        } else {
            (0..count)
                .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                .collect()
        };
        BidSet { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Index of the bid value closest to `b`.
    pub fn nearest(&self, b: f64) -> usize {
        let i = self.values.partition_point(|&v| v < b);
        if i == 0 {
            0
        } else if i == self.values.len() || b - self.values[i - 1] <= self.values[i] - b {
            i - 1
        } else {
            i
        }
    }
}

/// Public belief over opponents' bids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidDistribution {
    support: BidSet,
    pmf: Vec<f64>,
}

impl BidDistribution {
    pub fn new(support: BidSet, pmf: Vec<f64>) -> Result<Self> {
        if pmf.len() != support.len() {
            return Err(Error::config("market.belief", "pmf length differs from bid set"));
        }
        if pmf.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::config("market.belief", "negative probability"));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("market.belief", "pmf does not sum to 1"));
        }
        Ok(BidDistribution { support, pmf })
    }

    pub fn uniform(support: BidSet) -> Self {
        let n = support.len();
        BidDistribution {
            support,
            pmf: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(support: BidSet, index: usize) -> Self {
        let mut pmf = vec![0.0; support.len()];
        pmf[index] = 1.0;
        BidDistribution { support, pmf }
    }

    /// Empirical distribution of `observed`, each snapped to the nearest bid.
    pub fn empirical(support: BidSet, observed: &[f64]) -> Option<Self> {
        if observed.is_empty() {
            return None;
        }
        let mut pmf = vec![0.0; support.len()];
        let w = 1.0 / observed.len() as f64;
        for &b in observed {
            pmf[support.nearest(b)] += w;
        }
        Some(BidDistribution { support, pmf })
    }

    pub fn support(&self) -> &BidSet {
        &self.support
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn mean(&self) -> f64 {
        self.support
            .values()
            .iter()
            .zip(&self.pmf)
            .map(|(v, p)| v * p)
            .sum()
    }

    /// `(P(B > b), P(B = b), P(B < b))`.
    fn split(&self, b: f64) -> (f64, f64, f64) {
        let (mut above, mut equal, mut below) = (0.0, 0.0, 0.0);
        for (&v, &p) in self.support.values().iter().zip(&self.pmf) {
            if v > b {
                above += p;
            } else if v == b {
                equal += p;
            } else {
                below += p;
            }
        }
        (above, equal, below)
    }

    pub fn total_variation(&self, other: &BidDistribution) -> f64 {
        0.5 * self
            .pmf
            .iter()
            .zip(&other.pmf)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Outcome of one sealed-bid round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionResult {
    pub winners: Vec<ClientId>,
    pub price: f64,
    pub all_bids: Vec<(ClientId, f64)>,
}

/// Price every winner pays: the (N+1)th highest bid, or 0 when there are at
/// most N bids.
pub fn clearing_price(bids: &[f64], n: usize) -> f64 {
    if bids.len() <= n {
        return 0.0;
    }
    let mut sorted = bids.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[n]
}

/// Probability that each bidder is admitted under uniform tie-breaking.
pub fn win_shares(bids: &[f64], n: usize) -> Vec<f64> {
    bids.iter()
        .map(|&b| {
            let above = bids.iter().filter(|&&x| x > b).count();
            let tied = bids.iter().filter(|&&x| x == b).count();
            if above >= n {
                0.0
            } else {
                ((n - above) as f64 / tied as f64).min(1.0)
            }
        })
        .collect()
}

/// Run one (N+1)th-price auction. The top `n` bidders win and each pays the
/// (N+1)th highest bid; ties at the cutoff are drawn from `rng`.
pub fn run_auction<R: Rng + ?Sized>(bids: &[(ClientId, f64)], n: usize, rng: &mut R) -> AuctionResult {
    assert!(n >= 1, "admission limit must be at least 1");
    let mut order: Vec<(ClientId, f64)> = bids.to_vec();
    order.shuffle(rng);
    // stable sort keeps the shuffled order among equal bids
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut winners: Vec<ClientId> = order.iter().take(n).map(|&(c, _)| c).collect();
    winners.sort_unstable();
    let price = if order.len() > n { order[n].1 } else { 0.0 };
    AuctionResult {
        winners,
        price,
        all_bids: bids.to_vec(),
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

fn multinomial3(total: usize, j: usize, k: usize, a: f64, e: f64, c: f64) -> f64 {
    let l = total - j - k;
    let pow = |x: f64, p: usize| if p == 0 { 1.0 } else { x.powi(p as i32) };
    let mass = pow(a, j) * pow(e, k) * pow(c, l);
    if mass == 0.0 {
        return 0.0;
    }
    let coef = (ln_factorial(total) - ln_factorial(j) - ln_factorial(k) - ln_factorial(l)).exp();
    coef * mass
}

fn binomial_upper_tail(trials: usize, p: f64, at_least: usize) -> f64 {
    (at_least..=trials)
        .map(|i| multinomial3(trials, i, 0, p, 0.0, 1.0 - p))
        .sum()
}

/// Joint law of (#opponents above b, #opponents tied at b) restricted to
/// outcomes where the bidder can still win, with the tie-break win chance.
fn win_terms(b: f64, rho: &BidDistribution, m: usize, n: usize) -> Vec<(usize, usize, f64)> {
    let opponents = m - 1;
    let (a, e, c) = rho.split(b);
    let mut out = Vec::new();
    for j in 0..n.min(opponents + 1) {
        for k in 0..=(opponents - j) {
            let p = multinomial3(opponents, j, k, a, e, c);
            if p == 0.0 {
                continue;
            }
            let share = ((n - j) as f64 / (k + 1) as f64).min(1.0);
            out.push((j, k, p * share));
        }
    }
    out
}

/// Probability that a bid of `b` is admitted when the other `m - 1` clients
/// bid i.i.d. from `rho` and `n` slots are available.
pub fn win_probability(b: f64, rho: &BidDistribution, m: usize, n: usize) -> f64 {
    assert!(m >= 1 && n >= 1);
    if n >= m {
        return 1.0;
    }
    win_terms(b, rho, m, n)
        .iter()
        .map(|&(_, _, w)| w)
        .sum::<f64>()
        .min(1.0)
}

/// `E[r-th highest of `draws` i.i.d. values from rho restricted below b]`.
fn kth_highest_below(b: f64, rho: &BidDistribution, draws: usize, r: usize) -> f64 {
    let vals: Vec<(f64, f64)> = rho
        .support
        .values()
        .iter()
        .zip(&rho.pmf)
        .filter(|(&v, _)| v < b)
        .map(|(&v, &p)| (v, p))
        .collect();
    let total: f64 = vals.iter().map(|x| x.1).sum();
    if total == 0.0 {
        return 0.0;
    }
    // E[X] = sum_i (v_i - v_{i-1}) P(X >= v_i), with v_{-1} = 0
    let mut expect = 0.0;
    let mut prev = 0.0;
    let mut tail = total;
    for &(v, p) in &vals {
        let q = (tail / total).clamp(0.0, 1.0);
        expect += (v - prev) * binomial_upper_tail(draws, q, r);
        prev = v;
        tail -= p;
    }
    expect
}

/// Expected (N+1)th-price payment conditional on winning with bid `b`; 0
/// when the bid can never win or when there are no more than `n` bidders.
pub fn expected_payment(b: f64, rho: &BidDistribution, m: usize, n: usize) -> f64 {
    assert!(m >= 1 && n >= 1);
    if m <= n {
        return 0.0;
    }
    let opponents = m - 1;
    let mut joint = 0.0;
    let mut p_win = 0.0;
    for (j, k, w) in win_terms(b, rho, m, n) {
        p_win += w;
        // with the bidder admitted, the price is the n-th highest opponent bid
        let price = if j + k >= n {
            b
        } else {
            kth_highest_below(b, rho, opponents - j - k, n - j - k)
        };
        joint += w * price;
    }
    if p_win <= 0.0 {
        0.0
    } else {
        (joint / p_win).clamp(0.0, rho.support.max())
    }
}

/// `rho' = (1 - lambda) rho + lambda * empirical(observed)`.
pub fn update_belief(rho: &BidDistribution, observed: &[f64], lambda: f64) -> BidDistribution {
    let Some(emp) = BidDistribution::empirical(rho.support.clone(), observed) else {
        return rho.clone();
    };
    let pmf: Vec<f64> = rho
        .pmf
        .iter()
        .zip(&emp.pmf)
        .map(|(r, e)| (1.0 - lambda) * r + lambda * e)
        .collect();
    let total: f64 = pmf.iter().sum();
    BidDistribution {
        support: rho.support.clone(),
        pmf: pmf.into_iter().map(|p| p / total).collect(),
    }
}

/// Win probability and conditional payment for every bid in the belief's
/// support, for a market of `m` clients with `n` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketCurves {
    pub bids: Vec<f64>,
    pub p_win: Vec<f64>,
    pub pay: Vec<f64>,
}

impl MarketCurves {
    pub fn from_belief(rho: &BidDistribution, m: usize, n: usize) -> Self {
        let bids = rho.support.values().to_vec();
        let p_win = bids.iter().map(|&b| win_probability(b, rho, m, n)).collect();
        let pay = bids.iter().map(|&b| expected_payment(b, rho, m, n)).collect();
        MarketCurves { bids, p_win, pay }
    }

    /// Every bid wins with probability `p` and pays `pay`.
    pub fn constant(bids: &BidSet, p: f64, pay: f64) -> Self {
        MarketCurves {
            bids: bids.values().to_vec(),
            p_win: vec![p; bids.len()],
            pay: vec![pay; bids.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }
}
