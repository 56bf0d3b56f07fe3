//! The one-shot duopoly pricing game.
//!
//! Prices live on the grid `{1/k, 2/k, ..., 1}` and are carried around as
//! integer levels; the real price `level / k` is only materialized when a
//! payoff is evaluated. Bertrand ties are therefore decided on integers.
//!
//! Two allocation rules split a unit mass of demand between the sellers:
//!
//! * Bertrand: the strictly cheaper seller takes everything, ties split.
//! * Logit with temperature `tau`: seller `i` receives
//!   `exp(tau * p_j) / (exp(tau * p_i) + exp(tau * p_j))`.
//!
//! A seller's stage payoff is its own price times its share, and the buyer
//! pays, on average, the sum of the two payoffs.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest `k` for which the constants quoted by the competition bounds apply.
pub const MIN_THEOREM_K: usize = 20;

/// Dense payoff tables are refused above this size.
pub const MAX_DENSE_K: usize = 10_000;

const DIST_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PriceGrid {
    k: usize,
}

impl PriceGrid {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidGrid(k));
        }
        Ok(PriceGrid { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether the constants used by the dominance and threat bounds apply.
    pub fn supports_theorem_constants(&self) -> bool {
        self.k >= MIN_THEOREM_K
    }

    pub fn price(&self, level: usize) -> Result<Price> {
        if level == 0 || level > self.k {
            return Err(Error::OffGrid { level, k: self.k });
        }
        Ok(Price(level))
    }

    /// Looks up the grid point equal to `value` (to within 1e-9 of a level).
    pub fn price_at(&self, value: f64) -> Result<Price> {
        let scaled = value * self.k as f64;
        let level = scaled.round();
        if !value.is_finite() || (scaled - level).abs() > 1e-9 || level < 1.0 {
            return Err(Error::NotAGridPrice {
                price: value,
                k: self.k,
            });
        }
        self.price(level as usize)
    }

    pub fn value(&self, price: Price) -> f64 {
        price.0 as f64 / self.k as f64
    }

    pub fn lowest(&self) -> Price {
        Price(1)
    }

    pub fn highest(&self) -> Price {
        Price(self.k)
    }

    pub fn prices(&self) -> impl Iterator<Item = Price> + '_ {
        (1..=self.k).map(Price)
    }

    /// Real price of the grid point with zero-based index `idx`.
    pub(crate) fn value_of_index(&self, idx: usize) -> f64 {
        (idx + 1) as f64 / self.k as f64
    }
}

/// A grid price, stored as its 1-based level `i` (the price is `i / k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Price(usize);

impl Price {
    pub fn level(self) -> usize {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(idx: usize) -> Self {
        Price(idx + 1)
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "level {}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum AllocationRule {
    Bertrand,
    Logit { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketModel {
    pub grid: PriceGrid,
    pub rule: AllocationRule,
}

impl MarketModel {
    pub fn bertrand(k: usize) -> Result<Self> {
        Ok(MarketModel {
            grid: PriceGrid::new(k)?,
            rule: AllocationRule::Bertrand,
        })
    }

    pub fn logit(k: usize, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "logit temperature must be finite and >= 0, got {tau}"
            )));
        }
        Ok(MarketModel {
            grid: PriceGrid::new(k)?,
            rule: AllocationRule::Logit { tau },
        })
    }

    pub fn k(&self) -> usize {
        self.grid.k
    }

    pub fn is_bertrand(&self) -> bool {
        matches!(self.rule, AllocationRule::Bertrand)
    }

    pub fn tau(&self) -> Option<f64> {
        match self.rule {
            AllocationRule::Bertrand => None,
            AllocationRule::Logit { tau } => Some(tau),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.rule {
            AllocationRule::Bertrand => "bertrand",
            AllocationRule::Logit { .. } => "logit",
        }
    }

    fn check(&self, p: Price) -> Result<()> {
        if p.0 == 0 || p.0 > self.grid.k {
            return Err(Error::OffGrid {
                level: p.0,
                k: self.grid.k,
            });
        }
        Ok(())
    }

    /// Demand shares by zero-based grid index. Callers guarantee the indices are in range.
    pub(crate) fn shares_by_index(&self, i: usize, j: usize) -> (f64, f64) {
        match self.rule {
            AllocationRule::Bertrand => match i.cmp(&j) {
                std::cmp::Ordering::Less => (1.0, 0.0),
                std::cmp::Ordering::Equal => (0.5, 0.5),
                std::cmp::Ordering::Greater => (0.0, 1.0),
            },
            AllocationRule::Logit { tau } => {
                let p1 = self.grid.value_of_index(i);
                let p2 = self.grid.value_of_index(j);
                (logit_share(tau, p1, p2), logit_share(tau, p2, p1))
            }
        }
    }

    pub(crate) fn payoffs_by_index(&self, i: usize, j: usize) -> (f64, f64) {
        let (s1, s2) = self.shares_by_index(i, j);
        (
            self.grid.value_of_index(i) * s1,
            self.grid.value_of_index(j) * s2,
        )
    }
}

/// Share of the seller pricing at `own` against `other` under the logit rule.
fn logit_share(tau: f64, own: f64, other: f64) -> f64 {
    let m = tau * own.max(other);
    let e_own = (tau * own - m).exp();
    let e_other = (tau * other - m).exp();
    // addition is commutative in IEEE arithmetic, so both sellers see the same denominator
    e_other / (e_own + e_other)
}

/// Demand shares `(share1, share2)` when seller 1 prices at `p1` and seller 2 at `p2`.
pub fn allocate(model: &MarketModel, p1: Price, p2: Price) -> Result<(f64, f64)> {
    model.check(p1)?;
    model.check(p2)?;
    Ok(model.shares_by_index(p1.index(), p2.index()))
}

/// Stage payoffs `(u1, u2)`, each a seller's own price times its share.
pub fn stage_payoff(model: &MarketModel, p1: Price, p2: Price) -> Result<(f64, f64)> {
    model.check(p1)?;
    model.check(p2)?;
    Ok(model.payoffs_by_index(p1.index(), p2.index()))
}

/// A probability vector over the `k` grid prices, index 0 being price `1/k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceDistribution {
    weights: Vec<f64>,
}

impl PriceDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::validate(&weights)?;
        Ok(PriceDistribution { weights })
    }

    pub fn validate(weights: &[f64]) -> Result<()> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty weight vector".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "weight {w} at index {i}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum:.17}"
            )));
        }
        Ok(())
    }

    /// Normalizes nonnegative weights to sum to one.
    pub fn from_unnormalized(mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || sum <= 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalize total {sum}"
            )));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(weights)
    }

    pub fn uniform(k: usize) -> Self {
        PriceDistribution {
            weights: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, price: Price) -> Self {
        let mut weights = vec![0.0; k];
        weights[price.index()] = 1.0;
        PriceDistribution { weights }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn weight(&self, price: Price) -> f64 {
        self.weights[price.index()]
    }

    /// Expected price.
    pub fn mean(&self) -> f64 {
        let k = self.k() as f64;
        self.weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (i + 1) as f64 / k)
            .sum()
    }

    /// Probability of pricing at `price` or higher.
    pub fn mass_at_or_above(&self, price: Price) -> f64 {
        self.weights[price.index()..].iter().sum()
    }

    /// Highest price carrying positive weight.
    pub fn max_support(&self) -> Price {
        let idx = self.weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
        Price::from_index(idx)
    }

    /// `true` when all mass sits on a single price.
    pub fn as_point_mass(&self) -> Option<Price> {
        let mut found = None;
        for (i, w) in self.weights.iter().enumerate() {
            if *w == 1.0 {
                found = Some(Price::from_index(i));
            } else if *w != 0.0 {
                return None;
            }
        }
        found
    }

    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.k() != other.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                found: other.k(),
            });
        }
        let w = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        PriceDistribution::from_unnormalized(w)
    }
}

impl<'de> Deserialize<'de> for PriceDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let weights = Vec::<f64>::deserialize(deserializer)?;
        PriceDistribution::new(weights).map_err(serde::de::Error::custom)
    }
}

fn check_dims(model: &MarketModel, d: &PriceDistribution) -> Result<()> {
    if d.k() != model.k() {
        return Err(Error::DimensionMismatch {
            expected: model.k(),
            found: d.k(),
        });
    }
    Ok(())
}

/// Expected stage payoffs when the sellers draw independently from `d1` and `d2`.
pub fn expected_payoff(
    model: &MarketModel,
    d1: &PriceDistribution,
    d2: &PriceDistribution,
) -> Result<(f64, f64)> {
    check_dims(model, d1)?;
    check_dims(model, d2)?;
    let (mut u1, mut u2) = (0.0, 0.0);
    for (i, &w1) in d1.weights.iter().enumerate() {
        if w1 == 0.0 {
            continue;
        }
        for (j, &w2) in d2.weights.iter().enumerate() {
            if w2 == 0.0 {
                continue;
            }
            let (a, b) = model.payoffs_by_index(i, j);
            u1 += w1 * w2 * a;
            u2 += w1 * w2 * b;
        }
    }
    Ok((u1, u2))
}

/// Average price paid by the buyer, taken as `u1 + u2`.
pub fn buyer_price(
    model: &MarketModel,
    d1: &PriceDistribution,
    d2: &PriceDistribution,
) -> Result<f64> {
    let (u1, u2) = expected_payoff(model, d1, d2)?;
    Ok(u1 + u2)
}

/// Average buyer price computed straight from the allocation, `E[p1 C1 + p2 C2]`.
pub fn buyer_price_direct(
    model: &MarketModel,
    d1: &PriceDistribution,
    d2: &PriceDistribution,
) -> Result<f64> {
    check_dims(model, d1)?;
    check_dims(model, d2)?;
    let mut total = 0.0;
    for p1 in model.grid.prices() {
        for p2 in model.grid.prices() {
            let w = d1.weight(p1) * d2.weight(p2);
            if w == 0.0 {
                continue;
            }
            let (c1, c2) = allocate(model, p1, p2)?;
            total += w * (model.grid.value(p1) * c1 + model.grid.value(p2) * c2);
        }
    }
    Ok(total)
}

/// Dense stage payoff tables. Entry `(i, j)` is the payoff when seller 1 plays
/// grid index `i` and seller 2 plays grid index `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrices {
    k: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PayoffMatrices {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.k + j]
    }

    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i * self.k + j]
    }

    pub fn a_row(&self, i: usize) -> &[f64] {
        &self.a[i * self.k..(i + 1) * self.k]
    }

    /// Payoff of each of seller 1's prices against seller 2's mixed strategy `d2` (`A d2`).
    pub fn seller1_payoffs_against(&self, d2: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        self.seller1_payoffs_into(d2, &mut out);
        out
    }

    pub fn seller1_payoffs_into(&self, d2: &[f64], out: &mut [f64]) {
        // column j of A is row j of B; skipping zero weights makes point
        // masses O(k) and leaves the sum order unchanged
        let k = self.k;
        out.fill(0.0);
        for (j, &w) in d2.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, b) in out.iter_mut().zip(&self.b[j * k..(j + 1) * k]) {
                *o += b * w;
            }
        }
    }

    /// Payoff of each of seller 2's prices against seller 1's mixed strategy `d1` (`Bᵀ d1`).
    pub fn seller2_payoffs_against(&self, d1: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        self.seller2_payoffs_into(d1, &mut out);
        out
    }

    pub fn seller2_payoffs_into(&self, d1: &[f64], out: &mut [f64]) {
        // B = Aᵀ, so column j of B is row j of A
        self.seller1_payoffs_into(d1, out);
    }

    /// The bilinear forms `d1ᵀ A d2` and `d1ᵀ B d2`.
    pub fn expected(&self, d1: &[f64], d2: &[f64]) -> (f64, f64) {
        let v1 = self.seller1_payoffs_against(d2);
        let v2 = self.seller2_payoffs_against(d1);
        let u1 = d1.iter().zip(&v1).map(|(w, v)| w * v).sum();
        let u2 = d2.iter().zip(&v2).map(|(w, v)| w * v).sum();
        (u1, u2)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.k).all(|i| (0..self.k).all(|j| self.b(i, j) == self.a(j, i)))
    }

    /// Writes one seller's table as CSV: a header row of seller-2 prices, then
    /// one row per seller-1 price. Values carry 12 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W, seller: Seller) -> std::io::Result<()> {
        let k = self.k;
        let price = |i: usize| format_sig((i + 1) as f64 / k as f64, 12);
        write!(out, "p1\\p2")?;
        for j in 0..k {
            write!(out, ",{}", price(j))?;
        }
        writeln!(out)?;
        for i in 0..k {
            write!(out, "{}", price(i))?;
            for j in 0..k {
                let v = match seller {
                    Seller::One => self.a(i, j),
                    Seller::Two => self.b(i, j),
                };
                write!(out, ",{}", format_sig(v, 12))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Seller {
    One,
    Two,
}

impl Seller {
    pub fn other(self) -> Seller {
        match self {
            Seller::One => Seller::Two,
            Seller::Two => Seller::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Seller::One => 0,
            Seller::Two => 1,
        }
    }
}

/// Tabulates both sellers' stage payoffs.
pub fn payoff_matrices(model: &MarketModel) -> Result<PayoffMatrices> {
    let k = model.k();
    if k > MAX_DENSE_K {
        return Err(Error::TooLarge {
            k,
            limit: MAX_DENSE_K,
        });
    }
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let (u1, u2) = model.payoffs_by_index(i, j);
            a[i * k + j] = u1;
            b[i * k + j] = u2;
        }
    }
    let m = PayoffMatrices { k, a, b };
    if !m.is_symmetric() {
        return Err(Error::Internal(
            "payoff tables are not transposes of each other".into(),
        ));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub prices: Vec<Price>,
    pub value: f64,
}

/// Pure prices whose payoff against `opponent` is within `tolerance` of the best.
pub fn best_response_set(
    model: &MarketModel,
    opponent: &PriceDistribution,
    tolerance: f64,
) -> Result<BestResponse> {
    check_dims(model, opponent)?;
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be >= 0, got {tolerance}"
        )));
    }
    let payoffs = pure_payoffs_against(model, opponent);
    Ok(best_response_from_payoffs(&payoffs, tolerance))
}

pub(crate) fn best_response_from_payoffs(payoffs: &[f64], tolerance: f64) -> BestResponse {
    let value = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let prices = payoffs
        .iter()
        .enumerate()
        .filter(|(_, v)| **v >= value - tolerance)
        .map(|(i, _)| Price::from_index(i))
        .collect();
    BestResponse { prices, value }
}

/// Seller 1's payoff from each pure price against `opponent`.
pub fn pure_payoffs_against(model: &MarketModel, opponent: &PriceDistribution) -> Vec<f64> {
    let k = model.k();
    (0..k)
        .map(|i| {
            opponent
                .weights
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(j, w)| w * model.payoffs_by_index(i, j).0)
                .sum()
        })
        .collect()
}

/// Formats `x` with `digits` significant digits, trimming trailing zeros.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{:.*e}", digits.saturating_sub(1), x);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
