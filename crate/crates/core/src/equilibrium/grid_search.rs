//! Brute-force commitment search over a lattice of the leader simplex, used
//! to cross-check the LP solver at small k.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stage_game::{payoff_matrices, MarketModel, PriceDistribution, Seller};

/// Follower ties within this (per unit of leader mass) go the leader's way.
pub const GRID_TIE_TOLERANCE: f64 = 1e-12;

/// Largest number of lattice points searched exhaustively.
pub const MAX_EXHAUSTIVE_POINTS: u128 = 250_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub leader_value: f64,
    pub leader_dist: PriceDistribution,
    /// Lattice denominator: weights are multiples of `1 / resolution`.
    pub resolution: usize,
    /// False when the search was a coarse pass followed by hill climbing.
    pub exhaustive: bool,
}

/// Number of points `C(n + k - 1, k - 1)` of the lattice with denominator `n`.
pub fn lattice_size(k: usize, n: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 1..k as u128 {
        c = c * (n as u128 + i) / i;
    }
    c
}

struct Tables {
    k: usize,
    /// Leader and follower payoffs, leader action major.
    lead: Vec<f64>,
    fol: Vec<f64>,
}

impl Tables {
    fn new(model: &MarketModel, leader: Seller) -> Result<Self> {
        let m = payoff_matrices(model)?;
        let k = m.k();
        let mut lead = vec![0.0; k * k];
        let mut fol = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                let (l, f) = match leader {
                    Seller::One => (m.a(i, j), m.b(i, j)),
                    Seller::Two => (m.b(j, i), m.a(j, i)),
                };
                lead[i * k + j] = l;
                fol[i * k + j] = f;
            }
        }
        Ok(Tables { k, lead, fol })
    }

    /// Leader payoff (times `n`) of integer counts summing to `n`.
    fn value(&self, counts: &[usize], n: usize, fsum: &mut [f64], lsum: &mut [f64]) -> f64 {
        let k = self.k;
        fsum.fill(0.0);
        lsum.fill(0.0);
        for (i, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = c as f64;
            for j in 0..k {
                fsum[j] += c * self.fol[i * k + j];
                lsum[j] += c * self.lead[i * k + j];
            }
        }
        let best = fsum.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = GRID_TIE_TOLERANCE * n as f64;
        (0..k)
            .filter(|&j| fsum[j] >= best - tol)
            .map(|j| lsum[j])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn for_each_point(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(rest: usize, slot: usize, c: &mut [usize], f: &mut impl FnMut(&[usize])) {
        if slot + 1 == c.len() {
            c[slot] = rest;
            f(c);
            return;
        }
        for v in 0..=rest {
            c[slot] = v;
            rec(rest - v, slot + 1, c, f);
        }
    }
    let mut c = vec![0; k];
    rec(n, 0, &mut c, f);
}

fn to_dist(counts: &[usize], n: usize) -> Result<PriceDistribution> {
    PriceDistribution::from_unnormalized(counts.iter().map(|c| *c as f64 / n as f64).collect())
}

/// Best commitment on the lattice with denominator `resolution`. When the
/// lattice is too large, searches a coarse lattice (denominator `coarse`,
/// which must divide `resolution`) and hill-climbs from its best points by
/// moving one `1 / resolution` unit of mass between two prices at a time.
pub fn stackelberg_grid_search(
    model: &MarketModel,
    leader: Seller,
    resolution: usize,
    coarse: usize,
) -> Result<GridSearchResult> {
    let k = model.k();
    if resolution == 0 || coarse == 0 || !resolution.is_multiple_of(coarse) {
        return Err(Error::InvalidParameter(format!(
            "coarse lattice 1/{coarse} must refine into 1/{resolution}"
        )));
    }
    let t = Tables::new(model, leader)?;
    let (mut fs, mut ls) = (vec![0.0; k], vec![0.0; k]);
    if lattice_size(k, resolution) <= MAX_EXHAUSTIVE_POINTS {
        let mut best = (f64::NEG_INFINITY, vec![0; k]);
        for_each_point(resolution, k, &mut |c| {
            let v = t.value(c, resolution, &mut fs, &mut ls);
            if v > best.0 {
                best = (v, c.to_vec());
            }
        });
        return Ok(GridSearchResult {
            leader_value: best.0 / resolution as f64,
            leader_dist: to_dist(&best.1, resolution)?,
            resolution,
            exhaustive: true,
        });
    }
    if lattice_size(k, coarse) > MAX_EXHAUSTIVE_POINTS {
        return Err(Error::InvalidParameter(format!(
            "coarse lattice 1/{coarse} has too many points for k = {k}"
        )));
    }
    let mut starts: Vec<(f64, Vec<usize>)> = Vec::new();
    for_each_point(coarse, k, &mut |c| {
        starts.push((
            t.value(c, coarse, &mut fs, &mut ls) / coarse as f64,
            c.to_vec(),
        ));
    });
    starts.sort_by(|a, b| b.0.total_cmp(&a.0));
    starts.truncate(20);
    let scale = resolution / coarse;
    let mut best = (f64::NEG_INFINITY, vec![0; k]);
    for (_, s) in starts {
        let mut c: Vec<usize> = s.iter().map(|v| v * scale).collect();
        let mut cur = t.value(&c, resolution, &mut fs, &mut ls);
        loop {
            let mut improved = false;
            for a in 0..k {
                for b in 0..k {
                    if a == b || c[a] == 0 {
                        continue;
                    }
                    c[a] -= 1;
                    c[b] += 1;
                    let v = t.value(&c, resolution, &mut fs, &mut ls);
                    if v > cur + GRID_TIE_TOLERANCE {
                        cur = v;
                        improved = true;
                    } else {
                        c[a] += 1;
                        c[b] -= 1;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if cur > best.0 {
            best = (cur, c);
        }
    }
    Ok(GridSearchResult {
        leader_value: best.0 / resolution as f64,
        leader_dist: to_dist(&best.1, resolution)?,
        resolution,
        exhaustive: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_sizes() {
        assert_eq!(lattice_size(2, 1000), 1001);
        assert_eq!(lattice_size(3, 1000), 501_501);
        assert_eq!(lattice_size(5, 1000), 42_084_793_751);
    }

    #[test]
    fn k2_commits_to_the_top_price() {
        let r = stackelberg_grid_search(&MarketModel::bertrand(2).unwrap(), Seller::One, 100, 10)
            .unwrap();
        assert!(r.exhaustive);
        assert!((r.leader_value - 0.5).abs() < 1e-12);
        assert_eq!(r.leader_dist.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn seats_are_symmetric() {
        let m = MarketModel::logit(3, 5.0).unwrap();
        let a = stackelberg_grid_search(&m, Seller::One, 60, 10).unwrap();
        let b = stackelberg_grid_search(&m, Seller::Two, 60, 10).unwrap();
        assert!((a.leader_value - b.leader_value).abs() < 1e-12);
    }

    #[test]
    fn coarse_must_divide_resolution() {
        let m = MarketModel::bertrand(3).unwrap();
        assert!(stackelberg_grid_search(&m, Seller::One, 100, 30).is_err());
    }
}
