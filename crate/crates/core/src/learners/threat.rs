use super::scripted::ScheduleEntry;
use super::{AlgorithmConfig, AlgorithmKind, Feedback, PricingAlgorithm};
use crate::error::{Error, Result};
use crate::stage_game::{Price, PriceDistribution, MIN_THEOREM_K};

/// Last round of the cooperative phase, `floor(T - T / (2 (k-1)/k) - 1)`,
/// computed in integers.
pub fn threat_cutoff(k: usize, rounds: usize) -> Result<usize> {
    if k < MIN_THEOREM_K {
        return Err(Error::Config(format!(
            "the threat leader needs k >= {MIN_THEOREM_K}, got {k}"
        )));
    }
    if rounds < 4 {
        return Err(Error::Config(format!(
            "the threat leader needs T >= 4, got {rounds}"
        )));
    }
    let den = 2 * (k - 1);
    let (t, k) = (rounds as u128, k as u128);
    let share = (t * k).div_ceil(den as u128);
    match (t - 1).checked_sub(share) {
        Some(cut) if cut > 0 => Ok(cut as usize),
        _ => Err(Error::Config(format!(
            "T = {rounds} leaves no cooperative phase for k = {k}"
        ))),
    }
}

/// Asks the follower to price at 1 while it prices at 1 - 1/k, then takes the
/// top price itself; any deviation during the first phase is punished by
/// pricing at 1/k forever.
pub struct ThreatLeader {
    config: AlgorithmConfig,
    k: usize,
    cutoff: usize,
    punished_at: Option<usize>,
}

impl ThreatLeader {
    pub fn with_config(k: usize, rounds: usize, config: AlgorithmConfig) -> Result<Self> {
        Ok(ThreatLeader {
            config,
            k,
            cutoff: threat_cutoff(k, rounds)?,
            punished_at: None,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Round whose observed deviation triggered the punishment.
    pub fn punished_at(&self) -> Option<usize> {
        self.punished_at
    }
}

pub fn threat_leader(k: usize, rounds: usize) -> Result<ThreatLeader> {
    ThreatLeader::with_config(k, rounds, AlgorithmConfig::new(AlgorithmKind::ThreatLeader))
}

impl PricingAlgorithm for ThreatLeader {
    fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    fn next(&mut self, round: usize) -> Vec<f64> {
        let level = match self.punished_at {
            Some(_) => 1,
            None if round <= self.cutoff => self.k - 1,
            None => self.k,
        };
        PriceDistribution::point_mass(self.k, Price::from_index(level - 1)).into_weights()
    }

    fn observe(&mut self, feedback: &Feedback<'_>) {
        if self.punished_at.is_some() || feedback.round > self.cutoff {
            return;
        }
        let top = self.k - 1;
        let compliant = feedback
            .opponent
            .iter()
            .enumerate()
            .all(|(i, w)| *w == if i == top { 1.0 } else { 0.0 });
        if !compliant {
            self.punished_at = Some(feedback.round);
        }
    }

    fn is_phase_boundary(&self, round: usize) -> bool {
        round == 1 || round == self.cutoff + 1 || self.punished_at.is_some_and(|t| round == t + 1)
    }
}

/// Follower that complies: price 1 through the cutoff, then 1 - 1/k.
pub fn threat_compliant_schedule(k: usize, rounds: usize) -> Result<Vec<ScheduleEntry>> {
    let cut = threat_cutoff(k, rounds)?;
    Ok(vec![
        ScheduleEntry::new(
            1..=cut,
            &PriceDistribution::point_mass(k, Price::from_index(k - 1)),
        ),
        ScheduleEntry::new(
            cut + 1..=rounds,
            &PriceDistribution::point_mass(k, Price::from_index(k - 2)),
        ),
    ])
}

/// Follower that complies until `deviate_at`, undercuts to 1 - 2/k in that
/// round, then best-responds to the punishment at 1/k.
pub fn threat_deviating_schedule(
    k: usize,
    rounds: usize,
    deviate_at: usize,
) -> Result<Vec<ScheduleEntry>> {
    let cut = threat_cutoff(k, rounds)?;
    if deviate_at == 0 || deviate_at > cut {
        return Err(Error::Config(format!(
            "deviation round must lie in 1..={cut}, got {deviate_at}"
        )));
    }
    let mut s = Vec::new();
    if deviate_at > 1 {
        s.push(ScheduleEntry::new(
            1..=deviate_at - 1,
            &PriceDistribution::point_mass(k, Price::from_index(k - 1)),
        ));
    }
    s.push(ScheduleEntry::new(
        deviate_at..=deviate_at,
        &PriceDistribution::point_mass(k, Price::from_index(k - 3)),
    ));
    if deviate_at < rounds {
        s.push(ScheduleEntry::new(
            deviate_at + 1..=rounds,
            &PriceDistribution::point_mass(k, Price::from_index(0)),
        ));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_matches_the_formula() {
        assert_eq!(threat_cutoff(20, 10_000).unwrap(), 4735);
        for (k, t) in [(20, 100), (25, 977), (100, 5000), (20, 12)] {
            let f =
                (t as f64 - t as f64 / (2.0 * (k as f64 - 1.0) / k as f64) - 1.0).floor() as usize;
            assert_eq!(threat_cutoff(k, t).unwrap(), f, "k={k} T={t}");
        }
        assert!(threat_cutoff(19, 10_000).is_err());
        assert!(threat_cutoff(20, 3).is_err());
        assert!(threat_cutoff(20, 4).is_err());
    }

    #[test]
    fn punishment_is_absorbing() {
        let k = 20;
        let mut l = threat_leader(k, 100).unwrap();
        let cut = l.cutoff();
        let comply = PriceDistribution::point_mass(k, Price::from_index(k - 1)).into_weights();
        let deviate = PriceDistribution::point_mass(k, Price::from_index(k - 2)).into_weights();
        let pay = vec![0.0; k];
        for t in 1..=3 {
            let own = l.next(t);
            assert_eq!(own[k - 2], 1.0);
            l.observe(&Feedback {
                round: t,
                own: &own,
                opponent: &comply,
                payoffs: &pay,
            });
        }
        let own = l.next(4);
        l.observe(&Feedback {
            round: 4,
            own: &own,
            opponent: &deviate,
            payoffs: &pay,
        });
        assert_eq!(l.punished_at(), Some(4));
        assert!(l.is_phase_boundary(5));
        for t in 5..=100 {
            let own = l.next(t);
            assert_eq!(own[0], 1.0, "round {t}");
            l.observe(&Feedback {
                round: t,
                own: &own,
                opponent: &comply,
                payoffs: &pay,
            });
        }
        assert!(cut < 100);
    }

    #[test]
    fn late_deviations_are_not_punished() {
        let k = 20;
        let mut l = threat_leader(k, 100).unwrap();
        let cut = l.cutoff();
        let other = vec![1.0 / k as f64; k];
        let pay = vec![0.0; k];
        let own = l.next(cut + 1);
        assert_eq!(own[k - 1], 1.0);
        l.observe(&Feedback {
            round: cut + 1,
            own: &own,
            opponent: &other,
            payoffs: &pay,
        });
        assert_eq!(l.punished_at(), None);
    }

    #[test]
    fn near_point_masses_count_as_deviations() {
        let k = 20;
        let mut l = threat_leader(k, 100).unwrap();
        let mut almost = vec![0.0; k];
        almost[k - 1] = 1.0 - 1e-15;
        almost[0] = 1e-15;
        let own = l.next(1);
        l.observe(&Feedback {
            round: 1,
            own: &own,
            opponent: &almost,
            payoffs: &vec![0.0; k],
        });
        assert_eq!(l.punished_at(), Some(1));
    }

    #[test]
    fn deviation_schedules_cover_the_horizon() {
        let cut = threat_cutoff(20, 50).unwrap();
        for d in [1, 2, cut] {
            let s = threat_deviating_schedule(20, 50, d).unwrap();
            assert_eq!(s.first().unwrap().from, 1);
            assert_eq!(s.last().unwrap().to, 50);
        }
        assert!(threat_deviating_schedule(20, 50, cut + 1).is_err());
        assert!(threat_deviating_schedule(20, 50, 0).is_err());
    }
}
