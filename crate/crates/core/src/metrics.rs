//! Group-fairness metrics over hard decisions.
//!
//! Sign convention: statistical parity is unprivileged-minus-privileged, so
//! negative values mean bias against the unprivileged group; disparate
//! impact is the unprivileged/privileged rate ratio, < 1 meaning the same.
//! 0.8 is the conventional four-fifths alert line for disparate impact
//! (documentation only, never enforced here).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Privileged,
    Unprivileged,
}

/// Parallel arrays of 0/1 decisions and group membership.
#[derive(Debug, Clone)]
pub struct GroupedPredictions {
    decisions: Vec<u8>,
    groups: Vec<Group>,
}

impl GroupedPredictions {
    pub fn new(decisions: Vec<u8>, groups: Vec<Group>) -> Result<Self> {
        if decisions.len() != groups.len() {
            return Err(Error::Contract(format!(
                "{} decisions vs {} group labels",
                decisions.len(),
                groups.len()
            )));
        }
        if decisions.is_empty() {
            return Err(Error::Contract("no predictions".into()));
        }
        if decisions.iter().any(|&d| d > 1) {
            return Err(Error::Contract("decisions must be 0 or 1".into()));
        }
        Ok(GroupedPredictions { decisions, groups })
    }

    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn group_size(&self, group: Group) -> usize {
        self.groups.iter().filter(|&&g| g == group).count()
    }

    /// Fraction of positive decisions within one group.
    pub fn positive_rate(&self, group: Group) -> Result<f64> {
        let mut positives = 0usize;
        let mut total = 0usize;
        for (d, g) in self.decisions.iter().zip(&self.groups) {
            if *g == group {
                total += 1;
                positives += usize::from(*d);
            }
        }
        if total == 0 {
            return Err(Error::EmptyGroup(match group {
                Group::Privileged => "privileged",
                Group::Unprivileged => "unprivileged",
            }));
        }
        Ok(positives as f64 / total as f64)
    }

    /// P(decision=1 | unprivileged) - P(decision=1 | privileged).
    pub fn statistical_parity(&self) -> Result<f64> {
        Ok(self.positive_rate(Group::Unprivileged)? - self.positive_rate(Group::Privileged)?)
    }

    /// P(decision=1 | unprivileged) / P(decision=1 | privileged).
    ///
    /// Errors with a distinct undefined-ratio error if the privileged
    /// positive rate is zero.
    pub fn disparate_impact(&self) -> Result<f64> {
        let unpriv = self.positive_rate(Group::Unprivileged)?;
        let priv_rate = self.positive_rate(Group::Privileged)?;
        if priv_rate == 0.0 {
            return Err(Error::UndefinedRatio);
        }
        Ok(unpriv / priv_rate)
    }
}

/// Serialized audit report: both metrics with their inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub statistical_parity: f64,
    pub disparate_impact: f64,
    pub group_sizes: GroupValues<usize>,
    pub positive_rates: GroupValues<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupValues<T> {
    pub privileged: T,
    pub unprivileged: T,
}

impl FairnessReport {
    pub fn compute(gp: &GroupedPredictions) -> Result<Self> {
        Ok(FairnessReport {
            statistical_parity: gp.statistical_parity()?,
            disparate_impact: gp.disparate_impact()?,
            group_sizes: GroupValues {
                privileged: gp.group_size(Group::Privileged),
                unprivileged: gp.group_size(Group::Unprivileged),
            },
            positive_rates: GroupValues {
                privileged: gp.positive_rate(Group::Privileged)?,
                unprivileged: gp.positive_rate(Group::Unprivileged)?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gp(unpriv: &[u8], privd: &[u8]) -> GroupedPredictions {
        let decisions: Vec<u8> = unpriv.iter().chain(privd).copied().collect();
        let groups: Vec<Group> = std::iter::repeat_n(Group::Unprivileged, unpriv.len())
            .chain(std::iter::repeat_n(Group::Privileged, privd.len()))
            .collect();
        GroupedPredictions::new(decisions, groups).unwrap()
    }

    #[test]
    fn positive_rate_counts() {
        let g = gp(&[1, 0, 1, 1], &[0, 0]);
        assert_relative_eq!(g.positive_rate(Group::Unprivileged).unwrap(), 0.75);
        assert_relative_eq!(g.positive_rate(Group::Privileged).unwrap(), 0.0);
    }

    #[test]
    fn empty_group_is_an_error() {
        let g = gp(&[1, 0], &[]);
        assert!(matches!(
            g.positive_rate(Group::Privileged),
            Err(Error::EmptyGroup("privileged"))
        ));
        assert!(g.statistical_parity().is_err());
    }

    #[test]
    fn statistical_parity_is_unpriv_minus_priv() {
        // rates 0.3 vs 0.5
        let g = gp(&[1, 1, 1, 0, 0, 0, 0, 0, 0, 0], &[1, 1, 1, 1, 1, 0, 0, 0, 0, 0]);
        assert_relative_eq!(g.statistical_parity().unwrap(), -0.2);
        assert_relative_eq!(g.disparate_impact().unwrap(), 0.6);
    }

    #[test]
    fn identical_groups_are_at_parity() {
        let g = gp(&[1, 0, 1], &[1, 0, 1]);
        assert_eq!(g.statistical_parity().unwrap(), 0.0);
        assert_eq!(g.disparate_impact().unwrap(), 1.0);
    }

    #[test]
    fn zero_privileged_rate_is_undefined_ratio() {
        let g = gp(&[1, 0], &[0, 0]);
        assert!(matches!(g.disparate_impact(), Err(Error::UndefinedRatio)));
        // distinct from the empty-group error
        let empty = gp(&[1, 0], &[]);
        assert!(matches!(
            empty.disparate_impact(),
            Err(Error::EmptyGroup(_))
        ));
    }

    #[test]
    fn brute_force_oracle_on_all_4v4_assignments() {
        // oracle: direct counting over the bit patterns
        for unpriv_bits in 0u32..16 {
            for priv_bits in 0u32..16 {
                let unpriv: Vec<u8> = (0..4).map(|i| ((unpriv_bits >> i) & 1) as u8).collect();
                let privd: Vec<u8> = (0..4).map(|i| ((priv_bits >> i) & 1) as u8).collect();
                let g = gp(&unpriv, &privd);

                let u_pos = unpriv_bits.count_ones() as f64;
                let p_pos = priv_bits.count_ones() as f64;
                let sp_oracle = u_pos / 4.0 - p_pos / 4.0;
                assert_eq!(g.statistical_parity().unwrap(), sp_oracle);

                match g.disparate_impact() {
                    Ok(di) => {
                        assert!(p_pos > 0.0);
                        assert_eq!(di, (u_pos / 4.0) / (p_pos / 4.0));
                    }
                    Err(Error::UndefinedRatio) => assert_eq!(p_pos, 0.0),
                    Err(other) => panic!("unexpected {other:?}"),
                }
            }
        }
    }

    #[test]
    fn swapping_group_labels_negates_and_inverts() {
        let g = gp(&[1, 0, 0, 1, 0], &[1, 1, 1, 0, 0]);
        let swapped = {
            let decisions: Vec<u8> = [1u8, 0, 0, 1, 0].iter().chain(&[1u8, 1, 1, 0, 0]).copied().collect();
            let groups: Vec<Group> = std::iter::repeat_n(Group::Privileged, 5)
                .chain(std::iter::repeat_n(Group::Unprivileged, 5))
                .collect();
            GroupedPredictions::new(decisions, groups).unwrap()
        };
        assert_relative_eq!(
            g.statistical_parity().unwrap(),
            -swapped.statistical_parity().unwrap()
        );
        assert_relative_eq!(
            g.disparate_impact().unwrap(),
            1.0 / swapped.disparate_impact().unwrap()
        );
    }

    #[test]
    fn report_serializes_round_trip() {
        let g = gp(&[1, 0, 1, 1], &[1, 1, 0, 1]);
        let report = FairnessReport::compute(&g).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: FairnessReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
        assert_eq!(report.group_sizes.privileged, 4);
    }
}
