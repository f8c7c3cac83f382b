use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::NetworkCase;

/// Signed load change in kW, `[bus index][t]`; positive is extra load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub bus_ids: Vec<usize>,
    pub delta: Vec<Vec<f64>>,
}

impl Disturbance {
    pub fn zero(case: &NetworkCase) -> Self {
        Disturbance {
            bus_ids: case.buses.iter().map(|b| b.id).collect(),
            delta: vec![vec![0.0; case.horizon]; case.buses.len()],
        }
    }

    pub fn validate(&self, case: &NetworkCase) -> Result<()> {
        let ids: Vec<usize> = case.buses.iter().map(|b| b.id).collect();
        if self.bus_ids != ids {
            return Err(Error::Dimension("disturbance buses differ from the case".into()));
        }
        if self.delta.len() != ids.len() || self.delta.iter().any(|r| r.len() != case.horizon) {
            return Err(Error::Dimension(format!("disturbance must be [{}][{}]", ids.len(), case.horizon)));
        }
        for (bi, row) in self.delta.iter().enumerate() {
            for (t, &d) in row.iter().enumerate() {
                if !d.is_finite() {
                    return Err(Error::Validation(format!("disturbance at bus {} t={t} is not finite", ids[bi])));
                }
                if d < -case.buses[bi].fixed_load[t] {
                    return Err(Error::Validation(format!(
                        "disturbance at bus {} t={t} removes more than the fixed load",
                        ids[bi]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Intervals carrying any nonzero delta.
    pub fn affected(&self) -> Vec<usize> {
        let horizon = self.delta.first().map_or(0, Vec::len);
        (0..horizon).filter(|&t| self.delta.iter().any(|r| r[t] != 0.0)).collect()
    }

    pub fn total(&self, t: usize) -> f64 {
        self.delta.iter().map(|r| r[t]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ieee33_subcase;

    #[test]
    fn affected_lists_nonzero_intervals() {
        let case = ieee33_subcase(3);
        let mut d = Disturbance::zero(&case);
        assert!(d.affected().is_empty());
        d.delta[1][5] = 10.0;
        d.delta[2][7] = -1.0;
        assert_eq!(d.affected(), vec![5, 7]);
        assert_eq!(d.total(5), 10.0);
        d.validate(&case).unwrap();
    }

    #[test]
    fn cannot_remove_more_than_the_load() {
        let case = ieee33_subcase(3);
        let mut d = Disturbance::zero(&case);
        d.delta[1][0] = -case.buses[1].fixed_load[0] - 1.0;
        assert!(matches!(d.validate(&case), Err(Error::Validation(_))));
        let mut short = Disturbance::zero(&case);
        short.delta.pop();
        assert!(matches!(short.validate(&case), Err(Error::Dimension(_))));
    }
}
