//! SIS epidemics control: susceptible agents may take costly precautions.
//!
//! States `0 = S`, `1 = I`; actions `0 = no precaution`, `1 = precaution`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{check_nonnegative, check_probability, MfgProblem, NeighborhoodMeanField};

pub const SUSCEPTIBLE: usize = 0;
pub const INFECTED: usize = 1;
pub const IGNORE: usize = 0;
pub const PRECAUTION: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SisParams {
    /// Per-layer infection rates.
    pub tau: Vec<f64>,
    /// Recovery probability per epoch.
    pub delta: f64,
    pub cost_precaution: f64,
    pub cost_infected: f64,
    pub mu0_infected: f64,
    pub horizon: usize,
}

impl Default for SisParams {
    fn default() -> Self {
        SisParams {
            tau: vec![0.8, 0.8],
            delta: 0.2,
            cost_precaution: 0.5,
            cost_infected: 2.0,
            mu0_infected: 0.5,
            horizon: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Sis {
    params: SisParams,
    layer_cards: Vec<usize>,
}

pub fn sis_problem(params: SisParams, layer_cards: &[usize]) -> Result<Sis> {
    if params.tau.len() != layer_cards.len() {
        return Err(Error::InvalidProblem(format!(
            "`tau` has {} entries for {} layer(s)",
            params.tau.len(),
            layer_cards.len()
        )));
    }
    for &t in &params.tau {
        check_nonnegative("tau", t)?;
    }
    check_probability("delta", params.delta)?;
    check_nonnegative("cost_precaution", params.cost_precaution)?;
    check_nonnegative("cost_infected", params.cost_infected)?;
    check_probability("mu0_infected", params.mu0_infected)?;
    if params.horizon == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "horizon".into(),
            value: 0.0,
            expected: ">= 1",
        });
    }
    if layer_cards.iter().any(|&k| k < 2) {
        return Err(Error::InvalidProblem(
            "layer cardinalities must be >= 2".into(),
        ));
    }
    Ok(Sis {
        params,
        layer_cards: layer_cards.to_vec(),
    })
}

impl Sis {
    pub fn params(&self) -> &SisParams {
        &self.params
    }

    /// `min(1, sum_d tau_d * E_nu_d[# infected neighbour slots])`.
    pub fn infection_probability(&self, nu: &NeighborhoodMeanField) -> f64 {
        let total: f64 = nu
            .layers()
            .iter()
            .zip(&self.params.tau)
            .map(|(layer, tau)| tau * layer.slot_counts()[INFECTED])
            .sum();
        total.min(1.0)
    }
}

impl MfgProblem for Sis {
    fn n_states(&self) -> usize {
        2
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn layer_cards(&self) -> &[usize] {
        &self.layer_cards
    }

    fn initial(&self, _alpha: f64) -> Vec<f64> {
        vec![1.0 - self.params.mu0_infected, self.params.mu0_infected]
    }

    fn transition(
        &self,
        _t: usize,
        x: usize,
        u: usize,
        nu: &NeighborhoodMeanField,
        out: &mut [f64],
    ) {
        let to_susceptible = match (x, u) {
            (SUSCEPTIBLE, PRECAUTION) => 1.0,
            (SUSCEPTIBLE, _) => 1.0 - self.infection_probability(nu),
            _ => self.params.delta,
        };
        out[SUSCEPTIBLE] = to_susceptible;
        out[INFECTED] = 1.0 - to_susceptible;
    }

    /// Costs enter negatively: `-(c_P 1{precaution} + c_I 1{infected})`.
    fn reward(&self, _t: usize, x: usize, u: usize, _nu: &NeighborhoodMeanField) -> f64 {
        let mut cost = 0.0;
        if u == PRECAUTION {
            cost += self.params.cost_precaution;
        }
        if x == INFECTED {
            cost += self.params.cost_infected;
        }
        -cost
    }

    fn state_labels(&self) -> Vec<String> {
        vec!["S".into(), "I".into()]
    }

    fn action_labels(&self) -> Vec<String> {
        vec!["ignore".into(), "precaution".into()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{check_transition, LayerMeasure};

    fn defaults() -> Sis {
        sis_problem(SisParams::default(), &[2, 3]).unwrap()
    }

    #[test]
    fn recovery_rate() {
        let nu = NeighborhoodMeanField::zeros(&[2, 3], 2);
        for u in [IGNORE, PRECAUTION] {
            let out = check_transition(&defaults(), 0, INFECTED, u, &nu).unwrap();
            assert_eq!(out[SUSCEPTIBLE], 0.2);
        }
    }

    #[test]
    fn precautions_fully_protect() {
        let nu = NeighborhoodMeanField::new(vec![
            LayerMeasure::product(&[0.0, 1.0], 1),
            LayerMeasure::product(&[0.0, 1.0], 2),
        ]);
        let out = check_transition(&defaults(), 0, SUSCEPTIBLE, PRECAUTION, &nu).unwrap();
        assert_eq!(out[INFECTED], 0.0);
        // 0.8 * 1 + 0.8 * 2 saturates
        let out = check_transition(&defaults(), 0, SUSCEPTIBLE, IGNORE, &nu).unwrap();
        assert_eq!(out[INFECTED], 1.0);
    }

    #[test]
    fn partial_exposure() {
        let nu = NeighborhoodMeanField::new(vec![
            LayerMeasure::from_values(1, 2, vec![0.2, 0.25]).unwrap(),
            LayerMeasure::zeros(2, 2),
        ]);
        assert!((defaults().infection_probability(&nu) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn rewards_are_costs() {
        let nu = NeighborhoodMeanField::zeros(&[2, 3], 2);
        assert_eq!(defaults().reward(0, SUSCEPTIBLE, IGNORE, &nu), 0.0);
        assert_eq!(defaults().reward(0, SUSCEPTIBLE, PRECAUTION, &nu), -0.5);
        assert_eq!(defaults().reward(0, INFECTED, PRECAUTION, &nu), -2.5);
    }

    #[test]
    fn validation() {
        assert!(sis_problem(SisParams::default(), &[2]).is_err());
        let bad = SisParams {
            delta: 1.5,
            ..SisParams::default()
        };
        assert!(sis_problem(bad, &[2, 3]).is_err());
    }
}
