//! Markov-chain models expressed as reaction systems.
//!
//! Every model is a set of channels, each with a fixed stoichiometry vector
//! and a state-dependent propensity. Propensities vanish on every boundary a
//! firing would cross, so no engine ever needs to clamp a state.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// An integer-valued linear functional `constant + coeffs · x` of the state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForm {
    pub constant: i64,
    pub coeffs: Vec<i64>,
}

impl LinearForm {
    pub fn coordinate(dimension: usize, index: usize) -> Self {
        let mut coeffs = vec![0; dimension];
        coeffs[index] = 1;
        Self {
            constant: 0,
            coeffs,
        }
    }

    pub fn eval(&self, state: &[i64]) -> i64 {
        self.constant
            + self
                .coeffs
                .iter()
                .zip(state)
                .map(|(c, x)| c * x)
                .sum::<i64>()
    }

    /// Change of the form's value when `delta` is added to the state.
    pub fn change(&self, delta: &[i64]) -> i64 {
        self.coeffs.iter().zip(delta).map(|(c, d)| c * d).sum()
    }
}

/// A population count that reactions can consume, used by τ-leaping to
/// decide criticality and to bound propensity changes.
///
/// `order_factor` is the factor `g` of the leap condition: the highest order
/// of any channel in which the species is a reactant.
#[derive(Debug, Clone)]
pub struct Species {
    pub name: &'static str,
    pub level: LinearForm,
    pub order_factor: f64,
}

/// A species a channel needs, with the number of units each firing requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reactant {
    pub species: usize,
    pub per_firing: u32,
}

/// Uniform view of a continuous-time Markov chain on an integer lattice.
pub trait ReactionSystem: Send + Sync {
    fn dimension(&self) -> usize;

    fn reaction_count(&self) -> usize;

    fn reaction_name(&self, reaction: usize) -> &'static str;

    fn stoichiometry(&self, reaction: usize) -> &[i64];

    /// Writes the propensity of every channel at `state` into `out`.
    fn propensities(&self, state: &[i64], out: &mut [f64]);

    fn is_feasible(&self, state: &[i64]) -> bool;

    fn species(&self) -> &[Species];

    fn reactants(&self, reaction: usize) -> &[Reactant];

    /// Number of firings of `reaction` that would exhaust one of its
    /// reactants; `u64::MAX` when it needs none.
    fn firings_to_exhaustion(&self, reaction: usize, state: &[i64]) -> u64 {
        self.reactants(reaction)
            .iter()
            .map(|r| {
                let level = self.species()[r.species].level.eval(state).max(0) as u64;
                level / u64::from(r.per_firing)
            })
            .min()
            .unwrap_or(u64::MAX)
    }

    fn total_propensity(&self, state: &[i64]) -> f64 {
        let mut buf = vec![0.0; self.reaction_count()];
        self.propensities(state, &mut buf);
        buf.iter().sum()
    }
}

fn check_rate(name: &'static str, value: f64, strictly_positive: bool) -> Result<()> {
    if !value.is_finite() {
        return Err(invalid(name, format!("must be finite, got {value}")));
    }
    if strictly_positive && value <= 0.0 {
        return Err(invalid(name, format!("must be > 0, got {value}")));
    }
    if value < 0.0 {
        return Err(invalid(name, format!("must be >= 0, got {value}")));
    }
    Ok(())
}

/// Parameters of the SIRS chain: population `N`, transmission rate `λ`, and
/// immunity-loss rate `γ`. Recovery happens at rate 1 per infected individual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirsParams {
    n_pop: u64,
    lambda: f64,
    gamma: f64,
}

impl SirsParams {
    pub fn new(n_pop: u64, lambda: f64, gamma: f64) -> Result<Self> {
        if n_pop == 0 {
            return Err(invalid("n_pop", "population size must be at least 1"));
        }
        if n_pop > i64::MAX as u64 / 4 {
            return Err(invalid("n_pop", "population size too large"));
        }
        check_rate("lambda", lambda, true)?;
        check_rate("gamma", gamma, true)?;
        Ok(Self {
            n_pop,
            lambda,
            gamma,
        })
    }

    pub fn n_pop(&self) -> u64 {
        self.n_pop
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Infected and recovered counts `(i, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SirsState {
    pub i: u64,
    pub r: u64,
}

impl SirsState {
    pub fn new(params: &SirsParams, i: u64, r: u64) -> Result<Self> {
        if i.checked_add(r).map_or(true, |s| s > params.n_pop) {
            return Err(Error::InfeasibleState {
                state: vec![i as i64, r as i64],
            });
        }
        Ok(Self { i, r })
    }

    pub fn to_vec(self) -> Vec<i64> {
        vec![self.i as i64, self.r as i64]
    }
}

/// SIRS chain on `{(i, r) : 0 <= i + r <= N}`.
///
/// Channels, in this order: infection `(+1, 0)` at `λ(N−i−r)i/N`, immunity
/// loss `(0, −1)` at `γr`, recovery `(−1, +1)` at `i`.
#[derive(Debug, Clone)]
pub struct SirsSystem {
    params: SirsParams,
    species: [Species; 3],
    reactants: [[Reactant; 2]; 3],
    reactant_counts: [usize; 3],
}

impl SirsSystem {
    pub const INFECTION: usize = 0;
    pub const IMMUNITY_LOSS: usize = 1;
    pub const RECOVERY: usize = 2;
    /// State index of the infected count.
    pub const INFECTED: usize = 0;
    pub const RECOVERED: usize = 1;

    const STOICHIOMETRY: [[i64; 2]; 3] = [[1, 0], [0, -1], [-1, 1]];

    pub fn params(&self) -> &SirsParams {
        &self.params
    }
}

/// Builds the SIRS reaction system.
pub fn sirs_system(params: SirsParams) -> SirsSystem {
    let n = params.n_pop as i64;
    const S: usize = 0;
    const I: usize = 1;
    const R: usize = 2;
    let species = [
        Species {
            name: "S",
            level: LinearForm {
                constant: n,
                coeffs: vec![-1, -1],
            },
            order_factor: 2.0,
        },
        Species {
            name: "I",
            level: LinearForm::coordinate(2, 0),
            order_factor: 2.0,
        },
        Species {
            name: "R",
            level: LinearForm::coordinate(2, 1),
            order_factor: 1.0,
        },
    ];
    let one = |species| Reactant {
        species,
        per_firing: 1,
    };
    // Infection needs a susceptible and an infected individual; the infected
    // one acts as a catalyst but still governs the channel's criticality.
    let reactants = [[one(S), one(I)], [one(R), one(R)], [one(I), one(I)]];
    SirsSystem {
        params,
        species,
        reactants,
        reactant_counts: [2, 1, 1],
    }
}

impl ReactionSystem for SirsSystem {
    fn dimension(&self) -> usize {
        2
    }

    fn reaction_count(&self) -> usize {
        3
    }

    fn reaction_name(&self, reaction: usize) -> &'static str {
        ["infection", "immunity_loss", "recovery"][reaction]
    }

    fn stoichiometry(&self, reaction: usize) -> &[i64] {
        &Self::STOICHIOMETRY[reaction]
    }

    fn propensities(&self, state: &[i64], out: &mut [f64]) {
        let (i, r) = (state[0], state[1]);
        let n = self.params.n_pop as i64;
        out[Self::INFECTION] = self.params.lambda * (n - i - r) as f64 * i as f64 / n as f64;
        out[Self::IMMUNITY_LOSS] = self.params.gamma * r as f64;
        out[Self::RECOVERY] = i as f64;
    }

    fn is_feasible(&self, state: &[i64]) -> bool {
        state.len() == 2
            && state[0] >= 0
            && state[1] >= 0
            && state[0] + state[1] <= self.params.n_pop as i64
    }

    fn species(&self) -> &[Species] {
        &self.species
    }

    fn reactants(&self, reaction: usize) -> &[Reactant] {
        &self.reactants[reaction][..self.reactant_counts[reaction]]
    }
}

/// Linear birth-death-immigration chain: `x → x+1` at `βx + α`,
/// `x → x−1` at `μx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdiParams {
    beta: f64,
    mu: f64,
    alpha: f64,
    absorb_at_zero: bool,
}

impl BdiParams {
    pub fn new(beta: f64, mu: f64, alpha: f64, absorb_at_zero: bool) -> Result<Self> {
        check_rate("beta", beta, false)?;
        check_rate("mu", mu, false)?;
        check_rate("alpha", alpha, false)?;
        if beta == 0.0 && mu == 0.0 && alpha == 0.0 {
            return Err(invalid("beta", "beta, mu and alpha cannot all be zero"));
        }
        Ok(Self {
            beta,
            mu,
            alpha,
            absorb_at_zero,
        })
    }

    /// Linear birth-death chain without immigration.
    pub fn birth_death(beta: f64, mu: f64) -> Result<Self> {
        Self::new(beta, mu, 0.0, false)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn absorb_at_zero(&self) -> bool {
        self.absorb_at_zero
    }

    pub fn up_rate(&self, x: i64) -> f64 {
        if x < 0 || (x == 0 && self.absorb_at_zero) {
            return 0.0;
        }
        self.beta * x as f64 + self.alpha
    }

    pub fn down_rate(&self, x: i64) -> f64 {
        if x <= 0 {
            return 0.0;
        }
        self.mu * x as f64
    }
}

#[derive(Debug, Clone)]
pub struct BdiSystem {
    params: BdiParams,
    species: [Species; 1],
    reactants: [Reactant; 1],
}

impl BdiSystem {
    pub const UP: usize = 0;
    pub const DOWN: usize = 1;

    pub fn params(&self) -> &BdiParams {
        &self.params
    }
}

pub fn bdi_system(params: BdiParams) -> BdiSystem {
    BdiSystem {
        params,
        species: [Species {
            name: "X",
            level: LinearForm::coordinate(1, 0),
            order_factor: 1.0,
        }],
        reactants: [Reactant {
            species: 0,
            per_firing: 1,
        }],
    }
}

impl ReactionSystem for BdiSystem {
    fn dimension(&self) -> usize {
        1
    }

    fn reaction_count(&self) -> usize {
        2
    }

    fn reaction_name(&self, reaction: usize) -> &'static str {
        ["up", "down"][reaction]
    }

    fn stoichiometry(&self, reaction: usize) -> &[i64] {
        const UP: [i64; 1] = [1];
        const DOWN: [i64; 1] = [-1];
        if reaction == Self::UP {
            &UP
        } else {
            &DOWN
        }
    }

    fn propensities(&self, state: &[i64], out: &mut [f64]) {
        out[Self::UP] = self.params.up_rate(state[0]);
        out[Self::DOWN] = self.params.down_rate(state[0]);
    }

    fn is_feasible(&self, state: &[i64]) -> bool {
        state.len() == 1 && state[0] >= 0
    }

    fn species(&self) -> &[Species] {
        &self.species
    }

    fn reactants(&self, _reaction: usize) -> &[Reactant] {
        &self.reactants
    }
}
