use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::bell::{mixed_radix, BellInequality, Scenario};
use crate::error::{arg, Error, Result};
use crate::ratio::{self, Rational};

pub const STRATEGY_LIMIT: u128 = 100_000_000;

/// Per party, the output chosen for each input.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DeterministicStrategy {
    pub maps: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn new(scenario: &Scenario, maps: Vec<Vec<usize>>) -> Result<Self> {
        if maps.len() != scenario.n() {
            return arg("one map per party required");
        }
        for (i, m) in maps.iter().enumerate() {
            if m.len() != scenario.inputs(i) || m.iter().enumerate().any(|(x, &a)| a >= scenario.outputs(i, x)) {
                return arg(format!("party {i}: map does not fit the scenario"));
            }
        }
        Ok(DeterministicStrategy { maps })
    }

    /// `p(a|x)` under this strategy, 0 or 1.
    pub fn prob(&self, x: &[usize], a: &[usize]) -> bool {
        self.maps.iter().zip(x.iter().zip(a)).all(|(m, (&xi, &ai))| m[xi] == ai)
    }

    pub fn value(&self, ineq: &BellInequality) -> Rational {
        ineq.terms
            .iter()
            .filter(|t| self.prob(&t.x, &t.a))
            .fold(Rational::zero(), |acc, t| acc + &t.q)
    }
}

/// All deterministic maps of one party, input 0 most significant.
pub fn local_strategies(scenario: &Scenario, party: usize) -> Vec<Vec<usize>> {
    mixed_radix(&scenario.output_counts()[party])
}

/// Every deterministic strategy, party 0 most significant.
pub fn all_strategies(scenario: &Scenario) -> Result<Vec<DeterministicStrategy>> {
    let count = scenario.strategy_count();
    if count > STRATEGY_LIMIT {
        return Err(Error::Capacity {
            what: "deterministic strategies",
            required: count,
            limit: STRATEGY_LIMIT,
        });
    }
    let locals: Vec<Vec<Vec<usize>>> = (0..scenario.n()).map(|i| local_strategies(scenario, i)).collect();
    let radices: Vec<usize> = locals.iter().map(|l| l.len()).collect();
    Ok(mixed_radix(&radices)
        .into_iter()
        .map(|idx| DeterministicStrategy {
            maps: idx.iter().zip(&locals).map(|(&k, l)| l[k].clone()).collect(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalBound {
    #[serde(with = "ratio")]
    pub value: Rational,
    pub strategy: DeterministicStrategy,
}

type Mask = Vec<u64>;

fn and_into(acc: &Mask, m: &Mask) -> Mask {
    acc.iter().zip(m).map(|(a, b)| a & b).collect()
}

fn mask_weight(mask: &Mask, weights: &[BigInt]) -> BigInt {
    let mut total = BigInt::zero();
    for (w, &word) in mask.iter().enumerate() {
        let mut bits = word;
        while bits != 0 {
            let b = bits.trailing_zeros() as usize;
            total += &weights[w * 64 + b];
            bits &= bits - 1;
        }
    }
    total
}

struct Search<'a> {
    local_masks: Vec<Vec<Mask>>,
    weights: &'a [BigInt],
    best: BigInt,
    best_choice: Vec<usize>,
    choice: Vec<usize>,
}

impl Search<'_> {
    fn descend(&mut self, party: usize, mask: &Mask) {
        let bound = mask_weight(mask, self.weights);
        if party == self.local_masks.len() {
            if bound > self.best || self.best_choice.is_empty() {
                self.best = bound;
                self.best_choice = self.choice.clone();
            }
            return;
        }
        // Nothing below can strictly beat the incumbent.
        if !self.best_choice.is_empty() && bound <= self.best {
            return;
        }
        for k in 0..self.local_masks[party].len() {
            let next = and_into(mask, &self.local_masks[party][k]);
            self.choice[party] = k;
            self.descend(party + 1, &next);
        }
    }
}

/// Exact maximum over deterministic strategies. Among optimal strategies the
/// first in enumeration order is returned.
pub fn classical_bound(ineq: &BellInequality) -> Result<ClassicalBound> {
    let s = &ineq.scenario;
    let count = s.strategy_count();
    if count > STRATEGY_LIMIT {
        return Err(Error::Capacity {
            what: "deterministic strategies",
            required: count,
            limit: STRATEGY_LIMIT,
        });
    }
    let denom = ineq
        .terms
        .iter()
        .fold(BigInt::one(), |l, t| l.lcm(t.q.denom()));
    let weights: Vec<BigInt> = ineq
        .terms
        .iter()
        .map(|t| (&t.q * Rational::from_integer(denom.clone())).to_integer())
        .collect();
    let words = ineq.terms.len().div_ceil(64).max(1);
    let locals: Vec<Vec<Vec<usize>>> = (0..s.n()).map(|i| local_strategies(s, i)).collect();
    let local_masks: Vec<Vec<Mask>> = locals
        .iter()
        .enumerate()
        .map(|(i, maps)| {
            maps.iter()
                .map(|m| {
                    let mut mask = vec![0u64; words];
                    for (j, t) in ineq.terms.iter().enumerate() {
                        if m[t.x[i]] == t.a[i] {
                            mask[j / 64] |= 1 << (j % 64);
                        }
                    }
                    mask
                })
                .collect()
        })
        .collect();
    let mut full = vec![u64::MAX; words];
    let tail = ineq.terms.len() % 64;
    if tail != 0 {
        full[words - 1] = (1u64 << tail) - 1;
    }
    if ineq.terms.is_empty() {
        full = vec![0; words];
    }
    let mut search = Search {
        local_masks,
        weights: &weights,
        best: BigInt::zero(),
        best_choice: Vec::new(),
        choice: vec![0; s.n()],
    };
    search.descend(0, &full);
    let strategy = DeterministicStrategy {
        maps: search
            .best_choice
            .iter()
            .zip(&locals)
            .map(|(&k, l)| l[k].clone())
            .collect(),
    };
    Ok(ClassicalBound {
        value: Rational::new(search.best, denom),
        strategy,
    })
}
