//! Synthetic state series with planted rules.
//!
//! Spec files are `key = value` lines (`#` comments allowed):
//!
//! ```text
//! states = 10
//! seed = 7
//! noise_pairs = 20
//! noise_ids = 100..199
//! plant = 1 2 -> 3 | 1,2,5 | 4
//! ```
//!
//! Each `plant` line is `antecedent -> consequent | states | copies`: the pair
//! `(X, Y)` is written `copies` times into each listed state (1-based).
//! Noise pairs are single-entity pairs drawn from `noise_ids`.

use std::collections::BTreeSet;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ConnectionPair, EntityId, Rule, SysNetDb};
use crate::preprocess::EntityIndex;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantedRule {
    pub rule: Rule,
    /// 1-based state numbers the rule is planted in.
    pub states: BTreeSet<usize>,
    pub copies: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlantSpec {
    pub n_states: usize,
    pub planted: Vec<PlantedRule>,
    pub noise_pairs: usize,
    pub noise_ids: RangeInclusive<u32>,
    pub seed: u64,
}

fn contains(outer: &Rule, inner: &Rule) -> bool {
    let sub = |a: &[EntityId], b: &[EntityId]| a.iter().all(|id| b.binary_search(id).is_ok());
    sub(inner.antecedent(), outer.antecedent()) && sub(inner.consequent(), outer.consequent())
}

impl PlantSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::Spec("states must be >= 1".into()));
        }
        if self.noise_pairs > 0 && (self.noise_ids.is_empty() || *self.noise_ids.start() == 0) {
            return Err(Error::Spec("noise_ids must be a non-empty range of ids >= 1".into()));
        }
        for (i, p) in self.planted.iter().enumerate() {
            if p.copies == 0 {
                return Err(Error::Spec(format!("planted rule {} has zero copies", p.rule)));
            }
            if p.states.iter().any(|s| *s == 0 || *s > self.n_states) {
                return Err(Error::Spec(format!(
                    "planted rule {} lists a state outside 1..={}",
                    p.rule, self.n_states
                )));
            }
            let ids = p.rule.antecedent().iter().chain(p.rule.consequent());
            if let Some(id) = ids.clone().find(|id| self.noise_ids.contains(&id.0)) {
                return Err(Error::Spec(format!(
                    "entity {id} is in both the planted and the noise vocabulary"
                )));
            }
            // a pair planted for one rule must not also support another
            for q in &self.planted[..i] {
                if contains(&p.rule, &q.rule) || contains(&q.rule, &p.rule) {
                    return Err(Error::Spec(format!(
                        "planted rules {} and {} contain one another",
                        q.rule, p.rule
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest entity ID the series can contain.
    pub fn max_id(&self) -> u32 {
        let planted = self
            .planted
            .iter()
            .flat_map(|p| p.rule.antecedent().iter().chain(p.rule.consequent()))
            .map(|id| id.0)
            .max()
            .unwrap_or(0);
        let noise = if self.noise_pairs > 0 { *self.noise_ids.end() } else { 0 };
        planted.max(noise)
    }
}

/// Builds the series. Identical specs produce identical output.
pub fn generate(spec: &PlantSpec) -> Result<Vec<SysNetDb>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut dbs = Vec::with_capacity(spec.n_states);
    for state in 1..=spec.n_states {
        let mut pairs = Vec::new();
        for p in spec.planted.iter().filter(|p| p.states.contains(&state)) {
            let pair = ConnectionPair::new(p.rule.antecedent().to_vec(), p.rule.consequent().to_vec())?;
            pairs.extend(std::iter::repeat_n(pair, p.copies as usize));
        }
        for _ in 0..spec.noise_pairs {
            let l = rng.gen_range(spec.noise_ids.clone());
            let r = rng.gen_range(spec.noise_ids.clone());
            pairs.push(ConnectionPair::new(vec![EntityId(l)], vec![EntityId(r)])?);
        }
        pairs.shuffle(&mut rng);
        dbs.push(SysNetDb::new(format!("S{state}"), pairs));
    }
    Ok(dbs)
}

/// Index naming every ID `1..=max_id` as `e<id>`.
pub fn synthetic_index(max_id: u32) -> EntityIndex {
    let mut index = EntityIndex::new();
    for id in 1..=max_id {
        index.intern(&format!("e{id}"));
    }
    index
}

fn parse_ids(text: &str) -> Option<Vec<EntityId>> {
    text.split_whitespace()
        .map(|t| t.parse().ok().filter(|v| *v > 0).map(EntityId))
        .collect()
}

fn parse_plant(value: &str) -> std::result::Result<PlantedRule, String> {
    let parts: Vec<&str> = value.split('|').map(str::trim).collect();
    let [rule, states, copies] = parts[..] else {
        return Err("expected `X -> Y | states | copies`".into());
    };
    let (x, y) = rule.split_once("->").ok_or("missing `->`")?;
    let x = parse_ids(x).ok_or("bad antecedent id")?;
    let y = parse_ids(y).ok_or("bad consequent id")?;
    let rule = Rule::new(x, y).map_err(|e| e.to_string())?;
    let states = states
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("bad state {s:?}")))
        .collect::<std::result::Result<BTreeSet<_>, _>>()?;
    let copies = copies.parse().map_err(|_| format!("bad copies {copies:?}"))?;
    Ok(PlantedRule { rule, states, copies })
}

#[allow(clippy::reversed_empty_ranges)]
const EMPTY_RANGE: RangeInclusive<u32> = 1..=0;

pub fn parse_spec(text: &str) -> Result<PlantSpec> {
    let mut spec = PlantSpec {
        n_states: 0,
        planted: Vec::new(),
        noise_pairs: 0,
        noise_ids: EMPTY_RANGE,
        seed: 0,
    };
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Spec(format!("line {}: {msg}", i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        let value = value.trim();
        let number = || value.parse::<u64>().map_err(|_| err(format!("bad number {value:?}")));
        match key.trim() {
            "states" => spec.n_states = number()? as usize,
            "seed" => spec.seed = number()?,
            "noise_pairs" => spec.noise_pairs = number()? as usize,
            "noise_ids" => {
                let (lo, hi) = value
                    .split_once("..")
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                    .ok_or_else(|| err(format!("bad range {value:?}")))?;
                spec.noise_ids = lo..=hi;
            }
            "plant" => spec.planted.push(parse_plant(value).map_err(err)?),
            other => return Err(err(format!("unknown key {other:?}"))),
        }
    }
    spec.validate()?;
    Ok(spec)
}

pub fn read_spec(path: &Path) -> Result<PlantSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text)
}
