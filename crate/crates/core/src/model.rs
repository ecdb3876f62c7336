//! Domain types shared by every stage of the pipeline.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Dense entity identifier, assigned from 1 in first-encounter order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn sorted_set(mut ids: Vec<EntityId>) -> Vec<EntityId> {
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// One record of a state database: source entities `left` connected to
/// target entities `right`. Both sides are ascending, duplicate-free sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConnectionPair {
    left: Vec<EntityId>,
    right: Vec<EntityId>,
}

impl ConnectionPair {
    pub fn new(left: Vec<EntityId>, right: Vec<EntityId>) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidRule(
                "connection pair needs a non-empty left and right side".into(),
            ));
        }
        if left.iter().chain(&right).any(|id| id.0 == 0) {
            return Err(Error::InvalidRule("entity ids start at 1".into()));
        }
        Ok(ConnectionPair {
            left: sorted_set(left),
            right: sorted_set(right),
        })
    }

    pub fn left(&self) -> &[EntityId] {
        &self.left
    }

    pub fn right(&self) -> &[EntityId] {
        &self.right
    }
}

/// The connection pairs of a single state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SysNetDb {
    pub label: String,
    pub pairs: Vec<ConnectionPair>,
}

impl SysNetDb {
    pub fn new(label: impl Into<String>, pairs: Vec<ConnectionPair>) -> Self {
        SysNetDb {
            label: label.into(),
            pairs,
        }
    }

    /// Number of connection pairs (M).
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// A rule `X -> Y` in canonical form: both sides ascending and duplicate-free.
///
/// Ordering compares the antecedent lexicographically, then the consequent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    antecedent: Vec<EntityId>,
    consequent: Vec<EntityId>,
}

impl Rule {
    pub fn new(antecedent: Vec<EntityId>, consequent: Vec<EntityId>) -> Result<Self> {
        canonicalize(Rule {
            antecedent,
            consequent,
        })
    }

    pub fn from_ids(antecedent: &[u32], consequent: &[u32]) -> Result<Self> {
        Rule::new(
            antecedent.iter().copied().map(EntityId).collect(),
            consequent.iter().copied().map(EntityId).collect(),
        )
    }

    /// Caller guarantees both sides are already canonical and non-empty.
    pub(crate) fn from_sorted(antecedent: Vec<EntityId>, consequent: Vec<EntityId>) -> Self {
        debug_assert!(!antecedent.is_empty() && !consequent.is_empty());
        debug_assert!(antecedent.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(consequent.windows(2).all(|w| w[0] < w[1]));
        Rule {
            antecedent,
            consequent,
        }
    }

    pub fn antecedent(&self) -> &[EntityId] {
        &self.antecedent
    }

    pub fn consequent(&self) -> &[EntityId] {
        &self.consequent
    }

    /// |X| + |Y|
    pub fn size(&self) -> usize {
        self.antecedent.len() + self.consequent.len()
    }

    /// Key used to order mined rules: smaller rules first, then canonical form.
    pub fn size_order(a: &Rule, b: &Rule) -> Ordering {
        a.size().cmp(&b.size()).then_with(|| a.cmp(b))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for id in &self.antecedent {
            write!(f, "{id} ")?;
        }
        f.write_str("->")?;
        for id in &self.consequent {
            write!(f, " {id}")?;
        }
        Ok(())
    }
}

/// Sorts and deduplicates both sides of a rule.
pub fn canonicalize(rule: Rule) -> Result<Rule> {
    if rule.antecedent.is_empty() {
        return Err(Error::InvalidRule("empty antecedent".into()));
    }
    if rule.consequent.is_empty() {
        return Err(Error::InvalidRule("empty consequent".into()));
    }
    Ok(Rule {
        antecedent: sorted_set(rule.antecedent),
        consequent: sorted_set(rule.consequent),
    })
}

/// Exact non-negative fraction. Comparisons cross-multiply in `u128`.
#[derive(Clone, Copy, Debug)]
pub struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den != 0).then_some(Ratio { num, den })
    }

    pub fn zero() -> Self {
        Ratio { num: 0, den: 1 }
    }

    pub fn numer(&self) -> u64 {
        self.num
    }

    pub fn denom(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Decimal rendering rounded half-up on the exact value.
    pub fn to_decimal(&self, places: u32) -> String {
        format_fraction(self.num as u128, self.den as u128, places)
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// Renders `num / den` with exactly `places` decimals, rounding half-up.
pub fn format_fraction(num: u128, den: u128, places: u32) -> String {
    assert!(den != 0, "zero denominator");
    let scale = 10u128.pow(places);
    let scaled = (num * scale * 2 + den) / (den * 2);
    let int = scaled / scale;
    if places == 0 {
        return int.to_string();
    }
    let frac = scaled % scale;
    format!("{int}.{frac:0width$}", width = places as usize)
}

/// Minimum confidence threshold, held as the exact decimal it was written as.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinConf {
    num: u64,
    scale: u32,
}

impl MinConf {
    pub fn ratio(&self) -> Ratio {
        Ratio {
            num: self.num,
            den: 10u64.pow(self.scale),
        }
    }

    pub fn from_f64(value: f64) -> Result<Self> {
        format!("{value}").parse()
    }
}

impl FromStr for MinConf {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Threshold(format!("min confidence {s:?} is not a decimal in [0,1]"));
        let s = s.trim();
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if (int.is_empty() && frac.is_empty())
            || !int.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > 18 {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let scale = frac.len() as u32;
        let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int
            .checked_mul(10u64.pow(scale))
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(bad)?;
        if num > 10u64.pow(scale) {
            return Err(bad());
        }
        Ok(MinConf { num, scale })
    }
}

impl fmt::Display for MinConf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.num);
        }
        let den = 10u64.pow(self.scale);
        write!(
            f,
            "{}.{:0width$}",
            self.num / den,
            self.num % den,
            width = self.scale as usize
        )
    }
}

/// The `minSupCount-minConf-minStabCount` threshold triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Thresholds {
    pub min_sup_count: u64,
    pub min_conf: MinConf,
    pub min_stab_count: usize,
}

impl Thresholds {
    pub fn new(min_sup_count: u64, min_conf: MinConf, min_stab_count: usize) -> Result<Self> {
        if min_sup_count == 0 {
            return Err(Error::Threshold("min support count must be >= 1".into()));
        }
        if min_stab_count == 0 {
            return Err(Error::Threshold("min stability count must be >= 1".into()));
        }
        Ok(Thresholds {
            min_sup_count,
            min_conf,
            min_stab_count,
        })
    }
}

impl fmt::Display for Thresholds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}-{}-{}",
            self.min_sup_count, self.min_conf, self.min_stab_count
        )
    }
}

/// An interesting rule of one state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinedRule {
    pub rule: Rule,
    pub support_count: u64,
    /// Pairs whose left side contains the antecedent.
    pub antecedent_count: u64,
    /// M of the state the rule was mined from.
    pub db_size: u64,
}

impl MinedRule {
    pub fn support(&self) -> Ratio {
        Ratio::new(self.support_count, self.db_size).unwrap_or_else(Ratio::zero)
    }

    pub fn confidence(&self) -> Ratio {
        Ratio::new(self.support_count, self.antecedent_count).unwrap_or_else(Ratio::zero)
    }
}

/// Support and confidence of a rule in one state where it is interesting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateHit {
    pub support_count: u64,
    pub antecedent_count: u64,
}

impl StateHit {
    pub fn confidence(&self) -> Ratio {
        Ratio::new(self.support_count, self.antecedent_count).unwrap_or_else(Ratio::zero)
    }
}

/// A distinct rule across the series together with its stability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvolutionRule {
    pub rule: Rule,
    pub stability_count: usize,
    pub n_states: usize,
    pub per_state: BTreeMap<String, StateHit>,
}

impl EvolutionRule {
    pub fn stability(&self) -> Ratio {
        Ratio::new(self.stability_count as u64, self.n_states as u64).unwrap_or_else(Ratio::zero)
    }
}
