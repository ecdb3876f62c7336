//! Network rule mining over a single state database.
//!
//! A rule `X -> Y` occurs in a pair `(L, R)` when `X ⊆ L` and `Y ⊆ R`. The
//! search grows rules pattern-growth style from `{a} -> {b}` seeds: first the
//! consequent is extended, then the antecedent, each step intersecting the
//! tidset of the current rule with the tidset of the new entity. Every rule
//! has exactly one growth path, so nothing is emitted twice. Only support
//! prunes; confidence is checked at emission.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{EntityId, MinConf, MinedRule, Ratio, Rule, SysNetDb};

pub const RULES_DIR: &str = "netRules";

pub fn rules_file_name(state: usize) -> String {
    format!("net_Rules_{state}_ID.txt")
}

/// Per-state mining thresholds plus optional rule-size caps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MineParams {
    pub min_sup_count: u64,
    pub min_conf: MinConf,
    pub max_antecedent: Option<usize>,
    pub max_consequent: Option<usize>,
}

impl MineParams {
    pub fn new(min_sup_count: u64, min_conf: MinConf) -> Result<Self> {
        if min_sup_count == 0 {
            return Err(Error::Threshold("min support count must be >= 1".into()));
        }
        Ok(MineParams {
            min_sup_count,
            min_conf,
            max_antecedent: None,
            max_consequent: None,
        })
    }

    pub fn with_caps(mut self, max_antecedent: Option<usize>, max_consequent: Option<usize>) -> Self {
        self.max_antecedent = max_antecedent;
        self.max_consequent = max_consequent;
        self
    }

    fn accepts(&self, support_count: u64, antecedent_count: u64) -> bool {
        support_count >= self.min_sup_count
            && Ratio::new(support_count, antecedent_count)
                .is_some_and(|c| c >= self.min_conf.ratio())
    }
}

type TidSet = Vec<u32>;

fn intersect(a: &[u32], b: &[u32]) -> TidSet {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Positions of the pairs each entity occurs in, per side.
#[derive(Clone, Debug, Default)]
pub struct VerticalIndex {
    left_tids: HashMap<EntityId, TidSet>,
    right_tids: HashMap<EntityId, TidSet>,
}

impl VerticalIndex {
    pub fn build(db: &SysNetDb) -> Self {
        let mut vi = VerticalIndex::default();
        for (pos, pair) in db.pairs.iter().enumerate() {
            for id in pair.left() {
                vi.left_tids.entry(*id).or_default().push(pos as u32);
            }
            for id in pair.right() {
                vi.right_tids.entry(*id).or_default().push(pos as u32);
            }
        }
        vi
    }

    pub fn left(&self, id: EntityId) -> &[u32] {
        self.left_tids.get(&id).map_or(&[], Vec::as_slice)
    }

    pub fn right(&self, id: EntityId) -> &[u32] {
        self.right_tids.get(&id).map_or(&[], Vec::as_slice)
    }

    fn frequent(side: &HashMap<EntityId, TidSet>, min: u64) -> Vec<EntityId> {
        let mut ids: Vec<EntityId> = side
            .iter()
            .filter(|(_, t)| t.len() as u64 >= min)
            .map(|(id, _)| *id)
            .collect();
        ids.sort_unstable();
        ids
    }
}

fn is_subset(needle: &[EntityId], hay: &[EntityId]) -> bool {
    needle.iter().all(|id| hay.binary_search(id).is_ok())
}

/// Number of pairs with `X ⊆ L` and `Y ⊆ R`.
pub fn support_count(db: &SysNetDb, rule: &Rule) -> u64 {
    db.pairs
        .iter()
        .filter(|p| is_subset(rule.antecedent(), p.left()) && is_subset(rule.consequent(), p.right()))
        .count() as u64
}

/// Number of pairs with `X ⊆ L`.
pub fn antecedent_count(db: &SysNetDb, antecedent: &[EntityId]) -> u64 {
    db.pairs
        .iter()
        .filter(|p| is_subset(antecedent, p.left()))
        .count() as u64
}

pub fn confidence(db: &SysNetDb, rule: &Rule) -> Result<Ratio> {
    Ratio::new(support_count(db, rule), antecedent_count(db, rule.antecedent()))
        .ok_or(Error::UndefinedConfidence)
}

struct Growth<'a> {
    vi: &'a VerticalIndex,
    params: MineParams,
    left_items: Vec<EntityId>,
    right_items: Vec<EntityId>,
    db_size: u64,
    out: Vec<MinedRule>,
}

impl Growth<'_> {
    fn emit(&mut self, x: &[EntityId], y: &[EntityId], tids: &[u32], ant: &[u32]) {
        let (sup, ant) = (tids.len() as u64, ant.len() as u64);
        if self.params.accepts(sup, ant) {
            self.out.push(MinedRule {
                rule: Rule::from_sorted(x.to_vec(), y.to_vec()),
                support_count: sup,
                antecedent_count: ant,
                db_size: self.db_size,
            });
        }
    }

    fn can_grow_left(&self, x: &[EntityId]) -> bool {
        self.params.max_antecedent.is_none_or(|m| x.len() < m)
    }

    fn can_grow_right(&self, y: &[EntityId]) -> bool {
        self.params.max_consequent.is_none_or(|m| y.len() < m)
    }

    /// Visits `x -> y`, then every extension of `y` by a larger ID, then every
    /// extension of `x`.
    fn expand_right(&mut self, x: &mut Vec<EntityId>, ant: &[u32], y: &mut Vec<EntityId>, tids: &[u32]) {
        self.emit(x, y, tids, ant);
        if self.can_grow_right(y) {
            let last = *y.last().expect("non-empty consequent");
            let start = self.right_items.partition_point(|id| *id <= last);
            for k in start..self.right_items.len() {
                let item = self.right_items[k];
                let next = intersect(tids, self.vi.right(item));
                if (next.len() as u64) < self.params.min_sup_count {
                    continue;
                }
                y.push(item);
                self.expand_right(x, ant, y, &next);
                y.pop();
            }
        }
        self.grow_left(x, ant, y, tids);
    }

    /// Visits `x -> y`, then every extension of `x` by a larger ID.
    fn expand_left(&mut self, x: &mut Vec<EntityId>, ant: &[u32], y: &[EntityId], tids: &[u32]) {
        self.emit(x, y, tids, ant);
        self.grow_left(x, ant, y, tids);
    }

    fn grow_left(&mut self, x: &mut Vec<EntityId>, ant: &[u32], y: &[EntityId], tids: &[u32]) {
        if !self.can_grow_left(x) {
            return;
        }
        let last = *x.last().expect("non-empty antecedent");
        let start = self.left_items.partition_point(|id| *id <= last);
        for k in start..self.left_items.len() {
            let item = self.left_items[k];
            let next = intersect(tids, self.vi.left(item));
            if (next.len() as u64) < self.params.min_sup_count {
                continue;
            }
            let next_ant = intersect(ant, self.vi.left(item));
            x.push(item);
            self.expand_left(x, &next_ant, y, &next);
            x.pop();
        }
    }
}

fn sort_rules(rules: &mut [MinedRule]) {
    rules.sort_by(|a, b| Rule::size_order(&a.rule, &b.rule));
}

/// All interesting rules of one state, ordered by rule size then canonical form.
pub fn mine_state(db: &SysNetDb, params: &MineParams) -> Vec<MinedRule> {
    if db.is_empty() || params.max_antecedent == Some(0) || params.max_consequent == Some(0) {
        return Vec::new();
    }
    let vi = VerticalIndex::build(db);
    let left_items = VerticalIndex::frequent(&vi.left_tids, params.min_sup_count);
    let right_items = VerticalIndex::frequent(&vi.right_tids, params.min_sup_count);
    let mut growth = Growth {
        vi: &vi,
        params: *params,
        left_items: left_items.clone(),
        right_items: right_items.clone(),
        db_size: db.len() as u64,
        out: Vec::new(),
    };
    for &a in &left_items {
        let ant = vi.left(a);
        for &b in &right_items {
            let tids = intersect(ant, vi.right(b));
            if (tids.len() as u64) < params.min_sup_count {
                continue;
            }
            growth.expand_right(&mut vec![a], ant, &mut vec![b], &tids);
        }
    }
    let mut out = growth.out;
    sort_rules(&mut out);
    out
}

pub const BRUTE_FORCE_GUARD: usize = 20;

fn subsets(items: &[EntityId], cap: Option<usize>) -> Vec<Vec<EntityId>> {
    let mut out = Vec::new();
    for mask in 1u64..(1u64 << items.len()) {
        if cap.is_some_and(|c| mask.count_ones() as usize > c) {
            continue;
        }
        out.push(
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, id)| *id)
                .collect(),
        );
    }
    out
}

/// Enumerates every antecedent over the left vocabulary and every consequent
/// over the right vocabulary and applies the definitions directly. Refuses
/// vocabularies larger than [`BRUTE_FORCE_GUARD`] unless `override_guard`.
pub fn mine_state_bruteforce(db: &SysNetDb, params: &MineParams, override_guard: bool) -> Result<Vec<MinedRule>> {
    let left: BTreeSet<EntityId> = db.pairs.iter().flat_map(|p| p.left().iter().copied()).collect();
    let right: BTreeSet<EntityId> = db.pairs.iter().flat_map(|p| p.right().iter().copied()).collect();
    let widest = left.len().max(right.len());
    if widest > BRUTE_FORCE_GUARD && !override_guard {
        return Err(Error::GuardExceeded(widest, BRUTE_FORCE_GUARD));
    }
    let left: Vec<EntityId> = left.into_iter().collect();
    let right: Vec<EntityId> = right.into_iter().collect();
    let consequents = subsets(&right, params.max_consequent);
    let mut out = Vec::new();
    for x in subsets(&left, params.max_antecedent) {
        let ant = antecedent_count(db, &x);
        if ant < params.min_sup_count {
            continue;
        }
        for y in &consequents {
            let rule = Rule::from_sorted(x.clone(), y.clone());
            let sup = support_count(db, &rule);
            if params.accepts(sup, ant) {
                out.push(MinedRule {
                    rule,
                    support_count: sup,
                    antecedent_count: ant,
                    db_size: db.len() as u64,
                });
            }
        }
    }
    sort_rules(&mut out);
    Ok(out)
}

/// `X -> Y #SUP: n #CONF: c` per line.
pub fn format_rules(rules: &[MinedRule]) -> String {
    let mut out = String::new();
    for r in rules {
        let _ = writeln!(
            out,
            "{} #SUP: {} #CONF: {}",
            r.rule,
            r.support_count,
            r.confidence().to_decimal(2)
        );
    }
    out
}

pub fn write_rules(rules: &[MinedRule], path: &Path) -> Result<()> {
    fs::write(path, format_rules(rules)).map_err(|e| Error::io(path, e))
}
