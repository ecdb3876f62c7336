//! Cross-state aggregation: evolution rules, stable rules and the
//! persistence (SNP) metric.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{format_fraction, EvolutionRule, MinedRule, Rule, StateHit, Thresholds};

pub const NERS_ID_FILE: &str = "NERs_ID.txt";
pub const SNERS_ID_FILE: &str = "SNERs_ID.txt";

/// Interesting rules of one labelled state.
#[derive(Clone, Debug)]
pub struct StateRules {
    pub label: String,
    pub rules: Vec<MinedRule>,
}

/// Distinct rules over the series, keyed by canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvolutionRuleSet {
    pub n_states: usize,
    pub rules: BTreeMap<Rule, EvolutionRule>,
}

impl EvolutionRuleSet {
    pub fn ner_count(&self) -> usize {
        self.rules.len()
    }
}

/// Folds per-state rule lists into evolution rules. A rule's stability count
/// is the number of states it is interesting in; the result does not depend
/// on the order of `states`.
pub fn merge(states: &[StateRules]) -> Result<EvolutionRuleSet> {
    if states.is_empty() {
        return Err(Error::NoStates);
    }
    let mut labels = BTreeSet::new();
    let mut rules: BTreeMap<Rule, EvolutionRule> = BTreeMap::new();
    for state in states {
        if !labels.insert(state.label.as_str()) {
            return Err(Error::DuplicateLabel(state.label.clone()));
        }
        for mined in &state.rules {
            let entry = rules.entry(mined.rule.clone()).or_insert_with(|| EvolutionRule {
                rule: mined.rule.clone(),
                stability_count: 0,
                n_states: states.len(),
                per_state: BTreeMap::new(),
            });
            let hit = StateHit {
                support_count: mined.support_count,
                antecedent_count: mined.antecedent_count,
            };
            if entry.per_state.insert(state.label.clone(), hit).is_none() {
                entry.stability_count += 1;
            }
        }
    }
    Ok(EvolutionRuleSet {
        n_states: states.len(),
        rules,
    })
}

fn stability_order(a: &&EvolutionRule, b: &&EvolutionRule) -> std::cmp::Ordering {
    b.stability_count
        .cmp(&a.stability_count)
        .then_with(|| a.rule.cmp(&b.rule))
}

/// All evolution rules, most stable first.
pub fn ordered_ners(ers: &EvolutionRuleSet) -> Vec<&EvolutionRule> {
    let mut all: Vec<&EvolutionRule> = ers.rules.values().collect();
    all.sort_by(stability_order);
    all
}

/// Rules interesting in at least `min_stab_count` states, most stable first.
pub fn filter_sners(ers: &EvolutionRuleSet, min_stab_count: usize) -> Result<Vec<&EvolutionRule>> {
    check_stab_count(min_stab_count, ers.n_states)?;
    let mut out: Vec<&EvolutionRule> = ers
        .rules
        .values()
        .filter(|r| r.stability_count >= min_stab_count)
        .collect();
    out.sort_by(stability_order);
    Ok(out)
}

fn check_stab_count(min_stab_count: usize, n_states: usize) -> Result<()> {
    if min_stab_count == 0 || min_stab_count > n_states {
        return Err(Error::Threshold(format!(
            "min stability count {min_stab_count} outside 1..={n_states}"
        )));
    }
    Ok(())
}

fn check_counts(sner_count: usize, ner_count: usize) -> Result<()> {
    if sner_count > ner_count {
        return Err(Error::Metric(format!(
            "SNER count {sner_count} exceeds NER count {ner_count}"
        )));
    }
    Ok(())
}

/// `(minStabCount / N) * (SNER / NER) * 100`, or 0 when there are no NERs.
pub fn snp_metric(min_stab_count: usize, n_states: usize, sner_count: usize, ner_count: usize) -> Result<f64> {
    check_stab_count(min_stab_count, n_states)?;
    check_counts(sner_count, ner_count)?;
    if ner_count == 0 {
        return Ok(0.0);
    }
    let num = (min_stab_count * sner_count * 100) as f64;
    let den = (n_states * ner_count) as f64;
    Ok(num / den)
}

/// One row of the persistence summary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnpReport {
    pub thresholds: Thresholds,
    pub n_states: usize,
    pub ner_count: usize,
    pub sner_count: usize,
}

pub const SNP_CSV_HEADER: &str =
    "minSupCount,minConf,minStabCount,N,minStab,SNER_count,NER_count,SNER_fraction,SNP";

impl SnpReport {
    pub fn new(thresholds: Thresholds, n_states: usize, sner_count: usize, ner_count: usize) -> Result<Self> {
        check_stab_count(thresholds.min_stab_count, n_states)?;
        check_counts(sner_count, ner_count)?;
        Ok(SnpReport {
            thresholds,
            n_states,
            ner_count,
            sner_count,
        })
    }

    pub fn from_rule_set(ers: &EvolutionRuleSet, thresholds: Thresholds) -> Result<Self> {
        let sners = filter_sners(ers, thresholds.min_stab_count)?.len();
        SnpReport::new(thresholds, ers.n_states, sners, ers.ner_count())
    }

    pub fn min_stab(&self) -> f64 {
        self.thresholds.min_stab_count as f64 / self.n_states as f64
    }

    pub fn sner_fraction(&self) -> f64 {
        if self.ner_count == 0 {
            0.0
        } else {
            self.sner_count as f64 / self.ner_count as f64
        }
    }

    pub fn snp(&self) -> f64 {
        snp_metric(
            self.thresholds.min_stab_count,
            self.n_states,
            self.sner_count,
            self.ner_count,
        )
        .expect("validated on construction")
    }

    pub fn min_stab_text(&self) -> String {
        format_fraction(self.thresholds.min_stab_count as u128, self.n_states as u128, 2)
    }

    pub fn sner_fraction_text(&self) -> String {
        format_fraction(self.sner_count as u128, self.ner_count.max(1) as u128, 3)
    }

    /// SNP with two decimals, rounded on the exact rational value.
    pub fn snp_text(&self) -> String {
        let num = self.thresholds.min_stab_count as u128 * self.sner_count as u128 * 100;
        if self.ner_count == 0 {
            return format_fraction(0, 1, 2);
        }
        format_fraction(num, (self.n_states * self.ner_count) as u128, 2)
    }

    pub fn csv_row(&self) -> String {
        let t = &self.thresholds;
        format!(
            "{},{},{},{},{},{},{},{},{}",
            t.min_sup_count,
            t.min_conf,
            t.min_stab_count,
            self.n_states,
            self.min_stab_text(),
            self.sner_count,
            self.ner_count,
            self.sner_fraction_text(),
            self.snp_text()
        )
    }
}

/// How the persistence metric moved when a state was appended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NewStateClass {
    /// Metric rose beyond tolerance.
    MoreStableSeries,
    /// Metric fell beyond tolerance.
    LessStableSeries,
    SimilarState,
}

impl NewStateClass {
    pub fn describe(&self) -> &'static str {
        match self {
            NewStateClass::MoreStableSeries => {
                "persistence rose: the new state was built through significant changes"
            }
            NewStateClass::LessStableSeries => {
                "persistence fell: the new state changed little relative to earlier states"
            }
            NewStateClass::SimilarState => {
                "persistence unchanged within tolerance: the new state resembles earlier states"
            }
        }
    }
}

impl fmt::Display for NewStateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            NewStateClass::MoreStableSeries => "MoreStableSeries",
            NewStateClass::LessStableSeries => "LessStableSeries",
            NewStateClass::SimilarState => "SimilarState",
        };
        f.write_str(name)
    }
}

/// Compares the metric for N states against the metric after appending one.
pub fn classify_new_state(pm_n: f64, pm_n_plus_1: f64, tol: f64) -> Result<NewStateClass> {
    for pm in [pm_n, pm_n_plus_1] {
        if !(0.0..=100.0).contains(&pm) {
            return Err(Error::Metric(format!("persistence metric {pm} outside [0,100]")));
        }
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::Metric(format!("tolerance {tol} must be >= 0")));
    }
    let delta = pm_n_plus_1 - pm_n;
    Ok(if delta.abs() <= tol {
        NewStateClass::SimilarState
    } else if delta > 0.0 {
        NewStateClass::MoreStableSeries
    } else {
        NewStateClass::LessStableSeries
    })
}

/// `X -> Y #STABCOUNT: n #STAB: s` per line.
pub fn format_evolution_rules(rules: &[&EvolutionRule]) -> String {
    let mut out = String::new();
    for r in rules {
        let _ = writeln!(
            out,
            "{} #STABCOUNT: {} #STAB: {}",
            r.rule,
            r.stability_count,
            r.stability().to_decimal(2)
        );
    }
    out
}

pub fn write_evolution_rules(rules: &[&EvolutionRule], path: &Path) -> Result<()> {
    fs::write(path, format_evolution_rules(rules)).map_err(|e| Error::io(path, e))
}
