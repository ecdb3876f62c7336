//! Mining network evolution rules from a time-ordered series of directed
//! network snapshots.
//!
//! The pipeline: raw snapshots are grouped into connection pairs and encoded
//! against one entity index ([`preprocess`]); each state is mined for
//! interesting rules `X -> Y` ([`miner`]); per-state rules are merged into
//! evolution rules with a stability, filtered into stable rules, and
//! summarised by the SNP persistence metric ([`evolution`]); finally the
//! rules are rendered back into entity names ([`report`]).

pub mod cli;
pub mod error;
pub mod evolution;
pub mod miner;
pub mod model;
pub mod preprocess;
pub mod report;
pub mod synthgen;

pub use error::{Error, Result};
pub use evolution::{
    classify_new_state, filter_sners, merge, snp_metric, EvolutionRuleSet, NewStateClass,
    SnpReport, StateRules,
};
pub use miner::{mine_state, mine_state_bruteforce, MineParams};
pub use model::{
    canonicalize, ConnectionPair, EntityId, EvolutionRule, MinConf, MinedRule, Ratio, Rule,
    SysNetDb, Thresholds,
};
pub use preprocess::{EntityIndex, GroupingStrategy};
