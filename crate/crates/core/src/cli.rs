//! Command-line front end: `preprocess`, `mine`, `sweep`, `gen`, `decode`.
//!
//! Each `run_*` function does the work of one subcommand and returns the text
//! to print on stdout.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolution::{
    filter_sners, format_evolution_rules, merge, ordered_ners, EvolutionRuleSet, SnpReport,
    StateRules, NERS_ID_FILE, SNERS_ID_FILE, SNP_CSV_HEADER,
};
use crate::miner::{format_rules, mine_state, rules_file_name, MineParams, RULES_DIR};
use crate::model::{MinConf, SysNetDb, Thresholds};
use crate::preprocess::{
    list_snapshots, preprocess_files, read_index, read_series, write_series, GroupingStrategy,
};
use crate::report::{
    decode_rules, decode_text, summarize, ReportInputs, NERS_NAME_FILE, REPORT_FILE,
    SNERS_NAME_FILE,
};
use crate::synthgen::{generate, read_spec, synthetic_index};

pub const SNP_CSV_FILE: &str = "snp.csv";

#[derive(Debug, Parser)]
#[command(name = "sysnet", version, about = "Mine network evolution rules and stable rules from a series of network snapshots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode raw snapshots into ID-form databases plus a shared index
    Preprocess(PreprocessArgs),
    /// Mine per-state rules, evolution rules, stable rules and the SNP metric
    Mine(MineArgs),
    /// Evaluate the SNP metric over a grid of thresholds
    Sweep(SweepArgs),
    /// Generate a synthetic series from a plant spec
    Gen(GenArgs),
    /// Replace entity IDs in a rules file with entity names
    Decode(DecodeArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Grouping {
    /// Edge list; one pair per source node
    PerSource,
    /// Lines of the form `a b -> x y`
    Pairs,
}

impl From<Grouping> for GroupingStrategy {
    fn from(g: Grouping) -> Self {
        match g {
            Grouping::PerSource => GroupingStrategy::PerSource,
            Grouping::Pairs => GroupingStrategy::ExplicitPairs,
        }
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Directory of snapshot files
    #[arg(long)]
    pub input: PathBuf,
    /// File listing snapshot names in series order (default: sorted by name)
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Grouping::PerSource)]
    pub grouping: Grouping,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MiningCaps {
    /// Largest antecedent to search
    #[arg(long)]
    pub max_antecedent: Option<usize>,
    /// Largest consequent to search
    #[arg(long)]
    pub max_consequent: Option<usize>,
    /// Worker threads (0 = one per core)
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Directory written by `preprocess` or `gen`
    #[arg(long)]
    pub db: PathBuf,
    #[arg(long)]
    pub min_sup_count: u64,
    #[arg(long)]
    pub min_conf: String,
    #[arg(long)]
    pub min_stab_count: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// SNP of the series before its newest state, to classify that state
    #[arg(long)]
    pub previous_snp: Option<f64>,
    /// Tolerance for treating two SNP values as equal
    #[arg(long, default_value_t = 0.5)]
    pub tolerance: f64,
    #[command(flatten)]
    pub caps: MiningCaps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SortOrder {
    Asc,
    Desc,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Comma list and/or inclusive ranges, e.g. `2,3` or `2..4`
    #[arg(long)]
    pub min_sup_count: String,
    /// Comma list of decimals, e.g. `0.3,0.5`
    #[arg(long)]
    pub min_conf: String,
    /// Comma list and/or inclusive ranges
    #[arg(long)]
    pub min_stab_count: String,
    /// Order of SNP within each (minSupCount, minConf) block
    #[arg(long, value_enum, default_value_t = SortOrder::Asc)]
    pub sort: SortOrder,
    /// CSV destination (default: stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub caps: MiningCaps,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// ID-form rules file
    #[arg(long)]
    pub rules: PathBuf,
    /// Index file written by `preprocess`
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Preprocess(a) => run_preprocess(a),
        Command::Mine(a) => run_mine(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Gen(a) => run_gen(a),
        Command::Decode(a) => run_decode(a),
    }
}

fn series_summary(dbs: &[SysNetDb], entities: usize) -> String {
    let mut out = format!("N = {}\nK = {entities}\n", dbs.len());
    for (i, db) in dbs.iter().enumerate() {
        let _ = writeln!(out, "state {} ({}): M = {}", i + 1, db.label, db.len());
    }
    out
}

pub fn run_preprocess(args: &PreprocessArgs) -> Result<String> {
    let mut files = list_snapshots(&args.input, args.manifest.as_deref())?;
    if let Some(manifest) = &args.manifest {
        files.retain(|f| f != manifest);
    }
    let (dbs, index) = preprocess_files(&files, args.grouping.into())?;
    write_series(&args.out, &dbs, &index)?;
    Ok(series_summary(&dbs, index.len()))
}

fn with_jobs<T: Send>(jobs: usize, work: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Threshold(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(work))
}

fn mine_all(dbs: &[SysNetDb], params: &MineParams) -> Vec<StateRules> {
    dbs.par_iter()
        .map(|db| StateRules {
            label: db.label.clone(),
            rules: mine_state(db, params),
        })
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_min_conf(text: &str) -> Result<MinConf> {
    text.parse()
}

fn mine_params(min_sup_count: u64, min_conf: MinConf, caps: &MiningCaps) -> Result<MineParams> {
    Ok(MineParams::new(min_sup_count, min_conf)?.with_caps(caps.max_antecedent, caps.max_consequent))
}

pub fn run_mine(args: &MineArgs) -> Result<String> {
    let min_conf = parse_min_conf(&args.min_conf)?;
    let thresholds = Thresholds::new(args.min_sup_count, min_conf, args.min_stab_count)?;
    let params = mine_params(args.min_sup_count, min_conf, &args.caps)?;
    let (dbs, index) = read_series(&args.db)?;
    if thresholds.min_stab_count > dbs.len() {
        return Err(Error::Threshold(format!(
            "min stability count {} exceeds the {} states",
            thresholds.min_stab_count,
            dbs.len()
        )));
    }

    let per_state = with_jobs(args.caps.jobs, || mine_all(&dbs, &params))?;

    let rules_dir = args.out.join(RULES_DIR);
    fs::create_dir_all(&rules_dir).map_err(|e| Error::io(&rules_dir, e))?;
    for (i, state) in per_state.iter().enumerate() {
        write(&rules_dir.join(rules_file_name(i + 1)), &format_rules(&state.rules))?;
    }

    let ers = merge(&per_state)?;
    let ners_id = format_evolution_rules(&ordered_ners(&ers));
    let sners_id = format_evolution_rules(&filter_sners(&ers, thresholds.min_stab_count)?);
    let ners_name = decode_text(&ners_id, &index)?;
    let sners_name = decode_text(&sners_id, &index)?;
    write(&args.out.join(NERS_ID_FILE), &ners_id)?;
    write(&args.out.join(SNERS_ID_FILE), &sners_id)?;
    write(&args.out.join(NERS_NAME_FILE), &ners_name)?;
    write(&args.out.join(SNERS_NAME_FILE), &sners_name)?;

    let snp = SnpReport::from_rule_set(&ers, thresholds)?;
    write(
        &args.out.join(SNP_CSV_FILE),
        &format!("{SNP_CSV_HEADER}\n{}\n", snp.csv_row()),
    )?;
    let labels: Vec<String> = dbs.iter().map(|db| db.label.clone()).collect();
    let report = summarize(&ReportInputs {
        snp: &snp,
        ners: &ners_name,
        sners: &sners_name,
        state_labels: &labels,
        previous_snp: args.previous_snp,
        tolerance: args.tolerance,
    })?;
    write(&args.out.join(REPORT_FILE), &report)?;

    Ok(format!(
        "thresholds: {thresholds}\nNERs: {}\nSNERs: {}\nSNP: {}\n",
        snp.ner_count,
        snp.sner_count,
        snp.snp_text()
    ))
}

/// Parses `1,3..5` style lists of positive integers.
pub fn parse_count_list(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Threshold(format!("bad count list {text:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u64 = hi.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_conf_list(text: &str) -> Result<Vec<MinConf>> {
    text.split(',').map(|c| parse_min_conf(c.trim())).collect()
}

fn snp_cmp(a: &SnpReport, b: &SnpReport) -> Ordering {
    let key = |r: &SnpReport| {
        let num = r.thresholds.min_stab_count as u128 * r.sner_count as u128;
        let den = (r.n_states * r.ner_count.max(1)) as u128;
        (num, den)
    };
    let ((an, ad), (bn, bd)) = (key(a), key(b));
    (an * bd).cmp(&(bn * ad))
}

/// One report per grid cell, grouped by (minSupCount, minConf) in grid order
/// and sorted by SNP within each group.
pub fn sweep(
    dbs: &[SysNetDb],
    sups: &[u64],
    confs: &[MinConf],
    stabs: &[u64],
    caps: &MiningCaps,
    order: SortOrder,
) -> Result<Vec<SnpReport>> {
    if sups.is_empty() || confs.is_empty() || stabs.is_empty() {
        return Err(Error::Threshold("empty threshold grid".into()));
    }
    if let Some(bad) = stabs.iter().find(|s| **s as usize > dbs.len()) {
        return Err(Error::Threshold(format!(
            "min stability count {bad} exceeds the {} states",
            dbs.len()
        )));
    }
    let blocks: Vec<(u64, MinConf)> = sups
        .iter()
        .flat_map(|s| confs.iter().map(move |c| (*s, *c)))
        .collect();
    let sets: Vec<Result<EvolutionRuleSet>> = with_jobs(caps.jobs, || {
        blocks
            .par_iter()
            .map(|(sup, conf)| {
                let params = mine_params(*sup, *conf, caps)?;
                merge(&mine_all(dbs, &params))
            })
            .collect()
    })?;
    let mut rows = Vec::new();
    for ((sup, conf), ers) in blocks.iter().zip(sets) {
        let ers = ers?;
        let mut block = stabs
            .iter()
            .map(|msc| SnpReport::from_rule_set(&ers, Thresholds::new(*sup, *conf, *msc as usize)?))
            .collect::<Result<Vec<_>>>()?;
        block.sort_by(|a, b| {
            let by_snp = match order {
                SortOrder::Asc => snp_cmp(a, b),
                SortOrder::Desc => snp_cmp(b, a),
            };
            by_snp.then(a.thresholds.min_stab_count.cmp(&b.thresholds.min_stab_count))
        });
        rows.extend(block);
    }
    Ok(rows)
}

pub fn format_sweep(rows: &[SnpReport]) -> String {
    let mut out = format!("{SNP_CSV_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn run_sweep(args: &SweepArgs) -> Result<String> {
    let sups = parse_count_list(&args.min_sup_count)?;
    let confs = parse_conf_list(&args.min_conf)?;
    let stabs = parse_count_list(&args.min_stab_count)?;
    let (dbs, _) = read_series(&args.db)?;
    let rows = sweep(&dbs, &sups, &confs, &stabs, &args.caps, args.sort)?;
    let csv = format_sweep(&rows);
    match &args.out {
        Some(path) => {
            write(path, &csv)?;
            Ok(format!("{} rows written to {}\n", rows.len(), path.display()))
        }
        None => Ok(csv),
    }
}

pub fn run_gen(args: &GenArgs) -> Result<String> {
    let spec = read_spec(&args.spec)?;
    let dbs = generate(&spec)?;
    let index = synthetic_index(spec.max_id());
    write_series(&args.out, &dbs, &index)?;
    Ok(series_summary(&dbs, index.len()))
}

pub fn run_decode(args: &DecodeArgs) -> Result<String> {
    let index = read_index(&args.index)?;
    decode_rules(&args.rules, &index, &args.out)?;
    Ok(String::new())
}
