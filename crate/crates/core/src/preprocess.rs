//! Snapshot ingestion, entity indexing, and the on-disk database formats.
//!
//! Raw snapshots are either edge lists (`source<TAB>target` per line) or
//! explicit pair files (`a b -> x y z` per line). Every state of a series is
//! encoded against one shared [`EntityIndex`], so an entity keeps its ID
//! across states.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ConnectionPair, EntityId, SysNetDb};

pub const DB_DIR: &str = "SysNetDbs";
pub const INDEX_FILE: &str = "IndexFile.txt";
pub const LABELS_FILE: &str = "StateLabels.txt";

pub fn db_file_name(state: usize) -> String {
    format!("SysNetDb_{state}_ID.txt")
}

/// How raw snapshot lines become connection pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupingStrategy {
    /// Edge list in; one pair `({s}, successors(s))` per distinct source.
    PerSource,
    /// Input lines are already `L -> R` pairs.
    ExplicitPairs,
}

/// A connection pair still in entity-name form. Sides keep first-appearance
/// order with duplicates removed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedPair {
    pub left: Vec<String>,
    pub right: Vec<String>,
}

fn push_unique(side: &mut Vec<String>, name: &str) {
    if !side.iter().any(|n| n == name) {
        side.push(name.to_string());
    }
}

fn check_name(path: &Path, line: usize, name: &str) -> Result<()> {
    if name == "->" || name.starts_with('#') {
        return Err(Error::parse(
            path,
            line,
            format!("{name:?} is not a valid entity name"),
        ));
    }
    Ok(())
}

/// Content lines of a text file with their 1-based line numbers; blank lines
/// and `#` comments dropped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Reads one raw snapshot and groups it into named connection pairs.
pub fn ingest_state(path: &Path, grouping: GroupingStrategy) -> Result<Vec<NamedPair>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let pairs = match grouping {
        GroupingStrategy::PerSource => group_edges(path, &text)?,
        GroupingStrategy::ExplicitPairs => parse_pairs(path, &text)?,
    };
    if pairs.is_empty() {
        return Err(Error::EmptyState(path.to_path_buf()));
    }
    Ok(pairs)
}

fn group_edges(path: &Path, text: &str) -> Result<Vec<NamedPair>> {
    let mut pairs: Vec<NamedPair> = Vec::new();
    let mut by_source: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in content_lines(text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [source, target] = tokens[..] else {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected `source<TAB>target`, found {} token(s)", tokens.len()),
            ));
        };
        check_name(path, lineno, source)?;
        check_name(path, lineno, target)?;
        let slot = *by_source.entry(source.to_string()).or_insert_with(|| {
            pairs.push(NamedPair {
                left: vec![source.to_string()],
                right: Vec::new(),
            });
            pairs.len() - 1
        });
        push_unique(&mut pairs[slot].right, target);
    }
    Ok(pairs)
}

fn parse_pairs(path: &Path, text: &str) -> Result<Vec<NamedPair>> {
    let mut pairs = Vec::new();
    for (lineno, line) in content_lines(text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let arrows = tokens.iter().filter(|t| **t == "->").count();
        if arrows != 1 {
            return Err(Error::parse(path, lineno, "expected exactly one `->`"));
        }
        let split = tokens.iter().position(|t| *t == "->").unwrap_or_default();
        let (lhs, rhs) = (&tokens[..split], &tokens[split + 1..]);
        if lhs.is_empty() || rhs.is_empty() {
            return Err(Error::parse(path, lineno, "pair has an empty side"));
        }
        let mut pair = NamedPair {
            left: Vec::new(),
            right: Vec::new(),
        };
        for name in lhs {
            check_name(path, lineno, name)?;
            push_unique(&mut pair.left, name);
        }
        for name in rhs {
            check_name(path, lineno, name)?;
            push_unique(&mut pair.right, name);
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

/// Bijection between entity names and dense IDs `1..=K`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EntityIndex {
    forward: HashMap<String, EntityId>,
    reverse: Vec<String>,
}

impl EntityIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the name's ID, assigning the next free one on first sight.
    pub fn intern(&mut self, name: &str) -> EntityId {
        if let Some(id) = self.forward.get(name) {
            return *id;
        }
        let id = EntityId(self.counter());
        self.forward.insert(name.to_string(), id);
        self.reverse.push(name.to_string());
        id
    }

    pub fn id(&self, name: &str) -> Option<EntityId> {
        self.forward.get(name).copied()
    }

    pub fn name(&self, id: EntityId) -> Option<&str> {
        let slot = (id.0 as usize).checked_sub(1)?;
        self.reverse.get(slot).map(String::as_str)
    }

    /// Next ID that [`intern`](Self::intern) would hand out.
    pub fn counter(&self) -> u32 {
        self.reverse.len() as u32 + 1
    }

    pub fn len(&self) -> usize {
        self.reverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reverse.is_empty()
    }

    /// Entries in ascending ID order.
    pub fn iter(&self) -> impl Iterator<Item = (EntityId, &str)> {
        self.reverse
            .iter()
            .enumerate()
            .map(|(i, n)| (EntityId(i as u32 + 1), n.as_str()))
    }
}

/// Assigns IDs across the whole series and converts every state to ID form.
///
/// IDs follow first encounter: states in series order, pairs in order, left
/// side before right side.
pub fn encode_series(states: &[(String, Vec<NamedPair>)]) -> Result<(Vec<SysNetDb>, EntityIndex)> {
    if states.is_empty() {
        return Err(Error::NoStates);
    }
    let mut index = EntityIndex::new();
    let mut dbs = Vec::with_capacity(states.len());
    for (label, named) in states {
        let mut pairs = Vec::with_capacity(named.len());
        for p in named {
            let left = p.left.iter().map(|n| index.intern(n)).collect();
            let right = p.right.iter().map(|n| index.intern(n)).collect();
            pairs.push(ConnectionPair::new(left, right)?);
        }
        dbs.push(SysNetDb::new(label.clone(), pairs));
    }
    Ok((dbs, index))
}

/// Lists the snapshot files of a series in order: the manifest's order when
/// one is given, otherwise lexicographic by file name.
pub fn list_snapshots(dir: &Path, manifest: Option<&Path>) -> Result<Vec<PathBuf>> {
    if let Some(manifest) = manifest {
        let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        return Ok(content_lines(&text).map(|(_, l)| dir.join(l)).collect());
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Ingests every snapshot (in parallel) and encodes them in series order.
pub fn preprocess_files(
    files: &[PathBuf],
    grouping: GroupingStrategy,
) -> Result<(Vec<SysNetDb>, EntityIndex)> {
    if files.is_empty() {
        return Err(Error::NoStates);
    }
    let named = files
        .par_iter()
        .map(|path| {
            let label = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            ingest_state(path, grouping).map(|pairs| (label, pairs))
        })
        .collect::<Result<Vec<_>>>()?;
    encode_series(&named)
}

fn format_side(out: &mut String, ids: &[EntityId]) {
    for id in ids {
        out.push_str(&id.to_string());
        out.push(' ');
    }
}

pub fn format_db(db: &SysNetDb) -> String {
    let mut out = String::new();
    for pair in &db.pairs {
        format_side(&mut out, pair.left());
        out.push_str("-1 ");
        format_side(&mut out, pair.right());
        out.push_str("-2\n");
    }
    out
}

pub fn write_db(db: &SysNetDb, path: &Path) -> Result<()> {
    fs::write(path, format_db(db)).map_err(|e| Error::io(path, e))
}

/// Reads a database file. The label is the file stem.
pub fn read_db(path: &Path) -> Result<SysNetDb> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(SysNetDb::new(label, parse_db(path, &text)?))
}

pub fn parse_db(path: &Path, text: &str) -> Result<Vec<ConnectionPair>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut seen_left_end = false;
        let mut seen_end = false;
        for tok in line.split_whitespace() {
            if seen_end {
                return Err(Error::parse(path, lineno, "tokens after `-2`"));
            }
            match tok {
                "-1" if !seen_left_end => seen_left_end = true,
                "-2" if seen_left_end => seen_end = true,
                _ => {
                    let id: u32 = tok.parse().ok().filter(|v| *v > 0).ok_or_else(|| {
                        Error::parse(path, lineno, format!("bad entity id {tok:?}"))
                    })?;
                    if seen_left_end {
                        right.push(EntityId(id));
                    } else {
                        left.push(EntityId(id));
                    }
                }
            }
        }
        if !seen_end {
            return Err(Error::parse(path, lineno, "pair not terminated by `-1 ... -2`"));
        }
        let pair = ConnectionPair::new(left, right)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn format_index(index: &EntityIndex) -> String {
    let mut out = String::new();
    for (id, name) in index.iter() {
        out.push_str(&format!("{id}\t{name}\n"));
    }
    out
}

pub fn write_index(index: &EntityIndex, path: &Path) -> Result<()> {
    fs::write(path, format_index(index)).map_err(|e| Error::io(path, e))
}

pub fn read_index(path: &Path) -> Result<EntityIndex> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_index(path, &text)
}

pub fn parse_index(path: &Path, text: &str) -> Result<EntityIndex> {
    let mut entries: Vec<(u32, usize, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let (id, name) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected `id<TAB>name`"))?;
        let id: u32 = id
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("non-integer id {id:?}")))?;
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::parse(path, lineno, "entity name must be one token"));
        }
        entries.push((id, lineno, name.to_string()));
    }
    entries.sort_by_key(|e| e.0);
    let mut index = EntityIndex::new();
    for (id, lineno, name) in entries {
        if index.id(&name).is_some() {
            return Err(Error::IndexConflict(format!(
                "line {lineno}: name {name:?} listed twice"
            )));
        }
        if id < index.counter() {
            return Err(Error::IndexConflict(format!(
                "line {lineno}: id {id} listed twice"
            )));
        }
        if id > index.counter() {
            return Err(Error::IndexConflict(format!(
                "id {} missing; ids must be dense from 1",
                index.counter()
            )));
        }
        index.intern(&name);
    }
    Ok(index)
}

/// Writes `SysNetDbs/SysNetDb_<i>_ID.txt`, the index, and the state labels.
pub fn write_series(out: &Path, dbs: &[SysNetDb], index: &EntityIndex) -> Result<()> {
    let db_dir = out.join(DB_DIR);
    fs::create_dir_all(&db_dir).map_err(|e| Error::io(&db_dir, e))?;
    for (i, db) in dbs.iter().enumerate() {
        write_db(db, &db_dir.join(db_file_name(i + 1)))?;
    }
    write_index(index, &out.join(INDEX_FILE))?;
    let labels_path = out.join(LABELS_FILE);
    let mut labels = BufWriter::new(
        fs::File::create(&labels_path).map_err(|e| Error::io(&labels_path, e))?,
    );
    for db in dbs {
        writeln!(labels, "{}", db.label).map_err(|e| Error::io(&labels_path, e))?;
    }
    labels.flush().map_err(|e| Error::io(&labels_path, e))
}

/// Loads a series written by [`write_series`]. Databases are read as
/// `SysNetDb_1_ID.txt`, `SysNetDb_2_ID.txt`, ... until the first gap.
pub fn read_series(dir: &Path) -> Result<(Vec<SysNetDb>, EntityIndex)> {
    let db_dir = dir.join(DB_DIR);
    let mut dbs = Vec::new();
    loop {
        let path = db_dir.join(db_file_name(dbs.len() + 1));
        if !path.is_file() {
            break;
        }
        dbs.push(read_db(&path)?);
    }
    if dbs.is_empty() {
        return Err(Error::NoStates);
    }
    let index = read_index(&dir.join(INDEX_FILE))?;
    for (i, db) in dbs.iter().enumerate() {
        for pair in &db.pairs {
            if let Some(id) = pair
                .left()
                .iter()
                .chain(pair.right())
                .find(|id| index.name(**id).is_none())
            {
                return Err(Error::UnknownId {
                    id: id.0,
                    line: i + 1,
                });
            }
        }
    }
    let labels_path = dir.join(LABELS_FILE);
    if labels_path.is_file() {
        let text = fs::read_to_string(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
        let labels: Vec<&str> = text.lines().collect();
        if labels.len() != dbs.len() {
            return Err(Error::CountMismatch(format!(
                "{} labels for {} states",
                labels.len(),
                dbs.len()
            )));
        }
        for (db, label) in dbs.iter_mut().zip(labels) {
            db.label = label.to_string();
        }
    }
    Ok((dbs, index))
}
