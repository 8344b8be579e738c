//! Explicit ratings in the `UserID::MovieID::Rating::Timestamp` format.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{RecsysError, Result};

/// Users with fewer ratings than this are dropped on load.
pub const MIN_RATINGS_PER_USER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rating {
    pub user: u32,
    pub item: u32,
    pub rating: u8,
    pub timestamp: u64,
}

/// A set of ratings with unique (user, item) pairs and values in 1..=5.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingsTable {
    records: Vec<Rating>,
}

/// Counts reported by [`load_ratings`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadStats {
    pub lines: usize,
    pub ratings: usize,
    pub users: usize,
    pub items: usize,
    pub dropped_users: usize,
    pub dropped_ratings: usize,
}

impl RatingsTable {
    pub fn new(records: Vec<Rating>) -> Result<Self> {
        if records.is_empty() {
            return Err(RecsysError::Empty("ratings table is empty".into()));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !(1..=5).contains(&r.rating) {
                return Err(RecsysError::InvalidArgument(format!(
                    "rating {} for user {}, item {} outside 1..=5",
                    r.rating, r.user, r.item
                )));
            }
            if !seen.insert((r.user, r.item)) {
                return Err(RecsysError::Duplicate { user: r.user, item: r.item });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Rating] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct user ids, ascending.
    pub fn users(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.records.iter().map(|r| r.user).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Distinct item ids, ascending.
    pub fn items(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.records.iter().map(|r| r.item).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Record indices grouped by user, users ascending, records in table order.
    pub fn by_user(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            map.entry(r.user).or_default().push(i);
        }
        map
    }

    /// Keeps only users with at least `min` ratings.
    pub fn filter_min_ratings(&self, min: usize) -> Result<(Self, usize, usize)> {
        let groups = self.by_user();
        let keep: HashSet<u32> = groups.iter().filter(|(_, v)| v.len() >= min).map(|(&u, _)| u).collect();
        let dropped_users = groups.len() - keep.len();
        let records: Vec<Rating> = self.records.iter().copied().filter(|r| keep.contains(&r.user)).collect();
        let dropped_ratings = self.records.len() - records.len();
        if records.is_empty() {
            return Err(RecsysError::Empty(format!("no user has {min} or more ratings")));
        }
        Ok((Self { records }, dropped_users, dropped_ratings))
    }

    /// Subset by record index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.records[i]).collect())
    }
}

/// Parses one `UserID::MovieID::Rating::Timestamp` line.
pub fn parse_line(line: &str) -> std::result::Result<Rating, String> {
    let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split("::").collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 '::'-separated fields, found {}", fields.len()));
    }
    let user = fields[0].trim().parse::<u32>().map_err(|e| format!("user id {:?}: {e}", fields[0]))?;
    let item = fields[1].trim().parse::<u32>().map_err(|e| format!("item id {:?}: {e}", fields[1]))?;
    let rating = fields[2].trim().parse::<u8>().map_err(|e| format!("rating {:?}: {e}", fields[2]))?;
    if !(1..=5).contains(&rating) {
        return Err(format!("rating {rating} outside 1..=5"));
    }
    let timestamp = fields[3].trim().parse::<u64>().map_err(|e| format!("timestamp {:?}: {e}", fields[3]))?;
    Ok(Rating { user, item, rating, timestamp })
}

/// Reads ratings without filtering. Blank lines are skipped.
pub fn read_ratings<R: BufRead>(reader: R) -> Result<(RatingsTable, usize)> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut lines = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        lines += 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_line(&line).map_err(|message| RecsysError::Parse { line: idx + 1, message })?;
        if !seen.insert((rec.user, rec.item)) {
            return Err(RecsysError::Parse {
                line: idx + 1,
                message: format!("duplicate rating for user {}, item {}", rec.user, rec.item),
            });
        }
        records.push(rec);
    }
    Ok((RatingsTable::new(records)?, lines))
}

/// Reads a ratings file and drops users with fewer than `min_per_user` ratings.
pub fn load_ratings_from<R: BufRead>(reader: R, min_per_user: usize) -> Result<(RatingsTable, LoadStats)> {
    let (raw, lines) = read_ratings(reader)?;
    let (table, dropped_users, dropped_ratings) = raw.filter_min_ratings(min_per_user)?;
    let stats = LoadStats {
        lines,
        ratings: table.len(),
        users: table.users().len(),
        items: table.items().len(),
        dropped_users,
        dropped_ratings,
    };
    Ok((table, stats))
}

pub fn load_ratings(path: impl AsRef<Path>) -> Result<(RatingsTable, LoadStats)> {
    let file = File::open(path)?;
    load_ratings_from(BufReader::new(file), MIN_RATINGS_PER_USER)
}
