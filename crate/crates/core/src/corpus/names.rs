//! First-name pools for the four demographic groups.
//!
//! The bundled asset lists 100 names per group as `group<TAB>name<TAB>frequency`
//! rows. Its SHA-256 is pinned below and checked every time it is loaded.
//! Frequencies are corpus counts used for frequency-binned swaps; names absent
//! from a frequency table count as 0.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::DemographicGroup;

/// Fixed last name used for every group.
pub const LAST_NAME: &str = "Williams";

pub const BUNDLED_NAME_POOLS_SHA256: &str =
    "135f591a00b58d2a0186304439192b08693db65dce9b0aefd9c59c41e6ce67bc";

const BUNDLED_NAME_POOLS: &str = include_str!("../../assets/name_pools.tsv");

const NAMES_PER_GROUP: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum NamePoolError {
    #[error("name-pool checksum mismatch: expected {expected}, got {actual}")]
    Checksum { expected: String, actual: String },
    #[error("name-pool line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("group {group} has {count} names, expected {expected}")]
    WrongSize { group: DemographicGroup, count: usize, expected: usize },
    #[error("group {group} lists '{name}' twice")]
    Duplicate { group: DemographicGroup, name: String },
    #[error("group {0} has no names")]
    Empty(DemographicGroup),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamePool {
    pub group: DemographicGroup,
    names: Vec<String>,
    frequencies: BTreeMap<String, u64>,
}

impl NamePool {
    /// Builds a pool of distinct names; every name starts with frequency 0.
    pub fn new(group: DemographicGroup, names: Vec<String>) -> Result<Self, NamePoolError> {
        if names.is_empty() {
            return Err(NamePoolError::Empty(group));
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(NamePoolError::Duplicate { group, name: n.clone() });
            }
        }
        let frequencies = names.iter().map(|n| (n.clone(), 0)).collect();
        Ok(NamePool { group, names, frequencies })
    }

    pub fn with_frequencies(
        group: DemographicGroup,
        entries: Vec<(String, u64)>,
    ) -> Result<Self, NamePoolError> {
        let names = entries.iter().map(|(n, _)| n.clone()).collect();
        let mut pool = NamePool::new(group, names)?;
        pool.frequencies = entries.into_iter().collect();
        Ok(pool)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.frequencies.contains_key(name)
    }

    pub fn frequency(&self, name: &str) -> Option<u64> {
        self.frequencies.get(name).copied()
    }

    pub fn set_frequency(&mut self, name: &str, count: u64) -> bool {
        match self.frequencies.get_mut(name) {
            Some(f) => {
                *f = count;
                true
            }
            None => false,
        }
    }

    /// Upper-inclusive cut points q1 <= q2 <= q3 of the frequency distribution,
    /// each the sorted value at index ceil(p * (n - 1)).
    pub fn quartile_cuts(&self) -> [u64; 3] {
        let mut f: Vec<u64> = self.names.iter().map(|n| self.frequencies[n]).collect();
        f.sort_unstable();
        let at = |p: f64| f[(p * (f.len() - 1) as f64).ceil() as usize];
        [at(0.25), at(0.5), at(0.75)]
    }

    /// Frequency bin (0..4) of a name: bin k holds frequencies in (q_k, q_{k+1}]
    /// with q_0 = -inf and q_4 = +inf.
    pub fn bin_of(&self, name: &str) -> Option<usize> {
        let f = self.frequency(name)?;
        Some(self.quartile_cuts().iter().filter(|&&q| f > q).count())
    }

    /// Names in each of the four bins, in pool order.
    pub fn bins(&self) -> [Vec<&str>; 4] {
        let cuts = self.quartile_cuts();
        let mut out: [Vec<&str>; 4] = Default::default();
        for n in &self.names {
            let f = self.frequencies[n];
            out[cuts.iter().filter(|&&q| f > q).count()].push(n);
        }
        out
    }
}

/// The four group pools plus the set of names listed in more than one pool.
#[derive(Debug, Clone)]
pub struct NamePools {
    pools: BTreeMap<DemographicGroup, NamePool>,
    owners: HashMap<String, Vec<DemographicGroup>>,
}

impl NamePools {
    /// The bundled pools, checksum-verified, 100 names per group.
    pub fn bundled() -> Result<Self, NamePoolError> {
        Self::from_tsv(BUNDLED_NAME_POOLS, Some(BUNDLED_NAME_POOLS_SHA256), true)
    }

    /// Parses `group<TAB>name<TAB>frequency` rows (header optional, `#` comments
    /// ignored). With `require_full`, every group must have exactly 100 names.
    pub fn from_tsv(
        text: &str,
        expected_sha256: Option<&str>,
        require_full: bool,
    ) -> Result<Self, NamePoolError> {
        if let Some(expected) = expected_sha256 {
            let actual = hex::encode(Sha256::digest(text.as_bytes()));
            if actual != expected {
                return Err(NamePoolError::Checksum { expected: expected.to_string(), actual });
            }
        }
        let mut entries: BTreeMap<DemographicGroup, Vec<(String, u64)>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') || line.starts_with("group\t") {
                continue;
            }
            let (group, name, freq) = parse_row(line)
                .ok_or_else(|| NamePoolError::Parse { line: line_no, message: line.to_string() })?;
            let group: DemographicGroup = group
                .parse()
                .map_err(|message| NamePoolError::Parse { line: line_no, message })?;
            entries.entry(group).or_default().push((name.to_string(), freq));
        }
        let mut pools = BTreeMap::new();
        for g in DemographicGroup::ALL {
            let list = entries.remove(&g).unwrap_or_default();
            if require_full && list.len() != NAMES_PER_GROUP {
                return Err(NamePoolError::WrongSize {
                    group: g,
                    count: list.len(),
                    expected: NAMES_PER_GROUP,
                });
            }
            pools.insert(g, NamePool::with_frequencies(g, list)?);
        }
        Ok(Self::from_pools(pools))
    }

    pub fn from_pools(pools: BTreeMap<DemographicGroup, NamePool>) -> Self {
        let mut owners: HashMap<String, Vec<DemographicGroup>> = HashMap::new();
        for (g, p) in &pools {
            for n in p.names() {
                owners.entry(n.clone()).or_default().push(*g);
            }
        }
        NamePools { pools, owners }
    }

    /// Replaces frequencies from a `group<TAB>name<TAB>frequency` table.
    /// Pool names missing from the table get frequency 0; table rows naming
    /// unknown names are returned so callers can report them.
    pub fn apply_frequencies(&mut self, table: &str) -> Result<Vec<String>, NamePoolError> {
        let mut unknown = Vec::new();
        for pool in self.pools.values_mut() {
            for n in pool.names.clone() {
                pool.set_frequency(&n, 0);
            }
        }
        for (i, line) in table.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') || line.starts_with("group\t") {
                continue;
            }
            let (group, name, freq) = parse_row(line)
                .ok_or_else(|| NamePoolError::Parse { line: i + 1, message: line.to_string() })?;
            let group: DemographicGroup = group
                .parse()
                .map_err(|message| NamePoolError::Parse { line: i + 1, message })?;
            let hit = self.pools.get_mut(&group).is_some_and(|p| p.set_frequency(name, freq));
            if !hit {
                unknown.push(format!("{group}\t{name}"));
            }
        }
        Ok(unknown)
    }

    pub fn pool(&self, group: DemographicGroup) -> &NamePool {
        &self.pools[&group]
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.owners.contains_key(name)
    }

    /// Groups whose pool lists `name`.
    pub fn groups_of(&self, name: &str) -> &[DemographicGroup] {
        self.owners.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Names listed in more than one pool.
    pub fn overlaps(&self) -> BTreeSet<&str> {
        self.owners
            .iter()
            .filter(|(_, gs)| gs.len() > 1)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn is_ambiguous(&self, name: &str) -> bool {
        self.groups_of(name).len() > 1
    }
}

fn parse_row(line: &str) -> Option<(&str, &str, u64)> {
    let mut it = line.split('\t');
    let group = it.next()?.trim();
    let name = it.next()?.trim();
    let freq = match it.next() {
        Some(f) if !f.trim().is_empty() => f.trim().parse().ok()?,
        _ => 0,
    };
    if name.is_empty() || it.next().is_some() {
        return None;
    }
    Some((group, name, freq))
}

/// Maximal alphanumeric runs with their byte offsets.
pub(crate) fn word_tokens(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, &text[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_pools_verify() {
        let pools = NamePools::bundled().unwrap();
        for g in DemographicGroup::ALL {
            assert_eq!(pools.pool(g).len(), 100);
        }
        assert!(pools.pool(DemographicGroup::MW).contains("Brett"));
        assert!(pools.pool(DemographicGroup::FB).contains("Latoya"));
        assert!(pools.pool(DemographicGroup::FW).contains("Heather"));
        assert_eq!(pools.overlaps(), BTreeSet::from(["Amari", "Bailey"]));
        assert_eq!(pools.groups_of("Bailey"), &[DemographicGroup::FW, DemographicGroup::MW]);
    }

    #[test]
    fn tampered_asset_fails_checksum() {
        let tampered = BUNDLED_NAME_POOLS.replace("Brett", "Brent2");
        let err = NamePools::from_tsv(&tampered, Some(BUNDLED_NAME_POOLS_SHA256), true).unwrap_err();
        assert!(matches!(err, NamePoolError::Checksum { .. }));
    }

    #[test]
    fn wrong_size_rejected_when_full_required() {
        let text = "FB\tA\t1\nFW\tB\t1\nMB\tC\t1\nMW\tD\t1\n";
        assert!(matches!(
            NamePools::from_tsv(text, None, true),
            Err(NamePoolError::WrongSize { .. })
        ));
        assert!(NamePools::from_tsv(text, None, false).is_ok());
    }

    #[test]
    fn quartile_bins_hand_computed() {
        // sorted {1, 2, 100, 200}: cuts at indices ceil(.75)=1, ceil(1.5)=2, ceil(2.25)=3
        // -> q = (2, 100, 200); bins {1,2} | {100} | {200} | {}
        let pool = NamePool::with_frequencies(
            DemographicGroup::FW,
            vec![("A".into(), 1), ("B".into(), 2), ("C".into(), 100), ("D".into(), 200)],
        )
        .unwrap();
        assert_eq!(pool.quartile_cuts(), [2, 100, 200]);
        let bins = pool.bins();
        assert_eq!(bins[0], vec!["A", "B"]);
        assert_eq!(bins[1], vec!["C"]);
        assert_eq!(bins[2], vec!["D"]);
        assert!(bins[3].is_empty());
    }

    #[test]
    fn equal_frequencies_form_one_bin() {
        let pool = NamePool::new(DemographicGroup::MB, vec!["A".into(), "B".into(), "C".into()]).unwrap();
        assert_eq!(pool.bins()[0].len(), 3);
    }

    #[test]
    fn frequency_override_defaults_missing_to_zero() {
        let mut pools = NamePools::bundled().unwrap();
        let unknown = pools
            .apply_frequencies("group\tname\tfrequency\nMW\tBrett\t42\nMW\tNotAName\t3\n")
            .unwrap();
        assert_eq!(unknown, vec!["MW\tNotAName".to_string()]);
        assert_eq!(pools.pool(DemographicGroup::MW).frequency("Brett"), Some(42));
        assert_eq!(pools.pool(DemographicGroup::MW).frequency("Adam"), Some(0));
    }

    #[test]
    fn duplicate_names_rejected() {
        assert!(matches!(
            NamePool::new(DemographicGroup::FB, vec!["A".into(), "A".into()]),
            Err(NamePoolError::Duplicate { .. })
        ));
    }

    #[test]
    fn tokens() {
        let t = word_tokens("Brett Williams\nled 3 teams, Brett's");
        let words: Vec<&str> = t.iter().map(|(_, w)| *w).collect();
        assert_eq!(words, vec!["Brett", "Williams", "led", "3", "teams", "Brett", "s"]);
        assert_eq!(t[1].0, 6);
    }
}
