//! Dataset manifests and balanced, seeded subsampling.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub group_id: String,
    pub language_or_tradition: String,
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Group id to member labels.
    #[serde(default)]
    pub grouping: BTreeMap<String, Vec<String>>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| Error::Data(format!("manifest JSON: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    /// Paths are unique; with a grouping, every label belongs to exactly one
    /// group and that group is the entry's `group_id`.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.path.as_str()) {
                return Err(Error::Data(format!("duplicate manifest path '{}'", e.path)));
            }
        }
        if self.grouping.is_empty() {
            return Ok(());
        }
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        for (g, labels) in &self.grouping {
            for l in labels {
                if let Some(prev) = owner.insert(l, g) {
                    return Err(Error::Data(format!("label '{l}' is in groups '{prev}' and '{g}'")));
                }
            }
        }
        for e in &self.entries {
            match owner.get(e.language_or_tradition.as_str()) {
                None => return Err(Error::Data(format!("label '{}' of '{}' is in no group", e.language_or_tradition, e.path))),
                Some(g) if *g != e.group_id => {
                    return Err(Error::Data(format!(
                        "'{}' has group '{}' but label '{}' belongs to '{g}'",
                        e.path, e.group_id, e.language_or_tradition
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<&str> {
        let mut l: Vec<&str> = self.entries.iter().map(|e| e.language_or_tradition.as_str()).collect();
        l.sort_unstable();
        l.dedup();
        l
    }

    pub fn count_by(&self, key: impl Fn(&ManifestEntry) -> String) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(key(e)).or_insert(0) += 1;
        }
        m
    }
}

/// Per-label sample counts, with an optional default for unlisted labels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Quota {
    pub per_label: BTreeMap<String, usize>,
    pub default: Option<usize>,
}

impl Quota {
    pub fn uniform(n: usize) -> Self {
        Self { per_label: BTreeMap::new(), default: Some(n) }
    }

    /// Parses `N` or `label=N,label=N,*=N`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid quota '{s}' (use N or label=N,...)"));
        if let Ok(n) = s.trim().parse::<usize>() {
            return Ok(Self::uniform(n));
        }
        let mut q = Quota::default();
        for part in s.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            let v: usize = v.trim().parse().map_err(|_| bad())?;
            if k.trim() == "*" {
                q.default = Some(v);
            } else {
                q.per_label.insert(k.trim().to_string(), v);
            }
        }
        Ok(q)
    }

    pub fn for_label(&self, label: &str) -> Result<usize> {
        self.per_label
            .get(label)
            .copied()
            .or(self.default)
            .ok_or_else(|| Error::Config(format!("no quota for label '{label}'")))
    }
}

fn label_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a keeps each label's draw independent of which other labels exist
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn draw(pool: &[usize], k: usize, rng: &mut ChaCha8Rng, who: &str) -> Result<Vec<usize>> {
    if pool.len() < k {
        return Err(Error::Quota { group: who.to_string(), available: pool.len(), requested: k });
    }
    Ok(sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect())
}

/// Uniform sampling without replacement of `quota` entries per label. With
/// `stratify`, each label's quota is split evenly over the sorted values of
/// that `extra` field, the remainder going to the first strata. Output keeps
/// the input order of the chosen entries.
pub fn sample_balanced(manifest: &Manifest, quota: &Quota, stratify: Option<&str>, seed: u64) -> Result<Manifest> {
    manifest.validate()?;
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in manifest.entries.iter().enumerate() {
        by_label.entry(&e.language_or_tradition).or_default().push(i);
    }
    let mut chosen = Vec::new();
    for (label, idx) in &by_label {
        let q = quota.for_label(label)?;
        let mut rng = ChaCha8Rng::seed_from_u64(label_seed(seed, label));
        match stratify {
            None => chosen.extend(draw(idx, q, &mut rng, label)?),
            Some(field) => {
                let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
                for &i in idx {
                    let e = &manifest.entries[i];
                    let v = e.extra.get(field).ok_or_else(|| {
                        Error::Data(format!("'{}' has no '{field}' field to stratify on", e.path))
                    })?;
                    strata.entry(v).or_default().push(i);
                }
                let k = strata.len();
                for (s, (name, pool)) in strata.iter().enumerate() {
                    let share = q / k + usize::from(s < q % k);
                    chosen.extend(draw(pool, share, &mut rng, &format!("{label}/{name}"))?);
                }
            }
        }
    }
    chosen.sort_unstable();
    Ok(Manifest {
        entries: chosen.into_iter().map(|i| manifest.entries[i].clone()).collect(),
        grouping: manifest.grouping.clone(),
    })
}

pub const TONAL: [&str; 5] = ["Mandarin", "Vietnamese", "Thai", "Punjabi", "Cantonese"];
pub const NON_TONAL: [&str; 6] = ["English", "Spanish", "German", "French", "Italian", "Dutch"];
pub const WESTERN_MUSIC: [&str; 2] = ["GTZAN", "FMA-small"];
pub const NON_WESTERN_MUSIC: [&str; 4] = ["Hindustani", "Carnatic", "Turkish makam", "Arab-Andalusian"];
pub const EUROPE_1: [&str; 5] = ["Helsinki", "Stockholm", "Amsterdam", "London", "Prague"];
pub const EUROPE_2: [&str; 5] = ["Barcelona", "Lisbon", "Paris", "Lyon", "Vienna"];
pub const SCENE_TYPES: [&str; 10] = [
    "airport",
    "bus",
    "metro",
    "park",
    "public square",
    "shopping mall",
    "street pedestrian",
    "street traffic",
    "tram",
    "metro station",
];

/// Standard grouping for `speech`, `music` or `scenes`.
pub fn grouping_preset(domain: &str) -> Result<BTreeMap<String, Vec<String>>> {
    let own = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let pairs = match domain {
        "speech" => [("tonal", own(&TONAL)), ("non_tonal", own(&NON_TONAL))],
        "music" => [("non_western", own(&NON_WESTERN_MUSIC)), ("western", own(&WESTERN_MUSIC))],
        "scenes" => [("europe_1", own(&EUROPE_1)), ("europe_2", own(&EUROPE_2))],
        other => return Err(Error::Config(format!("no grouping preset '{other}' (speech, music, scenes)"))),
    };
    Ok(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

/// A synthetic manifest with `per_label` entries for every label of a preset;
/// scene entries carry a `scene` field cycling through the ten scene types.
pub fn synthetic_manifest(domain: &str, per_label: usize) -> Result<Manifest> {
    let grouping = grouping_preset(domain)?;
    let mut entries = Vec::new();
    for (g, labels) in &grouping {
        for l in labels {
            for i in 0..per_label {
                let mut extra = BTreeMap::new();
                if domain == "scenes" {
                    extra.insert("scene".to_string(), SCENE_TYPES[i % SCENE_TYPES.len()].to_string());
                }
                entries.push(ManifestEntry {
                    path: format!("{}/{}/{i:05}.wav", g, l.replace(' ', "_")),
                    group_id: g.clone(),
                    language_or_tradition: l.clone(),
                    extra,
                });
            }
        }
    }
    Ok(Manifest { entries, grouping })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eleven_languages_at_two_thousand() {
        let m = synthetic_manifest("speech", 3000).unwrap();
        let s = sample_balanced(&m, &Quota::uniform(2000), None, 7).unwrap();
        let counts = s.count_by(|e| e.language_or_tradition.clone());
        assert_eq!(counts.len(), 11);
        assert!(counts.values().all(|&c| c == 2000));
        assert!(s.validate().is_ok());
    }

    #[test]
    fn determinism_and_zero_quota() {
        let m = synthetic_manifest("music", 400).unwrap();
        let a = sample_balanced(&m, &Quota::uniform(300), None, 1).unwrap();
        assert_eq!(a, sample_balanced(&m, &Quota::uniform(300), None, 1).unwrap());
        assert_ne!(a, sample_balanced(&m, &Quota::uniform(300), None, 2).unwrap());
        assert!(sample_balanced(&m, &Quota::uniform(0), None, 1).unwrap().entries.is_empty());
    }

    #[test]
    fn scenes_are_stratified() {
        let m = synthetic_manifest("scenes", 150).unwrap();
        let s = sample_balanced(&m, &Quota::uniform(100), Some("scene"), 3).unwrap();
        let per_city = s.count_by(|e| e.language_or_tradition.clone());
        assert!(per_city.values().all(|&c| c == 100));
        let per_cell = s.count_by(|e| format!("{}|{}", e.language_or_tradition, e.extra["scene"]));
        assert_eq!(per_cell.len(), 100);
        assert!(per_cell.values().all(|&c| c == 10));
    }

    #[test]
    fn quota_error_names_the_label() {
        let m = synthetic_manifest("speech", 10).unwrap();
        match sample_balanced(&m, &Quota::uniform(11), None, 0) {
            Err(Error::Quota { group, available: 10, requested: 11 }) => assert!(!group.is_empty()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn quota_parsing() {
        let q = Quota::parse("Thai=5,*=3").unwrap();
        assert_eq!(q.for_label("Thai").unwrap(), 5);
        assert_eq!(q.for_label("Dutch").unwrap(), 3);
        assert!(Quota::parse("x").is_err());
        assert!(Quota::parse("Thai=5").unwrap().for_label("Dutch").is_err());
    }

    #[test]
    fn validation_catches_bad_manifests() {
        let mut m = synthetic_manifest("speech", 2).unwrap();
        m.entries[1].path = m.entries[0].path.clone();
        assert!(m.validate().is_err());
        let mut m = synthetic_manifest("speech", 2).unwrap();
        m.entries[0].group_id = "tonal".into();
        m.entries[0].language_or_tradition = "English".into();
        assert!(m.validate().is_err());
        let json = synthetic_manifest("scenes", 1).unwrap().to_json();
        assert_eq!(Manifest::from_json(&json).unwrap().entries.len(), 10);
    }
}
