//! Declarative name tables mapping dialect-specific operation and property
//! names onto unified categories and identifiers.
//!
//! The file format is line-oriented and tab-separated:
//!
//! ```text
//! # family   kind       raw name   category   unified identifier
//! postgresql	operation	Seq Scan	Producer	Full_Table_Scan
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::ir::{Keyword, Operation, OperationCategory, PropertyCategory};

const BUILTIN: &str = include_str!("default_mapping.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DialectFamily {
    Postgresql,
    Mysql,
    Tidb,
    Sqlite,
}

impl DialectFamily {
    pub const ALL: &'static [DialectFamily] = &[
        DialectFamily::Postgresql,
        DialectFamily::Mysql,
        DialectFamily::Tidb,
        DialectFamily::Sqlite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DialectFamily::Postgresql => "postgresql",
            DialectFamily::Mysql => "mysql",
            DialectFamily::Tidb => "tidb",
            DialectFamily::Sqlite => "sqlite",
        }
    }
}

impl fmt::Display for DialectFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DialectFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DialectFamily::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown dialect family `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MappingKind {
    Operation,
    Property,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappedCategory {
    Operation(OperationCategory),
    Property(PropertyCategory),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingEntry {
    pub family: DialectFamily,
    pub raw_name: String,
    pub category: MappedCategory,
    pub unified_identifier: Keyword,
}

impl MappingEntry {
    pub fn kind(&self) -> MappingKind {
        match self.category {
            MappedCategory::Operation(_) => MappingKind::Operation,
            MappedCategory::Property(_) => MappingKind::Property,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MappingError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate entry for ({family}, {kind:?}, `{raw_name}`), first defined on line {first}")]
    Duplicate {
        line: usize,
        first: usize,
        family: DialectFamily,
        kind: MappingKind,
        raw_name: String,
    },
    #[error("line {line}: unknown category `{category}` for a {kind:?} entry")]
    UnknownCategory {
        line: usize,
        kind: MappingKind,
        category: String,
    },
}

type Key = (DialectFamily, MappingKind, String);

/// Result of a name lookup. `mapped` is false when the fallback was used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapped<C> {
    pub category: C,
    pub identifier: Keyword,
    pub mapped: bool,
}

#[derive(Debug, Clone)]
pub struct DialectMapping {
    entries: Vec<MappingEntry>,
    index: HashMap<Key, usize>,
    pub fallback_operation_category: OperationCategory,
    pub fallback_property_category: PropertyCategory,
}

impl Default for DialectMapping {
    fn default() -> Self {
        DialectMapping {
            entries: Vec::new(),
            index: HashMap::new(),
            fallback_operation_category: OperationCategory::Executor,
            fallback_property_category: PropertyCategory::Configuration,
        }
    }
}

impl DialectMapping {
    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        load_mapping(BUILTIN).expect("builtin mapping table is well-formed")
    }

    pub fn builtin_source() -> &'static str {
        BUILTIN
    }

    pub fn entries(&self) -> &[MappingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, family: DialectFamily, kind: MappingKind, raw_name: &str) -> Option<&MappingEntry> {
        self.index
            .get(&(family, kind, raw_name.to_string()))
            .map(|&i| &self.entries[i])
    }

    pub fn contains_operation(&self, family: DialectFamily, raw_name: &str) -> bool {
        self.get(family, MappingKind::Operation, raw_name).is_some()
    }

    pub fn contains_property(&self, family: DialectFamily, raw_name: &str) -> bool {
        self.get(family, MappingKind::Property, raw_name).is_some()
    }

    /// Every unified operation the table can produce, across all families.
    pub fn known_operations(&self) -> BTreeSet<Operation> {
        self.entries
            .iter()
            .filter_map(|e| match e.category {
                MappedCategory::Operation(c) => Some(Operation::new(c, e.unified_identifier.clone())),
                MappedCategory::Property(_) => None,
            })
            .collect()
    }

    /// Operation entries of one family, longest raw name first.
    pub(crate) fn operation_names(&self, family: DialectFamily) -> Vec<&str> {
        let mut names: Vec<&str> = self
            .entries
            .iter()
            .filter(|e| e.family == family && e.kind() == MappingKind::Operation)
            .map(|e| e.raw_name.as_str())
            .collect();
        names.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        names
    }

    fn insert(&mut self, entry: MappingEntry, line: usize, lines: &mut HashMap<Key, usize>) -> Result<(), MappingError> {
        let key = (entry.family, entry.kind(), entry.raw_name.clone());
        if let Some(&first) = lines.get(&key) {
            return Err(MappingError::Duplicate {
                line,
                first,
                family: entry.family,
                kind: entry.kind(),
                raw_name: entry.raw_name,
            });
        }
        lines.insert(key.clone(), line);
        self.index.insert(key, self.entries.len());
        self.entries.push(entry);
        Ok(())
    }
}

/// Parses a mapping table. Blank lines and lines starting with `#` are ignored.
pub fn load_mapping(source: &str) -> Result<DialectMapping, MappingError> {
    let mut mapping = DialectMapping::default();
    let mut lines = HashMap::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = raw.trim_end_matches('\r');
        if text.trim().is_empty() || text.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 5 {
            return Err(MappingError::Parse {
                line,
                message: format!("expected 5 tab-separated fields, found {}", fields.len()),
            });
        }
        let family = fields[0]
            .parse::<DialectFamily>()
            .map_err(|message| MappingError::Parse { line, message })?;
        let kind = match fields[1] {
            "operation" => MappingKind::Operation,
            "property" => MappingKind::Property,
            other => {
                return Err(MappingError::Parse {
                    line,
                    message: format!("kind must be `operation` or `property`, found `{other}`"),
                })
            }
        };
        let raw_name = fields[2];
        if raw_name.is_empty() {
            return Err(MappingError::Parse {
                line,
                message: "raw name must not be empty".to_string(),
            });
        }
        let unknown = || MappingError::UnknownCategory {
            line,
            kind,
            category: fields[3].to_string(),
        };
        let category = match kind {
            MappingKind::Operation => {
                MappedCategory::Operation(fields[3].parse().map_err(|_| unknown())?)
            }
            MappingKind::Property => {
                MappedCategory::Property(fields[3].parse().map_err(|_| unknown())?)
            }
        };
        let unified_identifier = Keyword::new(fields[4]).map_err(|e| MappingError::Parse {
            line,
            message: e.to_string(),
        })?;
        mapping.insert(
            MappingEntry {
                family,
                raw_name: raw_name.to_string(),
                category,
                unified_identifier,
            },
            line,
            &mut lines,
        )?;
    }
    Ok(mapping)
}

/// Looks up an operation name. A leading `Parallel ` decoration is trimmed
/// before the lookup; on a miss the fallback category and the sanitized raw
/// name are returned with `mapped == false`.
pub fn map_operation(mapping: &DialectMapping, family: DialectFamily, raw_name: &str) -> Mapped<OperationCategory> {
    let name = raw_name.trim();
    let name = name.strip_prefix("Parallel ").unwrap_or(name);
    match mapping.get(family, MappingKind::Operation, name) {
        Some(MappingEntry {
            category: MappedCategory::Operation(c),
            unified_identifier,
            ..
        }) => Mapped {
            category: *c,
            identifier: unified_identifier.clone(),
            mapped: true,
        },
        _ => Mapped {
            category: mapping.fallback_operation_category,
            identifier: Keyword::new(name).unwrap_or_else(|_| Keyword::sanitize(name)),
            mapped: false,
        },
    }
}

pub fn map_property(mapping: &DialectMapping, family: DialectFamily, raw_name: &str) -> Mapped<PropertyCategory> {
    let name = raw_name.trim();
    match mapping.get(family, MappingKind::Property, name) {
        Some(MappingEntry {
            category: MappedCategory::Property(c),
            unified_identifier,
            ..
        }) => Mapped {
            category: *c,
            identifier: unified_identifier.clone(),
            mapped: true,
        },
        _ => Mapped {
            category: mapping.fallback_property_category,
            identifier: Keyword::new(name).unwrap_or_else(|_| Keyword::sanitize(name)),
            mapped: false,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line_entry() {
        let m = load_mapping("postgresql\toperation\tSeq Scan\tProducer\tFull_Table_Scan\n").unwrap();
        assert_eq!(m.len(), 1);
        let hit = map_operation(&m, DialectFamily::Postgresql, "Seq Scan");
        assert_eq!(hit.category, OperationCategory::Producer);
        assert_eq!(hit.identifier.as_str(), "Full_Table_Scan");
        assert!(hit.mapped);
    }

    #[test]
    fn empty_table_has_default_fallbacks() {
        let m = load_mapping("").unwrap();
        assert!(m.is_empty());
        assert_eq!(m.fallback_operation_category, OperationCategory::Executor);
        assert_eq!(m.fallback_property_category, PropertyCategory::Configuration);
    }

    #[test]
    fn duplicates_are_rejected() {
        let src = "tidb\toperation\tSort\tCombinator\tSort\n# c\ntidb\toperation\tSort\tFolder\tX\n";
        match load_mapping(src).unwrap_err() {
            MappingError::Duplicate { line, first, .. } => assert_eq!((line, first), (3, 1)),
            e => panic!("{e}"),
        }
        // Same raw name with a different kind is a different key.
        load_mapping("tidb\toperation\tSelection\tProducer\tSel\ntidb\tproperty\tSelection\tConfiguration\tfilter\n").unwrap();
    }

    #[test]
    fn bad_lines() {
        assert!(matches!(load_mapping("tidb\toperation\tX\tProducer"), Err(MappingError::Parse { line: 1, .. })));
        assert!(matches!(
            load_mapping("tidb\toperation\tX\tCost\tX"),
            Err(MappingError::UnknownCategory { .. })
        ));
        assert!(matches!(
            load_mapping("tidb\tproperty\tX\tProducer\tX"),
            Err(MappingError::UnknownCategory { .. })
        ));
        assert!(load_mapping("oracle\toperation\tX\tProducer\tX").is_err());
        assert!(load_mapping("tidb\toperation\tX\tProducer\t9x").is_err());
    }

    #[test]
    fn builtin_covers_naming_examples() {
        let m = DialectMapping::builtin();
        for (family, raw) in [(DialectFamily::Tidb, "TableFullScan"), (DialectFamily::Postgresql, "Seq Scan")] {
            let hit = map_operation(&m, family, raw);
            assert_eq!((hit.category, hit.identifier.as_str(), hit.mapped), (OperationCategory::Producer, "Full_Table_Scan", true));
        }
        let hit = map_operation(&m, DialectFamily::Postgresql, "HashAggregate");
        assert_eq!((hit.category, hit.identifier.as_str()), (OperationCategory::Folder, "Aggregate_Hash"));
    }

    #[test]
    fn miss_falls_back() {
        let m = DialectMapping::builtin();
        let miss = map_operation(&m, DialectFamily::Postgresql, "FrobnicateNode");
        assert_eq!((miss.category, miss.identifier.as_str(), miss.mapped), (OperationCategory::Executor, "FrobnicateNode", false));
        let p = map_property(&m, DialectFamily::Postgresql, "Frob Level");
        assert_eq!((p.category, p.identifier.as_str(), p.mapped), (PropertyCategory::Configuration, "Frob_Level", false));
    }

    #[test]
    fn parallel_prefix_is_trimmed() {
        let m = DialectMapping::builtin();
        let hit = map_operation(&m, DialectFamily::Postgresql, "Parallel Seq Scan");
        assert!(hit.mapped);
        assert_eq!(hit.identifier.as_str(), "Full_Table_Scan");
    }
}
