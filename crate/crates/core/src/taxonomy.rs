//! Field-of-Research code schemes: code validation, the three-level
//! hierarchy, scheme catalogs, and the 2008-to-2020 correspondence table.
//!
//! Codes are kept as digit strings so leading zeros survive ("01" is a
//! valid division). The correspondence table is stored at the 6-digit
//! level only; group- and division-level relationships are derived.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which release of the classification a code belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "FoR2008")]
    For2008,
    #[serde(rename = "FoR2020")]
    For2020,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::For2008 => "FoR2008",
            Scheme::For2020 => "FoR2020",
        }
    }

    pub fn parse(text: &str) -> Result<Scheme, TaxonomyError> {
        match text.trim() {
            "FoR2008" | "2008" => Ok(Scheme::For2008),
            "FoR2020" | "2020" => Ok(Scheme::For2020),
            other => Err(TaxonomyError::UnknownScheme(other.to_string())),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Hierarchy level, uniquely determined by code length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    /// 2-digit code naming a whole subject area.
    Division,
    /// 4-digit code naming a group of fields.
    Group,
    /// 6-digit code naming a specific field.
    Field,
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("code '{0}' has length {1}; expected 2, 4 or 6 digits")]
    InvalidLength(String, usize),
    #[error("code '{0}' contains a non-digit character")]
    NonDigit(String),
    #[error("code '{0}' ({1}) is not in the catalog")]
    UnknownCode(String, Scheme),
    #[error("division code '{0}' has no parent")]
    NoParent(String),
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),
    #[error("duplicate source row for {0}")]
    DuplicateSource(String),
    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{path}:{line}: code '{code}' is not at the 6-digit level")]
    CodeLevelMismatch {
        path: String,
        line: usize,
        code: String,
    },
    #[error("catalog is missing {missing} ({scheme}), required as the parent of {child}")]
    MissingParent {
        missing: String,
        scheme: Scheme,
        child: String,
    },
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl TaxonomyError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        TaxonomyError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// A validated FoR code: 2, 4 or 6 decimal digits tagged with its scheme.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ForCode {
    scheme: Scheme,
    digits: String,
}

impl ForCode {
    /// Validates `text` (after trimming whitespace) as a code in `scheme`.
    pub fn parse(text: &str, scheme: Scheme) -> Result<ForCode, TaxonomyError> {
        let trimmed = text.trim();
        if !trimmed.chars().all(|c| c.is_ascii_digit()) {
            return Err(TaxonomyError::NonDigit(trimmed.to_string()));
        }
        if !matches!(trimmed.len(), 2 | 4 | 6) {
            return Err(TaxonomyError::InvalidLength(
                trimmed.to_string(),
                trimmed.len(),
            ));
        }
        Ok(ForCode {
            scheme,
            digits: trimmed.to_string(),
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn digits(&self) -> &str {
        &self.digits
    }

    pub fn level(&self) -> Level {
        match self.digits.len() {
            2 => Level::Division,
            4 => Level::Group,
            _ => Level::Field,
        }
    }

    /// The code one level up: prefix truncation within the same scheme.
    pub fn parent(&self) -> Result<ForCode, TaxonomyError> {
        match self.level() {
            Level::Division => Err(TaxonomyError::NoParent(self.digits.clone())),
            _ => Ok(ForCode {
                scheme: self.scheme,
                digits: self.digits[..self.digits.len() - 2].to_string(),
            }),
        }
    }

    /// The 2-digit division this code sits under (identity for divisions).
    pub fn division(&self) -> ForCode {
        ForCode {
            scheme: self.scheme,
            digits: self.digits[..2].to_string(),
        }
    }

    /// The 4-digit group this code sits under, if it has one.
    pub fn group(&self) -> Option<ForCode> {
        if self.digits.len() >= 4 {
            Some(ForCode {
                scheme: self.scheme,
                digits: self.digits[..4].to_string(),
            })
        } else {
            None
        }
    }
}

impl fmt::Display for ForCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digits)
    }
}

/// Parses a code, additionally checking catalog membership when a catalog
/// is supplied.
pub fn parse_code(
    text: &str,
    scheme: Scheme,
    catalog: Option<&SchemeCatalog>,
) -> Result<ForCode, TaxonomyError> {
    let code = ForCode::parse(text, scheme)?;
    if let Some(cat) = catalog {
        if !cat.contains(&code) {
            return Err(TaxonomyError::UnknownCode(code.digits, scheme));
        }
    }
    Ok(code)
}

/// STEM/HASS bloc for a division, used to order report rows and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bloc {
    Stem,
    Hass,
}

impl Bloc {
    pub fn parse(text: &str) -> Result<Bloc, TaxonomyError> {
        match text.trim().to_ascii_uppercase().as_str() {
            "STEM" => Ok(Bloc::Stem),
            "HASS" => Ok(Bloc::Hass),
            other => Err(TaxonomyError::UnknownScheme(format!("bloc '{other}'"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Bloc::Stem => "STEM",
            Bloc::Hass => "HASS",
        }
    }
}

/// Display names for the codes of one or both schemes, plus the STEM/HASS
/// partition of divisions.
#[derive(Debug, Clone, Default)]
pub struct SchemeCatalog {
    names: BTreeMap<ForCode, String>,
    stem_hass: BTreeMap<ForCode, Bloc>,
}

impl SchemeCatalog {
    /// Loads a catalog CSV with header `scheme,code,name`.
    ///
    /// Every group must have its division in the file and every field its
    /// group.
    pub fn load(path: &Path) -> Result<SchemeCatalog, TaxonomyError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| TaxonomyError::io(path, into_io(e)))?;
        let mut names = BTreeMap::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2; // header is line 1
            let record = record.map_err(|e| TaxonomyError::MalformedRow {
                path: path.display().to_string(),
                line,
                reason: e.to_string(),
            })?;
            if record.len() < 3 {
                return Err(TaxonomyError::MalformedRow {
                    path: path.display().to_string(),
                    line,
                    reason: format!("expected 3 columns, got {}", record.len()),
                });
            }
            let scheme = Scheme::parse(&record[0])?;
            let code = ForCode::parse(&record[1], scheme)?;
            names.insert(code, record[2].trim().to_string());
        }
        let catalog = SchemeCatalog {
            names,
            stem_hass: BTreeMap::new(),
        };
        catalog.check_hierarchy()?;
        Ok(catalog)
    }

    /// Loads the STEM/HASS partition from a CSV with header
    /// `scheme,division,bloc` and attaches it to this catalog.
    pub fn load_stem_hass(&mut self, path: &Path) -> Result<(), TaxonomyError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| TaxonomyError::io(path, into_io(e)))?;
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| TaxonomyError::MalformedRow {
                path: path.display().to_string(),
                line,
                reason: e.to_string(),
            })?;
            if record.len() < 3 {
                return Err(TaxonomyError::MalformedRow {
                    path: path.display().to_string(),
                    line,
                    reason: format!("expected 3 columns, got {}", record.len()),
                });
            }
            let scheme = Scheme::parse(&record[0])?;
            let division = ForCode::parse(&record[1], scheme)?;
            if division.level() != Level::Division {
                return Err(TaxonomyError::MalformedRow {
                    path: path.display().to_string(),
                    line,
                    reason: format!("'{}' is not a 2-digit division", division),
                });
            }
            self.stem_hass.insert(division, Bloc::parse(&record[2])?);
        }
        Ok(())
    }

    fn check_hierarchy(&self) -> Result<(), TaxonomyError> {
        for code in self.names.keys() {
            if code.level() == Level::Division {
                continue;
            }
            let parent = code.parent().expect("non-division has a parent");
            if !self.names.contains_key(&parent) {
                return Err(TaxonomyError::MissingParent {
                    missing: parent.digits().to_string(),
                    scheme: parent.scheme(),
                    child: code.digits().to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, code: &ForCode) -> bool {
        self.names.contains_key(code)
    }

    pub fn name(&self, code: &ForCode) -> Option<&str> {
        self.names.get(code).map(|s| s.as_str())
    }

    pub fn bloc(&self, division: &ForCode) -> Option<Bloc> {
        self.stem_hass.get(division).copied()
    }

    /// All codes of `scheme` at `level`, in ascending code order.
    pub fn codes_at(&self, scheme: Scheme, level: Level) -> Vec<&ForCode> {
        self.names
            .keys()
            .filter(|c| c.scheme() == scheme && c.level() == level)
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }
}

/// How a 2008 field relates to the 2020 scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MappingKind {
    /// Exactly one 2020 target.
    Direct,
    /// More than one 2020 target.
    Split,
    /// A 2020 code with no 2008 source.
    New,
    /// A 2008 code with no 2020 target.
    Deleted,
}

/// One 6-digit 2008 source and its 2020 targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceEntry {
    pub source: ForCode,
    pub targets: Vec<ForCode>,
    pub kind: MappingKind,
}

impl CorrespondenceEntry {
    fn new(source: ForCode, mut targets: Vec<ForCode>) -> CorrespondenceEntry {
        targets.sort();
        let kind = match targets.len() {
            0 => MappingKind::Deleted,
            1 => MappingKind::Direct,
            _ => MappingKind::Split,
        };
        CorrespondenceEntry {
            source,
            targets,
            kind,
        }
    }
}

/// The 6-digit-level 2008-to-2020 mapping, plus 2020 codes with no 2008
/// source. Immutable after load.
#[derive(Debug, Clone, Default)]
pub struct CorrespondenceTable {
    entries: BTreeMap<ForCode, CorrespondenceEntry>,
    new_codes: Vec<ForCode>,
}

impl CorrespondenceTable {
    /// Loads the correspondence CSV (header `source_2008,target_2020`).
    ///
    /// Multiple rows per source express a split; an empty target expresses
    /// deletion. A source may not mix empty and non-empty target rows.
    pub fn load(path: &Path) -> Result<CorrespondenceTable, TaxonomyError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_path(path)
            .map_err(|e| TaxonomyError::io(path, into_io(e)))?;
        let mut targets: BTreeMap<ForCode, Vec<ForCode>> = BTreeMap::new();
        let mut deleted: BTreeSet<ForCode> = BTreeSet::new();
        let mut seen_rows: BTreeSet<(ForCode, Option<ForCode>)> = BTreeSet::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| TaxonomyError::MalformedRow {
                path: path.display().to_string(),
                line,
                reason: e.to_string(),
            })?;
            if record.is_empty() || (record.len() == 1 && record[0].trim().is_empty()) {
                continue;
            }
            let source = Self::parse_field_code(&record[0], Scheme::For2008, path, line)?;
            let target_text = record.get(1).unwrap_or("").trim().to_string();
            let target = if target_text.is_empty() {
                None
            } else {
                Some(Self::parse_field_code(
                    &target_text,
                    Scheme::For2020,
                    path,
                    line,
                )?)
            };
            if !seen_rows.insert((source.clone(), target.clone())) {
                return Err(TaxonomyError::DuplicateSource(match &target {
                    Some(t) => format!("({source},{t})"),
                    None => format!("({source},)"),
                }));
            }
            match target {
                Some(t) => targets.entry(source).or_default().push(t),
                None => {
                    deleted.insert(source);
                }
            }
        }
        // A source marked deleted cannot also carry targets.
        if let Some(conflict) = deleted.iter().find(|s| targets.contains_key(*s)) {
            return Err(TaxonomyError::MalformedRow {
                path: path.display().to_string(),
                line: 0,
                reason: format!("source {conflict} has both a deletion row and target rows"),
            });
        }
        let mut entries = BTreeMap::new();
        for (source, ts) in targets {
            entries.insert(source.clone(), CorrespondenceEntry::new(source, ts));
        }
        for source in deleted {
            entries.insert(source.clone(), CorrespondenceEntry::new(source, Vec::new()));
        }
        Ok(CorrespondenceTable {
            entries,
            new_codes: Vec::new(),
        })
    }

    /// Loads the table plus the list of 2020 codes with no 2008 source
    /// (CSV with header `code_2020`).
    pub fn load_with_new(
        corr_path: &Path,
        new_codes_path: &Path,
    ) -> Result<CorrespondenceTable, TaxonomyError> {
        let mut table = Self::load(corr_path)?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(new_codes_path)
            .map_err(|e| TaxonomyError::io(new_codes_path, into_io(e)))?;
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| TaxonomyError::MalformedRow {
                path: new_codes_path.display().to_string(),
                line,
                reason: e.to_string(),
            })?;
            let code = Self::parse_field_code(&record[0], Scheme::For2020, new_codes_path, line)?;
            table.new_codes.push(code);
        }
        table.new_codes.sort();
        table.new_codes.dedup();
        Ok(table)
    }

    fn parse_field_code(
        text: &str,
        scheme: Scheme,
        path: &Path,
        line: usize,
    ) -> Result<ForCode, TaxonomyError> {
        let code = ForCode::parse(text, scheme).map_err(|e| TaxonomyError::MalformedRow {
            path: path.display().to_string(),
            line,
            reason: e.to_string(),
        })?;
        if code.level() != Level::Field {
            return Err(TaxonomyError::CodeLevelMismatch {
                path: path.display().to_string(),
                line,
                code: code.digits().to_string(),
            });
        }
        Ok(code)
    }

    pub fn entry(&self, source: &ForCode) -> Option<&CorrespondenceEntry> {
        self.entries.get(source)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CorrespondenceEntry> {
        self.entries.values()
    }

    pub fn new_codes(&self) -> &[ForCode] {
        &self.new_codes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The 6-digit entries whose source falls under `group2008`.
    pub fn group_children(&self, group2008: &ForCode) -> Vec<&CorrespondenceEntry> {
        self.entries
            .values()
            .filter(|e| e.source.group().as_ref() == Some(group2008))
            .collect()
    }

    /// The unique 4-digit 2020 group every 6-digit child of `group2008`
    /// Direct-maps into, if one exists.
    ///
    /// Returns `None` when any child is Split or Deleted, or when children
    /// land in more than one 2020 group. Errors when the group has no
    /// children in the table at all.
    pub fn direct_group_target(
        &self,
        group2008: &ForCode,
    ) -> Result<Option<ForCode>, TaxonomyError> {
        let children = self.group_children(group2008);
        if children.is_empty() {
            return Err(TaxonomyError::UnknownCode(
                group2008.digits().to_string(),
                group2008.scheme(),
            ));
        }
        let mut unanimous: Option<ForCode> = None;
        for child in children {
            if child.kind != MappingKind::Direct {
                return Ok(None);
            }
            let target_group = child.targets[0].group().expect("field code has a group");
            match &unanimous {
                None => unanimous = Some(target_group),
                Some(g) if *g == target_group => {}
                Some(_) => return Ok(None),
            }
        }
        Ok(unanimous)
    }
}

fn into_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn code(digits: &str, scheme: Scheme) -> ForCode {
        ForCode::parse(digits, scheme).unwrap()
    }

    fn write_file(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn parse_valid_codes() {
        let c = code("1108", Scheme::For2008);
        assert_eq!(c.level(), Level::Group);
        assert_eq!(c.division().digits(), "11");

        let d = code("32", Scheme::For2020);
        assert_eq!(d.level(), Level::Division);

        let f = code(" 110803 ", Scheme::For2008);
        assert_eq!(f.digits(), "110803");
        assert_eq!(f.level(), Level::Field);
    }

    #[test]
    fn parse_rejects_bad_input() {
        assert!(matches!(
            ForCode::parse("110", Scheme::For2008),
            Err(TaxonomyError::InvalidLength(text, 3)) if text == "110"
        ));
        assert!(matches!(
            ForCode::parse("11a8", Scheme::For2008),
            Err(TaxonomyError::NonDigit(text)) if text == "11a8"
        ));
        assert!(matches!(
            ForCode::parse("", Scheme::For2008),
            Err(TaxonomyError::InvalidLength(text, 0)) if text.is_empty()
        ));
    }

    #[test]
    fn parse_preserves_leading_zeros() {
        let c = code("01", Scheme::For2008);
        assert_eq!(c.digits(), "01");
        assert_eq!(c.to_string(), "01");
    }

    #[test]
    fn parent_walks_up_the_prefix_hierarchy() {
        let field = code("110803", Scheme::For2008);
        let group = field.parent().unwrap();
        assert_eq!(group.digits(), "1108");
        let division = group.parent().unwrap();
        assert_eq!(division.digits(), "11");
        assert!(matches!(
            division.parent(),
            Err(TaxonomyError::NoParent(digits)) if digits == "11"
        ));
    }

    #[test]
    fn grandparent_of_field_is_its_division_prefix() {
        for digits in ["110803", "010101", "529999"] {
            let field = code(digits, Scheme::For2008);
            let grandparent = field.parent().unwrap().parent().unwrap();
            assert_eq!(grandparent.digits(), &digits[..2]);
            assert_eq!(grandparent, field.division());
        }
    }

    #[test]
    fn catalog_checks_membership_and_hierarchy() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "catalog.csv",
            "scheme,code,name\n\
             FoR2008,11,Medical and Health Sciences\n\
             FoR2008,1108,Medical Microbiology\n\
             FoR2008,110803,Medical Parasitology\n",
        );
        let catalog = SchemeCatalog::load(&path).unwrap();
        assert_eq!(catalog.len(), 3);
        assert_eq!(
            catalog.name(&code("1108", Scheme::For2008)),
            Some("Medical Microbiology")
        );
        assert!(parse_code("1108", Scheme::For2008, Some(&catalog)).is_ok());
        assert!(matches!(
            parse_code("2201", Scheme::For2008, Some(&catalog)),
            Err(TaxonomyError::UnknownCode(digits, Scheme::For2008)) if digits == "2201"
        ));
        // Same digits, wrong scheme: not in the catalog.
        assert!(parse_code("1108", Scheme::For2020, Some(&catalog)).is_err());
    }

    #[test]
    fn catalog_rejects_orphan_group() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "catalog.csv",
            "scheme,code,name\nFoR2008,1108,Medical Microbiology\n",
        );
        let err = SchemeCatalog::load(&path).unwrap_err();
        assert!(matches!(err, TaxonomyError::MissingParent { .. }));
    }

    #[test]
    fn correspondence_kinds_follow_target_multiplicity() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "corr.csv",
            "source_2008,target_2020\n\
             110803,320899\n\
             170101,320301\n\
             170101,520101\n\
             100101,\n",
        );
        let table = CorrespondenceTable::load(&path).unwrap();
        let direct = table.entry(&code("110803", Scheme::For2008)).unwrap();
        assert_eq!(direct.kind, MappingKind::Direct);
        assert_eq!(direct.targets, vec![code("320899", Scheme::For2020)]);

        let split = table.entry(&code("170101", Scheme::For2008)).unwrap();
        assert_eq!(split.kind, MappingKind::Split);
        assert_eq!(split.targets.len(), 2);

        let deleted = table.entry(&code("100101", Scheme::For2008)).unwrap();
        assert_eq!(deleted.kind, MappingKind::Deleted);
        assert!(deleted.targets.is_empty());
    }

    #[test]
    fn correspondence_rejects_duplicate_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "corr.csv",
            "source_2008,target_2020\n110803,320899\n110803,320899\n",
        );
        assert!(matches!(
            CorrespondenceTable::load(&path).unwrap_err(),
            TaxonomyError::DuplicateSource(_)
        ));
    }

    #[test]
    fn correspondence_rejects_non_field_codes() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "corr.csv",
            "source_2008,target_2020\n1108,320899\n",
        );
        assert!(matches!(
            CorrespondenceTable::load(&path).unwrap_err(),
            TaxonomyError::CodeLevelMismatch { .. }
        ));
    }

    #[test]
    fn correspondence_rejects_mixed_deletion_and_targets() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "corr.csv",
            "source_2008,target_2020\n110803,320899\n110803,\n",
        );
        assert!(matches!(
            CorrespondenceTable::load(&path).unwrap_err(),
            TaxonomyError::MalformedRow { .. }
        ));
    }

    #[test]
    fn direct_group_target_requires_unanimity() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            dir.path(),
            "corr.csv",
            "source_2008,target_2020\n\
             110801,320801\n\
             110802,320802\n\
             060101,310101\n\
             060102,420199\n\
             170101,320301\n\
             170101,520101\n\
             170102,520102\n\
             100101,\n\
             100102,460101\n",
        );
        let table = CorrespondenceTable::load(&path).unwrap();

        // All children direct into group 3208.
        let target = table
            .direct_group_target(&code("1108", Scheme::For2008))
            .unwrap();
        assert_eq!(target, Some(code("3208", Scheme::For2020)));

        // Children land in two 2020 groups.
        assert_eq!(
            table
                .direct_group_target(&code("0601", Scheme::For2008))
                .unwrap(),
            None
        );

        // A split child blocks the group.
        assert_eq!(
            table
                .direct_group_target(&code("1701", Scheme::For2008))
                .unwrap(),
            None
        );

        // A deleted child blocks the group (division 10 has no direct mapping).
        assert_eq!(
            table
                .direct_group_target(&code("1001", Scheme::For2008))
                .unwrap(),
            None
        );

        // Group absent from the table entirely.
        assert!(matches!(
            table.direct_group_target(&code("2201", Scheme::For2008)),
            Err(TaxonomyError::UnknownCode(_, _))
        ));
    }

    #[test]
    fn new_codes_load_separately() {
        let dir = tempfile::tempdir().unwrap();
        let corr = write_file(
            dir.path(),
            "corr.csv",
            "source_2008,target_2020\n110803,320899\n",
        );
        let new_codes = write_file(dir.path(), "new.csv", "code_2020\n460599\n460599\n");
        let table = CorrespondenceTable::load_with_new(&corr, &new_codes).unwrap();
        assert_eq!(table.new_codes(), &[code("460599", Scheme::For2020)]);
    }

    #[test]
    fn correspondence_entry_serialization_round_trips() {
        let entry = CorrespondenceEntry::new(
            code("170101", Scheme::For2008),
            vec![
                code("520101", Scheme::For2020),
                code("320301", Scheme::For2020),
            ],
        );
        let json = serde_json::to_string(&entry).unwrap();
        let back: CorrespondenceEntry = serde_json::from_str(&json).unwrap();
        assert_eq!(back, entry);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
