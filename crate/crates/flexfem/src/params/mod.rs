//! Tree-structured runtime parameters.
//!
//! Applications declare every parameter up front (path, default, validator,
//! verbosity), then parse user-provided `.prm` or `.json` files against the
//! declared tree. Unknown names and invalid values are hard errors. Emitting
//! the tree at a chosen verbosity produces a file that re-parses to the same
//! state, so generated parameter files are always valid inputs.

mod cli;
mod json;
mod prm;

pub use cli::{parse_cli, usage, CliMode, CliOptions};
pub use json::parse_json;
pub use prm::parse_prm;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("duplicate name '{name}' in '{path}'")]
    DuplicateName { path: String, name: String },
    #[error("unknown parameter '{path}'")]
    UnknownParameter { path: String },
    #[error("unknown subsection '{path}'")]
    UnknownSubsection { path: String },
    #[error("invalid value '{value}' for '{path}': {reason}")]
    InvalidValue {
        path: String,
        value: String,
        reason: String,
    },
    #[error("invalid name '{name}': {reason}")]
    InvalidName { name: String, reason: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("{0}")]
    Usage(String),
}

/// Verbosity levels form a chain: an entry is visible at a requested level
/// when its own level is at most the requested one, so Minimal output is a
/// subset of Standard, which is a subset of Full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verbosity {
    Minimal,
    Standard,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamFormat {
    Prm,
    Json,
}

impl ParamFormat {
    /// Infers the format from a file extension; anything but `.json` is prm.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => ParamFormat::Json,
            _ => ParamFormat::Prm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Validator {
    AnyString,
    Integer { min: i64, max: i64 },
    Real { min: f64, max: f64 },
    Bool,
    Selection(Vec<String>),
}

impl Validator {
    pub fn selection<I, S>(options: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Validator::Selection(options.into_iter().map(Into::into).collect())
    }

    pub fn any_integer() -> Self {
        Validator::Integer {
            min: i64::MIN,
            max: i64::MAX,
        }
    }

    pub fn any_real() -> Self {
        Validator::Real {
            min: f64::NEG_INFINITY,
            max: f64::INFINITY,
        }
    }

    fn check(&self, value: &str) -> Result<(), String> {
        match self {
            Validator::AnyString => Ok(()),
            Validator::Integer { min, max } => {
                let v: i64 = value
                    .parse()
                    .map_err(|_| "not an integer".to_string())?;
                if v < *min || v > *max {
                    Err(format!("integer outside [{min}, {max}]"))
                } else {
                    Ok(())
                }
            }
            Validator::Real { min, max } => {
                let v: f64 = value.parse().map_err(|_| "not a real number".to_string())?;
                if !v.is_finite() {
                    Err("not finite".to_string())
                } else if v < *min || v > *max {
                    Err(format!("real outside [{min}, {max}]"))
                } else {
                    Ok(())
                }
            }
            Validator::Bool => {
                if value == "true" || value == "false" {
                    Ok(())
                } else {
                    Err("expected 'true' or 'false'".to_string())
                }
            }
            Validator::Selection(options) => {
                if options.iter().any(|o| o == value) {
                    Ok(())
                } else {
                    Err(format!("expected one of [{}]", options.join(", ")))
                }
            }
        }
    }
}

/// Renders a real default value the way a person would write it in a
/// parameter file: plain notation for moderate magnitudes, scientific
/// otherwise.
pub(crate) fn compact_real(value: f64) -> String {
    let magnitude = value.abs();
    if value == 0.0 || (1e-3..1e6).contains(&magnitude) {
        format!("{value}")
    } else {
        format!("{value:e}")
    }
}

#[derive(Debug, Clone)]
pub struct ParamEntry {
    pub default_value: String,
    pub current_value: String,
    pub description: String,
    pub validator: Validator,
    pub verbosity: Verbosity,
}

/// A single `path / name = value` assignment parsed out of a parameter file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParamAssignment {
    pub path: Vec<String>,
    pub name: String,
    pub value: String,
}

/// Assignments extracted from a file, not yet checked against any tree.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParamOverlay {
    pub assignments: Vec<ParamAssignment>,
}

impl ParamOverlay {
    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Assignments in a canonical order, for comparisons where file order is
    /// not meaningful.
    pub fn sorted_assignments(&self) -> Vec<ParamAssignment> {
        let mut v = self.assignments.clone();
        v.sort();
        v
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct ParamNode {
    pub(crate) subsections: IndexMap<String, ParamNode>,
    pub(crate) entries: IndexMap<String, ParamEntry>,
}

impl ParamNode {
    pub(crate) fn has_visible(&self, verbosity: Verbosity) -> bool {
        self.entries.values().any(|e| e.verbosity <= verbosity)
            || self.subsections.values().any(|s| s.has_visible(verbosity))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParamTree {
    root: ParamNode,
}

fn join_path(path: &[String], name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{}/{}", path.join("/"), name)
    }
}

/// Splits a slash-separated subsection path; the empty string is the root.
fn split_path(path: &str) -> Result<Vec<String>, ParamError> {
    if path.is_empty() {
        return Ok(Vec::new());
    }
    let mut parts = Vec::new();
    for part in path.split('/') {
        if part.is_empty() {
            return Err(ParamError::InvalidName {
                name: path.to_string(),
                reason: "empty path component".to_string(),
            });
        }
        parts.push(part.to_string());
    }
    Ok(parts)
}

fn check_name(name: &str) -> Result<(), ParamError> {
    let reason = if name.is_empty() {
        Some("must be nonempty")
    } else if name.contains('/') {
        Some("'/' is reserved as the path separator")
    } else if name.contains('\n') || name.contains('\r') {
        Some("must not contain line breaks")
    } else if name != name.trim() {
        Some("must not start or end with whitespace")
    } else if name.contains('=') {
        Some("'=' cannot appear in a name")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(ParamError::InvalidName {
            name: name.to_string(),
            reason: reason.to_string(),
        }),
        None => Ok(()),
    }
}

impl ParamTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares one entry under the slash-separated subsection `path`,
    /// creating intermediate subsections as needed. The default must pass the
    /// validator; redeclaring a name is an error.
    pub fn declare(
        &mut self,
        path: &str,
        name: &str,
        default: &str,
        validator: Validator,
        verbosity: Verbosity,
        description: &str,
    ) -> Result<(), ParamError> {
        check_name(name)?;
        let parts = split_path(path)?;
        let default = default.trim();
        if default.contains('\n') || default.contains('\r') {
            return Err(ParamError::InvalidValue {
                path: join_path(&parts, name),
                value: default.to_string(),
                reason: "values must be single-line".to_string(),
            });
        }
        validator
            .check(default)
            .map_err(|reason| ParamError::InvalidValue {
                path: join_path(&parts, name),
                value: default.to_string(),
                reason,
            })?;
        let node = self.node_mut_create(&parts)?;
        if node.entries.contains_key(name) || node.subsections.contains_key(name) {
            return Err(ParamError::DuplicateName {
                path: parts.join("/"),
                name: name.to_string(),
            });
        }
        node.entries.insert(
            name.to_string(),
            ParamEntry {
                default_value: default.to_string(),
                current_value: default.to_string(),
                description: description.to_string(),
                validator,
                verbosity,
            },
        );
        Ok(())
    }

    fn node_mut_create(&mut self, parts: &[String]) -> Result<&mut ParamNode, ParamError> {
        let mut node = &mut self.root;
        for (depth, part) in parts.iter().enumerate() {
            check_name(part)?;
            if node.entries.contains_key(part) {
                return Err(ParamError::DuplicateName {
                    path: parts[..depth].join("/"),
                    name: part.clone(),
                });
            }
            node = node.subsections.entry(part.clone()).or_default();
        }
        Ok(node)
    }

    fn node(&self, parts: &[String]) -> Result<&ParamNode, ParamError> {
        let mut node = &self.root;
        for (depth, part) in parts.iter().enumerate() {
            node = node
                .subsections
                .get(part)
                .ok_or_else(|| ParamError::UnknownSubsection {
                    path: parts[..=depth].join("/"),
                })?;
        }
        Ok(node)
    }

    fn entry_at(&self, parts: &[String], name: &str) -> Result<&ParamEntry, ParamError> {
        self.node(parts)?
            .entries
            .get(name)
            .ok_or_else(|| ParamError::UnknownParameter {
                path: join_path(parts, name),
            })
    }

    fn entry_at_mut(
        &mut self,
        parts: &[String],
        name: &str,
    ) -> Result<&mut ParamEntry, ParamError> {
        let mut node = &mut self.root;
        for (depth, part) in parts.iter().enumerate() {
            node = node
                .subsections
                .get_mut(part)
                .ok_or_else(|| ParamError::UnknownSubsection {
                    path: parts[..=depth].join("/"),
                })?;
        }
        node.entries
            .get_mut(name)
            .ok_or_else(|| ParamError::UnknownParameter {
                path: join_path(parts, name),
            })
    }

    pub fn entry(&self, path: &str, name: &str) -> Result<&ParamEntry, ParamError> {
        self.entry_at(&split_path(path)?, name)
    }

    /// Validates and stores a new current value. Values are stored trimmed,
    /// matching what the file grammar can represent.
    pub fn set(&mut self, path: &str, name: &str, value: &str) -> Result<(), ParamError> {
        let parts = split_path(path)?;
        self.set_at(&parts, name, value)
    }

    fn checked_value(
        &self,
        parts: &[String],
        name: &str,
        value: &str,
    ) -> Result<String, ParamError> {
        let entry = self.entry_at(parts, name)?;
        let value = value.trim();
        let full_path = join_path(parts, name);
        if value.contains('\n') || value.contains('\r') {
            return Err(ParamError::InvalidValue {
                path: full_path,
                value: value.to_string(),
                reason: "values must be single-line".to_string(),
            });
        }
        entry
            .validator
            .check(value)
            .map_err(|reason| ParamError::InvalidValue {
                path: full_path,
                value: value.to_string(),
                reason,
            })?;
        Ok(value.to_string())
    }

    fn set_at(&mut self, parts: &[String], name: &str, value: &str) -> Result<(), ParamError> {
        let value = self.checked_value(parts, name, value)?;
        self.entry_at_mut(parts, name)?.current_value = value;
        Ok(())
    }

    pub fn get(&self, path: &str, name: &str) -> Result<&str, ParamError> {
        Ok(self.entry(path, name)?.current_value.as_str())
    }

    pub fn get_i64(&self, path: &str, name: &str) -> Result<i64, ParamError> {
        let entry = self.entry(path, name)?;
        entry
            .current_value
            .parse()
            .map_err(|_| ParamError::InvalidValue {
                path: join_path(&split_path(path).unwrap_or_default(), name),
                value: entry.current_value.clone(),
                reason: "not an integer".to_string(),
            })
    }

    pub fn get_usize(&self, path: &str, name: &str) -> Result<usize, ParamError> {
        let v = self.get_i64(path, name)?;
        usize::try_from(v).map_err(|_| ParamError::InvalidValue {
            path: join_path(&split_path(path).unwrap_or_default(), name),
            value: v.to_string(),
            reason: "negative where a count is required".to_string(),
        })
    }

    pub fn get_f64(&self, path: &str, name: &str) -> Result<f64, ParamError> {
        let entry = self.entry(path, name)?;
        entry
            .current_value
            .parse()
            .map_err(|_| ParamError::InvalidValue {
                path: join_path(&split_path(path).unwrap_or_default(), name),
                value: entry.current_value.clone(),
                reason: "not a real number".to_string(),
            })
    }

    pub fn get_bool(&self, path: &str, name: &str) -> Result<bool, ParamError> {
        match self.get(path, name)? {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(ParamError::InvalidValue {
                path: join_path(&split_path(path).unwrap_or_default(), name),
                value: other.to_string(),
                reason: "expected 'true' or 'false'".to_string(),
            }),
        }
    }

    /// Applies every assignment as a new current value. The whole overlay is
    /// validated before any write, so a failing overlay leaves the tree
    /// untouched.
    pub fn apply_overlay(&mut self, overlay: &ParamOverlay) -> Result<(), ParamError> {
        for a in &overlay.assignments {
            self.checked_value(&a.path, &a.name, &a.value)?;
        }
        for a in &overlay.assignments {
            self.set_at(&a.path, &a.name, &a.value)?;
        }
        Ok(())
    }

    /// Like [`apply_overlay`](Self::apply_overlay) but also replaces the
    /// stored defaults, for applications that ship alternative default sets.
    pub fn apply_overrides(&mut self, overlay: &ParamOverlay) -> Result<(), ParamError> {
        for a in &overlay.assignments {
            self.checked_value(&a.path, &a.name, &a.value)?;
        }
        for a in &overlay.assignments {
            let value = a.value.trim().to_string();
            let entry = self.entry_at_mut(&a.path, &a.name)?;
            entry.default_value = value.clone();
            entry.current_value = value;
        }
        Ok(())
    }

    /// Parses file text in the given format and applies it as an overlay.
    pub fn apply_file_text(&mut self, text: &str, format: ParamFormat) -> Result<(), ParamError> {
        let overlay = match format {
            ParamFormat::Prm => parse_prm(text)?,
            ParamFormat::Json => parse_json(text)?,
        };
        self.apply_overlay(&overlay)
    }

    /// Renders entries with verbosity at most `verbosity`; subsections with
    /// nothing visible are omitted entirely.
    pub fn emit(&self, format: ParamFormat, verbosity: Verbosity) -> String {
        match format {
            ParamFormat::Prm => prm::emit_prm(self, verbosity),
            ParamFormat::Json => json::emit_json(self, verbosity),
        }
    }

    pub(crate) fn root(&self) -> &ParamNode {
        &self.root
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_tree() -> ParamTree {
        let mut t = ParamTree::new();
        t.declare(
            "Problem",
            "Element type",
            "Hex",
            Validator::selection(["Hex"]),
            Verbosity::Standard,
            "Shape of the mesh cells",
        )
        .unwrap();
        t.declare(
            "Linear solver",
            "Type",
            "GMRES",
            Validator::selection(["CG", "GMRES", "BiCGStab"]),
            Verbosity::Minimal,
            "Krylov method",
        )
        .unwrap();
        t.declare(
            "Linear solver/GMRES",
            "Max. number of temporary vectors",
            "100",
            Validator::Integer { min: 1, max: 10000 },
            Verbosity::Full,
            "Restart length",
        )
        .unwrap();
        t
    }

    #[test]
    fn declared_entry_visible_in_standard_emit() {
        let t = sample_tree();
        let out = t.emit(ParamFormat::Prm, Verbosity::Standard);
        assert!(out.contains("set Element type = Hex"));
    }

    #[test]
    fn duplicate_declaration_is_an_error() {
        let mut t = sample_tree();
        let err = t
            .declare(
                "Problem",
                "Element type",
                "Hex",
                Validator::AnyString,
                Verbosity::Standard,
                "",
            )
            .unwrap_err();
        assert!(matches!(err, ParamError::DuplicateName { .. }));
    }

    #[test]
    fn default_violating_validator_is_an_error() {
        let mut t = ParamTree::new();
        let err = t
            .declare(
                "",
                "Count",
                "abc",
                Validator::any_integer(),
                Verbosity::Standard,
                "",
            )
            .unwrap_err();
        assert!(matches!(err, ParamError::InvalidValue { .. }));
    }

    #[test]
    fn selection_is_case_sensitive() {
        let mut t = sample_tree();
        assert!(t.set("Problem", "Element type", "hex").is_err());
        assert!(t.set("Problem", "Element type", "Hex").is_ok());
    }

    #[test]
    fn integer_range_is_enforced() {
        let mut t = sample_tree();
        let err = t
            .set("Linear solver/GMRES", "Max. number of temporary vectors", "0")
            .unwrap_err();
        assert!(matches!(err, ParamError::InvalidValue { .. }));
    }

    #[test]
    fn typed_getters_round_trip() {
        let mut t = ParamTree::new();
        t.declare("", "N", "8", Validator::any_integer(), Verbosity::Standard, "")
            .unwrap();
        t.declare("", "Tol", "1e-12", Validator::any_real(), Verbosity::Standard, "")
            .unwrap();
        t.declare("", "Flag", "true", Validator::Bool, Verbosity::Standard, "")
            .unwrap();
        assert_eq!(t.get_i64("", "N").unwrap(), 8);
        assert_eq!(t.get_f64("", "Tol").unwrap(), 1e-12);
        assert!(t.get_bool("", "Flag").unwrap());
    }

    #[test]
    fn overlay_application_is_atomic() {
        let mut t = sample_tree();
        let overlay = ParamOverlay {
            assignments: vec![
                ParamAssignment {
                    path: vec!["Linear solver".into()],
                    name: "Type".into(),
                    value: "CG".into(),
                },
                ParamAssignment {
                    path: vec!["Linear solver".into(), "GMRES".into()],
                    name: "Max. number of temporary vectors".into(),
                    value: "-5".into(),
                },
            ],
        };
        assert!(t.apply_overlay(&overlay).is_err());
        assert_eq!(t.get("Linear solver", "Type").unwrap(), "GMRES");
    }

    #[test]
    fn overrides_replace_defaults() {
        let mut t = sample_tree();
        let overlay = ParamOverlay {
            assignments: vec![ParamAssignment {
                path: vec!["Linear solver".into()],
                name: "Type".into(),
                value: "CG".into(),
            }],
        };
        t.apply_overrides(&overlay).unwrap();
        let e = t.entry("Linear solver", "Type").unwrap();
        assert_eq!(e.default_value, "CG");
        assert!(t
            .emit(ParamFormat::Prm, Verbosity::Minimal)
            .contains("set Type = CG"));

        t.apply_overrides(&ParamOverlay::default()).unwrap();
        assert_eq!(t.get("Linear solver", "Type").unwrap(), "CG");
    }

    #[test]
    fn unknown_parameter_is_reported_with_full_path() {
        let mut t = sample_tree();
        let overlay = ParamOverlay {
            assignments: vec![ParamAssignment {
                path: vec!["Problem".into()],
                name: "Nope".into(),
                value: "1".into(),
            }],
        };
        let err = t.apply_overlay(&overlay).unwrap_err();
        assert_eq!(err.to_string(), "unknown parameter 'Problem/Nope'");
    }

    #[test]
    fn verbosity_levels_are_nested() {
        let t = sample_tree();
        let parse = |v| {
            parse_prm(&t.emit(ParamFormat::Prm, v))
                .unwrap()
                .sorted_assignments()
        };
        let minimal = parse(Verbosity::Minimal);
        let standard = parse(Verbosity::Standard);
        let full = parse(Verbosity::Full);
        assert!(minimal.iter().all(|a| standard.contains(a)));
        assert!(standard.iter().all(|a| full.contains(a)));
        assert_eq!(minimal.len(), 1);
        assert_eq!(standard.len(), 2);
        assert_eq!(full.len(), 3);
    }

    #[test]
    fn emit_parse_emit_is_a_fixpoint() {
        let mut t = sample_tree();
        for format in [ParamFormat::Prm, ParamFormat::Json] {
            for verbosity in [Verbosity::Minimal, Verbosity::Standard, Verbosity::Full] {
                let first = t.emit(format, verbosity);
                t.apply_file_text(&first, format).unwrap();
                let second = t.emit(format, verbosity);
                assert_eq!(first, second, "{format:?} at {verbosity:?}");
            }
        }
    }

    #[test]
    fn prm_and_json_emissions_carry_the_same_assignments() {
        let t = sample_tree();
        for verbosity in [Verbosity::Minimal, Verbosity::Standard, Verbosity::Full] {
            let from_prm = parse_prm(&t.emit(ParamFormat::Prm, verbosity)).unwrap();
            let from_json = parse_json(&t.emit(ParamFormat::Json, verbosity)).unwrap();
            assert_eq!(
                from_prm.sorted_assignments(),
                from_json.sorted_assignments()
            );
        }
    }

    #[test]
    fn format_inferred_from_extension() {
        use std::path::Path;
        assert_eq!(
            ParamFormat::from_path(Path::new("p.json")),
            ParamFormat::Json
        );
        assert_eq!(ParamFormat::from_path(Path::new("p.prm")), ParamFormat::Prm);
        assert_eq!(ParamFormat::from_path(Path::new("p")), ParamFormat::Prm);
    }
}
