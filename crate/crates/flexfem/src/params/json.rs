//! JSON parameter files: nested objects mirror the subsection structure,
//! leaves are strings, numbers, or booleans. Emission writes every value as
//! a string so the output re-parses to exactly the stored state.

use super::{ParamAssignment, ParamError, ParamNode, ParamOverlay, ParamTree, Verbosity};
use serde_json::Value;

pub fn parse_json(text: &str) -> Result<ParamOverlay, ParamError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ParamError::Json(e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(ParamError::Json("top level must be an object".to_string()));
    };
    let mut assignments = Vec::new();
    walk(&map, &mut Vec::new(), &mut assignments)?;
    Ok(ParamOverlay { assignments })
}

fn walk(
    map: &serde_json::Map<String, Value>,
    path: &mut Vec<String>,
    out: &mut Vec<ParamAssignment>,
) -> Result<(), ParamError> {
    for (key, value) in map {
        match value {
            Value::Object(sub) => {
                path.push(key.clone());
                walk(sub, path, out)?;
                path.pop();
            }
            Value::String(s) => out.push(assignment(path, key, s.clone())),
            Value::Number(n) => out.push(assignment(path, key, n.to_string())),
            Value::Bool(b) => out.push(assignment(path, key, b.to_string())),
            Value::Null | Value::Array(_) => {
                return Err(ParamError::Json(format!(
                    "value of '{}' must be a string, number, bool, or object",
                    super::join_path(path, key)
                )));
            }
        }
    }
    Ok(())
}

fn assignment(path: &[String], name: &str, value: String) -> ParamAssignment {
    ParamAssignment {
        path: path.to_vec(),
        name: name.to_string(),
        value,
    }
}

pub(super) fn emit_json(tree: &ParamTree, verbosity: Verbosity) -> String {
    let mut out = String::new();
    emit_node(tree.root(), verbosity, 0, &mut out);
    out.push('\n');
    out
}

fn emit_node(node: &ParamNode, verbosity: Verbosity, depth: usize, out: &mut String) {
    let visible_entries: Vec<_> = node
        .entries
        .iter()
        .filter(|(_, e)| e.verbosity <= verbosity)
        .collect();
    let visible_subs: Vec<_> = node
        .subsections
        .iter()
        .filter(|(_, s)| s.has_visible(verbosity))
        .collect();
    let total = visible_entries.len() + visible_subs.len();
    if total == 0 {
        out.push_str("{}");
        return;
    }
    let indent = "  ".repeat(depth + 1);
    out.push_str("{\n");
    let mut written = 0;
    for (name, entry) in visible_entries {
        out.push_str(&indent);
        out.push_str(&escape(name));
        out.push_str(": ");
        out.push_str(&escape(&entry.current_value));
        written += 1;
        out.push_str(if written < total { ",\n" } else { "\n" });
    }
    for (name, sub) in visible_subs {
        out.push_str(&indent);
        out.push_str(&escape(name));
        out.push_str(": ");
        emit_node(sub, verbosity, depth + 1, out);
        written += 1;
        out.push_str(if written < total { ",\n" } else { "\n" });
    }
    out.push_str(&"  ".repeat(depth));
    out.push('}');
}

fn escape(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_objects_become_paths() {
        let overlay = parse_json(r#"{"Problem":{"Element type":"Hex"}}"#).unwrap();
        assert_eq!(
            overlay.assignments,
            vec![ParamAssignment {
                path: vec!["Problem".into()],
                name: "Element type".into(),
                value: "Hex".into(),
            }]
        );
    }

    #[test]
    fn numbers_and_bools_become_their_literal_text() {
        let overlay =
            parse_json(r#"{"Preconditioner":{"AMG":{"W-cycle":true}},"N":100,"Tol":1e-12}"#)
                .unwrap();
        let values: Vec<&str> = overlay
            .assignments
            .iter()
            .map(|a| a.value.as_str())
            .collect();
        assert!(values.contains(&"true"));
        assert!(values.contains(&"100"));
    }

    #[test]
    fn arrays_and_nulls_are_rejected() {
        assert!(parse_json(r#"{"A":[1,2]}"#).is_err());
        assert!(parse_json(r#"{"A":null}"#).is_err());
        assert!(parse_json("[1,2]").is_err());
        assert!(parse_json("{not json").is_err());
    }

    #[test]
    fn emitted_json_is_valid_and_all_strings() {
        let mut t = ParamTree::new();
        t.declare(
            "Mesh",
            "Subdivisions",
            "8",
            crate::params::Validator::any_integer(),
            Verbosity::Minimal,
            "",
        )
        .unwrap();
        let text = t.emit(crate::params::ParamFormat::Json, Verbosity::Minimal);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["Mesh"]["Subdivisions"], Value::String("8".into()));
    }

    #[test]
    fn empty_tree_emits_an_empty_object() {
        let t = ParamTree::new();
        let text = t.emit(crate::params::ParamFormat::Json, Verbosity::Full);
        assert_eq!(text, "{}\n");
        assert!(parse_json(&text).unwrap().is_empty());
    }
}
