//! The prm file grammar: `subsection <name>` ... `end` blocks, `set <name> =
//! <value>` assignments, `#` line comments. Names may contain spaces and
//! dots; values are trimmed of surrounding whitespace.

use super::{ParamAssignment, ParamError, ParamNode, ParamOverlay, ParamTree, Verbosity};

pub fn parse_prm(text: &str) -> Result<ParamOverlay, ParamError> {
    let mut stack: Vec<String> = Vec::new();
    let mut assignments = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "subsection" {
            return Err(ParamError::Syntax {
                line: line_no,
                message: "'subsection' requires a name".to_string(),
            });
        }
        if let Some(rest) = line.strip_prefix("subsection") {
            if rest.starts_with(char::is_whitespace) {
                stack.push(rest.trim().to_string());
                continue;
            }
        }
        if line == "end" {
            if stack.pop().is_none() {
                return Err(ParamError::Syntax {
                    line: line_no,
                    message: "'end' outside any subsection".to_string(),
                });
            }
            continue;
        }
        if line == "set" {
            return Err(ParamError::Syntax {
                line: line_no,
                message: "'set' requires '<name> = <value>'".to_string(),
            });
        }
        if let Some(rest) = line.strip_prefix("set") {
            if rest.starts_with(char::is_whitespace) {
                let rest = rest.trim_start();
                let Some(eq) = rest.find('=') else {
                    return Err(ParamError::Syntax {
                        line: line_no,
                        message: "'set' line is missing '='".to_string(),
                    });
                };
                let name = rest[..eq].trim_end();
                if name.is_empty() {
                    return Err(ParamError::Syntax {
                        line: line_no,
                        message: "'set' line has an empty name".to_string(),
                    });
                }
                assignments.push(ParamAssignment {
                    path: stack.clone(),
                    name: name.to_string(),
                    value: rest[eq + 1..].trim().to_string(),
                });
                continue;
            }
        }
        return Err(ParamError::Syntax {
            line: line_no,
            message: format!("unrecognized directive: '{line}'"),
        });
    }
    if let Some(open) = stack.last() {
        return Err(ParamError::Syntax {
            line: last_line,
            message: format!("unterminated subsection '{open}'"),
        });
    }
    Ok(ParamOverlay { assignments })
}

pub(super) fn emit_prm(tree: &ParamTree, verbosity: Verbosity) -> String {
    let mut out = String::new();
    emit_node(tree.root(), verbosity, 0, &mut out);
    out
}

fn emit_node(node: &ParamNode, verbosity: Verbosity, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    for (name, entry) in &node.entries {
        if entry.verbosity > verbosity {
            continue;
        }
        for line in entry.description.lines() {
            out.push_str(&indent);
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&indent);
        out.push_str("set ");
        out.push_str(name);
        out.push_str(" = ");
        out.push_str(&entry.current_value);
        out.push('\n');
    }
    for (name, sub) in &node.subsections {
        if !sub.has_visible(verbosity) {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&indent);
        out.push_str("subsection ");
        out.push_str(name);
        out.push('\n');
        emit_node(sub, verbosity, depth + 1, out);
        out.push_str(&indent);
        out.push_str("end\n");
    }
}
