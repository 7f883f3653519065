//! Line-level static import extraction for Python sources.
//!
//! Recognized forms: `import a.b [as c], d`, `from a.b import x`, `from .m import x`,
//! `from . import x, y` and `from X import *`. Statements are found anywhere in
//! the file, including inside functions and conditionals. String literals and
//! comments are skipped so that text such as `"import os"` is not counted.

/// Returns every statically visible imported module, relative imports resolved
/// against `module_path`, deduplicated in order of first appearance.
pub fn extract_imports(source_text: &str, module_path: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for line in logical_lines(source_text) {
        for stmt in line.split(';') {
            for name in parse_statement(stmt.trim(), module_path) {
                if !out.contains(&name) {
                    out.push(name);
                }
            }
        }
    }
    out
}

/// Joins physical lines into logical ones (bracket and backslash continuation),
/// dropping comments and the contents of string literals.
pub(crate) fn logical_lines(src: &str) -> Vec<String> {
    let chars: Vec<char> = src.chars().collect();
    let mut lines = Vec::new();
    let mut cur = String::new();
    let mut depth: usize = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '\'' | '"' => {
                let triple = i + 2 < chars.len() && chars[i + 1] == c && chars[i + 2] == c;
                if triple {
                    i += 3;
                    while i < chars.len() {
                        if chars[i] == '\\' {
                            i += 2;
                            continue;
                        }
                        if chars[i] == c
                            && i + 2 < chars.len()
                            && chars[i + 1] == c
                            && chars[i + 2] == c
                        {
                            i += 3;
                            break;
                        }
                        i += 1;
                    }
                } else {
                    i += 1;
                    while i < chars.len() && chars[i] != c && chars[i] != '\n' {
                        if chars[i] == '\\' {
                            i += 1;
                        }
                        i += 1;
                    }
                    i += 1;
                }
                cur.push_str("\"\"");
                continue;
            }
            '(' | '[' | '{' => {
                depth += 1;
                cur.push(c);
            }
            ')' | ']' | '}' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            '\\' if chars.get(i + 1) == Some(&'\n') => {
                cur.push(' ');
                i += 2;
                continue;
            }
            '\r' => {}
            '\n' => {
                if depth > 0 {
                    cur.push(' ');
                } else {
                    lines.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(c),
        }
        i += 1;
    }
    if !cur.is_empty() {
        lines.push(cur);
    }
    lines
}

fn strip_keyword<'a>(s: &'a str, kw: &str) -> Option<&'a str> {
    let rest = s.strip_prefix(kw)?;
    if rest.starts_with(|c: char| c.is_whitespace()) {
        Some(rest.trim_start())
    } else {
        None
    }
}

fn is_dotted_name(s: &str) -> bool {
    !s.is_empty()
        && s.split('.').all(|seg| {
            let mut cs = seg.chars();
            matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_')
                && cs.all(|c| c.is_alphanumeric() || c == '_')
        })
}

/// Strips an `as` alias from one import item.
fn item_name(item: &str) -> &str {
    let item = item.trim();
    item.split_whitespace().next().unwrap_or("")
}

fn parse_statement(stmt: &str, module_path: &str) -> Vec<String> {
    if let Some(rest) = strip_keyword(stmt, "import") {
        return rest
            .split(',')
            .map(item_name)
            .filter(|n| is_dotted_name(n))
            .map(str::to_string)
            .collect();
    }
    let Some(rest) = strip_keyword(stmt, "from").or_else(|| {
        // `from.mod import x` and `from..mod import x` are valid without a space.
        stmt.strip_prefix("from").filter(|r| r.starts_with('.'))
    }) else {
        return Vec::new();
    };

    let dots = rest.chars().take_while(|&c| c == '.').count();
    let after_dots = &rest[dots..];
    let module_len = after_dots
        .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '.'))
        .unwrap_or(after_dots.len());
    let module = &after_dots[..module_len];
    let Some(names) = strip_keyword(after_dots[module_len..].trim_start(), "import") else {
        return Vec::new();
    };
    if !module.is_empty() && !is_dotted_name(module) {
        return Vec::new();
    }

    if dots == 0 {
        return if module.is_empty() {
            Vec::new()
        } else {
            vec![module.to_string()]
        };
    }

    let segments: Vec<&str> = module_path.split('.').filter(|s| !s.is_empty()).collect();
    if dots > segments.len() {
        return Vec::new();
    }
    let base = segments[..segments.len() - dots].join(".");
    let join = |tail: &str| {
        if base.is_empty() {
            tail.to_string()
        } else {
            format!("{base}.{tail}")
        }
    };

    if !module.is_empty() {
        return vec![join(module)];
    }
    let names = names.trim().trim_start_matches('(').trim_end_matches(')');
    names
        .split(',')
        .map(item_name)
        .filter(|n| is_dotted_name(n))
        .map(join)
        .collect()
}
