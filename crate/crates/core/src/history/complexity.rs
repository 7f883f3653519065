use crate::codegraph::imports::logical_lines;

const DECISION_KEYWORDS: [&str; 7] = ["if", "elif", "for", "while", "except", "and", "or"];

/// Module-level McCabe approximation: 1 plus the number of decision tokens
/// (`if`, `elif`, `for`, `while`, `except`, `and`, `or`) outside strings and
/// comments. Inline conditionals and comprehension filters are counted through
/// the same `if` token; `else` adds nothing.
pub fn cyclomatic_complexity(source_text: &str) -> u64 {
    let mut decisions = 0;
    for line in logical_lines(source_text) {
        for token in line.split(|c: char| !(c.is_alphanumeric() || c == '_')) {
            if DECISION_KEYWORDS.contains(&token) {
                decisions += 1;
            }
        }
    }
    1 + decisions
}
