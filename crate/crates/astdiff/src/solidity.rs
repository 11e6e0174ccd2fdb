//! Solidity front-end over tree-sitter.
//!
//! The concrete syntax tree is reduced to an abstract one: punctuation is
//! dropped, single-child `expression`/`statement` wrappers are collapsed,
//! operators become node values, and nodes without named children become
//! leaves carrying their normalized source text.

use thiserror::Error;

use crate::tree::{Span, SyntaxTree, TreeBuilder};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot load the Solidity grammar: {0}")]
    Language(#[from] tree_sitter::LanguageError),
    #[error("the parser returned no tree")]
    NoTree,
}

/// Anonymous tokens kept as `keyword` leaves because they change meaning.
pub const KEPT_KEYWORDS: &[&str] = &[
    "virtual",
    "constant",
    "immutable",
    "indexed",
    "anonymous",
    "payable",
    "memory",
    "storage",
    "calldata",
    "unchecked",
    "abstract",
];

const WRAPPERS: &[&str] = &["expression", "statement", "call_argument"];

#[derive(Debug, Clone)]
pub struct ParsedSource {
    pub tree: SyntaxTree,
    /// The source contained syntax errors; the tree still covers it.
    pub has_errors: bool,
}

/// Tree used for a side that has no file.
pub fn empty_source_tree() -> SyntaxTree {
    SyntaxTree::leaf("source_file", "")
}

pub fn parse_solidity(source: &str) -> Result<ParsedSource, ParseError> {
    let mut parser = tree_sitter::Parser::new();
    parser.set_language(&tree_sitter_solidity::LANGUAGE.into())?;
    let ts = parser.parse(source, None).ok_or(ParseError::NoTree)?;
    let root = ts.root_node();
    let bytes = source.as_bytes();

    let mut b = TreeBuilder::new();
    let mut stack = vec![(root, None)];
    while let Some((node, parent)) = stack.pop() {
        let node = unwrap_wrappers(node);
        let kept: Vec<tree_sitter::Node> = {
            let mut cursor = node.walk();
            node.children(&mut cursor)
                .filter(|c| !c.is_missing() && (c.is_named() || KEPT_KEYWORDS.contains(&c.kind())))
                .collect()
        };
        let has_named = kept.iter().any(|c| c.is_named());
        let span = Span { start: node.start_byte(), end: node.end_byte(), line: node.start_position().row + 1 };
        if !node.is_named() {
            b.push(parent, "keyword", node.kind(), span);
            continue;
        }
        let (kind, value) = label(node, bytes, has_named);
        let id = b.push(parent, kind, value, span);
        if has_named {
            stack.extend(kept.into_iter().rev().map(|c| (c, Some(id))));
        }
    }
    Ok(ParsedSource { tree: b.finish(), has_errors: root.has_error() })
}

fn unwrap_wrappers(mut node: tree_sitter::Node) -> tree_sitter::Node {
    while WRAPPERS.contains(&node.kind()) && node.named_child_count() == 1 {
        node = node.named_child(0).expect("counted");
    }
    node
}

fn text<'a>(node: tree_sitter::Node, bytes: &'a [u8]) -> &'a str {
    node.utf8_text(bytes).unwrap_or("")
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn operator(node: tree_sitter::Node, bytes: &[u8]) -> (String, usize) {
    let mut cursor = node.walk();
    let found = node
        .children(&mut cursor)
        .enumerate()
        .find(|(_, c)| !c.is_named() && !matches!(c.kind(), "(" | ")"))
        .map(|(i, c)| (text(c, bytes).to_string(), i))
        .unwrap_or_default();
    found
}

fn label(node: tree_sitter::Node, bytes: &[u8], has_named: bool) -> (String, String) {
    let kind = node.kind();
    match kind {
        "binary_expression" | "assignment_expression" | "augmented_assignment_expression" => {
            ("binary_expression".to_string(), operator(node, bytes).0)
        }
        "unary_expression" => ("unary_expression".to_string(), operator(node, bytes).0),
        "update_expression" => {
            let (op, at) = operator(node, bytes);
            ("update_expression".to_string(), if at == 0 { format!("pre{op}") } else { format!("post{op}") })
        }
        _ => (kind.to_string(), if has_named { String::new() } else { normalize(text(node, bytes)) }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(t: &SyntaxTree) -> Vec<String> {
        t.preorder().iter().map(|&n| format!("{}:{}", t.kind(n), t.value(n))).collect()
    }

    #[test]
    fn reduces_the_concrete_tree() {
        let p = parse_solidity("contract C { uint256 constant X = 1; function f(uint a) public { a == 1; } }").unwrap();
        assert!(!p.has_errors);
        let k = kinds(&p.tree);
        assert!(k.contains(&"binary_expression:==".to_string()), "{k:?}");
        assert!(k.contains(&"keyword:constant".to_string()), "{k:?}");
        assert!(k.contains(&"visibility:public".to_string()), "{k:?}");
        assert!(!k.iter().any(|s| s.starts_with("expression:") || s.starts_with("statement:")), "{k:?}");
        assert!(k.iter().any(|s| s.starts_with("expression_statement")));
    }

    #[test]
    fn operators_and_updates() {
        let p = parse_solidity("contract C { function f() public { x = 1; x += 2; i++; --j; !b; } }").unwrap();
        let k = kinds(&p.tree);
        for want in [
            "binary_expression:=",
            "binary_expression:+=",
            "update_expression:post++",
            "update_expression:pre--",
            "unary_expression:!",
        ] {
            assert!(k.contains(&want.to_string()), "{want} missing from {k:?}");
        }
    }

    #[test]
    fn errors_are_flagged() {
        let p = parse_solidity("contract C { function f( { }").unwrap();
        assert!(p.has_errors);
        assert_eq!(p.tree.kind(0), "source_file");
    }

    #[test]
    fn spans_and_comments() {
        let p = parse_solidity("// hi\ncontract C {\n  uint x;\n}\n").unwrap();
        let t = &p.tree;
        let c = t.preorder().iter().copied().find(|&n| t.kind(n) == "comment").unwrap();
        assert_eq!(t.value(c), "// hi");
        let v = t.preorder().iter().copied().find(|&n| t.kind(n) == "state_variable_declaration").unwrap();
        assert_eq!(t.node(v).span.line, 3);
    }

    #[test]
    fn spans_nest() {
        let src = "contract C {\n  function f(uint a) public returns (uint) {\n    if (a > 1) { return a - 1; }\n    return a;\n  }\n}\n";
        let t = parse_solidity(src).unwrap().tree;
        for &n in t.preorder() {
            let s = t.node(n).span;
            for &c in t.children(n) {
                let cs = t.node(c).span;
                assert!(s.start <= cs.start && cs.end <= s.end && s.line <= cs.line, "{n} {c}");
            }
        }
    }
}
