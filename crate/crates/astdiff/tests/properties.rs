use proptest::prelude::*;
use upscan_astdiff::{
    apply_script, diff_trees, match_trees, ActionKind, CategoryTable, EditOp, MatchOptions, Span, SyntaxTree, TreeBuilder,
};

#[derive(Debug, Clone)]
struct Owned {
    kind: String,
    value: String,
    children: Vec<Owned>,
}

const KINDS: &[&str] = &["a", "b", "c", "expression_statement", "parameter", "function_definition"];

fn build(t: &Owned) -> SyntaxTree {
    let mut b = TreeBuilder::new();
    let mut stack = vec![(t, None)];
    while let Some((n, parent)) = stack.pop() {
        let id = b.push(parent, n.kind.clone(), n.value.clone(), Span::default());
        stack.extend(n.children.iter().rev().map(|c| (c, Some(id))));
    }
    b.finish()
}

fn owned() -> impl Strategy<Value = Owned> {
    let leaf =
        (0..KINDS.len(), 0..4u8).prop_map(|(k, v)| Owned { kind: KINDS[k].into(), value: v.to_string(), children: vec![] });
    leaf.prop_recursive(5, 60, 5, |inner| {
        (0..KINDS.len(), prop::collection::vec(inner, 1..5)).prop_map(|(k, children)| Owned {
            kind: KINDS[k].into(),
            value: String::new(),
            children,
        })
    })
}

#[derive(Debug, Clone)]
enum Edit {
    Relabel(usize, u8),
    DeleteAt(usize),
    InsertAt(usize, usize),
    MoveTo(usize, usize),
}

fn edit() -> impl Strategy<Value = Edit> {
    prop_oneof![
        (any::<usize>(), 0..6u8).prop_map(|(i, v)| Edit::Relabel(i, v)),
        any::<usize>().prop_map(Edit::DeleteAt),
        (any::<usize>(), 0..KINDS.len()).prop_map(|(i, k)| Edit::InsertAt(i, k)),
        (any::<usize>(), any::<usize>()).prop_map(|(i, j)| Edit::MoveTo(i, j)),
    ]
}

fn count(t: &Owned) -> usize {
    1 + t.children.iter().map(count).sum::<usize>()
}

/// Child-index paths of all nodes in pre-order.
fn paths(t: &Owned) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(t, Vec::new())];
    while let Some((n, path)) = stack.pop() {
        for (k, c) in n.children.iter().enumerate().rev() {
            let mut p = path.clone();
            p.push(k);
            stack.push((c, p));
        }
        out.push(path);
    }
    out
}

fn at<'a>(t: &'a mut Owned, path: &[usize]) -> &'a mut Owned {
    path.iter().fold(t, |n, &k| &mut n.children[k])
}

fn nth(t: &mut Owned, n: usize) -> &mut Owned {
    let path = paths(t).swap_remove(n);
    at(t, &path)
}

fn mutate(mut t: Owned, edits: &[Edit]) -> Owned {
    for e in edits {
        let n = count(&t);
        match *e {
            Edit::Relabel(i, v) => nth(&mut t, i % n).value = format!("r{v}"),
            Edit::DeleteAt(i) if n > 1 => {
                let i = 1 + i % (n - 1);
                remove(&mut t, i);
            }
            Edit::InsertAt(i, k) => {
                let p = nth(&mut t, i % n);
                let at = i % (p.children.len() + 1);
                p.children.insert(at, Owned { kind: KINDS[k].into(), value: "new".into(), children: vec![] });
            }
            Edit::MoveTo(i, j) if n > 2 => {
                let i = 1 + i % (n - 1);
                let sub = remove(&mut t, i);
                let m = count(&t);
                let p = nth(&mut t, j % m);
                let at = j % (p.children.len() + 1);
                p.children.insert(at, sub);
            }
            _ => {}
        }
    }
    t
}

/// Removes the pre-order `i`-th node (not the root) with its subtree.
fn remove(t: &mut Owned, i: usize) -> Owned {
    let path = paths(t).swap_remove(i);
    let (last, parent) = path.split_last().expect("not the root");
    at(t, parent).children.remove(*last)
}

fn check_sound(a: &SyntaxTree, b: &SyntaxTree) -> Result<(), TestCaseError> {
    let d = diff_trees(a, b, MatchOptions::default(), &CategoryTable::default());
    let ops: Vec<EditOp> = d.ops().cloned().collect();
    let rebuilt = apply_script(a, &ops).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(rebuilt.isomorphic_to(b), "{}\n{}\n{}", a.to_sexpr(), b.to_sexpr(), rebuilt.to_sexpr());
    let excluded: u64 = d.summary.excluded.values().sum();
    prop_assert_eq!(d.summary.counted() + excluded, ops.len() as u64);

    let mapping = match_trees(a, b, MatchOptions::default());
    for op in &ops {
        if let EditOp::Update { node, dst, .. } = op {
            prop_assert_eq!(mapping.dst(*node), Some(*dst));
        }
    }
    let inserted = (0..b.len()).filter(|&n| !mapping.is_dst_mapped(n)).count();
    let deleted = (0..a.len()).filter(|&n| !mapping.is_src_mapped(n)).count();
    prop_assert_eq!(d.count(ActionKind::Insert), inserted);
    prop_assert_eq!(d.count(ActionKind::Delete), deleted);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mutated_trees(t in owned(), edits in prop::collection::vec(edit(), 0..8)) {
        let a = build(&t);
        let b = build(&mutate(t, &edits));
        check_sound(&a, &b)?;
        check_sound(&b, &a)?;
    }

    #[test]
    fn unrelated_trees(x in owned(), y in owned()) {
        check_sound(&build(&x), &build(&y))?;
    }

    #[test]
    fn reflexive(t in owned()) {
        let a = build(&t);
        let d = diff_trees(&a, &a, MatchOptions::default(), &CategoryTable::default());
        prop_assert!(d.actions.is_empty());
        prop_assert_eq!(d.mapped, a.len());
    }
}
