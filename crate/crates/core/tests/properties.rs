mod common;

use std::fs;

use proptest::prelude::*;
use proptest::sample::select;
use sha2::{Digest, Sha256};

use spidereval_core::exec::markdown::{parse_markdown, render_cell, render_markdown};
use spidereval_core::exec::{
    compare_tables, execute, execute_at, tables_equivalent, BlobCell, Cell, EquivalenceOptions, ExecLimits,
    ExecOutcome, ResultTable,
};
use spidereval_core::hardness::HardnessProfile;
use spidereval_core::schema::DatabaseSchema;
use spidereval_core::sql::joins::detect_conditionless_join;
use spidereval_core::sql::{canonicalize, diff, parse, to_sql};

use common::schema;

// Owners - Dogs - Treatments - Professionals, joined along the chain.
const TABLES: [&str; 4] = ["Owners", "Dogs", "Treatments", "Professionals"];
const LINKS: [(&str, &str); 3] = [
    ("owner_id", "owner_id"),
    ("dog_id", "dog_id"),
    ("professional_id", "professional_id"),
];
const TEXT_COLS: [&[&str]; 4] = [
    &["first_name", "last_name", "city"],
    &["name", "breed_code"],
    &["treatment_type_code"],
    &["role_code", "first_name", "last_name", "city"],
];
const NUM_COLS: [&[&str]; 4] = [
    &["owner_id"],
    &["dog_id", "owner_id"],
    &["treatment_id", "dog_id", "cost_of_treatment"],
    &["professional_id"],
];
const ALIAS_POOL: [&str; 6] = ["a", "b", "x", "zz", "src", "q"];
const TEXTS: [&str; 5] = ["Employee", "BUL", "Lake Tia", "O'Reilly", "EXAM"];

#[derive(Debug, Clone)]
struct Col {
    table: usize,
    name: &'static str,
}

#[derive(Debug, Clone)]
enum Item {
    Col(Col),
    Agg(&'static str, Col),
    CountStar,
}

#[derive(Debug, Clone)]
enum Pred {
    Num(Col, &'static str, i64),
    Text(Col, bool, &'static str),
}

#[derive(Debug, Clone)]
struct Spec {
    first: usize,
    len: usize,
    distinct: bool,
    items: Vec<Item>,
    preds: Vec<Pred>,
    or: bool,
    group: Option<Col>,
    order: Option<(Item, bool)>,
    limit: Option<u8>,
}

#[derive(Debug, Clone)]
enum AliasStyle {
    Numbered,
    Named(Vec<&'static str>, bool),
    Bare,
}

fn col_in(first: usize, len: usize, numeric: bool) -> impl Strategy<Value = Col> {
    (first..first + len).prop_flat_map(move |t| {
        let cols = if numeric { NUM_COLS[t] } else { TEXT_COLS[t] };
        select(cols.to_vec()).prop_map(move |name| Col { table: t, name })
    })
}

fn any_col(first: usize, len: usize) -> impl Strategy<Value = Col> {
    prop_oneof![col_in(first, len, true), col_in(first, len, false)]
}

fn item(first: usize, len: usize) -> impl Strategy<Value = Item> {
    prop_oneof![
        3 => any_col(first, len).prop_map(Item::Col),
        1 => (select(vec!["count", "max", "min", "sum", "avg"]), col_in(first, len, true))
            .prop_map(|(f, c)| Item::Agg(f, c)),
        1 => Just(Item::CountStar),
    ]
}

fn pred(first: usize, len: usize) -> impl Strategy<Value = Pred> {
    prop_oneof![
        (col_in(first, len, true), select(vec!["=", "<", ">=", "!="]), 0i64..700)
            .prop_map(|(c, op, v)| Pred::Num(c, op, v)),
        (col_in(first, len, false), any::<bool>(), select(TEXTS.to_vec()))
            .prop_map(|(c, like, v)| Pred::Text(c, like, v)),
    ]
}

fn spec() -> impl Strategy<Value = Spec> {
    (0usize..4)
        .prop_flat_map(|first| (Just(first), 1..=(4 - first).min(3)))
        .prop_flat_map(|(first, len)| {
            (
                Just(first),
                Just(len),
                any::<bool>(),
                prop::collection::vec(item(first, len), 1..4),
                prop::collection::vec(pred(first, len), 0..3),
                any::<bool>(),
                prop::option::of(any_col(first, len)),
                prop::option::of((item(first, len), any::<bool>())),
                prop::option::of(1u8..5),
            )
        })
        .prop_map(|(first, len, distinct, items, preds, or, group, order, limit)| Spec {
            first,
            len,
            distinct,
            items,
            preds,
            or,
            group,
            order,
            limit,
        })
}

fn alias_style(len: usize) -> impl Strategy<Value = AliasStyle> {
    prop_oneof![
        Just(AliasStyle::Numbered),
        (Just(ALIAS_POOL.to_vec()).prop_shuffle(), any::<bool>())
            .prop_map(move |(names, with_as)| AliasStyle::Named(names[..len].to_vec(), with_as)),
        Just(AliasStyle::Bare),
    ]
}

impl Spec {
    fn render(&self, style: &AliasStyle) -> String {
        self.render_with(style, usize::MAX)
    }

    /// Renders the query; the join at position `drop_on` (if any) loses its condition.
    fn render_with(&self, style: &AliasStyle, drop_on: usize) -> String {
        let name = |t: usize| -> String {
            let k = t - self.first;
            match style {
                AliasStyle::Numbered => format!("T{}", k + 1),
                AliasStyle::Named(names, _) => names[k].to_string(),
                AliasStyle::Bare => TABLES[t].to_string(),
            }
        };
        let decl = |t: usize| -> String {
            match style {
                AliasStyle::Numbered => format!("{} AS {}", TABLES[t], name(t)),
                AliasStyle::Named(_, true) => format!("{} AS {}", TABLES[t], name(t)),
                AliasStyle::Named(_, false) => format!("{} {}", TABLES[t], name(t)),
                AliasStyle::Bare => TABLES[t].to_string(),
            }
        };
        let col = |c: &Col| format!("{}.{}", name(c.table), c.name);
        let item = |i: &Item| match i {
            Item::Col(c) => col(c),
            Item::Agg(f, c) => format!("{f}({})", col(c)),
            Item::CountStar => "count(*)".to_string(),
        };
        let mut sql = String::from("SELECT ");
        if self.distinct {
            sql.push_str("DISTINCT ");
        }
        sql.push_str(&self.items.iter().map(item).collect::<Vec<_>>().join(", "));
        sql.push_str(" FROM ");
        sql.push_str(&decl(self.first));
        for t in self.first + 1..self.first + self.len {
            let (l, r) = LINKS[t - 1];
            sql.push_str(&format!(" JOIN {}", decl(t)));
            if t - self.first - 1 != drop_on {
                sql.push_str(&format!(" ON {}.{l} = {}.{r}", name(t - 1), name(t)));
            }
        }
        if !self.preds.is_empty() {
            let conn = if self.or { " OR " } else { " AND " };
            let preds: Vec<String> = self
                .preds
                .iter()
                .map(|p| match p {
                    Pred::Num(c, op, v) => format!("{} {op} {v}", col(c)),
                    Pred::Text(c, like, v) => {
                        let v = v.replace('\'', "''");
                        if *like {
                            format!("{} LIKE '%{v}%'", col(c))
                        } else {
                            format!("{} = '{v}'", col(c))
                        }
                    }
                })
                .collect();
            sql.push_str(" WHERE ");
            sql.push_str(&preds.join(conn));
        }
        if let Some(g) = &self.group {
            sql.push_str(&format!(" GROUP BY {}", col(g)));
        }
        if let Some((o, desc)) = &self.order {
            sql.push_str(&format!(" ORDER BY {}{}", item(o), if *desc { " DESC" } else { "" }));
        }
        if let Some(n) = self.limit {
            sql.push_str(&format!(" LIMIT {n}"));
        }
        sql
    }
}

fn dogs() -> DatabaseSchema {
    schema("dog_kennels")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn print_then_parse_is_identity(s in spec(), style in (1usize..4).prop_flat_map(alias_style)) {
        let schema = dogs();
        let style = match style {
            AliasStyle::Named(names, a) if names.len() < s.len => AliasStyle::Named(ALIAS_POOL[..s.len].to_vec(), a),
            other => other,
        };
        let ast = parse(&s.render(&style), &schema).unwrap();
        let printed = to_sql(&ast);
        let again = parse(&printed, &schema).unwrap();
        prop_assert_eq!(&again, &ast, "printed: {}", printed);
        prop_assert_eq!(to_sql(&again), printed);
    }

    #[test]
    fn canonical_form_is_idempotent_and_alias_blind(
        (s, a, b) in spec().prop_flat_map(|s| { let n = s.len; (Just(s), alias_style(n), alias_style(n)) })
    ) {
        let schema = dogs();
        let x = parse(&s.render(&a), &schema).unwrap();
        let y = parse(&s.render(&b), &schema).unwrap();
        let cx = canonicalize(&x);
        prop_assert_eq!(&canonicalize(cx.ast()), &cx);
        prop_assert_eq!(&canonicalize(&y), &cx);
        prop_assert!(diff(&cx, &canonicalize(&y)).is_empty());
        prop_assert_eq!(HardnessProfile::of(&x), HardnessProfile::of(&y));
    }

    #[test]
    fn diff_is_empty_exactly_for_canonical_equality(a in spec(), b in spec(), same in any::<bool>()) {
        let schema = dogs();
        let b = if same { a.clone() } else { b };
        let ca = canonicalize(&parse(&a.render(&AliasStyle::Numbered), &schema).unwrap());
        let cb = canonicalize(&parse(&b.render(&AliasStyle::Bare), &schema).unwrap());
        prop_assert!(diff(&ca, &ca).is_empty());
        let d = diff(&ca, &cb);
        prop_assert_eq!(d.is_empty(), ca == cb, "{:?}", d);
        prop_assert_eq!(diff(&cb, &ca).is_empty(), d.is_empty());
    }

    #[test]
    fn hardness_is_a_function_of_the_tree(s in spec()) {
        let schema = dogs();
        let ast = parse(&s.render(&AliasStyle::Numbered), &schema).unwrap();
        let p = HardnessProfile::of(&ast);
        prop_assert_eq!(p, HardnessProfile::of(&ast.clone()));
        prop_assert_eq!(p, HardnessProfile::of(&parse(&to_sql(&ast), &schema).unwrap()));
        prop_assert_eq!(p.bucket(), HardnessProfile::of(&ast).bucket());
    }

    #[test]
    fn joins_with_conditions_are_never_flagged(s in spec(), drop in 0usize..2) {
        let schema = dogs();
        let ast = parse(&s.render(&AliasStyle::Numbered), &schema).unwrap();
        prop_assert!(detect_conditionless_join(&ast).is_empty());
        if drop + 1 < s.len {
            let broken = parse(&s.render_with(&AliasStyle::Numbered, drop), &schema).unwrap();
            prop_assert_eq!(detect_conditionless_join(&broken).len(), 1);
        }
    }
}

fn checksum(path: &std::path::Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn execution_never_modifies_the_database(s in spec(), write in select(vec![
        "DELETE FROM Dogs",
        "UPDATE Treatments SET cost_of_treatment = 0",
        "INSERT INTO Owners VALUES (99, 'a', 'b', 'c')",
        "DROP TABLE Professionals",
        "CREATE TABLE t (x)",
        "PRAGMA user_version = 7",
        "ATTACH DATABASE ':memory:' AS other",
    ])) {
        let schema = dogs();
        let before = checksum(&schema.db_path);
        let sql = s.render(&AliasStyle::Numbered);
        let first = execute(&sql, &schema, ExecLimits::default()).unwrap();
        prop_assert_eq!(&first, &execute(&sql, &schema, ExecLimits::default()).unwrap());
        let w = execute_at(&schema.db_path, write, ExecLimits::default()).unwrap();
        let attached = write.starts_with("ATTACH");
        prop_assert!(attached || matches!(w, ExecOutcome::ExecError { .. }), "{} -> {:?}", write, w);
        prop_assert_eq!(checksum(&schema.db_path), before);
    }
}

// Values sit on a grid coarser than the tolerance so exact comparison is a
// valid oracle.
fn cell() -> impl Strategy<Value = Cell> {
    prop_oneof![
        1 => Just(Cell::Null),
        3 => (-5i64..5).prop_map(Cell::Integer),
        2 => (-10i64..10).prop_map(|h| Cell::Real(h as f64 / 2.0)),
        2 => select(vec!["a", "b", "a b", "|", "x\ny"]).prop_map(|s| Cell::Text(s.to_string())),
        1 => prop::collection::vec(any::<u8>(), 0..3).prop_map(|b| Cell::Blob(BlobCell(b))),
    ]
}

fn table(width: usize) -> impl Strategy<Value = ResultTable> {
    (
        prop::collection::vec(prop::collection::vec(cell(), width), 0..6),
        any::<bool>(),
    )
        .prop_map(move |(rows, ordered)| {
            ResultTable::new((0..width).map(|i| format!("c{i}")).collect(), rows, ordered)
        })
}

/// Exact key of a cell, with integral reals folded onto integers.
fn key(c: &Cell) -> String {
    match c {
        Cell::Real(r) if r.fract() == 0.0 => format!("n{}", *r as i64),
        Cell::Integer(i) => format!("n{i}"),
        other => format!("{other:?}"),
    }
}

fn oracle(a: &ResultTable, b: &ResultTable) -> bool {
    let rows = |t: &ResultTable| -> Vec<Vec<String>> { t.rows.iter().map(|r| r.iter().map(key).collect()).collect() };
    if a.columns.len() != b.columns.len() {
        return false;
    }
    let (mut x, mut y) = (rows(a), rows(b));
    if !(a.ordered && b.ordered) {
        x.sort();
        y.sort();
    }
    x == y
}

/// A variant of `t`: rows shuffled, one row possibly altered, ints possibly widened to reals.
fn variant(t: ResultTable) -> impl Strategy<Value = ResultTable> {
    let n = t.rows.len();
    (
        Just(t),
        Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        prop::option::of((0..n.max(1), 0usize..3, cell())),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(t, perm, change, widen, ordered)| {
            let mut rows: Vec<Vec<Cell>> = perm.iter().map(|&i| t.rows[i].clone()).collect();
            if let Some((r, c, v)) = change {
                if let Some(row) = rows.get_mut(r) {
                    if let Some(slot) = row.get_mut(c) {
                        *slot = v;
                    }
                }
            }
            if widen {
                for cell in rows.iter_mut().flatten() {
                    if let Cell::Integer(i) = cell {
                        *cell = Cell::Real(*i as f64);
                    }
                }
            }
            ResultTable::new(t.columns.clone(), rows, ordered)
        })
}

fn related() -> impl Strategy<Value = (ResultTable, ResultTable, ResultTable)> {
    (1usize..4)
        .prop_flat_map(table)
        .prop_flat_map(|a| (Just(a.clone()), variant(a)))
        .prop_flat_map(|(a, b)| (Just(a), Just(b.clone()), variant(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn equivalence_matches_brute_force((a, b, c) in related()) {
        prop_assert!(tables_equivalent(&a, &a));
        prop_assert_eq!(tables_equivalent(&a, &b), oracle(&a, &b));
        prop_assert_eq!(tables_equivalent(&a, &b), tables_equivalent(&b, &a));
        let all_unordered = !a.ordered && !b.ordered && !c.ordered;
        if all_unordered && tables_equivalent(&a, &b) && tables_equivalent(&b, &c) {
            prop_assert!(tables_equivalent(&a, &c));
        }
        let strict = EquivalenceOptions { strict_ordering: true, ..Default::default() };
        if compare_tables(&a, &b, &strict).is_equivalent() {
            prop_assert!(tables_equivalent(&a, &b));
        }
    }

    #[test]
    fn width_mismatch_is_never_equivalent(a in table(2), b in table(3)) {
        prop_assert!(!tables_equivalent(&a, &b));
    }

    #[test]
    fn markdown_round_trips(t in (1usize..4).prop_flat_map(table), cols in prop::collection::vec("[a-z|\\\\ ]{1,6}", 3)) {
        let mut t = t;
        t.columns = cols[..t.columns.len()].to_vec();
        let md = render_markdown(&t);
        let back = parse_markdown(&md).unwrap();
        prop_assert_eq!(&back.columns, &t.columns);
        prop_assert_eq!(back.rows.len(), t.rows.len());
        for (row, orig) in back.rows.iter().zip(&t.rows) {
            for (text, cell) in row.iter().zip(orig) {
                let expected = match cell {
                    Cell::Text(s) => s.clone(),
                    other => render_cell(other),
                };
                prop_assert_eq!(text, &expected);
            }
        }
    }
}
