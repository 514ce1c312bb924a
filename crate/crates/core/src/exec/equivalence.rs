//! Result-table equivalence.
//!
//! Column names are ignored; only arity matters. Rows are compared as
//! sequences when both producing queries are ordered and as multisets
//! otherwise. Numbers compare with a relative tolerance and integer/real
//! coercion, text exactly, and NULL only equals NULL.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Cell, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceOptions {
    pub relative_tolerance: f64,
    /// Compare row order whenever either side is ordered.
    pub strict_ordering: bool,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions {
            relative_tolerance: 1e-6,
            strict_ordering: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mismatch {
    ColumnCount { pred: usize, gold: usize },
    RowCount { pred: usize, gold: usize },
    /// First differing row: in result order for ordered comparison, in
    /// sorted order otherwise.
    Row {
        index: usize,
        pred: Vec<Cell>,
        gold: Vec<Cell>,
    },
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mismatch::ColumnCount { pred, gold } => {
                write!(f, "column count differs: pred {pred}, gold {gold}")
            }
            Mismatch::RowCount { pred, gold } => write!(f, "row count differs: pred {pred}, gold {gold}"),
            Mismatch::Row { index, pred, gold } => write!(
                f,
                "row {index} differs: pred {}, gold {}",
                serde_json::to_string(pred).unwrap_or_default(),
                serde_json::to_string(gold).unwrap_or_default()
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Equivalence {
    Equivalent {
        ordered_comparison: bool,
        note: Option<String>,
    },
    NotEquivalent {
        ordered_comparison: bool,
        mismatch: Mismatch,
        note: Option<String>,
    },
    /// A truncated table prevents a decision.
    Inconclusive { reason: String },
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent { .. })
    }
}

pub fn tables_equivalent(pred: &ResultTable, gold: &ResultTable) -> bool {
    compare_tables(pred, gold, &EquivalenceOptions::default()).is_equivalent()
}

pub fn cells_equal(a: &Cell, b: &Cell, tol: f64) -> bool {
    match (a, b) {
        (Cell::Null, Cell::Null) => true,
        (Cell::Integer(x), Cell::Integer(y)) => x == y,
        (Cell::Text(x), Cell::Text(y)) => x == y,
        (Cell::Blob(x), Cell::Blob(y)) => x == y,
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x == y || (x - y).abs() <= tol * x.abs().max(y.abs()),
            _ => false,
        },
    }
}

fn rows_equal(a: &[Cell], b: &[Cell], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| cells_equal(x, y, tol))
}

fn kind_rank(c: &Cell) -> u8 {
    match c {
        Cell::Null => 0,
        Cell::Integer(_) | Cell::Real(_) => 1,
        Cell::Text(_) => 2,
        Cell::Blob(_) => 3,
    }
}

/// Total order on cells: NULL, numbers by value, text, blobs. An integer
/// and a real with the same value compare equal, as they do in [`cells_equal`].
pub fn cell_order(a: &Cell, b: &Cell) -> Ordering {
    kind_rank(a).cmp(&kind_rank(b)).then_with(|| match (a, b) {
        (Cell::Text(x), Cell::Text(y)) => x.cmp(y),
        (Cell::Blob(x), Cell::Blob(y)) => x.0.cmp(&y.0),
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            _ => Ordering::Equal,
        },
    })
}

fn row_order(a: &[Cell], b: &[Cell]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| cell_order(x, y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

pub fn compare_tables(pred: &ResultTable, gold: &ResultTable, opts: &EquivalenceOptions) -> Equivalence {
    if pred.truncated || gold.truncated {
        let side = match (pred.truncated, gold.truncated) {
            (true, true) => "both tables",
            (true, false) => "predicted table",
            _ => "gold table",
        };
        return Equivalence::Inconclusive {
            reason: format!("{side} truncated by the row cap"),
        };
    }
    let ordered = if opts.strict_ordering {
        pred.ordered || gold.ordered
    } else {
        pred.ordered && gold.ordered
    };
    let note = (pred.ordered != gold.ordered).then(|| {
        let which = if pred.ordered { "predicted" } else { "gold" };
        format!(
            "only the {which} query is ordered; rows compared {}",
            if ordered { "in order" } else { "as multisets" }
        )
    });
    let fail = |mismatch| Equivalence::NotEquivalent {
        ordered_comparison: ordered,
        mismatch,
        note: note.clone(),
    };
    if pred.columns.len() != gold.columns.len() {
        return fail(Mismatch::ColumnCount {
            pred: pred.columns.len(),
            gold: gold.columns.len(),
        });
    }
    if pred.rows.len() != gold.rows.len() {
        return fail(Mismatch::RowCount {
            pred: pred.rows.len(),
            gold: gold.rows.len(),
        });
    }
    let tol = opts.relative_tolerance;
    let (p, g): (Vec<&Vec<Cell>>, Vec<&Vec<Cell>>) = if ordered {
        (pred.rows.iter().collect(), gold.rows.iter().collect())
    } else {
        let mut p: Vec<&Vec<Cell>> = pred.rows.iter().collect();
        let mut g: Vec<&Vec<Cell>> = gold.rows.iter().collect();
        p.sort_by(|a, b| row_order(a, b));
        g.sort_by(|a, b| row_order(a, b));
        (p, g)
    };
    for (index, (a, b)) in p.iter().zip(&g).enumerate() {
        if !rows_equal(a, b, tol) {
            return fail(Mismatch::Row {
                index,
                pred: (*a).clone(),
                gold: (*b).clone(),
            });
        }
    }
    Equivalence::Equivalent {
        ordered_comparison: ordered,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: Vec<Vec<Cell>>, ordered: bool) -> ResultTable {
        let width = rows.first().map_or(1, Vec::len);
        ResultTable::new((0..width).map(|i| format!("c{i}")).collect(), rows, ordered)
    }

    #[test]
    fn permuted_rows_match_when_unordered() {
        let a = t(vec![vec![Cell::Integer(1)], vec![Cell::Integer(2)]], false);
        let b = t(vec![vec![Cell::Integer(2)], vec![Cell::Integer(1)]], true);
        let r = compare_tables(&a, &b, &EquivalenceOptions::default());
        assert!(r.is_equivalent());
        match r {
            Equivalence::Equivalent { note, .. } => assert!(note.unwrap().contains("only the gold")),
            _ => unreachable!(),
        }
        let strict = EquivalenceOptions {
            strict_ordering: true,
            ..Default::default()
        };
        assert!(!compare_tables(&a, &b, &strict).is_equivalent());
    }

    #[test]
    fn order_matters_when_both_ordered() {
        let a = t(vec![vec![Cell::Integer(1)], vec![Cell::Integer(2)]], true);
        let b = t(vec![vec![Cell::Integer(2)], vec![Cell::Integer(1)]], true);
        match compare_tables(&a, &b, &EquivalenceOptions::default()) {
            Equivalence::NotEquivalent {
                mismatch: Mismatch::Row { index, .. },
                ..
            } => assert_eq!(index, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn numeric_coercion_and_tolerance() {
        assert!(cells_equal(&Cell::Integer(3), &Cell::Real(3.0), 1e-6));
        assert!(cells_equal(&Cell::Real(1.0), &Cell::Real(1.0 + 1e-9), 1e-6));
        assert!(!cells_equal(&Cell::Real(1.0), &Cell::Real(1.001), 1e-6));
        assert!(!cells_equal(&Cell::Text("3".into()), &Cell::Integer(3), 1e-6));
        assert!(!cells_equal(&Cell::Null, &Cell::Integer(0), 1e-6));
        assert!(!cells_equal(&Cell::Text("Lost".into()), &Cell::Text("lost".into()), 1e-6));
    }

    #[test]
    fn column_names_are_ignored_but_arity_is_not() {
        let mut a = t(vec![vec![Cell::Integer(1)]], false);
        let b = t(vec![vec![Cell::Integer(1)]], false);
        a.columns = vec!["count(*)".into()];
        assert!(tables_equivalent(&a, &b));
        let c = t(vec![vec![Cell::Integer(1), Cell::Integer(1)]], false);
        assert!(!tables_equivalent(&a, &c));
    }

    #[test]
    fn truncation_is_inconclusive() {
        let mut a = t(vec![vec![Cell::Integer(1)]], false);
        a.truncated = true;
        let b = t(vec![vec![Cell::Integer(1)]], false);
        assert!(matches!(
            compare_tables(&a, &b, &EquivalenceOptions::default()),
            Equivalence::Inconclusive { .. }
        ));
    }
}
