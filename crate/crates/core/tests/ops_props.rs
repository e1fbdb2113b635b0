//! Algebraic invariants of the reshaping and string operators.

use autoprep_core::ops::{
    apply_pivot, apply_step, apply_transpose, apply_unpivot, split_cell, substring_cell, OpError,
    TransformStep, UNPIVOT_VALUE, UNPIVOT_VARIABLE,
};
use autoprep_core::tables::Table;
use proptest::prelude::*;

fn value() -> impl Strategy<Value = String> {
    prop_oneof![Just(String::new()), "[a-c]{1,2}", "[0-9]{1,3}"]
}

/// A table with a unique first column `k0..` and headers `h0..`.
fn keyed_table(min_cols: usize) -> impl Strategy<Value = Table> {
    (min_cols..7usize, 1usize..7).prop_flat_map(|(cols, rows)| {
        proptest::collection::vec(proptest::collection::vec(value(), cols - 1), rows).prop_map(move |body| {
            let header = (0..cols).map(|c| format!("h{c}")).collect();
            let rows = body
                .into_iter()
                .enumerate()
                .map(|(i, mut r)| {
                    r.insert(0, format!("k{i}"));
                    r
                })
                .collect();
            Table::new("t", header, rows).unwrap()
        })
    })
}

fn steps() -> impl Strategy<Value = TransformStep> {
    prop_oneof![
        Just(TransformStep::NoOp {}),
        Just(TransformStep::Transpose {}),
        Just(TransformStep::Unpivot { start_column: "h1".into(), end_column: "h2".into() }),
        Just(TransformStep::Split {
            column: "h1".into(),
            delimiter: "a".into(),
            select_pos: 0,
            output_column: "out".into(),
        }),
        Just(TransformStep::Substring { column: "h0".into(), start: 1, length: 1, output_column: "out".into() }),
        Just(TransformStep::Concatenate {
            columns: vec!["h0".into(), "h1".into()],
            delimiter: "-".into(),
            output_column: "out".into(),
        }),
    ]
}

proptest! {
    #[test]
    fn transpose_is_an_involution(t in keyed_table(1)) {
        let back = apply_transpose(&apply_transpose(&t).unwrap()).unwrap();
        prop_assert_eq!(back.column_names(), t.column_names());
        prop_assert_eq!(back.rows(), t.rows());
    }

    #[test]
    fn unpivot_row_count(t in keyed_table(3), a in 1usize..6, b in 1usize..6) {
        let cols = t.num_columns();
        let (s, e) = (a.min(b) % cols, a.max(b) % cols);
        prop_assume!(s >= 1 && e > s);
        let names = t.column_names();
        let out = apply_unpivot(&t, &names[s], &names[e], UNPIVOT_VARIABLE, UNPIVOT_VALUE).unwrap();
        prop_assert_eq!(out.num_rows(), t.num_rows() * (e - s + 1));
        prop_assert_eq!(out.num_columns(), cols - (e - s + 1) + 2);
    }

    #[test]
    fn pivot_inverts_unpivot(t in keyed_table(3)) {
        let names = t.column_names();
        let last = names.len() - 1;
        let long = apply_unpivot(&t, &names[1], &names[last], UNPIVOT_VARIABLE, UNPIVOT_VALUE).unwrap();
        let wide = apply_pivot(&long, UNPIVOT_VARIABLE, UNPIVOT_VALUE).unwrap();
        prop_assert_eq!(wide.column_names(), t.column_names());
        prop_assert_eq!(wide.rows(), t.rows());
    }

    #[test]
    fn steps_leave_the_input_alone(t in keyed_table(3), step in steps()) {
        let before = t.clone();
        let _ = apply_step(&t, &step);
        prop_assert_eq!(t.column_names(), before.column_names());
        prop_assert_eq!(t.rows(), before.rows());
        prop_assert_eq!(t.fingerprint(), before.fingerprint());
    }

    #[test]
    fn split_segments_rejoin(cell in "[a-c-]{0,10}") {
        let parts: Vec<String> = (0..=cell.matches('-').count()).map(|i| split_cell(&cell, "-", i)).collect();
        prop_assert_eq!(parts.join("-"), cell.clone());
        prop_assert_eq!(split_cell(&cell, "-", parts.len()), "");
    }

    #[test]
    fn substring_is_char_based(cell in "\\PC{0,8}", start in 0usize..10, len in 0usize..10) {
        let got = substring_cell(&cell, start, len);
        let want: String = cell.chars().skip(start).take(len).collect();
        prop_assert_eq!(got, want);
    }
}

#[test]
fn unpivot_needs_two_columns() {
    let t = Table::from_rows("t", &["K", "V"], &[&["a", "1"]]);
    assert!(matches!(
        apply_unpivot(&t, "V", "V", UNPIVOT_VARIABLE, UNPIVOT_VALUE),
        Err(OpError::InvalidParameter(_))
    ));
}

#[test]
fn pivot_rejects_conflicting_duplicates() {
    let t = Table::from_rows("t", &["K", "P", "V"], &[&["a", "x", "1"], &["a", "x", "2"]]);
    assert!(matches!(apply_pivot(&t, "P", "V"), Err(OpError::PivotConflict { .. })));
}

#[test]
fn one_by_one_transpose() {
    let t = Table::from_rows("t", &["A"], &[&["x"]]);
    let once = apply_transpose(&t).unwrap();
    assert_eq!(once.column_names(), &["A".to_string(), "x".to_string()]);
    assert_eq!(once.num_rows(), 0);
    let twice = apply_transpose(&once).unwrap();
    assert_eq!(twice.rows(), t.rows());
}

#[test]
fn missing_column_is_reported() {
    let t = Table::from_rows("t", &["A", "B"], &[&["x", "y"]]);
    let step = TransformStep::Split { column: "Z".into(), delimiter: "-".into(), select_pos: 0, output_column: "o".into() };
    assert!(matches!(apply_step(&t, &step), Err(OpError::UnknownColumn { .. })));
}
