//! Round-trip and inference invariants of the table layer.

use autoprep_core::tables::{infer_column_kinds, read_csv, ColumnKind, Table};
use proptest::prelude::*;

fn cell() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::new()),
        "[a-z]{1,6}",
        "-?[0-9]{1,5}",
        "[0-9]{1,3}\\.[0-9]{1,3}",
        "20[0-2][0-9]-0[1-9]-1[0-9]",
        "[ a-z,\"\\n]{1,8}",
    ]
}

fn table() -> impl Strategy<Value = Table> {
    (1usize..6, 1usize..8).prop_flat_map(|(cols, rows)| {
        proptest::collection::vec(proptest::collection::vec(cell(), cols), rows).prop_map(move |rows| {
            let header = (0..cols).map(|c| format!("col {c}")).collect();
            Table::new("t", header, rows).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip(t in table()) {
        let text = t.to_csv_string();
        let (back, report) = read_csv(text.as_bytes(), "t", "memory").unwrap();
        prop_assert_eq!(back.column_names(), t.column_names());
        prop_assert_eq!(back.rows(), t.rows());
        prop_assert_eq!(back.column_kinds(), t.column_kinds());
        prop_assert_eq!(report.padded_rows + report.truncated_rows, 0);
    }

    #[test]
    fn kind_inference_is_idempotent(t in table()) {
        let once = infer_column_kinds(&t);
        let twice = infer_column_kinds(&once);
        prop_assert_eq!(once.column_kinds(), twice.column_kinds());
        prop_assert_eq!(once.column_kinds(), t.column_kinds());
    }

    #[test]
    fn fingerprint_follows_content(t in table()) {
        prop_assert_eq!(t.fingerprint().len(), 16);
        let copy = Table::new("t", t.column_names().to_vec(), t.rows().to_vec()).unwrap();
        prop_assert_eq!(copy.fingerprint(), t.fingerprint());
        let renamed = t.with_name("other");
        prop_assert_ne!(renamed.fingerprint(), t.fingerprint());
    }
}

#[test]
fn ragged_rows_are_padded_and_truncated() {
    let (t, report) = read_csv("a,b\n1\n2,3,4\n".as_bytes(), "r", "memory").unwrap();
    assert_eq!(t.rows(), &[vec!["1".to_string(), String::new()], vec!["2".into(), "3".into()]]);
    assert_eq!((report.padded_rows, report.truncated_rows), (1, 1));
}

#[test]
fn majority_kind_tolerates_a_stray_cell() {
    let mut rows: Vec<Vec<String>> = (0..19).map(|i| vec![i.to_string()]).collect();
    rows.push(vec!["n/a".into()]);
    let t = Table::new("k", vec!["x".into()], rows).unwrap();
    assert_eq!(t.column_kinds(), &[ColumnKind::Integer]);
}

#[test]
fn header_only_file_is_rejected() {
    assert!(read_csv("a,b\n".as_bytes(), "h", "memory").is_err());
}
