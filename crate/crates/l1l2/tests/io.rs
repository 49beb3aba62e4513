use l1l2::io::{parse_list, read_matrix, read_vector, write_matrix, write_vector};
use l1l2::core::DenseMatrix;

#[test]
fn matrix_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    let a = DenseMatrix::from_rows(&[&[0.1, -2.0 / 3.0, 1e-300], &[f64::MAX, 0.0, -7.25e12]]).unwrap();
    write_matrix(&path, &a).unwrap();
    assert_eq!(read_matrix(&path).unwrap(), a);
}

#[test]
fn vector_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let v = vec![std::f64::consts::PI, -0.0, 1.0 / 3.0, 5e-324];
    write_vector(&path, &v).unwrap();
    assert_eq!(read_vector(&path).unwrap(), v);
}

#[test]
fn malformed_files_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "2,2\n1,2\n3,x\n").unwrap();
    let err = read_matrix(&path).unwrap_err().to_string();
    assert!(err.contains("bad.csv"), "{err}");
    assert!(err.contains('3'), "{err}");

    std::fs::write(&path, "2,2\n1,2\n").unwrap();
    assert!(read_matrix(&path).is_err());
    assert!(read_matrix(dir.path().join("missing.csv")).is_err());
}

#[test]
fn lists() {
    assert_eq!(parse_list("1, 2.5,-3").unwrap(), vec![1.0, 2.5, -3.0]);
    assert!(parse_list("1,,2").is_err());
}
