use std::fmt::Write as _;
use std::path::Path;

use pufocal::data::{load_csv, Catalog, CsvSchema};
use pufocal::Error;

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn cardio_shaped_file_matches_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::new();
    for j in 0..21 {
        write!(body, "f{j},").unwrap();
    }
    body.push_str("label\n");
    for i in 0..1831 {
        for j in 0..21 {
            write!(body, "{},", ((i * 31 + j * 7) % 97) as f64 / 9.0).unwrap();
        }
        body.push_str(if i % 1831 < 176 { "1\n" } else { "-1\n" });
    }
    let ds = load_csv(write(dir.path(), "cardio.csv", &body), &CsvSchema::default()).unwrap();
    assert_eq!((ds.n(), ds.dim(), ds.n_positive()), (1831, 21, 176));
    let report = ds.validate_against_catalog(&Catalog::builtin());
    assert!(report.in_catalog);
    assert!(report.all_pass(), "{report}");
}

#[test]
fn label_column_anywhere_and_custom_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t.csv", "a,class,b\n1.5,yes,2\n-0.5,no,3\n0,no,1\n");
    let schema = CsvSchema {
        label_column: "class".into(),
        positive_label: "yes".into(),
        negative_label: "no".into(),
    };
    let ds = load_csv(&p, &schema).unwrap();
    assert_eq!((ds.n(), ds.dim(), ds.n_positive()), (3, 2, 1));
    assert_eq!(ds.features()[[0, 1]], 2.0);
    assert_eq!(ds.name(), "t");
}

#[test]
fn errors_are_distinguishable() {
    let dir = tempfile::tempdir().unwrap();
    let schema = CsvSchema::default();
    let missing = load_csv(dir.path().join("nope.csv"), &schema).unwrap_err();
    assert!(matches!(missing, Error::MissingFile(_)));

    let p = write(dir.path(), "nn.csv", "x,label\n1,1\nabc,-1\n");
    assert!(matches!(load_csv(&p, &schema).unwrap_err(), Error::NonNumeric { .. }));

    let p = write(dir.path(), "zero.csv", "x,label\n1,1\n2,0\n");
    let e = load_csv(&p, &schema).unwrap_err();
    assert!(e.to_string().contains("invalid label value"), "{e}");

    let p = write(dir.path(), "one.csv", "x,label\n1,1\n2,1\n");
    assert!(matches!(load_csv(&p, &schema).unwrap_err(), Error::SingleClass));

    let p = write(dir.path(), "ragged.csv", "x,y,label\n1,2,1\n2,-1\n");
    assert!(load_csv(&p, &schema).is_err());
}
