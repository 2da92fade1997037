use std::collections::BTreeMap;
use std::fs;

use catfuzz::store::{ingest, load, read_corpus, save, write_corpus};
use catfuzz::synthetic::seeds;
use catfuzz_core::{CatalogConfig, Recipe, RecipeArg, RecipeStep, Scalar, Tensor, Value};

fn ragged_seed() -> Value {
    let rows = Value::Seq(vec![Value::Seq(vec![Value::Int(1); 4]), Value::Seq(vec![Value::Int(2)])]);
    Value::Recipe(Recipe {
        steps: vec![RecipeStep {
            constructor: "ragged_constant".into(),
            args: vec![RecipeArg::Value(rows)],
        }],
        result: 0,
    })
}

fn quantized_seed() -> Value {
    Value::Tensor(Tensor::new("qint32", vec![1, 1, 1, 1], vec![Scalar::Int(0)]).unwrap())
}

#[test]
fn synthetic_corpus_partitions_into_categories() {
    let corpus = seeds::corpus();
    let (db, report) = ingest(corpus.clone(), Vec::new(), &CatalogConfig::default()).unwrap();
    assert_eq!((report.seeds, report.kept), (200, 200));
    assert!(report.categories >= 30, "{}", report.categories);
    assert!(report.near_miss_possible);

    // Brute-force partition by fingerprint equality.
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, v) in corpus.iter().enumerate() {
        groups.entry(db.catalog().fingerprint(v).bits.iter().collect()).or_default().push(i);
    }
    assert_eq!(groups.len(), db.category_count());
    for c in db.categories() {
        assert_eq!(groups[&c.props.iter().collect::<Vec<_>>()], c.members);
    }
}

#[test]
fn degenerate_and_figure_corpora() {
    let (db, report) = ingest(vec![Value::Int(3)], Vec::new(), &CatalogConfig::default()).unwrap();
    assert_eq!(db.category_count(), 1);
    assert!(!report.near_miss_possible);

    let (db, _) = ingest(vec![ragged_seed(), quantized_seed()], Vec::new(), &CatalogConfig::default()).unwrap();
    assert_eq!(db.category_count(), 2);

    assert!(ingest(Vec::new(), Vec::new(), &CatalogConfig::default()).is_err());
}

#[test]
fn corpus_files_keep_values_and_report_dropped_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    write_corpus(&path, &[ragged_seed(), quantized_seed()]).unwrap();
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{\"function\":\"f\",\"value\":{\"kind\":\"int\",\"value\":4}}\n");
    text.push_str("not json\n\n");
    text.push_str("{\"kind\":\"tensor\",\"dtype\":\"int32\",\"shape\":[2],\"data\":[1]}\n");
    fs::write(&path, text).unwrap();

    let (values, dropped) = read_corpus(&path).unwrap();
    assert_eq!(values, vec![ragged_seed(), quantized_seed(), Value::Int(4)]);
    let lines: Vec<usize> = dropped.iter().map(|d| d.line).collect();
    assert_eq!(lines, vec![4, 6]);

    let (_, report) = ingest(values, dropped, &CatalogConfig::default()).unwrap();
    assert_eq!((report.seeds, report.kept, report.dropped.len()), (5, 3, 2));
}

#[test]
fn saved_databases_load_identically() {
    let (db, report) = ingest(seeds::corpus(), Vec::new(), &CatalogConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save(&db, &report, dir.path()).unwrap();
    let back = load(dir.path()).unwrap();
    assert_eq!(back.catalog().id(), db.catalog().id());
    assert_eq!(back.categories(), db.categories());
    assert_eq!(back.inputs(), db.inputs());
    for c in 0..db.category_count() {
        assert_eq!(back.stronger_set(c), db.stronger_set(c));
    }

    // A tampered fingerprint is caught.
    let inputs = dir.path().join("inputs.jsonl");
    let text = fs::read_to_string(&inputs).unwrap();
    let first = text.lines().next().unwrap();
    let line: serde_json::Value = serde_json::from_str(first).unwrap();
    let bits = line["bits"].as_str().unwrap();
    let flipped: String = bits
        .chars()
        .enumerate()
        .map(|(i, ch)| if i == bits.len() - 1 { if ch == '0' { '1' } else { '0' } } else { ch })
        .collect();
    fs::write(&inputs, text.replacen(bits, &flipped, 1)).unwrap();
    assert!(load(dir.path()).is_err());
    assert!(load(&dir.path().join("missing")).is_err());
}
