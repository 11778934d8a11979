//! Bundled device tables: frozen transcription checksums and cross-row
//! structure.

use qparity::io::builtin_table_texts;
use qparity::spectrum::{cos_half_phi_element, QubitParams};
use qparity::{load_device_tables, TableSource};
use sha2::{Digest, Sha256};

const CHECKSUMS: [(&str, &str); 2] = [
    ("table1.tsv", "312acb996e0cb23d4eb095ff7e638900b2a038a8d4a37c17e1a0b2f83ea65be2"),
    ("table2.tsv", "56936a2601327c574f17bdf7f500320aa7e7d98049590119a30bd3b9d59aecd5"),
];

#[test]
fn bundled_tables_match_transcription_checksums() {
    for ((name, text), (expected_name, digest)) in builtin_table_texts().iter().zip(CHECKSUMS) {
        assert_eq!(*name, expected_name);
        assert_eq!(hex::encode(Sha256::digest(text.as_bytes())), digest, "{name} changed");
    }
}

#[test]
fn directory_source_reads_the_same_rows() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in builtin_table_texts() {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    let a = load_device_tables(&TableSource::Builtin).unwrap();
    let b = load_device_tables(&TableSource::Dir(dir.path().to_path_buf())).unwrap();
    assert_eq!(a.records, b.records);
}

#[test]
fn c0_squared_rises_with_ej_over_ec() {
    let t = load_device_tables(&TableSource::Builtin).unwrap();
    let mut rows: Vec<(f64, f64, f64)> = t
        .records
        .iter()
        .filter_map(|r| {
            let (ej, ec, c0sq) = (r.ej_hz?, r.ec_hz?, r.c0sq?);
            let c = cos_half_phi_element(&QubitParams::new(ej, ec, 0.0).unwrap()).unwrap();
            Some((ej / ec, c0sq, c * c))
        })
        .collect();
    assert_eq!(rows.len(), 15);
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in rows.windows(2) {
        // Tabulated E_J and E_C carry three digits, so neighbouring ratios may swap.
        assert!(w[1].1 >= w[0].1 - 0.005, "tabulated c0² drops at ratio {:.2}", w[1].0);
        assert!(w[1].2 > w[0].2, "computed c0² not monotone at ratio {:.2}", w[1].0);
    }
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    assert!((first.0 - 1.82).abs() < 0.01 && (first.1 - 0.691).abs() < 1e-9);
    assert!((last.0 - 39.6).abs() < 0.1 && (last.1 - 0.942).abs() < 1e-9);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.2)));
}
