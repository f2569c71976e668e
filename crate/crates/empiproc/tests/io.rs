use std::fs;
use std::path::PathBuf;

use empiproc::core::generators::SamplePath;
use empiproc::io::{list_paths, read_gamma_csv, read_path, write_path, Format};
use empiproc::number::{g17, parse_real, to_json};
use empiproc::AppError;

struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("empiproc-io-{}-{name}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn awkward_values() -> Vec<f64> {
    let mut v = vec![
        0.0,
        1.0 - f64::EPSILON,
        f64::MIN_POSITIVE,
        1.0 / 3.0,
        0.1 + 0.2,
        5e-324,
    ];
    v.extend((0..30).map(|i| ((i as f64) * 0.754_877_666).fract()));
    v
}

#[test]
fn paths_round_trip_bit_for_bit() {
    let scratch = Scratch::new("paths");
    let values = awkward_values();
    let p = SamplePath::new(values.clone(), 3, "iid", 4, 2).unwrap();
    for format in [Format::Csv, Format::Binary] {
        let file = scratch.0.join(format!("path_00002.{}", format.extension()));
        write_path(&file, &p, format).unwrap();
        let back = read_path(&file, "iid", 4, 2).unwrap();
        assert_eq!(back.dim(), 3);
        let bits: Vec<u64> = back.values().iter().map(|x| x.to_bits()).collect();
        assert_eq!(
            bits,
            values.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            "{format:?}"
        );
    }
    let listed = list_paths(&scratch.0).unwrap();
    assert_eq!(listed.len(), 2);
}

#[test]
fn malformed_path_files_are_format_errors() {
    let scratch = Scratch::new("malformed");
    let header = scratch.0.join("path_00000.csv");
    fs::write(&header, "k,y1\n0,0.5\n").unwrap();
    assert!(matches!(
        read_path(&header, "iid", 1, 0),
        Err(AppError::Format { .. })
    ));

    let ragged = scratch.0.join("path_00001.csv");
    fs::write(&ragged, "k,x1,x2\n0,0.5,0.5\n1,0.5\n").unwrap();
    assert!(read_path(&ragged, "iid", 1, 1).is_err());

    let magic = scratch.0.join("path_00002.bin");
    fs::write(&magic, b"NOPE\x01\0\0\0\x01\0\0\0\0\0\0\0\0\0\0\0").unwrap();
    assert!(matches!(
        read_path(&magic, "iid", 1, 2),
        Err(AppError::Format { .. })
    ));

    let short = scratch.0.join("path_00003.bin");
    fs::write(&short, b"EPRC\x02\0\0\0\x01\0\0\0\0\0\0\0\0\0\0\0").unwrap();
    let err = read_path(&short, "iid", 1, 3).unwrap_err();
    assert_eq!(err.exit_code(), 7);

    let absent = scratch.0.join("path_99999.csv");
    assert!(matches!(
        read_path(&absent, "iid", 1, 4),
        Err(AppError::MissingInput(_))
    ));
}

#[test]
fn gamma_csv_is_read_back_densely() {
    let scratch = Scratch::new("gamma");
    let file = scratch.0.join("gamma.csv");
    let mut text = String::from("row,col,value\n");
    let vals = [0.25, -1.0 / 7.0, -1.0 / 7.0, 0.1875];
    for (i, v) in vals.iter().enumerate() {
        text.push_str(&format!("{},{},{}\n", i / 2, i % 2, g17(*v)));
    }
    fs::write(&file, text).unwrap();
    let (v, gamma) = read_gamma_csv(&file).unwrap();
    assert_eq!(v, 2);
    assert_eq!(gamma, vals);

    fs::write(&file, "row,col,value\n0,x,1\n").unwrap();
    assert!(matches!(
        read_gamma_csv(&file),
        Err(AppError::Format { .. })
    ));
}

#[test]
fn reals_survive_text_and_json() {
    for x in awkward_values().into_iter().chain([-2.5e300, 123456.789]) {
        assert_eq!(parse_real(&g17(x)).unwrap().to_bits(), x.to_bits(), "{x}");
    }
    let json = to_json(&[f64::NAN, f64::INFINITY, 0.5]).unwrap();
    let back: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(back[0].is_null() && back[1].is_null());
    assert_eq!(back[2], 0.5);
}
