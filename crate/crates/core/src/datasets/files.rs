//! On-disk datasets: PGM directory trees, split manifests and feature
//! bundles written by `gen-data`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::sample::{Domain, Origin, Sample, SampleInput};
use super::splits::{Role, SplitBundle};
use crate::error::{Error, Result};
use crate::pose::read_pgm;

pub const SAMPLES_FILE: &str = "samples.csv";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const WITHHELD_FILE: &str = "withheld_labels.csv";

fn ingestion(path: &Path, message: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| ingestion(dir, e.to_string()))? {
        entries.push(entry.map_err(|e| ingestion(dir, e.to_string()))?.path());
    }
    entries.sort();
    Ok(entries)
}

fn pgm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(sorted_entries(dir)?
        .into_iter()
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "pgm"))
        .collect())
}

fn class_dirs(dir: &Path, allow_unlabeled: bool) -> Result<Vec<(Option<usize>, PathBuf)>> {
    let mut out = Vec::new();
    for path in sorted_entries(dir)? {
        if !path.is_dir() {
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if allow_unlabeled && name == "unlabeled" {
            out.push((None, path));
            continue;
        }
        let class = name
            .parse::<usize>()
            .map_err(|_| ingestion(&path, format!("class directory '{name}' is not an integer")))?;
        out.push((Some(class), path));
    }
    Ok(out)
}

fn relative_id(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Loads `root/<domain>/<class_id>/<name>.pgm`.
///
/// Domains are `source`, `target` (with `target/unlabeled/` for images
/// without labels) and `virtual`. A virtual image named
/// `<stem>_yaw<y>_pitch<p>.pgm` is linked to `source/<class>/<stem>.pgm`.
/// Sample ids are paths relative to `root`; the result is sorted by id.
pub fn load_image_dataset(root: &Path) -> Result<Vec<Sample>> {
    if !root.is_dir() {
        return Err(ingestion(root, "not a directory"));
    }
    let mut samples = Vec::new();
    for (name, domain, origin) in [
        ("source", Domain::Source, Origin::Real),
        ("target", Domain::Target, Origin::Real),
        ("virtual", Domain::Source, Origin::Virtual),
    ] {
        let dir = root.join(name);
        if !dir.is_dir() {
            continue;
        }
        for (class, class_dir) in class_dirs(&dir, domain == Domain::Target)? {
            for file in pgm_files(&class_dir)? {
                let image = read_pgm(&file)?;
                let id = relative_id(root, &file);
                let derived_from = match origin {
                    Origin::Real => None,
                    Origin::Virtual => {
                        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                        let gallery = stem
                            .rfind("_yaw")
                            .map(|i| &stem[..i])
                            .ok_or_else(|| ingestion(&file, "virtual image name lacks _yaw<y>_pitch<p>"))?;
                        Some(format!("source/{}/{gallery}.pgm", class.expect("labeled dir")))
                    }
                };
                samples.push(Sample {
                    id,
                    input: SampleInput::Image(image),
                    class_label: class,
                    domain,
                    origin,
                    derived_from,
                });
            }
        }
    }
    samples.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(samples)
}

/// `sample_id,role` CSV.
pub fn write_manifest(path: &Path, bundle: &SplitBundle) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["sample_id", "role"]).map_err(|e| csv_error(path, e))?;
    for (id, role) in bundle.manifest() {
        w.write_record([id.as_str(), role.as_str()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Vec<(String, Role)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let (Some(id), Some(role)) = (rec.get(0), rec.get(1)) else {
            return Err(ingestion(path, format!("row {} needs sample_id and role", i + 2)));
        };
        let role = Role::parse(role).ok_or_else(|| ingestion(path, format!("unknown role '{role}'")))?;
        out.push((id.to_string(), role));
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    ingestion(path, e.to_string())
}

fn opt_label(s: &str, path: &Path) -> Result<Option<usize>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| ingestion(path, format!("bad label '{s}'")))
}

/// Writes a feature bundle as `samples.csv`, `manifest.csv` and
/// `withheld_labels.csv` under `dir`. Features are written in shortest
/// round-trip form, so loading gives back identical values.
pub fn save_feature_bundle(dir: &Path, bundle: &SplitBundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let dim = bundle.input_dim().unwrap_or(0);
    let path = dir.join(SAMPLES_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let mut header = vec![
        "sample_id".to_string(),
        "domain".into(),
        "origin".into(),
        "label".into(),
        "derived_from".into(),
    ];
    header.extend((0..dim).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(|e| csv_error(&path, e))?;
    for role in Role::ALL {
        for s in bundle.set(role) {
            let SampleInput::Features(x) = &s.input else {
                return Err(Error::Validation(format!(
                    "sample {} is an image; only feature bundles can be saved",
                    s.id
                )));
            };
            let mut row = vec![
                s.id.clone(),
                s.domain.as_str().to_string(),
                s.origin.as_str().to_string(),
                s.class_label.map_or(String::new(), |c| c.to_string()),
                s.derived_from.clone().unwrap_or_default(),
            ];
            row.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&row).map_err(|e| csv_error(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    write_manifest(&dir.join(MANIFEST_FILE), bundle)?;

    let path = dir.join(WITHHELD_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["sample_id", "label"])
        .map_err(|e| csv_error(&path, e))?;
    for (s, l) in bundle.target.iter().zip(&bundle.withheld_labels) {
        w.write_record([s.id.clone(), l.map_or(String::new(), |c| c.to_string())])
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Reads a bundle written by [`save_feature_bundle`]. A missing
/// `withheld_labels.csv` leaves `T`'s labels unknown.
pub fn load_feature_bundle(dir: &Path) -> Result<SplitBundle> {
    let path = dir.join(SAMPLES_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let mut by_id: HashMap<String, Sample> = HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(&path, e))?;
        if rec.len() < 5 {
            return Err(ingestion(&path, "row has fewer than 5 columns"));
        }
        let domain = match &rec[1] {
            "source" => Domain::Source,
            "target" => Domain::Target,
            d => return Err(ingestion(&path, format!("unknown domain '{d}'"))),
        };
        let origin = match &rec[2] {
            "real" => Origin::Real,
            "virtual" => Origin::Virtual,
            o => return Err(ingestion(&path, format!("unknown origin '{o}'"))),
        };
        let features = rec
            .iter()
            .skip(5)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| ingestion(&path, format!("bad feature '{v}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let sample = Sample {
            id: rec[0].to_string(),
            input: SampleInput::Features(features),
            class_label: opt_label(&rec[3], &path)?,
            domain,
            origin,
            derived_from: (!rec[4].is_empty()).then(|| rec[4].to_string()),
        };
        if by_id.insert(sample.id.clone(), sample).is_some() {
            return Err(ingestion(&path, format!("duplicate sample id '{}'", &rec[0])));
        }
    }

    let manifest_path = dir.join(MANIFEST_FILE);
    let mut bundle = SplitBundle::default();
    for (id, role) in read_manifest(&manifest_path)? {
        let s = by_id
            .remove(&id)
            .ok_or_else(|| ingestion(&manifest_path, format!("sample '{id}' is not in {SAMPLES_FILE}")))?;
        match role {
            Role::Source => bundle.source.push(s),
            Role::Virtual => bundle.virtual_source.push(s),
            Role::Target => bundle.target.push(s),
            Role::TargetLabeled => bundle.target_labeled.push(s),
            Role::Test => bundle.test.push(s),
        }
    }

    let withheld_path = dir.join(WITHHELD_FILE);
    let mut withheld: HashMap<String, Option<usize>> = HashMap::new();
    if withheld_path.exists() {
        let mut r = csv::Reader::from_path(&withheld_path).map_err(|e| csv_error(&withheld_path, e))?;
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_error(&withheld_path, e))?;
            if rec.len() < 2 {
                return Err(ingestion(&withheld_path, "row needs sample_id and label"));
            }
            withheld.insert(rec[0].to_string(), opt_label(&rec[1], &withheld_path)?);
        }
    }
    bundle.withheld_labels = bundle
        .target
        .iter()
        .map(|s| withheld.get(&s.id).copied().flatten())
        .collect();
    bundle.validate()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_two_domain_toy, ToyShiftConfig};

    #[test]
    fn feature_bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let config = ToyShiftConfig {
            samples_per_class_target: 20,
            num_classes: 4,
            ..ToyShiftConfig::default()
        };
        let bundle = gen_two_domain_toy(&config).unwrap();
        save_feature_bundle(dir.path(), &bundle).unwrap();
        let back = load_feature_bundle(dir.path()).unwrap();
        assert_eq!(back, bundle);
    }

    #[test]
    fn manifest_rejects_unknown_role() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        fs::write(&p, "sample_id,role\na,S\nb,bogus\n").unwrap();
        let err = read_manifest(&p).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
    }
}
