//! Flat-file table formats: the feature matrix CSV and its JSON manifest.
//!
//! Only the user_id column can contain arbitrary text, so writing quotes it
//! per RFC 4180 when needed and reading understands exactly that much.

use emojistats::corpus::Gender;
use emojistats::features::{manifest_fingerprint, FeatureMatrix};
use emojistats::lexicon::NormalizationPolicy;
use emojistats::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub columns: Vec<String>,
    pub policy: NormalizationPolicy,
    pub fingerprint: String,
    pub min_emoji_msgs: u64,
    pub max_emoji_msgs: Option<u64>,
}

pub fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Splits one CSV line, honoring quotes on any field.
fn split_csv_line(line: &str) -> Result<Vec<String>> {
    let mut fields = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        let mut field = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    Some('"') => {
                        if chars.peek() == Some(&'"') {
                            chars.next();
                            field.push('"');
                        } else {
                            break;
                        }
                    }
                    Some(c) => field.push(c),
                    None => {
                        return Err(Error::Data("unterminated quoted CSV field".into()))
                    }
                }
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c == ',' {
                    break;
                }
                field.push(c);
                chars.next();
            }
        }
        fields.push(field);
        match chars.next() {
            Some(',') => continue,
            None => break,
            Some(c) => {
                return Err(Error::Data(format!("unexpected `{c}` after CSV field")));
            }
        }
    }
    Ok(fields)
}

pub fn features_csv(matrix: &FeatureMatrix) -> String {
    let mut out = String::from("user_id,gender");
    for col in &matrix.columns {
        out.push(',');
        out.push_str(col);
    }
    out.push('\n');
    for i in 0..matrix.rows.len() {
        out.push_str(&csv_escape(&matrix.user_ids[i]));
        out.push(',');
        out.push_str(if matrix.labels[i] == 1 { "M" } else { "F" });
        for v in &matrix.rows[i] {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn parse_features_csv(contents: &str) -> Result<FeatureMatrix> {
    let mut lines = contents.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Data("features file is empty".into()))?;
    let header_fields = split_csv_line(header)?;
    if header_fields.len() < 3 || header_fields[0] != "user_id" || header_fields[1] != "gender" {
        return Err(Error::Data(
            "features header must start with user_id,gender".into(),
        ));
    }
    let columns: Vec<String> = header_fields[2..].to_vec();

    let mut user_ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields = split_csv_line(line)?;
        if fields.len() != columns.len() + 2 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!(
                    "expected {} fields, got {}",
                    columns.len() + 2,
                    fields.len()
                ),
            });
        }
        user_ids.push(fields[0].clone());
        labels.push(match fields[1].as_str() {
            "M" => 1u8,
            "F" => 0u8,
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("bad gender `{other}`"),
                })
            }
        });
        let mut row = Vec::with_capacity(columns.len());
        for field in &fields[2..] {
            row.push(field.parse::<f64>().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad float `{field}`"),
            })?);
        }
        rows.push(row);
    }
    Ok(FeatureMatrix {
        user_ids,
        labels,
        rows,
        columns,
    })
}

/// Reads a manifest and checks its recorded fingerprint is consistent with
/// its own column list.
pub fn load_manifest(contents: &str) -> Result<Manifest> {
    let manifest: Manifest = serde_json::from_str(contents)?;
    let recomputed = manifest_fingerprint(&manifest.columns);
    if recomputed != manifest.fingerprint {
        return Err(Error::Data(
            "manifest fingerprint does not match its column list".into(),
        ));
    }
    Ok(manifest)
}

pub fn gender_str(g: Gender) -> &'static str {
    match g {
        Gender::Female => "F",
        Gender::Male => "M",
    }
}
