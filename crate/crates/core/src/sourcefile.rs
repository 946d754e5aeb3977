//! Source descriptions on disk.
//!
//! A source file is TOML: alphabet sizes at the top, then one
//! `[[states]]` table per state with a label and the joint law as a
//! row-major list over (x, y, z), z varying fastest. Entries may be
//! plain numbers, decimal strings, or exact fractions like "3/50";
//! fractions are parsed as integer pairs and divided once, so inputs
//! meant to be equal stay bitwise equal and marginal comparisons
//! under the partition tolerance behave predictably.

use crate::error::{Error, Result};
use crate::prob::JointPmf;
use crate::source::{CompoundSource, SourceState};
use serde::Deserialize;
use std::path::Path;

#[derive(Deserialize)]
struct RawSpec {
    x_size: usize,
    y_size: usize,
    z_size: usize,
    states: Vec<RawState>,
}

#[derive(Deserialize)]
struct RawState {
    label: String,
    joint: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Num(f64),
    Text(String),
}

fn parse_entry(e: &RawEntry, state: &str, pos: usize) -> Result<f64> {
    let fail = |msg: String| Error::SourceSpec(format!("state {state:?}, entry {pos}: {msg}"));
    match e {
        RawEntry::Num(v) => {
            if !v.is_finite() {
                return Err(fail(format!("non-finite value {v}")));
            }
            Ok(*v)
        }
        RawEntry::Text(s) => {
            let s = s.trim();
            if let Some((num, den)) = s.split_once('/') {
                let a: u64 = num
                    .trim()
                    .parse()
                    .map_err(|_| fail(format!("bad fraction numerator in {s:?}")))?;
                let b: u64 = den
                    .trim()
                    .parse()
                    .map_err(|_| fail(format!("bad fraction denominator in {s:?}")))?;
                if b == 0 {
                    return Err(fail(format!("zero denominator in {s:?}")));
                }
                Ok(a as f64 / b as f64)
            } else {
                s.parse::<f64>()
                    .map_err(|_| fail(format!("not a number: {s:?}")))
            }
        }
    }
}

/// Parses a source description from TOML text.
pub fn parse_source_spec(text: &str) -> Result<CompoundSource> {
    let raw: RawSpec =
        toml::from_str(text).map_err(|e| Error::SourceSpec(format!("parse error: {e}")))?;
    if raw.x_size == 0 || raw.y_size == 0 || raw.z_size == 0 {
        return Err(Error::SourceSpec(format!(
            "alphabet sizes must be positive, got [{}, {}, {}]",
            raw.x_size, raw.y_size, raw.z_size
        )));
    }
    let cells = raw
        .x_size
        .checked_mul(raw.y_size)
        .and_then(|v| v.checked_mul(raw.z_size))
        .ok_or_else(|| Error::SourceSpec("alphabet sizes overflow".into()))?;
    let mut states = Vec::with_capacity(raw.states.len());
    for st in &raw.states {
        if st.joint.len() != cells {
            return Err(Error::SourceSpec(format!(
                "state {:?}: joint has {} entries, expected {} = {} * {} * {}",
                st.label,
                st.joint.len(),
                cells,
                raw.x_size,
                raw.y_size,
                raw.z_size
            )));
        }
        let mut mass = Vec::with_capacity(cells);
        for (pos, e) in st.joint.iter().enumerate() {
            mass.push(parse_entry(e, &st.label, pos)?);
        }
        let joint = JointPmf::new(vec![raw.x_size, raw.y_size, raw.z_size], mass)
            .map_err(|e| Error::SourceSpec(format!("state {:?}: {e}", st.label)))?;
        states.push(SourceState {
            label: st.label.clone(),
            joint,
        });
    }
    CompoundSource::new(raw.x_size, raw.y_size, raw.z_size, states)
}

/// Reads and parses a source description file.
pub fn load_source_spec<P: AsRef<Path>>(path: P) -> Result<CompoundSource> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::SourceSpec(format!("cannot read {}: {e}", path.display())))?;
    parse_source_spec(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_decimals_and_numbers() {
        let text = r#"
x_size = 2
y_size = 2
z_size = 1

[[states]]
label = "a"
joint = ["1/3", "1/6", 0.25, "0.25"]
"#;
        let src = parse_source_spec(text).unwrap();
        assert_eq!(src.x_size(), 2);
        assert_eq!(src.states().len(), 1);
        let j = &src.states()[0].joint;
        assert_eq!(j.get(&[0, 0, 0]), 1.0 / 3.0);
        assert_eq!(j.get(&[0, 1, 0]), 1.0 / 6.0);
        assert_eq!(j.get(&[1, 0, 0]), 0.25);
    }

    #[test]
    fn fraction_equality_is_exact_across_states() {
        // the same fraction written in two states must land on the
        // same float so the marginal partition groups them
        let text = r#"
x_size = 2
y_size = 1
z_size = 1

[[states]]
label = "a"
joint = ["1/3", "2/3"]

[[states]]
label = "b"
joint = ["1/3", "2/3"]
"#;
        let src = parse_source_spec(text).unwrap();
        let classes = src.marginal_partition();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].members, vec![0, 1]);
    }

    #[test]
    fn errors_name_the_state_and_entry() {
        let bad_fraction = r#"
x_size = 1
y_size = 1
z_size = 2

[[states]]
label = "oops"
joint = ["1/0", "1/2"]
"#;
        let err = parse_source_spec(bad_fraction).unwrap_err().to_string();
        assert!(err.contains("oops"), "{err}");
        assert!(err.contains("entry 0"), "{err}");

        let wrong_len = r#"
x_size = 2
y_size = 2
z_size = 2

[[states]]
label = "short"
joint = ["1/2", "1/2"]
"#;
        let err = parse_source_spec(wrong_len).unwrap_err().to_string();
        assert!(err.contains("short"), "{err}");
        assert!(err.contains("expected 8"), "{err}");

        let bad_mass = r#"
x_size = 1
y_size = 1
z_size = 2

[[states]]
label = "heavy"
joint = ["1/2", "2/3"]
"#;
        let err = parse_source_spec(bad_mass).unwrap_err().to_string();
        assert!(err.contains("heavy"), "{err}");

        let not_toml = "x_size = ";
        let err = parse_source_spec(not_toml).unwrap_err().to_string();
        assert!(err.contains("parse error"), "{err}");
    }

    #[test]
    fn loads_from_disk() {
        let dir = std::env::temp_dir().join("skgen-sourcefile-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tiny.toml");
        std::fs::write(
            &path,
            "x_size = 1\ny_size = 1\nz_size = 1\n\n[[states]]\nlabel = \"only\"\njoint = [\"1/1\"]\n",
        )
        .unwrap();
        let src = load_source_spec(&path).unwrap();
        assert_eq!(src.states()[0].label, "only");
        assert!(load_source_spec(Path::new("/nonexistent/nope.toml")).is_err());
    }
}
