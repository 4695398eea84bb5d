//! Q-table files. One file holds the tables of every agent of a run.
//!
//! ```text
//! admiral-qtable 1
//! table <agent> <states> <|A^1|> ... <|A^n|>
//! <joint values of state 0>
//! ...
//! <joint values of state states-1>
//! table ...
//! ```
//!
//! Values use shortest round-trip formatting, so loading gives back the
//! same bits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::game::JointQTable;

pub const QTABLE_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "admiral-qtable";

pub fn tables_to_text(tables: &[JointQTable]) -> String {
    let mut out = format!("{MAGIC} {QTABLE_FORMAT_VERSION}\n");
    for t in tables {
        let _ = write!(out, "table {} {}", t.agent(), t.state_count());
        for s in t.action_sizes() {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
        for row in t.values().chunks(t.joint_count().max(1)) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v:e}");
            }
            out.push('\n');
        }
    }
    out
}

/// Parses a Q-table file; `origin` names the source in error messages.
pub fn tables_from_text(text: &str, origin: &Path) -> Result<Vec<JointQTable>> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (n, header) = lines.next().ok_or_else(|| err(1, "empty q-table file".into()))?;
    let mut head = header.split_whitespace();
    if head.next() != Some(MAGIC) {
        return Err(err(n, format!("expected '{MAGIC}' header")));
    }
    match head.next().map(str::parse::<u32>) {
        Some(Ok(QTABLE_FORMAT_VERSION)) => {}
        Some(Ok(v)) => return Err(err(n, format!("unsupported format version {v}"))),
        _ => return Err(err(n, "missing format version".into())),
    }

    let mut tables = Vec::new();
    while let Some((n, line)) = lines.next() {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("table") {
            return Err(err(n, "expected 'table'".into()));
        }
        let nums: Vec<usize> = parts
            .map(|p| p.parse().map_err(|_| err(n, format!("bad integer '{p}'"))))
            .collect::<Result<_>>()?;
        if nums.len() < 3 {
            return Err(err(n, "table line needs agent, state count and action sizes".into()));
        }
        let (agent, states, sizes) = (nums[0], nums[1], &nums[2..]);
        if sizes.contains(&0) || agent >= sizes.len() {
            return Err(err(n, "bad agent index or empty action space".into()));
        }
        let joint: usize = sizes.iter().product();
        let mut values = Vec::with_capacity(states * joint);
        for s in 0..states {
            let (n, row) = lines
                .next()
                .ok_or_else(|| err(0, format!("table {agent} ends before state {s}")))?;
            let before = values.len();
            for p in row.split_whitespace() {
                values.push(p.parse::<f64>().map_err(|_| err(n, format!("bad number '{p}'")))?);
            }
            if values.len() - before != joint {
                return Err(err(n, format!("state {s} has {} values, expected {joint}", values.len() - before)));
            }
        }
        tables.push(JointQTable::from_values(agent, states, sizes, values).map_err(|e| err(n, e.to_string()))?);
    }
    Ok(tables)
}

pub fn save_tables(tables: &[JointQTable], path: &Path) -> Result<()> {
    std::fs::write(path, tables_to_text(tables)).map_err(|e| Error::io(path, e))
}

pub fn load_tables(path: &Path) -> Result<Vec<JointQTable>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    tables_from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn file_round_trip() {
        let a = JointQTable::from_values(0, 2, &[2, 3], (0..12).map(|i| i as f64 / 7.0).collect()).unwrap();
        let b = JointQTable::filled(1, 2, &[2, 3], -0.1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.txt");
        save_tables(&[a.clone(), b.clone()], &path).unwrap();
        assert_eq!(load_tables(&path).unwrap(), vec![a, b]);
    }

    #[test]
    fn rejects_bad_input() {
        let t = JointQTable::zeros(0, 3, &[2, 2]);
        let text = tables_to_text(&[t]);
        let short: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(matches!(tables_from_text(&short, Path::new("q")), Err(Error::Parse { .. })));
        assert!(tables_from_text(&text.replace("qtable 1", "qtable 2"), Path::new("q")).is_err());
        assert!(tables_from_text(&text.replace("0e0 0e0 0e0 0e0", "0e0 0e0 0e0"), Path::new("q")).is_err());
        assert!(tables_from_text(&text.replace("0e0 0e0 0e0 0e0", "0 0 0 inf"), Path::new("q")).is_err());
    }

    proptest! {
        #[test]
        fn bit_exact(values in proptest::collection::vec(
            proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 12)) {
            let t = JointQTable::from_values(1, 3, &[2, 2], values).unwrap();
            let back = tables_from_text(&tables_to_text(std::slice::from_ref(&t)), Path::new("p")).unwrap();
            let bits = |q: &JointQTable| q.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back[0]), bits(&t));
        }
    }
}
