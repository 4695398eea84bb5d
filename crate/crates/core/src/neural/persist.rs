//! Network weight files.
//!
//! ```text
//! admiral-mlp 1
//! layers 4 8 3
//! w0 <8*4 values>
//! b0 <8 values>
//! w1 <3*8 values>
//! b1 <3 values>
//! ```
//!
//! Values are written in shortest round-trip form, so a load returns the
//! exact same bits.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::Mlp;

pub const MLP_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "admiral-mlp";

pub fn mlp_to_text(net: &Mlp) -> String {
    let mut out = format!("{MAGIC} {MLP_FORMAT_VERSION}\nlayers");
    for s in net.sizes() {
        let _ = write!(out, " {s}");
    }
    out.push('\n');
    for (l, (w, b)) in net.weights().iter().zip(net.biases()).enumerate() {
        for (tag, values) in [("w", w), ("b", b)] {
            let _ = write!(out, "{tag}{l}");
            for v in values {
                let _ = write!(out, " {v:e}");
            }
            out.push('\n');
        }
    }
    out
}

/// Parses a weight file; `origin` names the source in error messages.
pub fn mlp_from_text(text: &str, origin: &Path) -> Result<Mlp> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, header) = lines.next().ok_or_else(|| err(1, "empty weight file".into()))?;
    let mut head = header.split_whitespace();
    if head.next() != Some(MAGIC) {
        return Err(err(n, format!("expected '{MAGIC}' header")));
    }
    let version: u32 = head
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(n, "missing format version".into()))?;
    if version != MLP_FORMAT_VERSION {
        return Err(err(n, format!("unsupported format version {version}")));
    }
    let (n, layer_line) = lines.next().ok_or_else(|| err(2, "missing layers line".into()))?;
    let mut parts = layer_line.split_whitespace();
    if parts.next() != Some("layers") {
        return Err(err(n, "expected 'layers'".into()));
    }
    let sizes: Vec<usize> = parts
        .map(|p| p.parse().map_err(|_| err(n, format!("bad layer size '{p}'"))))
        .collect::<Result<_>>()?;
    let shape = Mlp::zeros(&sizes).map_err(|e| err(n, e.to_string()))?;

    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..sizes.len() - 1 {
        for (tag, expected) in [("w", shape.weights()[l].len()), ("b", shape.biases()[l].len())] {
            let label = format!("{tag}{l}");
            let (n, line) = lines
                .next()
                .ok_or_else(|| err(0, format!("missing '{label}' line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(label.as_str()) {
                return Err(err(n, format!("expected '{label}'")));
            }
            let values: Vec<f64> = parts
                .map(|p| p.parse().map_err(|_| err(n, format!("bad number '{p}'"))))
                .collect::<Result<_>>()?;
            if values.len() != expected {
                return Err(err(n, format!("'{label}' has {} values, expected {expected}", values.len())));
            }
            if tag == "w" {
                weights.push(values);
            } else {
                biases.push(values);
            }
        }
    }
    if let Some((n, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(n, format!("unexpected trailing content '{extra}'")));
    }
    Mlp::from_parts(&sizes, weights, biases)
}

pub fn save_mlp(net: &Mlp, path: &Path) -> Result<()> {
    std::fs::write(path, mlp_to_text(net)).map_err(|e| Error::io(path, e))
}

pub fn load_mlp(path: &Path) -> Result<Mlp> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mlp_from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::random(&[5, 4, 3], &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        save_mlp(&net, &path).unwrap();
        assert_eq!(load_mlp(&path).unwrap(), net);
    }

    #[test]
    fn rejects_truncated_files() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::random(&[2, 2], &mut rng).unwrap();
        let text = mlp_to_text(&net);
        let cut: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(matches!(mlp_from_text(&cut, Path::new("x")), Err(Error::Parse { .. })));
        let bad = text.replace("admiral-mlp 1", "admiral-mlp 9");
        assert!(mlp_from_text(&bad, Path::new("x")).is_err());
    }

    proptest! {
        #[test]
        fn bit_exact_for_any_finite_weights(
            w in proptest::collection::vec(proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO, 6),
            b in proptest::collection::vec(proptest::num::f64::NORMAL, 2),
        ) {
            let net = Mlp::from_parts(&[3, 2], vec![w], vec![b]).unwrap();
            let back = mlp_from_text(&mlp_to_text(&net), Path::new("p")).unwrap();
            let bits = |m: &Mlp| m.weights().iter().chain(m.biases()).flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&net));
        }
    }
}
