//! Text serialisation of planted graphs.
//!
//! ```text
//! pcgraph v1 n=<n> k=<k> seed=<seed>
//! <planted indices, space separated; empty line when k = 0>
//! <n lines, one hex string per adjacency row>
//! ```
//!
//! Row `v` is written as `ceil(n/4)` lowercase hex digits. Digit `c`
//! (counting from the left) holds vertices `4c..4c+4`; vertex `4c + b` is
//! the nibble bit of value `1 << b`.

use super::{PlantedGraph, VertexSet};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

const MAGIC: &str = "pcgraph v1";

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

impl PlantedGraph {
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{MAGIC} n={} k={} seed={}",
            self.n(),
            self.k(),
            self.seed()
        )?;
        let planted: Vec<String> = self.planted().iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", planted.join(" "))?;
        let digits = self.n().div_ceil(4);
        let mut line = String::with_capacity(digits);
        for v in 0..self.n() {
            line.clear();
            let row = self.row(v);
            for c in 0..digits {
                let bit = 4 * c;
                let nib = (row[bit >> 6] >> (bit & 63)) & 0xF;
                write!(line, "{nib:x}").expect("string write");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("ascii")
    }

    /// First 16 hex digits of the SHA-256 of the text form.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| parse_err("empty input"))??;
        let rest = header
            .strip_prefix(MAGIC)
            .ok_or_else(|| parse_err(format!("bad header: {header:?}")))?;
        let (mut n, mut k, mut seed) = (None, None, None);
        for tok in rest.split_whitespace() {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| parse_err(format!("bad header field {tok:?}")))?;
            match key {
                "n" => n = val.parse::<usize>().ok(),
                "k" => k = val.parse::<usize>().ok(),
                "seed" => seed = val.parse::<u64>().ok(),
                _ => return Err(parse_err(format!("unknown header field {key:?}"))),
            }
        }
        let n = n
            .filter(|&n| n > 0)
            .ok_or_else(|| parse_err("missing or invalid n"))?;
        let k = k.ok_or_else(|| parse_err("missing or invalid k"))?;
        let seed = seed.ok_or_else(|| parse_err("missing or invalid seed"))?;

        let planted_line = lines
            .next()
            .ok_or_else(|| parse_err("missing planted line"))??;
        let mut planted = VertexSet::empty(n);
        for tok in planted_line.split_whitespace() {
            let v: usize = tok
                .parse()
                .map_err(|_| parse_err(format!("bad planted index {tok:?}")))?;
            if v >= n {
                return Err(parse_err(format!("planted index {v} out of range")));
            }
            planted.insert(v);
        }
        if planted.len() != k {
            return Err(parse_err(format!(
                "header k={k} but {} planted indices",
                planted.len()
            )));
        }

        let digits = n.div_ceil(4);
        let stride = n.div_ceil(64);
        let mut adj = vec![0u64; n * stride];
        for v in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(format!("missing adjacency row {v}")))??;
            let line = line.trim_end();
            if line.len() != digits {
                return Err(parse_err(format!(
                    "row {v} has {} hex digits, expected {digits}",
                    line.len()
                )));
            }
            for (c, ch) in line.chars().enumerate() {
                let nib = ch
                    .to_digit(16)
                    .ok_or_else(|| parse_err(format!("bad hex digit {ch:?} in row {v}")))?
                    as u64;
                let bit = 4 * c;
                adj[v * stride + (bit >> 6)] |= nib << (bit & 63);
            }
        }
        PlantedGraph::from_raw(n, seed, adj, planted)
            .map_err(|e| parse_err(format!("inconsistent graph: {e}")))
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Self::read_text(s.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_layout() {
        let g = PlantedGraph::from_edges(5, &[0, 1], &[(0, 4), (2, 3)], 9).unwrap();
        let text = g.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "pcgraph v1 n=5 k=2 seed=9");
        assert_eq!(lines[1], "0 1");
        // row 0: neighbours {1,4} -> nibble0 = 0b0010, nibble1 = 0b0001
        assert_eq!(lines[2], "21");
        assert_eq!(lines.len(), 7);
    }

    #[test]
    fn rejects_asymmetric_and_malformed_input() {
        let bad = "pcgraph v1 n=2 k=0 seed=1\n\n2\n0\n";
        assert!(PlantedGraph::from_text(bad).is_err());
        assert!(PlantedGraph::from_text("pcgraph v2 n=2 k=0 seed=1\n").is_err());
        assert!(PlantedGraph::from_text("pcgraph v1 n=2 k=1 seed=1\n\n0\n0\n").is_err());
    }

    #[test]
    fn empty_planted_line_round_trips() {
        let g = PlantedGraph::generate(9, 0, 4).unwrap();
        assert_eq!(PlantedGraph::from_text(&g.to_text()).unwrap(), g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn text_round_trip_is_bit_exact(n in 1usize..200, seed in any::<u64>(), frac in 0.0f64..1.0) {
            let k = ((n as f64) * frac) as usize;
            let g = PlantedGraph::generate(n, k, seed).unwrap();
            let back = PlantedGraph::from_text(&g.to_text()).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
