//! Reproducible stream generators and stream-file input.
//!
//! The same spec always yields the same item sequence. Generated streams are
//! lazy; file streams are read and validated eagerly (one decimal integer per
//! line) so malformed input fails before any summary work starts.

use std::fs;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};

use crate::error::StreamError;

/// Stream randomness lives in its own seed namespace so a generator and a
/// summary handed the same seed never share a bit sequence.
fn stream_rng(seed: u64) -> ChaCha8Rng {
    let mut z = seed ^ 0x53_54_52_45_41_4D_00_01;
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StreamKind {
    /// 1, 2, 3, ...
    Sorted,
    /// n, n-1, ..., 1
    Reversed,
    /// Seeded uniform draws from [lo, hi).
    Uniform { lo: i64, hi: i64 },
    /// Seeded Zipf draws over {1..=universe} with the given exponent.
    Zipf { exponent: f64, universe: u64 },
    /// 0, 1, ..., period-1, repeating.
    Sawtooth { period: u64 },
    /// Decimal integers, one per line.
    File { path: PathBuf },
}

/// A fully determined stream: kind, length, and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub kind: StreamKind,
    pub n: u64,
    pub seed: u64,
}

impl StreamSpec {
    pub fn new(kind: StreamKind, n: u64, seed: u64) -> Self {
        StreamSpec { kind, n, seed }
    }

    /// Same spec, different seed. Deterministic kinds ignore the seed, which
    /// keeps multi-trial evaluation uniform across kinds.
    pub fn with_seed(&self, seed: u64) -> Self {
        StreamSpec {
            kind: self.kind.clone(),
            n: self.n,
            seed,
        }
    }

    pub fn iter(&self) -> Result<StreamIter, StreamError> {
        let state = match &self.kind {
            StreamKind::Sorted => IterState::Sorted,
            StreamKind::Reversed => IterState::Reversed,
            StreamKind::Uniform { lo, hi } => {
                if lo >= hi {
                    return Err(StreamError::InvalidSpec(format!(
                        "uniform range [{}, {}) is empty",
                        lo, hi
                    )));
                }
                IterState::Uniform {
                    dist: Uniform::new(*lo, *hi),
                    rng: stream_rng(self.seed),
                }
            }
            StreamKind::Zipf { exponent, universe } => {
                let dist = Zipf::new(*universe, *exponent).map_err(|e| {
                    StreamError::InvalidSpec(format!(
                        "zipf(universe = {}, exponent = {}): {}",
                        universe, exponent, e
                    ))
                })?;
                IterState::Zipf {
                    dist,
                    rng: stream_rng(self.seed),
                }
            }
            StreamKind::Sawtooth { period } => {
                if *period == 0 {
                    return Err(StreamError::InvalidSpec("sawtooth period 0".into()));
                }
                IterState::Sawtooth { period: *period }
            }
            StreamKind::File { path } => IterState::Materialized {
                items: read_stream_file(path)?,
            },
        };
        Ok(StreamIter {
            state,
            next_t: 0,
            n: self.n,
        })
    }
}

fn read_stream_file(path: &Path) -> Result<Vec<i64>, StreamError> {
    let text = fs::read_to_string(path).map_err(|source| StreamError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut items = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value = trimmed.parse::<i64>().map_err(|_| StreamError::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            content: trimmed.to_string(),
        })?;
        items.push(value);
    }
    Ok(items)
}

/// Parses a `--dist` token: `sorted`, `reversed`, `uniform[:LO:HI]`,
/// `zipf[:EXPONENT[:UNIVERSE]]`, `sawtooth[:PERIOD]`, `file:PATH`.
pub fn parse_dist(token: &str, n: u64) -> Result<StreamKind, StreamError> {
    let bad = |msg: String| Err(StreamError::InvalidSpec(msg));
    let mut parts = token.splitn(2, ':');
    let head = parts.next().unwrap_or_default();
    let rest = parts.next();
    match head {
        "sorted" => Ok(StreamKind::Sorted),
        "reversed" => Ok(StreamKind::Reversed),
        "uniform" => match rest {
            None => Ok(StreamKind::Uniform { lo: 0, hi: 1 << 32 }),
            Some(args) => {
                let fields: Vec<&str> = args.split(':').collect();
                if fields.len() != 2 {
                    return bad(format!("uniform wants LO:HI, got {:?}", args));
                }
                let lo = fields[0].parse().map_err(|_| {
                    StreamError::InvalidSpec(format!("bad uniform lo {:?}", fields[0]))
                })?;
                let hi = fields[1].parse().map_err(|_| {
                    StreamError::InvalidSpec(format!("bad uniform hi {:?}", fields[1]))
                })?;
                Ok(StreamKind::Uniform { lo, hi })
            }
        },
        "zipf" => {
            let (exponent, universe) = match rest {
                None => (1.1, n.max(1)),
                Some(args) => {
                    let fields: Vec<&str> = args.split(':').collect();
                    let exponent = fields[0].parse().map_err(|_| {
                        StreamError::InvalidSpec(format!("bad zipf exponent {:?}", fields[0]))
                    })?;
                    let universe = match fields.get(1) {
                        None => n.max(1),
                        Some(u) => u.parse().map_err(|_| {
                            StreamError::InvalidSpec(format!("bad zipf universe {:?}", u))
                        })?,
                    };
                    (exponent, universe)
                }
            };
            Ok(StreamKind::Zipf { exponent, universe })
        }
        "sawtooth" => {
            let period = match rest {
                None => 8192,
                Some(p) => p.parse().map_err(|_| {
                    StreamError::InvalidSpec(format!("bad sawtooth period {:?}", p))
                })?,
            };
            Ok(StreamKind::Sawtooth { period })
        }
        "file" => match rest {
            Some(path) if !path.is_empty() => Ok(StreamKind::File {
                path: PathBuf::from(path),
            }),
            _ => bad("file wants a path, e.g. file:stream.txt".into()),
        },
        other => bad(format!(
            "unknown distribution {:?} (expected sorted|reversed|uniform|zipf|sawtooth|file:PATH)",
            other
        )),
    }
}

enum IterState {
    Sorted,
    Reversed,
    Uniform { dist: Uniform<i64>, rng: ChaCha8Rng },
    Zipf { dist: Zipf<f64>, rng: ChaCha8Rng },
    Sawtooth { period: u64 },
    Materialized { items: Vec<i64> },
}

/// Iterator over the items of a [`StreamSpec`], exactly `n` of them (a file
/// shorter than `n` yields what it has).
pub struct StreamIter {
    state: IterState,
    next_t: u64,
    n: u64,
}

impl Iterator for StreamIter {
    type Item = i64;

    fn next(&mut self) -> Option<i64> {
        if self.next_t == self.n {
            return None;
        }
        let t = self.next_t;
        self.next_t += 1;
        match &mut self.state {
            IterState::Sorted => Some(t as i64 + 1),
            IterState::Reversed => Some((self.n - t) as i64),
            IterState::Uniform { dist, rng } => Some(dist.sample(rng)),
            IterState::Zipf { dist, rng } => Some(dist.sample(rng) as i64),
            IterState::Sawtooth { period } => Some((t % *period) as i64),
            IterState::Materialized { items } => items.get(t as usize).copied(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn collect(spec: &StreamSpec) -> Vec<i64> {
        spec.iter().unwrap().collect()
    }

    #[test]
    fn sorted_and_reversed() {
        let spec = StreamSpec::new(StreamKind::Sorted, 5, 0);
        assert_eq!(collect(&spec), vec![1, 2, 3, 4, 5]);
        let spec = StreamSpec::new(StreamKind::Reversed, 5, 0);
        assert_eq!(collect(&spec), vec![5, 4, 3, 2, 1]);
    }

    #[test]
    fn uniform_is_reproducible() {
        let spec = StreamSpec::new(StreamKind::Uniform { lo: 0, hi: 1000 }, 64, 7);
        let a = collect(&spec);
        let b = collect(&spec);
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| (0..1000).contains(&x)));
        let c = collect(&spec.with_seed(8));
        assert_ne!(a, c);
    }

    #[test]
    fn zipf_is_reproducible_and_bounded() {
        let spec = StreamSpec::new(
            StreamKind::Zipf {
                exponent: 1.2,
                universe: 100,
            },
            256,
            19,
        );
        let a = collect(&spec);
        assert_eq!(a, collect(&spec));
        assert!(a.iter().all(|&x| (1..=100).contains(&x)));
    }

    #[test]
    fn sawtooth_cycles() {
        let spec = StreamSpec::new(StreamKind::Sawtooth { period: 3 }, 7, 0);
        assert_eq!(collect(&spec), vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn file_round_trip_and_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.txt");
        writeln!(fs::File::create(&good).unwrap(), "3\n-1\n\n42").unwrap();
        let spec = StreamSpec::new(StreamKind::File { path: good }, 10, 0);
        assert_eq!(collect(&spec), vec![3, -1, 42]);

        let bad = dir.path().join("bad.txt");
        writeln!(fs::File::create(&bad).unwrap(), "3\nxyz\n42").unwrap();
        let spec = StreamSpec::new(StreamKind::File { path: bad }, 10, 0);
        match spec.iter() {
            Err(StreamError::Parse { line, content, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(content, "xyz");
            }
            other => panic!("expected parse error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn dist_tokens() {
        assert_eq!(parse_dist("sorted", 10).unwrap(), StreamKind::Sorted);
        assert_eq!(
            parse_dist("uniform:5:9", 10).unwrap(),
            StreamKind::Uniform { lo: 5, hi: 9 }
        );
        assert_eq!(
            parse_dist("zipf:1.5", 10).unwrap(),
            StreamKind::Zipf {
                exponent: 1.5,
                universe: 10
            }
        );
        assert_eq!(
            parse_dist("sawtooth:64", 10).unwrap(),
            StreamKind::Sawtooth { period: 64 }
        );
        assert!(matches!(
            parse_dist("file:/tmp/x.txt", 10).unwrap(),
            StreamKind::File { .. }
        ));
        assert!(parse_dist("nope", 10).is_err());
        assert!(parse_dist("file:", 10).is_err());
    }

    #[test]
    fn spec_round_trips_through_serde() {
        let spec = StreamSpec::new(
            StreamKind::Zipf {
                exponent: 1.1,
                universe: 50,
            },
            123,
            9,
        );
        let json = serde_json::to_string(&spec).unwrap();
        let back: StreamSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }
}
