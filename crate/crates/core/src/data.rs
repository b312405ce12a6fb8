//! Instance generation and CSV ingestion.
//!
//! Synthetic instances draw every coordinate uniformly from `[-1, 1]` and
//! normalize each vector to unit length; seller `i` and buyer `i` both enter
//! at step `i + 1` and stay matchable for `dl` further steps. Postponed-mode
//! instances interleave the same vectors as one undetermined node per step,
//! so a bipartite instance and its postponed twin at the same seed carry
//! identical coordinates.

use crate::error::{Error, Result};
use crate::market::{Instance, Node, Role};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use std::fmt::Write as _;
use std::path::Path;

/// Layout of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenMode {
    /// `n` sellers and `n` buyers with fixed roles.
    Bipartite,
    /// `2n` undetermined nodes arriving one per step.
    Postponed,
}

fn draw_uniform(rng: &mut ChaCha8Rng) -> f64 {
    // 53 uniform bits into [0, 1), then into [-1, 1)
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn draw_unit_vector(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| draw_uniform(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
        // all-zero draw: normalization undefined, redraw
    }
}

/// Generate a synthetic instance. `dl_duration` is the number of steps a
/// node stays matchable after arrival.
pub fn gen_synthetic(
    n: usize,
    d: usize,
    dl_duration: u64,
    seed: u64,
    mode: GenMode,
) -> Result<Instance> {
    if n == 0 || d == 0 || dl_duration == 0 {
        return Err(Error::BadParameter(format!(
            "n, d and dl must be positive, got n={n}, d={d}, dl={dl_duration}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seller_vecs = Vec::with_capacity(n);
    let mut buyer_vecs = Vec::with_capacity(n);
    for _ in 0..n {
        seller_vecs.push(draw_unit_vector(&mut rng, d));
        buyer_vecs.push(draw_unit_vector(&mut rng, d));
    }
    match mode {
        GenMode::Bipartite => {
            let sellers = seller_vecs
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    let arrival = i as u64 + 1;
                    Node::new(i, v, arrival, arrival + dl_duration, Role::Seller)
                })
                .collect::<Result<Vec<_>>>()?;
            let buyers = buyer_vecs
                .into_iter()
                .enumerate()
                .map(|(i, v)| {
                    let arrival = i as u64 + 1;
                    Node::new(i, v, arrival, arrival + dl_duration, Role::Buyer)
                })
                .collect::<Result<Vec<_>>>()?;
            Instance::bipartite(d, sellers, buyers)
        }
        GenMode::Postponed => {
            let nodes = seller_vecs
                .into_iter()
                .zip(buyer_vecs)
                .enumerate()
                .flat_map(|(i, (vs, vb))| [(2 * i, vs), (2 * i + 1, vb)])
                .map(|(k, v)| {
                    let arrival = k as u64 + 1;
                    Node::new(k, v, arrival, arrival + dl_duration, Role::Undetermined)
                })
                .collect::<Result<Vec<_>>>()?;
            Instance::new(d, nodes)
        }
    }
}

/// Bare cloud of unit-norm points, for distortion checks that need raw
/// vectors rather than a market instance.
pub fn gen_unit_points(n: usize, d: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 || d == 0 {
        return Err(Error::BadParameter(format!(
            "n and d must be positive, got n={n}, d={d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| draw_unit_vector(&mut rng, d)).collect())
}

/// Small bipartite instance with scattered arrivals and deadlines, sized for
/// the brute-force oracle. Used by the verification suites.
pub fn gen_random_small(seed: u64, max_n: usize) -> Result<Instance> {
    if max_n == 0 || max_n > 10 {
        return Err(Error::BadParameter(format!(
            "max_n must lie in 1..=10, got {max_n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1 + (rng.next_u32() as usize) % max_n;
    let d = 1 + (rng.next_u32() as usize) % 8;
    let horizon = (3 * n) as u64;
    let mut draw_node = |id: usize, role: Role| -> Result<Node> {
        let v: Vec<f64> = (0..d).map(|_| draw_uniform(&mut rng)).collect();
        let arrival = rng.next_u64() % horizon;
        let deadline = arrival + rng.next_u64() % (n as u64 + 2);
        Node::new(id, v, arrival, deadline, role)
    };
    let sellers = (0..n)
        .map(|i| draw_node(i, Role::Seller))
        .collect::<Result<Vec<_>>>()?;
    let buyers = (0..n)
        .map(|i| draw_node(i, Role::Buyer))
        .collect::<Result<Vec<_>>>()?;
    Instance::bipartite(d, sellers, buyers)
}

/// How to interpret the columns of an instance CSV. Columns not designated
/// as role/arrival/deadline are coordinates, in file order.
#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    /// Skip one header line.
    pub header: bool,
    /// Column holding the role code: 0 = seller, 1 = buyer, 2 = undetermined.
    /// Without it, roles alternate seller/buyer by data-row parity.
    pub role_column: Option<usize>,
    /// Column holding the arrival step. Without it, arrival is the 1-based
    /// data-row index.
    pub arrival_column: Option<usize>,
    /// Column holding the absolute deadline step.
    pub deadline_column: Option<usize>,
    /// Deadline as a fixed duration from arrival. Exactly one of
    /// `deadline_column` and `dl_duration` must be set.
    pub dl_duration: Option<u64>,
}

/// Load an instance from a comma-separated file (UTF-8, LF or CRLF).
pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, opts)
}

fn parse_csv(text: &str, opts: &CsvOptions) -> Result<Instance> {
    match (opts.deadline_column, opts.dl_duration) {
        (Some(_), Some(_)) => {
            return Err(Error::BadParameter(
                "deadline column and dl duration are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(Error::BadParameter(
                "either a deadline column or a dl duration is required".into(),
            ))
        }
        _ => {}
    }

    let mut lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if opts.header && !lines.is_empty() {
        lines.remove(0);
    }
    if lines.is_empty() {
        return Err(Error::EmptyFile);
    }

    let ncols = lines[0].1.split(',').count();
    let mut designated = vec![false; ncols];
    for col in [opts.role_column, opts.arrival_column, opts.deadline_column]
        .into_iter()
        .flatten()
    {
        if col >= ncols {
            return Err(Error::BadParameter(format!(
                "designated column {col} out of range for {ncols} columns"
            )));
        }
        if designated[col] {
            return Err(Error::BadParameter(format!(
                "column {col} designated more than once"
            )));
        }
        designated[col] = true;
    }
    let coord_cols: Vec<usize> = (0..ncols).filter(|&c| !designated[c]).collect();
    if coord_cols.is_empty() {
        return Err(Error::BadParameter("no coordinate columns left".into()));
    }

    let parse_f64 = |field: &str, line: usize, column: usize| -> Result<f64> {
        field
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse { line, column })
    };
    let parse_u64 = |field: &str, line: usize, column: usize| -> Result<u64> {
        field
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::Parse { line, column })
    };

    let mut nodes = Vec::with_capacity(lines.len());
    let mut counts = [0usize; 3];
    for (row, (line_no, line)) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ncols {
            return Err(Error::RaggedRows {
                line: *line_no,
                expected: ncols,
                got: fields.len(),
            });
        }
        let role = match opts.role_column {
            Some(c) => match parse_u64(fields[c], *line_no, c + 1)? {
                0 => Role::Seller,
                1 => Role::Buyer,
                2 => Role::Undetermined,
                other => {
                    return Err(Error::BadParameter(format!(
                        "line {line_no}: unknown role code {other}"
                    )))
                }
            },
            None => {
                if row % 2 == 0 {
                    Role::Seller
                } else {
                    Role::Buyer
                }
            }
        };
        let arrival = match opts.arrival_column {
            Some(c) => parse_u64(fields[c], *line_no, c + 1)?,
            None => row as u64 + 1,
        };
        let deadline = match opts.deadline_column {
            Some(c) => parse_u64(fields[c], *line_no, c + 1)?,
            None => arrival + opts.dl_duration.unwrap(),
        };
        let vector = coord_cols
            .iter()
            .map(|&c| parse_f64(fields[c], *line_no, c + 1))
            .collect::<Result<Vec<f64>>>()?;
        let role_slot = match role {
            Role::Seller => 0,
            Role::Buyer => 1,
            Role::Undetermined => 2,
        };
        let id = counts[role_slot];
        counts[role_slot] += 1;
        nodes.push(Node::new(id, vector, arrival, deadline, role)?);
    }
    Instance::new(coord_cols.len(), nodes)
}

/// Fixed column order used by [`write_csv`].
pub const CSV_ARRIVAL_COLUMN: usize = 0;
pub const CSV_DEADLINE_COLUMN: usize = 1;
pub const CSV_ROLE_COLUMN: usize = 2;

/// Write an instance as CSV: header line, then one node per stream row with
/// arrival, deadline, role code and coordinates. Floats use the shortest
/// representation that parses back to the same value, so a write/load cycle
/// reproduces the instance exactly.
pub fn write_csv(instance: &Instance, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("arrival,deadline,role");
    for j in 0..instance.d() {
        write!(out, ",x{j}").unwrap();
    }
    out.push('\n');
    for node in instance.stream() {
        let role = match node.role {
            Role::Seller => 0,
            Role::Buyer => 1,
            Role::Undetermined => 2,
        };
        write!(out, "{},{},{}", node.arrival, node.deadline, role).unwrap();
        for x in &node.vector {
            write!(out, ",{x:?}").unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Options matching the layout produced by [`write_csv`].
pub fn written_csv_options() -> CsvOptions {
    CsvOptions {
        header: true,
        role_column: Some(CSV_ROLE_COLUMN),
        arrival_column: Some(CSV_ARRIVAL_COLUMN),
        deadline_column: Some(CSV_DEADLINE_COLUMN),
        dl_duration: None,
    }
}
