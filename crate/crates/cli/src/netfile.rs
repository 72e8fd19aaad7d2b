//! Line-oriented network file format.
//!
//! ```text
//! # comments run to end of line
//! network NAME
//! materials M
//! resources R
//! activities N
//!
//! lambda:
//! <M rationals>
//!
//! R:
//! <M lines of N rationals>
//!
//! A:
//! <R lines of N rationals>
//!
//! gamma J:          # optional, J in 0..=N: covariance of flow J
//! <M lines of M floats>
//!
//! vector NAME:      # optional named inventory vectors
//! <M rationals>
//! ```
//!
//! Tokens are whitespace-separated; rationals use the exact `p/q` syntax.
//! Parsing a rendered file reproduces the parsed value bit for bit.

use std::collections::BTreeMap;
use std::fmt;

use workbench_core::ratmath::{RMatrix, RVector, Rational};
use workbench_core::workload::{NetworkData, NetworkError};

#[derive(Debug, Clone, PartialEq)]
pub enum FileError {
    Parse {
        line: usize,
        token: String,
        expected: String,
    },
    Dimension {
        line: usize,
        detail: String,
    },
    NegativeEntryInA {
        row: usize,
        col: usize,
    },
    Invalid(String),
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileError::Parse {
                line,
                token,
                expected,
            } => write!(f, "line {line}: expected {expected}, found \"{token}\""),
            FileError::Dimension { line, detail } => write!(f, "line {line}: {detail}"),
            FileError::NegativeEntryInA { row, col } => write!(
                f,
                "capacity entry at row {}, column {} is negative",
                row + 1,
                col + 1
            ),
            FileError::Invalid(detail) => write!(f, "{detail}"),
        }
    }
}

impl std::error::Error for FileError {}

/// A parsed network file: the network itself, any covariance blocks
/// (indexed by flow: 0 is the exogenous inflow, j is activity j), and any
/// named inventory vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub name: String,
    pub net: NetworkData,
    pub gammas: BTreeMap<usize, Vec<Vec<f64>>>,
    pub vectors: BTreeMap<String, RVector>,
}

impl NetworkFile {
    /// Covariances for every flow, zero where no block was given.
    pub fn covariances(&self) -> Vec<Vec<Vec<f64>>> {
        let m = self.net.materials();
        let zero = vec![vec![0.0; m]; m];
        (0..=self.net.activities())
            .map(|j| self.gammas.get(&j).cloned().unwrap_or_else(|| zero.clone()))
            .collect()
    }

    pub fn vector(&self, name: &str) -> Result<&RVector, FileError> {
        self.vectors
            .get(name)
            .ok_or_else(|| FileError::Invalid(format!("no vector named \"{name}\" in the file")))
    }
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::vec::IntoIter<(usize, Vec<&'a str>)>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let rows: Vec<(usize, Vec<&'a str>)> = text
            .lines()
            .enumerate()
            .filter_map(|(idx, raw)| {
                let content = raw.split('#').next().unwrap_or("");
                let tokens: Vec<&str> = content.split_whitespace().collect();
                if tokens.is_empty() {
                    None
                } else {
                    Some((idx + 1, tokens))
                }
            })
            .collect();
        Lines {
            inner: rows.into_iter().peekable(),
            last_line: 0,
        }
    }

    fn next_line(&mut self, expected: &str) -> Result<(usize, Vec<&'a str>), FileError> {
        match self.inner.next() {
            Some((line, tokens)) => {
                self.last_line = line;
                Ok((line, tokens))
            }
            None => Err(FileError::Parse {
                line: self.last_line + 1,
                token: "end of input".into(),
                expected: expected.into(),
            }),
        }
    }

    fn peek(&mut self) -> Option<&(usize, Vec<&'a str>)> {
        self.inner.peek()
    }
}

fn parse_count(lines: &mut Lines<'_>, keyword: &str) -> Result<usize, FileError> {
    let (line, tokens) = lines.next_line(&format!("\"{keyword} <count>\""))?;
    if tokens.len() != 2 || tokens[0] != keyword {
        return Err(FileError::Parse {
            line,
            token: tokens.join(" "),
            expected: format!("\"{keyword} <count>\""),
        });
    }
    tokens[1].parse::<usize>().map_err(|_| FileError::Parse {
        line,
        token: tokens[1].into(),
        expected: format!("a count after \"{keyword}\""),
    })
}

fn parse_rational_row(
    line: usize,
    tokens: &[&str],
    want: usize,
    what: &str,
) -> Result<Vec<Rational>, FileError> {
    if tokens.len() != want {
        return Err(FileError::Dimension {
            line,
            detail: format!("{what} needs {want} entries, found {}", tokens.len()),
        });
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<Rational>().map_err(|_| FileError::Parse {
                line,
                token: (*t).into(),
                expected: "a rational".into(),
            })
        })
        .collect()
}

fn parse_float_row(
    line: usize,
    tokens: &[&str],
    want: usize,
) -> Result<Vec<f64>, FileError> {
    if tokens.len() != want {
        return Err(FileError::Dimension {
            line,
            detail: format!("covariance row needs {want} entries, found {}", tokens.len()),
        });
    }
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>().map_err(|_| FileError::Parse {
                line,
                token: (*t).into(),
                expected: "a float".into(),
            })
        })
        .collect()
}

fn expect_header(lines: &mut Lines<'_>, header: &str) -> Result<(), FileError> {
    let (line, tokens) = lines.next_line(&format!("\"{header}\""))?;
    if tokens.len() != 1 || tokens[0] != header {
        return Err(FileError::Parse {
            line,
            token: tokens.join(" "),
            expected: format!("\"{header}\""),
        });
    }
    Ok(())
}

pub fn parse_network(text: &str) -> Result<NetworkFile, FileError> {
    let mut lines = Lines::new(text);

    let (line, tokens) = lines.next_line("\"network <name>\"")?;
    if tokens.len() != 2 || tokens[0] != "network" {
        return Err(FileError::Parse {
            line,
            token: tokens.join(" "),
            expected: "\"network <name>\"".into(),
        });
    }
    let name = tokens[1].to_string();

    let materials = parse_count(&mut lines, "materials")?;
    let resources = parse_count(&mut lines, "resources")?;
    let activities = parse_count(&mut lines, "activities")?;

    expect_header(&mut lines, "lambda:")?;
    let (line, tokens) = lines.next_line("arrival rates")?;
    let lambda = RVector::from_vec(parse_rational_row(
        line,
        &tokens,
        materials,
        "the arrival-rate line",
    )?);

    expect_header(&mut lines, "R:")?;
    let mut flow_rows = Vec::with_capacity(materials);
    for _ in 0..materials {
        let (line, tokens) = lines.next_line("a flow-matrix row")?;
        flow_rows.push(parse_rational_row(line, &tokens, activities, "a flow row")?);
    }

    expect_header(&mut lines, "A:")?;
    let mut capacity_rows = Vec::with_capacity(resources);
    for _ in 0..resources {
        let (line, tokens) = lines.next_line("a capacity-matrix row")?;
        capacity_rows.push(parse_rational_row(
            line,
            &tokens,
            activities,
            "a capacity row",
        )?);
    }

    let mut gammas = BTreeMap::new();
    let mut vectors: BTreeMap<String, RVector> = BTreeMap::new();
    while lines.peek().is_some() {
        let (line, tokens) = lines.next_line("a \"gamma J:\" or \"vector NAME:\" block")?;
        match tokens.as_slice() {
            ["gamma", rest] if rest.ends_with(':') => {
                let which = rest[..rest.len() - 1]
                    .parse::<usize>()
                    .map_err(|_| FileError::Parse {
                        line,
                        token: (*rest).into(),
                        expected: "a flow index".into(),
                    })?;
                if which > activities {
                    return Err(FileError::Dimension {
                        line,
                        detail: format!(
                            "flow index {which} exceeds the activity count {activities}"
                        ),
                    });
                }
                if gammas.contains_key(&which) {
                    return Err(FileError::Dimension {
                        line,
                        detail: format!("duplicate covariance block for flow {which}"),
                    });
                }
                let mut block = Vec::with_capacity(materials);
                for _ in 0..materials {
                    let (line, tokens) = lines.next_line("a covariance row")?;
                    block.push(parse_float_row(line, &tokens, materials)?);
                }
                gammas.insert(which, block);
            }
            ["vector", rest] if rest.ends_with(':') => {
                let vec_name = rest[..rest.len() - 1].to_string();
                if vec_name.is_empty() {
                    return Err(FileError::Parse {
                        line,
                        token: (*rest).into(),
                        expected: "a vector name".into(),
                    });
                }
                if vectors.contains_key(&vec_name) {
                    return Err(FileError::Dimension {
                        line,
                        detail: format!("duplicate vector \"{vec_name}\""),
                    });
                }
                let (line, tokens) = lines.next_line("vector entries")?;
                let entries =
                    parse_rational_row(line, &tokens, materials, "a vector line")?;
                vectors.insert(vec_name, RVector::from_vec(entries));
            }
            _ => {
                return Err(FileError::Parse {
                    line,
                    token: tokens.join(" "),
                    expected: "\"gamma J:\" or \"vector NAME:\"".into(),
                });
            }
        }
    }

    let net = NetworkData::new(
        RMatrix::from_rows(flow_rows),
        RMatrix::from_rows(capacity_rows),
        lambda,
    )
    .map_err(|e| match e {
        NetworkError::NegativeCapacityEntry { row, col } => {
            FileError::NegativeEntryInA { row, col }
        }
        other => FileError::Invalid(other.to_string()),
    })?;

    Ok(NetworkFile {
        name,
        net,
        gammas,
        vectors,
    })
}

/// Canonical rendering; parsing the output reproduces the file exactly.
pub fn render_network(file: &NetworkFile) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let net = &file.net;
    let _ = writeln!(out, "network {}", file.name);
    let _ = writeln!(out, "materials {}", net.materials());
    let _ = writeln!(out, "resources {}", net.servers());
    let _ = writeln!(out, "activities {}", net.activities());
    let _ = writeln!(out, "\nlambda:\n{}", net.arrivals().display_row());
    let _ = writeln!(out, "\nR:");
    for i in 0..net.materials() {
        let _ = writeln!(out, "{}", net.flow().row_vec(i).display_row());
    }
    let _ = writeln!(out, "\nA:");
    for k in 0..net.servers() {
        let _ = writeln!(out, "{}", net.capacity().row_vec(k).display_row());
    }
    for (which, block) in &file.gammas {
        let _ = writeln!(out, "\ngamma {which}:");
        for row in block {
            let parts: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{}", parts.join(" "));
        }
    }
    for (name, vector) in &file.vectors {
        let _ = writeln!(out, "\nvector {name}:\n{}", vector.display_row());
    }
    out
}
