use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

/// One directed, timestamped interaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalEdge {
    pub src: u32,
    pub dst: u32,
    pub weight: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
}

/// Raw edge stream after id compaction, sorted by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalEdgeList {
    edges: Vec<TemporalEdge>,
    node_count: usize,
}

impl TemporalEdgeList {
    /// Builds a list from already-dense ids. Edges are stably sorted by timestamp.
    pub fn new(mut edges: Vec<TemporalEdge>, node_count: usize) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, e) in edges.iter().enumerate() {
            if !e.timestamp.is_finite() || e.timestamp < 0.0 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("timestamp {} must be finite and non-negative", e.timestamp),
                });
            }
            if !e.weight.is_finite() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("weight {} is not finite", e.weight),
                });
            }
            for id in [e.src, e.dst] {
                if id as usize >= node_count {
                    return Err(Error::Bounds {
                        what: "node id",
                        index: id as usize,
                        len: node_count,
                    });
                }
            }
        }
        edges.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Ok(Self { edges, node_count })
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn time_range(&self) -> (f64, f64) {
        (
            self.edges.first().map_or(0.0, |e| e.timestamp),
            self.edges.last().map_or(0.0, |e| e.timestamp),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Char(char),
    /// Any run of spaces or tabs.
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Src,
    Dst,
    Weight,
    Timestamp,
    Ignore,
}

/// Column layout of a delimiter-separated edge file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSchema {
    pub delimiter: Delimiter,
    pub columns: Vec<Column>,
    pub skip_header: bool,
    /// Lines starting with this character are ignored.
    pub comment: Option<char>,
}

impl Default for EdgeSchema {
    /// `src,dst,weight,timestamp`, the layout of the Bitcoin trust networks.
    fn default() -> Self {
        Self {
            delimiter: Delimiter::Char(','),
            columns: vec![Column::Src, Column::Dst, Column::Weight, Column::Timestamp],
            skip_header: false,
            comment: Some('%'),
        }
    }
}

impl EdgeSchema {
    /// `SRC DST UNIXTS`, whitespace separated (the college message network).
    pub fn src_dst_time_whitespace() -> Self {
        Self {
            delimiter: Delimiter::Whitespace,
            columns: vec![Column::Src, Column::Dst, Column::Timestamp],
            skip_header: false,
            comment: Some('%'),
        }
    }

    /// Parses a column list like `src,dst,_,timestamp` with the given delimiter.
    pub fn from_columns(columns: &str, delimiter: Delimiter) -> Result<Self> {
        let columns = columns
            .split(',')
            .map(|c| match c.trim() {
                "src" | "source" => Ok(Column::Src),
                "dst" | "target" => Ok(Column::Dst),
                "weight" | "w" => Ok(Column::Weight),
                "timestamp" | "time" | "ts" => Ok(Column::Timestamp),
                "_" | "skip" => Ok(Column::Ignore),
                other => Err(Error::config(format!("unknown column `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let schema = Self {
            delimiter,
            columns,
            ..Self::default()
        };
        schema.validate()?;
        Ok(schema)
    }

    fn position(&self, col: Column) -> Option<usize> {
        self.columns.iter().position(|&c| c == col)
    }

    fn validate(&self) -> Result<()> {
        for required in [Column::Src, Column::Dst, Column::Timestamp] {
            if self.columns.iter().filter(|&&c| c == required).count() != 1 {
                return Err(Error::config(format!(
                    "schema must name exactly one {required:?} column"
                )));
            }
        }
        if self.columns.iter().filter(|&&c| c == Column::Weight).count() > 1 {
            return Err(Error::config("schema names more than one weight column"));
        }
        Ok(())
    }
}

impl fmt::Display for EdgeSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols: Vec<&str> = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Src => "src",
                Column::Dst => "dst",
                Column::Weight => "weight",
                Column::Timestamp => "timestamp",
                Column::Ignore => "_",
            })
            .collect();
        let delim = match self.delimiter {
            Delimiter::Char(c) => c.to_string(),
            Delimiter::Whitespace => "whitespace".to_string(),
        };
        write!(f, "{} delim={} header={}", cols.join(","), delim, self.skip_header)
    }
}

impl FromStr for Delimiter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "whitespace" | "ws" | "space" => Ok(Delimiter::Whitespace),
            "tab" | "\\t" => Ok(Delimiter::Char('\t')),
            s if s.chars().count() == 1 => Ok(Delimiter::Char(s.chars().next().unwrap())),
            other => Err(Error::config(format!("bad delimiter `{other}`"))),
        }
    }
}

/// Reads and parses an edge file. See [`parse_edge_list`].
pub fn load_edge_list(path: impl AsRef<Path>, schema: &EdgeSchema) -> Result<TemporalEdgeList> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, schema)
}

/// Parses delimiter-separated edges.
///
/// Raw node labels are compacted to `0..node_count` in order of first appearance
/// after sorting by timestamp, so a prefix of the stream always maps to the same
/// ids. A missing weight column means every weight is `1.0`.
pub fn parse_edge_list(text: &str, schema: &EdgeSchema) -> Result<TemporalEdgeList> {
    schema.validate()?;
    let src_col = schema.position(Column::Src).unwrap();
    let dst_col = schema.position(Column::Dst).unwrap();
    let ts_col = schema.position(Column::Timestamp).unwrap();
    let weight_col = schema.position(Column::Weight);

    let mut raw: Vec<(&str, &str, f64, f64)> = Vec::new();
    let mut header_pending = schema.skip_header;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || schema.comment.is_some_and(|c| line.starts_with(c)) {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let fields: Vec<&str> = match schema.delimiter {
            Delimiter::Whitespace => line.split_whitespace().collect(),
            Delimiter::Char(c) => line.split(c).map(str::trim).collect(),
        };
        if fields.len() < schema.columns.len() {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "expected {} fields, found {}",
                    schema.columns.len(),
                    fields.len()
                ),
            });
        }
        let number = |col: usize, what: &str| -> Result<f64> {
            fields[col].parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("{what} `{}` is not a number", fields[col]),
            })
        };
        let ts = number(ts_col, "timestamp")?;
        if !ts.is_finite() || ts < 0.0 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("timestamp {ts} must be finite and non-negative"),
            });
        }
        let weight = match weight_col {
            Some(c) => number(c, "weight")?,
            None => 1.0,
        };
        if !weight.is_finite() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("weight {weight} is not finite"),
            });
        }
        if fields[src_col].is_empty() || fields[dst_col].is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty node id".into(),
            });
        }
        raw.push((fields[src_col], fields[dst_col], weight, ts));
    }
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    raw.sort_by(|a, b| a.3.total_cmp(&b.3));

    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut intern = |label| {
        let next = ids.len() as u32;
        *ids.entry(label).or_insert(next)
    };
    let edges: Vec<TemporalEdge> = raw
        .iter()
        .map(|&(s, d, weight, timestamp)| TemporalEdge {
            src: intern(s),
            dst: intern(d),
            weight,
            timestamp,
        })
        .collect();
    let node_count = ids.len();
    TemporalEdgeList::new(edges, node_count)
}
