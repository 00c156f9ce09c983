use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{TemporalEdge, TemporalEdgeList};
use crate::{Error, Matrix, Result};

/// Columns of `GraphSnapshot::edge_features`: weight, position inside the window.
pub const EDGE_FEATURE_DIM: usize = 2;
/// Columns of `GraphSnapshot::node_features`: `ln(1 + degree inside the window)`,
/// `ln(1 + degree so far)`.
pub const NODE_FEATURE_DIM: usize = 2;

const DAY: f64 = 86_400.0;
const WEEK: f64 = 7.0 * DAY;
/// 1970-01-05T00:00:00Z, the first Monday after the epoch.
const FIRST_MONDAY: f64 = 4.0 * DAY;

/// Snapshot width.
///
/// `Daily` windows start at UTC midnight and `Weekly` windows at Monday 00:00 UTC;
/// `Seconds` windows start at the first timestamp of the stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Daily,
    Weekly,
    Seconds(f64),
}

impl Frequency {
    pub fn period(&self) -> f64 {
        match *self {
            Frequency::Daily => DAY,
            Frequency::Weekly => WEEK,
            Frequency::Seconds(p) => p,
        }
    }

    fn origin(&self, first_timestamp: f64) -> f64 {
        match *self {
            Frequency::Daily => (first_timestamp / DAY).floor() * DAY,
            Frequency::Weekly => {
                FIRST_MONDAY + ((first_timestamp - FIRST_MONDAY) / WEEK).floor() * WEEK
            }
            Frequency::Seconds(_) => first_timestamp,
        }
    }

    fn validate(&self) -> Result<()> {
        let p = self.period();
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::config(format!("snapshot period must be positive, got {p}")));
        }
        Ok(())
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Daily => f.write_str("daily"),
            Frequency::Weekly => f.write_str("weekly"),
            Frequency::Seconds(p) => write!(f, "{p}s"),
        }
    }
}

impl FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "daily" | "day" => return Ok(Frequency::Daily),
            "weekly" | "week" => return Ok(Frequency::Weekly),
            _ => {}
        }
        let number = s.strip_suffix('s').unwrap_or(s);
        let p: f64 = number
            .parse()
            .map_err(|_| Error::config(format!("unknown frequency `{s}`")))?;
        let freq = Frequency::Seconds(p);
        freq.validate()?;
        Ok(freq)
    }
}

/// One static graph: every edge stamped inside `window`.
///
/// Node features cover the whole node universe, not only nodes active in the
/// window.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSnapshot {
    pub index: usize,
    /// Half-open `[start, end)` in seconds.
    pub window: (f64, f64),
    pub src: Vec<u32>,
    pub dst: Vec<u32>,
    pub timestamps: Vec<f64>,
    pub weights: Vec<f64>,
    /// `edges × EDGE_FEATURE_DIM`.
    pub edge_features: Matrix,
    /// `node_count × NODE_FEATURE_DIM`.
    pub node_features: Matrix,
}

impl GraphSnapshot {
    pub fn edge_count(&self) -> usize {
        self.src.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_features.nrows()
    }

    /// Number of f64/u32 slots this snapshot keeps alive.
    pub fn element_count(&self) -> usize {
        self.src.len() * 4 + self.edge_features.len() + self.node_features.len()
    }

    /// Per-node count of incident edges (in + out) inside this window.
    pub fn incident_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.node_count()];
        for (&s, &d) in self.src.iter().zip(&self.dst) {
            counts[s as usize] += 1;
            counts[d as usize] += 1;
        }
        counts
    }
}

/// A time-ordered sequence of snapshots over one node universe.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicGraph {
    pub snapshots: Vec<GraphSnapshot>,
    pub frequency: Frequency,
    pub node_count: usize,
}

impl DynamicGraph {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn total_edges(&self) -> usize {
        self.snapshots.iter().map(GraphSnapshot::edge_count).sum()
    }

    /// Keeps the first `n` snapshots; the node universe is unchanged.
    pub fn truncated(&self, n: usize) -> DynamicGraph {
        DynamicGraph {
            snapshots: self.snapshots[..n.min(self.len())].to_vec(),
            frequency: self.frequency,
            node_count: self.node_count,
        }
    }

    /// Rebuilds a graph from per-window edge lists. Windows must be contiguous and
    /// every edge timestamp must fall inside its window.
    pub fn from_windows(
        windows: Vec<((f64, f64), Vec<TemporalEdge>)>,
        frequency: Frequency,
        node_count: usize,
    ) -> Result<DynamicGraph> {
        let period = frequency.period();
        let mut degree = vec![0u64; node_count];
        let mut snapshots = Vec::with_capacity(windows.len());
        let mut prev_end: Option<f64> = None;
        for (index, ((start, end), edges)) in windows.into_iter().enumerate() {
            if !(end > start) || prev_end.is_some_and(|p| p != start) {
                return Err(Error::Format(format!("window {index} is not contiguous")));
            }
            prev_end = Some(end);
            let n_edges = edges.len();
            let mut src = Vec::with_capacity(n_edges);
            let mut dst = Vec::with_capacity(n_edges);
            let mut timestamps = Vec::with_capacity(n_edges);
            let mut weights = Vec::with_capacity(n_edges);
            let mut edge_features = Array2::zeros((n_edges, EDGE_FEATURE_DIM));
            let mut window_degree = vec![0u64; node_count];
            for (i, e) in edges.iter().enumerate() {
                if e.src as usize >= node_count || e.dst as usize >= node_count {
                    return Err(Error::Bounds {
                        what: "node id",
                        index: e.src.max(e.dst) as usize,
                        len: node_count,
                    });
                }
                if !(e.timestamp >= start && e.timestamp < end) {
                    return Err(Error::Format(format!(
                        "edge timestamp {} outside window {index}",
                        e.timestamp
                    )));
                }
                src.push(e.src);
                dst.push(e.dst);
                timestamps.push(e.timestamp);
                weights.push(e.weight);
                edge_features[[i, 0]] = e.weight;
                edge_features[[i, 1]] = ((e.timestamp - start) / period).clamp(0.0, 1.0 - f64::EPSILON);
                for v in [e.src as usize, e.dst as usize] {
                    degree[v] += 1;
                    window_degree[v] += 1;
                }
            }
            let mut node_features = Array2::zeros((node_count, NODE_FEATURE_DIM));
            for (v, &deg) in degree.iter().enumerate() {
                node_features[[v, 0]] = (window_degree[v] as f64).ln_1p();
                node_features[[v, 1]] = (deg as f64).ln_1p();
            }
            snapshots.push(GraphSnapshot {
                index,
                window: (start, end),
                src,
                dst,
                timestamps,
                weights,
                edge_features,
                node_features,
            });
        }
        Ok(DynamicGraph {
            snapshots,
            frequency,
            node_count,
        })
    }
}

/// Splits an edge stream into consecutive windows of one `frequency` period.
///
/// Edge `e` lands in window `floor((τ_e − origin) / period)`. Windows without edges
/// are kept so that indices stay aligned with wall-clock periods.
pub fn partition_snapshots(edges: &TemporalEdgeList, frequency: Frequency) -> Result<DynamicGraph> {
    frequency.validate()?;
    if edges.is_empty() {
        return Err(Error::EmptyInput);
    }
    let period = frequency.period();
    let (first, last) = edges.time_range();
    let origin = frequency.origin(first);
    let window_of = |ts: f64| ((ts - origin) / period).floor().max(0.0) as usize;
    let count = window_of(last) + 1;

    let mut buckets: Vec<Vec<TemporalEdge>> = vec![Vec::new(); count];
    for e in edges.edges() {
        let mut w = window_of(e.timestamp);
        // Guard the floor against rounding right at a boundary.
        let start = origin + w as f64 * period;
        if e.timestamp < start && w > 0 {
            w -= 1;
        } else if e.timestamp >= start + period && w + 1 < count {
            w += 1;
        }
        buckets[w].push(*e);
    }
    let windows = buckets
        .into_iter()
        .enumerate()
        .map(|(w, es)| {
            let start = origin + w as f64 * period;
            ((start, origin + (w + 1) as f64 * period), es)
        })
        .collect();
    DynamicGraph::from_windows(windows, frequency, edges.node_count())
}
