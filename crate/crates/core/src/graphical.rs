//! Graphical construction of the killed process on a binary splitting tree.
//!
//! Vertices are words over `{0, 1}`; each lives an `Exp(lambda)` time and
//! then splits into `v0` and `v1`. Every branch carries two Poisson mark
//! processes: to-persistent marks at rate `a` and to-normal marks at rate
//! `b`. Walking down the tree, a normal (white) branch turns persistent
//! (red) at a to-persistent mark and back at a to-normal mark. A red branch
//! cannot reproduce, so at a red split the child ending in `1` is erased.
//! A killing cuts every white branch alive at that instant and erases what
//! lies beyond the cut.
//!
//! Thinning a Poisson kill set of intensity `delta'` with keep probability
//! `delta / delta'` gives a kill set of intensity `delta` contained in it,
//! so the process killed at `delta'` is a subtree of the one killed at
//! `delta`. [`coupled_run`] builds both on the same colored tree and
//! checks that containment node by node.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{exponential, killing_times, KillingSchedule, Rates};

/// Default node budget when materializing a tree.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Branch color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Color {
    /// White: a normal, reproducing cell.
    Normal,
    /// Red: a persistent cell.
    Persistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub parent: Option<usize>,
    /// Last letter of the word; `None` for the root.
    pub last_bit: Option<u8>,
    pub birth: f64,
    pub lifetime: f64,
    /// `[v0, v1]` when the split happens before the horizon.
    pub children: Option<[usize; 2]>,
}

impl TreeNode {
    pub fn split_time(&self) -> f64 {
        self.birth + self.lifetime
    }
}

/// Uncolored binary splitting tree up to a horizon. Node 0 is the root and
/// parents always precede their children.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingTree {
    pub nodes: Vec<TreeNode>,
    pub horizon: f64,
}

impl SplittingTree {
    /// The word of node `idx`, e.g. `"0110"`; the root is `""`.
    pub fn word(&self, idx: usize) -> String {
        let mut bits = Vec::new();
        let mut cur = idx;
        while let Some(bit) = self.nodes[cur].last_bit {
            bits.push(if bit == 0 { '0' } else { '1' });
            cur = self.nodes[cur].parent.expect("non-root has a parent");
        }
        bits.iter().rev().collect()
    }

    /// Branches alive at `t`.
    pub fn alive_count(&self, t: f64) -> usize {
        self.nodes.iter().filter(|n| n.birth <= t && t < n.split_time()).count()
    }
}

fn check_rate(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite(name));
    }
    if v <= 0.0 {
        return Err(Error::NonPositiveRate(name));
    }
    Ok(())
}

/// Generates every node born by `horizon`, breadth first.
pub fn build_splitting_tree<R: Rng + ?Sized>(
    lambda: f64,
    horizon: f64,
    rng: &mut R,
    budget: usize,
) -> Result<SplittingTree> {
    check_rate("lambda", lambda)?;
    check_rate("horizon", horizon)?;
    let mut nodes = vec![TreeNode {
        parent: None,
        last_bit: None,
        birth: 0.0,
        lifetime: exponential(rng, lambda),
        children: None,
    }];
    let mut next = 0;
    while next < nodes.len() {
        let split = nodes[next].split_time();
        if split <= horizon {
            if nodes.len() + 2 > budget {
                return Err(Error::NodeBudgetExceeded { budget });
            }
            let first = nodes.len();
            for bit in 0..2u8 {
                nodes.push(TreeNode {
                    parent: Some(next),
                    last_bit: Some(bit),
                    birth: split,
                    lifetime: exponential(rng, lambda),
                    children: None,
                });
            }
            nodes[next].children = Some([first, first + 1]);
        }
        next += 1;
    }
    Ok(SplittingTree { nodes, horizon })
}

/// Poisson marks on one branch.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NodeMarks {
    /// Rate-`a` marks turning a white branch red.
    pub to_persistent: Vec<f64>,
    /// Rate-`b` marks turning a red branch white.
    pub to_normal: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub color: Color,
}

/// A splitting tree with phenotype colors, red-split pruning and killing cuts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColoredTree {
    pub base: SplittingTree,
    pub marks: Vec<NodeMarks>,
    /// Constant-color pieces of each branch over `[birth, split)`.
    pub segments: Vec<Vec<Segment>>,
    /// `false` for nodes erased by pruning or by a killing upstream.
    pub present: Vec<bool>,
    /// Time at which a killing severed the branch.
    pub cut_at: Vec<Option<f64>>,
}

fn poisson_marks<R: Rng + ?Sized>(rng: &mut R, rate: f64, start: f64, end: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = start;
    loop {
        t += exponential(rng, rate);
        if t >= end {
            return out;
        }
        out.push(t);
    }
}

fn color_segments(marks: &NodeMarks, start: f64, end: f64, initial: Color) -> Vec<Segment> {
    let mut events: Vec<(f64, Color)> = marks
        .to_persistent
        .iter()
        .map(|&t| (t, Color::Persistent))
        .chain(marks.to_normal.iter().map(|&t| (t, Color::Normal)))
        .collect();
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut segments = Vec::new();
    let mut color = initial;
    let mut from = start;
    for (t, target) in events {
        if target != color {
            segments.push(Segment { start: from, end: t, color });
            color = target;
            from = t;
        }
    }
    segments.push(Segment { start: from, end, color });
    segments
}

fn color_at(segments: &[Segment], t: f64) -> Color {
    segments
        .iter()
        .find(|s| s.start <= t && t < s.end)
        .or(segments.last())
        .map(|s| s.color)
        .expect("every branch has a segment")
}

/// Draws the switch marks on every branch and erases the `1`-children of
/// red splits.
pub fn color_and_prune<R: Rng + ?Sized>(
    tree: SplittingTree,
    a: f64,
    b: f64,
    initial: Color,
    rng: &mut R,
) -> Result<ColoredTree> {
    check_rate("a", a)?;
    check_rate("b", b)?;
    let n = tree.nodes.len();
    let mut marks = vec![NodeMarks::default(); n];
    let mut segments: Vec<Vec<Segment>> = vec![Vec::new(); n];
    let mut present = vec![true; n];
    for idx in 0..n {
        let node = &tree.nodes[idx];
        let start_color = match node.parent {
            None => initial,
            Some(p) => {
                if !present[p] {
                    present[idx] = false;
                    continue;
                }
                let at_split = segments[p].last().expect("parent colored first").color;
                if at_split == Color::Persistent && node.last_bit == Some(1) {
                    present[idx] = false;
                    continue;
                }
                at_split
            }
        };
        let (start, end) = (node.birth, node.split_time());
        marks[idx] = NodeMarks {
            to_persistent: poisson_marks(rng, a, start, end),
            to_normal: poisson_marks(rng, b, start, end),
        };
        segments[idx] = color_segments(&marks[idx], start, end, start_color);
    }
    Ok(ColoredTree { base: tree, marks, segments, present, cut_at: vec![None; n] })
}

impl ColoredTree {
    /// End of the visible part of branch `idx`.
    fn branch_end(&self, idx: usize) -> f64 {
        let split = self.base.nodes[idx].split_time();
        self.cut_at[idx].map_or(split, |c| c.min(split))
    }

    pub fn color_at(&self, idx: usize, t: f64) -> Color {
        color_at(&self.segments[idx], t)
    }

    /// `(white, red)` branch counts at `t`.
    pub fn counts_at(&self, t: f64) -> (u64, u64) {
        let mut white = 0;
        let mut red = 0;
        for (idx, node) in self.base.nodes.iter().enumerate() {
            if !self.present[idx] || node.birth > t || t >= self.branch_end(idx) {
                continue;
            }
            match self.color_at(idx, t) {
                Color::Normal => white += 1,
                Color::Persistent => red += 1,
            }
        }
        (white, red)
    }

    /// `true` if some branch is present at `t`.
    pub fn alive_at(&self, t: f64) -> bool {
        let (w, r) = self.counts_at(t);
        w + r > 0
    }
}

/// Cuts every white branch alive at each kill time and erases everything
/// downstream of the cut.
pub fn apply_killings(mut ct: ColoredTree, kill_times: &[f64]) -> Result<ColoredTree> {
    if kill_times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("kill times must be strictly increasing".into()));
    }
    for idx in 0..ct.base.nodes.len() {
        if let Some(p) = ct.base.nodes[idx].parent {
            if !ct.present[p] || ct.cut_at[p].is_some() {
                ct.present[idx] = false;
            }
        }
        if !ct.present[idx] {
            continue;
        }
        let (start, end) = (ct.base.nodes[idx].birth, ct.branch_end(idx));
        let first = kill_times
            .iter()
            .copied()
            .filter(|&k| start <= k && k < end)
            .find(|&k| ct.color_at(idx, k) == Color::Normal);
        if first.is_some() {
            ct.cut_at[idx] = first;
        }
    }
    Ok(ct)
}

/// Keeps each point independently with probability `keep_prob`.
pub fn decimate<R: Rng + ?Sized>(points: &[f64], keep_prob: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::InvalidArgument(format!("keep_prob must be in (0, 1], got {keep_prob}")));
    }
    if points.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("points must be strictly increasing".into()));
    }
    Ok(points.iter().copied().filter(|_| rng.random::<f64>() < keep_prob).collect())
}

/// Result of one coupled replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoupledOutcome {
    /// Alive at the horizon under intensity `delta`.
    pub alive_low: bool,
    /// Alive at the horizon under intensity `delta_high`.
    pub alive_high: bool,
    /// Every branch of the high-intensity tree was found inside the
    /// low-intensity tree.
    pub containment_ok: bool,
    /// The low-intensity tree exceeded the node budget and was declared alive.
    pub low_exploded: bool,
    /// Same for the high-intensity tree.
    pub high_exploded: bool,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingConfig {
    /// Nodes expanded per process before it is declared alive.
    pub node_budget: usize,
    /// Color of the root branch.
    pub initial: Color,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self { node_budget: 10_000, initial: Color::Persistent }
    }
}

struct Pending {
    birth: f64,
    color: Color,
    in_low: bool,
    in_high: bool,
}

fn first_white_kill(kills: &[f64], segments: &[Segment], start: f64, end: f64) -> Option<f64> {
    let from = kills.partition_point(|&k| k < start);
    kills[from..]
        .iter()
        .copied()
        .take_while(|&k| k < end)
        .find(|&k| color_at(segments, k) == Color::Normal)
}

/// One replicate of the decimation coupling.
///
/// Kill times at intensity `delta_high` are drawn on `(0, horizon]` and
/// thinned to intensity `delta`. The colored tree is grown depth first,
/// expanding a branch while it survives under either kill set; the cuts of
/// each kill set are computed independently and every branch present under
/// `delta_high` is checked to be present, and no shorter, under `delta`.
///
/// If the low-intensity process exceeds the node budget it is declared
/// alive and growth continues for the high-intensity process alone, with
/// its own budget.
pub fn coupled_run<R: Rng + ?Sized>(
    r: Rates,
    delta: f64,
    delta_high: f64,
    horizon: f64,
    config: &CouplingConfig,
    rng: &mut R,
) -> Result<CoupledOutcome> {
    check_rate("lambda", r.lambda)?;
    check_rate("a", r.a)?;
    check_rate("b", r.b)?;
    check_rate("delta", delta)?;
    check_rate("horizon", horizon)?;
    if !(delta < delta_high) || !delta_high.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need 0 < delta < delta_high, got {delta} and {delta_high}"
        )));
    }
    let high_kills = killing_times(&KillingSchedule::poisson(delta_high)?, horizon, rng)?;
    let low_kills = decimate(&high_kills, delta / delta_high, rng)?;

    let mut out = CoupledOutcome {
        alive_low: false,
        alive_high: false,
        containment_ok: true,
        low_exploded: false,
        high_exploded: false,
        nodes: 0,
    };
    let mut stack = vec![Pending { birth: 0.0, color: config.initial, in_low: true, in_high: true }];
    let mut expanded_low = 0usize;
    let mut expanded_high = 0usize;

    while let Some(node) = stack.pop() {
        if !node.in_low && !node.in_high {
            continue;
        }
        if node.in_high && !node.in_low && !out.low_exploded {
            out.containment_ok = false;
        }
        out.nodes += 1;
        if node.in_low && !out.low_exploded {
            expanded_low += 1;
            if expanded_low > config.node_budget {
                out.low_exploded = true;
                out.alive_low = true;
                stack.retain(|p| p.in_high);
            }
        }
        if node.in_high {
            expanded_high += 1;
            if expanded_high > config.node_budget {
                out.high_exploded = true;
                out.alive_high = true;
                break;
            }
        }
        let track_low = node.in_low && !out.low_exploded;
        if !track_low && !node.in_high {
            continue;
        }

        let lifetime = exponential(rng, r.lambda);
        let split = node.birth + lifetime;
        let end = split.min(horizon);
        let marks = NodeMarks {
            to_persistent: poisson_marks(rng, r.a, node.birth, end),
            to_normal: poisson_marks(rng, r.b, node.birth, end),
        };
        let segments = color_segments(&marks, node.birth, end, node.color);
        let cut_low = if track_low { first_white_kill(&low_kills, &segments, node.birth, end) } else { None };
        let cut_high = if node.in_high { first_white_kill(&high_kills, &segments, node.birth, end) } else { None };
        if node.in_high && track_low {
            // The high-intensity branch must end no later than the low one.
            let low_end = cut_low.unwrap_or(f64::INFINITY);
            let high_end = cut_high.unwrap_or(f64::INFINITY);
            if high_end > low_end {
                out.containment_ok = false;
            }
        }
        let low_through = track_low && cut_low.is_none();
        let high_through = node.in_high && cut_high.is_none();

        if split > horizon {
            out.alive_low |= low_through;
            out.alive_high |= high_through;
            continue;
        }
        let color = segments.last().expect("branch has a segment").color;
        let children = if color == Color::Persistent { 1 } else { 2 };
        for _ in 0..children {
            stack.push(Pending { birth: split, color, in_low: low_through, in_high: high_through });
        }
    }
    if out.high_exploded && !out.low_exploded {
        // Exhausting the high budget means the low tree (a superset) is at
        // least as large.
        out.alive_low = true;
    }
    Ok(out)
}
