//! Upward-flow grid world with box-shaped reward and penalty regions.
//!
//! Each step moves one row up and optionally one column left or right;
//! leaving the domain enters an absorbing sink.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, LabelSet, LabelTable};
use crate::objective::Objective;
use crate::solvers::ValueTable;

/// Axis-aligned box: center and full extents, serialized as `[x_c, y_c, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Box2 {
    pub x_c: f64,
    pub y_c: f64,
    pub w: f64,
    pub h: f64,
}

impl Box2 {
    pub fn new(x_c: f64, y_c: f64, w: f64, h: f64) -> Result<Self> {
        if !(w > 0.0 && h > 0.0) || !x_c.is_finite() || !y_c.is_finite() || !w.is_finite() || !h.is_finite() {
            return Err(Error::InvalidGrid(format!("bad box [{x_c}, {y_c}, {w}, {h}]")));
        }
        Ok(Box2 { x_c, y_c, w, h })
    }
}

impl TryFrom<[f64; 4]> for Box2 {
    type Error = Error;
    fn try_from(v: [f64; 4]) -> Result<Self> {
        Box2::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Box2> for [f64; 4] {
    fn from(b: Box2) -> Self {
        [b.x_c, b.y_c, b.w, b.h]
    }
}

/// Signed distance from `(px, py)` to `b`; negative inside.
pub fn sdf_box(px: f64, py: f64, b: &Box2) -> f64 {
    let dx = (px - b.x_c).abs() - b.w / 2.0;
    let dy = (py - b.y_c).abs() - b.h / 2.0;
    let outside = dx.max(0.0).hypot(dy.max(0.0));
    outside + dx.max(dy).min(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Leaving the domain forfeits reward but is not a hazard.
    #[default]
    Neutral,
    /// Leaving the domain counts as a hazard violation.
    Hazard,
}

impl FromStr for BoundaryMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neutral" => Ok(BoundaryMode::Neutral),
            "hazard" => Ok(BoundaryMode::Hazard),
            _ => Err(Error::Parse(format!("unknown boundary mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridTask {
    Ra,
    Raa,
    R,
    Rr,
}

impl GridTask {
    pub fn objective(self) -> Objective {
        match self {
            GridTask::Ra => Objective::ReachAvoid,
            GridTask::Raa => Objective::ReachAlwaysAvoid,
            GridTask::R => Objective::Reach,
            GridTask::Rr => Objective::ReachReach,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GridTask::Ra => "ra",
            GridTask::Raa => "raa",
            GridTask::R => "r",
            GridTask::Rr => "rr",
        }
    }
}

impl FromStr for GridTask {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ra" => Ok(GridTask::Ra),
            "raa" => Ok(GridTask::Raa),
            "r" => Ok(GridTask::R),
            "rr" => Ok(GridTask::Rr),
            _ => Err(Error::Parse(format!("unknown grid task `{s}`"))),
        }
    }
}

pub const ACTION_LEFT: usize = 0;
pub const ACTION_STRAIGHT: usize = 1;
pub const ACTION_RIGHT: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub cells_x: usize,
    pub cells_y: usize,
    pub task: GridTask,
    pub reward_boxes: Vec<Box2>,
    pub penalty_boxes: Vec<Box2>,
    #[serde(default)]
    pub boundary_mode: BoundaryMode,
}

impl GridSpec {
    /// The standard 80 × 120 layout for `task`.
    pub fn standard(task: GridTask, boundary_mode: BoundaryMode) -> Self {
        let b = |x, y, w, h| Box2 { x_c: x, y_c: y, w, h };
        let (reward_boxes, penalty_boxes) = match task {
            GridTask::Ra | GridTask::Raa => (
                vec![b(0.0, 4.5, 2.0, 1.5)],
                vec![b(-0.75, 3.0, 1.0, 1.0), b(0.75, 3.0, 1.0, 1.0), b(0.0, 6.0, 2.5, 1.0)],
            ),
            GridTask::R | GridTask::Rr => (vec![b(-1.25, 0.0, 0.5, 2.0), b(1.25, 0.0, 0.5, 2.0)], Vec::new()),
        };
        GridSpec {
            x_range: [-2.0, 2.0],
            y_range: [-2.0, 10.0],
            cells_x: 80,
            cells_y: 120,
            task,
            reward_boxes,
            penalty_boxes,
            boundary_mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells_x == 0 || self.cells_y == 0 {
            return Err(Error::InvalidGrid("grid needs at least one cell per axis".into()));
        }
        for r in [self.x_range, self.y_range] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(Error::InvalidGrid(format!("bad range {r:?}")));
            }
        }
        for b in self.reward_boxes.iter().chain(&self.penalty_boxes) {
            Box2::new(b.x_c, b.y_c, b.w, b.h)?;
        }
        let (need_reward, need_penalty) = match self.task {
            GridTask::Ra | GridTask::Raa => (1, 1),
            GridTask::R => (1, 0),
            GridTask::Rr => (2, 0),
        };
        if self.reward_boxes.len() < need_reward || self.penalty_boxes.len() < need_penalty {
            return Err(Error::InvalidGrid(format!(
                "task {} needs {need_reward} reward and {need_penalty} penalty boxes",
                self.task.name()
            )));
        }
        if self.task == GridTask::Rr && self.reward_boxes.len() != 2 {
            return Err(Error::InvalidGrid("task rr needs exactly two reward boxes".into()));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.cells_x * self.cells_y
    }

    /// Index of the absorbing sink (after all cells).
    pub fn sink(&self) -> usize {
        self.num_cells()
    }

    pub fn dx(&self) -> f64 {
        (self.x_range[1] - self.x_range[0]) / self.cells_x as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_range[1] - self.y_range[0]) / self.cells_y as f64
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.cells_x + i
    }

    /// `(i, j)` of a cell state.
    pub fn cell_coords(&self, state: usize) -> (usize, usize) {
        (state % self.cells_x, state / self.cells_x)
    }

    /// World coordinates of a cell center.
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x_range[0] + (i as f64 + 0.5) * self.dx(),
            self.y_range[0] + (j as f64 + 0.5) * self.dy(),
        )
    }

    /// Cell containing a world point, if inside the domain.
    pub fn cell_containing(&self, x: f64, y: f64) -> Option<usize> {
        let fi = ((x - self.x_range[0]) / self.dx()).floor();
        let fj = ((y - self.y_range[0]) / self.dy()).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.cells_x as f64 || fj >= self.cells_y as f64 {
            return None;
        }
        Some(self.cell_index(fi as usize, fj as usize))
    }

    /// Label tables over cells plus sink, keyed `l`/`g` or `l1`/`l2`.
    pub fn build_labels(&self) -> Result<LabelSet> {
        self.validate()?;
        let centers: Vec<(f64, f64)> = (0..self.num_cells())
            .map(|s| {
                let (i, j) = self.cell_coords(s);
                self.cell_center(i, j)
            })
            .collect();
        let reward = |boxes: &[Box2]| -> Vec<f64> {
            centers
                .iter()
                .map(|&(x, y)| {
                    boxes
                        .iter()
                        .map(|b| -sdf_box(x, y, b))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        };
        let with_sink = |mut v: Vec<f64>, sink: f64| -> Result<LabelTable> {
            v.push(sink);
            LabelTable::new(v)
        };
        let lowest = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let highest = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut set = LabelSet::new();
        match self.task {
            GridTask::Ra | GridTask::Raa | GridTask::R => {
                let l = reward(&self.reward_boxes);
                let l_sink = lowest(&l) - 1.0;
                if self.task != GridTask::R {
                    let g: Vec<f64> = centers
                        .iter()
                        .map(|&(x, y)| {
                            self.penalty_boxes
                                .iter()
                                .map(|b| sdf_box(x, y, b))
                                .fold(f64::INFINITY, f64::min)
                        })
                        .collect();
                    let g_sink = match self.boundary_mode {
                        BoundaryMode::Neutral => highest(&g),
                        BoundaryMode::Hazard => lowest(&g) - 1.0,
                    };
                    set.insert("g".into(), with_sink(g, g_sink)?);
                }
                set.insert("l".into(), with_sink(l, l_sink)?);
            }
            GridTask::Rr => {
                for (name, b) in ["l1", "l2"].iter().zip(&self.reward_boxes) {
                    let l = reward(std::slice::from_ref(b));
                    let sink = lowest(&l) - 1.0;
                    set.insert((*name).into(), with_sink(l, sink)?);
                }
            }
        }
        Ok(set)
    }

    /// Transition table: three actions per cell, sink absorbing.
    pub fn build_mdp(&self) -> Result<FiniteMdp> {
        self.validate()?;
        let (nx, ny) = (self.cells_x, self.cells_y);
        let sink = self.sink();
        let mut next = Vec::with_capacity((self.num_cells() + 1) * 3);
        for s in 0..self.num_cells() {
            let (i, j) = self.cell_coords(s);
            for di in [-1i64, 0, 1] {
                let ni = i as i64 + di;
                let nj = j + 1;
                if ni < 0 || ni >= nx as i64 || nj >= ny {
                    next.push(sink);
                } else {
                    next.push(self.cell_index(ni as usize, nj));
                }
            }
        }
        next.extend([sink; 3]);
        FiniteMdp::from_flat(self.num_cells() + 1, 3, next)
    }

    pub fn build(&self) -> Result<(FiniteMdp, LabelSet)> {
        Ok((self.build_mdp()?, self.build_labels()?))
    }

    /// CSV `x,y,value` over cells (sink excluded), rows `j` outer, `i` inner.
    pub fn export_value_grid(&self, values: &ValueTable) -> Result<String> {
        if values.len() != self.num_cells() + 1 && values.len() != self.num_cells() {
            return Err(Error::ValueSize {
                expected: self.num_cells() + 1,
                actual: values.len(),
            });
        }
        let mut out = String::with_capacity(self.num_cells() * 72);
        out.push_str("x,y,value\n");
        for j in 0..self.cells_y {
            for i in 0..self.cells_x {
                let (x, y) = self.cell_center(i, j);
                let v = values.get(self.cell_index(i, j));
                writeln!(out, "{x:.16e},{y:.16e},{v:.16e}").expect("string write");
            }
        }
        Ok(out)
    }

    pub fn write_value_grid(&self, values: &ValueTable, path: &Path) -> Result<()> {
        std::fs::write(path, self.export_value_grid(values)?)?;
        Ok(())
    }

    /// Parse a value-grid CSV back into per-cell values (sink excluded).
    pub fn parse_value_grid(&self, text: &str) -> Result<Vec<f64>> {
        let mut lines = text.lines();
        if lines.next() != Some("x,y,value") {
            return Err(Error::Parse("missing `x,y,value` header".into()));
        }
        let mut values = Vec::with_capacity(self.num_cells());
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("row {row}: expected 3 fields")));
            }
            let v: f64 = fields[2].parse().map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
            values.push(v);
        }
        if values.len() != self.num_cells() {
            return Err(Error::Parse(format!(
                "expected {} rows, got {}",
                self.num_cells(),
                values.len()
            )));
        }
        Ok(values)
    }
}
