//! Column-to-core mapping and scale-out zones.

use std::ops::Range;

use crate::error::{config, Result};
use crate::noc::NodeSet;

/// Assignment of columns to nodes and of nodes to zones.
///
/// Columns are split into balanced contiguous blocks in row-major node order.
/// Zones are equal rectangular sub-grids, numbered row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    width: u32,
    height: u32,
    ranges: Vec<Range<u32>>,
    zone_of: Vec<u32>,
    zone_nodes: Vec<Vec<usize>>,
    /// Zones along X and along Y.
    zone_grid: (u32, u32),
}

/// Chooses `zx * zy = zones` with `zx | width` and `zy | height`, preferring
/// the squarest sub-grids.
fn zone_grid(zones: u32, width: u32, height: u32) -> Option<(u32, u32)> {
    (1..=zones)
        .filter(|zx| zones.is_multiple_of(*zx))
        .map(|zx| (zx, zones / zx))
        .filter(|&(zx, zy)| width.is_multiple_of(zx) && height.is_multiple_of(zy))
        .min_by_key(|&(zx, zy)| ((width / zx).abs_diff(height / zy), zx))
}

impl Placement {
    pub fn new(num_columns: u32, width: u32, height: u32, zones: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return config("grid dimensions must be positive");
        }
        if zones == 0 {
            return config("zones must be positive");
        }
        let nodes = (width * height) as u64;
        let Some((zx, zy)) = zone_grid(zones, width, height) else {
            return config(format!("zones = {zones} does not split a {width}x{height} grid into equal blocks"));
        };
        let ranges = (0..nodes)
            .map(|n| {
                let start = n * num_columns as u64 / nodes;
                let end = (n + 1) * num_columns as u64 / nodes;
                start as u32..end as u32
            })
            .collect();
        let (sub_w, sub_h) = (width / zx, height / zy);
        let zone_of: Vec<u32> = (0..nodes as u32)
            .map(|n| {
                let (x, y) = (n % width, n / width);
                (y / sub_h) * zx + x / sub_w
            })
            .collect();
        let mut zone_nodes = vec![Vec::new(); zones as usize];
        for (n, &z) in zone_of.iter().enumerate() {
            zone_nodes[z as usize].push(n);
        }
        Ok(Self { width, height, ranges, zone_of, zone_nodes, zone_grid: (zx, zy) })
    }

    pub fn nodes(&self) -> usize {
        self.ranges.len()
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn zones(&self) -> usize {
        self.zone_nodes.len()
    }

    pub fn zone_grid(&self) -> (u32, u32) {
        self.zone_grid
    }

    pub fn columns(&self, node: usize) -> Range<u32> {
        self.ranges[node].clone()
    }

    pub fn zone_of(&self, node: usize) -> usize {
        self.zone_of[node] as usize
    }

    pub fn zone_nodes(&self, zone: usize) -> &[usize] {
        &self.zone_nodes[zone]
    }

    pub fn zone_mask(&self, zone: usize) -> NodeSet {
        NodeSet::from_nodes(self.nodes(), self.zone_nodes[zone].iter().copied())
    }

    /// Column ids of a zone, ascending.
    pub fn zone_columns(&self, zone: usize) -> Vec<u32> {
        self.zone_nodes[zone].iter().flat_map(|&n| self.ranges[n].clone()).collect()
    }

    pub fn node_of(&self, column: u32) -> usize {
        self.ranges.partition_point(|r| r.end <= column)
    }

    /// Node hosting the encoder and the classifier of a zone: its lowest id.
    pub fn interface_node(&self, zone: usize) -> usize {
        self.zone_nodes[zone][0]
    }
}
