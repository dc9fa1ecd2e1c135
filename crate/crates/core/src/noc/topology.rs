//! 2-D torus geometry and dimension-order multicast routing.
//!
//! Nodes are numbered row-major: `node = y * width + x`. Each router has four
//! neighbor ports plus the local port. In a dimension of size 2 the two wrap
//! directions reach the same neighbor, so only the `+` link exists; in a
//! dimension of size 1 there are no links at all.

use super::packet::NodeSet;

pub const PORT_XP: usize = 0;
pub const PORT_XM: usize = 1;
pub const PORT_YP: usize = 2;
pub const PORT_YM: usize = 3;
pub const NEIGHBOR_PORTS: usize = 4;
/// Index of the local (injection/ejection) port.
pub const PORT_LOCAL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    X,
    Y,
}

pub fn port_dim(port: usize) -> Option<Dim> {
    match port {
        PORT_XP | PORT_XM => Some(Dim::X),
        PORT_YP | PORT_YM => Some(Dim::Y),
        _ => None,
    }
}

/// The input port on the receiving router for a packet leaving on `port`.
pub fn opposite(port: usize) -> usize {
    match port {
        PORT_XP => PORT_XM,
        PORT_XM => PORT_XP,
        PORT_YP => PORT_YM,
        PORT_YM => PORT_YP,
        p => p,
    }
}

/// Result of routing a destination mask at one router.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteSplit {
    pub local: bool,
    /// Per neighbor port, the destinations reached through it.
    pub ports: [Option<NodeSet>; NEIGHBOR_PORTS],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Torus {
    pub width: u32,
    pub height: u32,
}

impl Torus {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn nodes(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn coords(&self, node: usize) -> (u32, u32) {
        (node as u32 % self.width, node as u32 / self.width)
    }

    pub fn node(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    /// Neighbor reached through `port`, honoring the degenerate-dimension
    /// rules.
    pub fn neighbor(&self, node: usize, port: usize) -> Option<usize> {
        let (x, y) = self.coords(node);
        let (w, h) = (self.width, self.height);
        match port {
            PORT_XP if w > 1 => Some(self.node((x + 1) % w, y)),
            PORT_XM if w > 2 => Some(self.node((x + w - 1) % w, y)),
            PORT_YP if h > 1 => Some(self.node(x, (y + 1) % h)),
            PORT_YM if h > 2 => Some(self.node(x, (y + h - 1) % h)),
            _ => None,
        }
    }

    /// `(output port, neighbor)` pairs of `node`.
    pub fn out_links(&self, node: usize) -> Vec<(usize, usize)> {
        (0..NEIGHBOR_PORTS)
            .filter_map(|p| self.neighbor(node, p).map(|n| (p, n)))
            .collect()
    }

    /// `(input port, neighbor)` pairs: links arriving at `node`.
    pub fn in_links(&self, node: usize) -> Vec<(usize, usize)> {
        (0..NEIGHBOR_PORTS)
            .filter_map(|p| {
                // the neighbor that sends to us on its `opposite(p)` port
                let q = opposite(p);
                (0..self.nodes())
                    .find(|&u| self.neighbor(u, q) == Some(node))
                    .map(|u| (p, u))
            })
            .collect()
    }

    /// Distinct undirected links.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let mut links: Vec<(usize, usize)> = (0..self.nodes())
            .flat_map(|n| self.out_links(n).into_iter().map(move |(_, m)| (n.min(m), n.max(m))))
            .collect();
        links.sort_unstable();
        links.dedup();
        links
    }

    fn ring_distance(a: u32, b: u32, size: u32) -> u32 {
        let d = (b + size - a) % size;
        d.min(size - d)
    }

    /// Minimal hop count.
    pub fn distance(&self, a: usize, b: usize) -> u32 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        Self::ring_distance(ax, bx, self.width) + Self::ring_distance(ay, by, self.height)
    }

    /// Shortest direction along a ring; ties go to `+`.
    fn ring_port(from: u32, to: u32, size: u32, plus: usize, minus: usize) -> usize {
        let d = (to + size - from) % size;
        if 2 * d <= size {
            plus
        } else {
            minus
        }
    }

    /// Dimension-order split of `mask` at `node`: destinations in another
    /// column travel along X first; those in this column travel along Y.
    pub fn route(&self, node: usize, mask: &NodeSet) -> RouteSplit {
        let nodes = self.nodes();
        let (x, y) = self.coords(node);
        let mut split = RouteSplit { local: false, ports: Default::default() };
        for dest in mask.iter() {
            let (dx, dy) = self.coords(dest);
            let port = if dx != x {
                Self::ring_port(x, dx, self.width, PORT_XP, PORT_XM)
            } else if dy != y {
                Self::ring_port(y, dy, self.height, PORT_YP, PORT_YM)
            } else {
                split.local = true;
                continue;
            };
            split.ports[port].get_or_insert_with(|| NodeSet::new(nodes)).insert(dest);
        }
        split
    }
}
