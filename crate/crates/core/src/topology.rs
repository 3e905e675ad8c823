//! Neighbourhood network graphs.
//!
//! PEs are laid out row-major on a `rows x cols` grid. North is row − 1,
//! east is col + 1.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::config::Neighborhood;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    E,
    W,
    N,
    S,
    NE,
    NW,
    SE,
    SW,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::E,
        Direction::W,
        Direction::N,
        Direction::S,
        Direction::NE,
        Direction::NW,
        Direction::SE,
        Direction::SW,
    ];

    /// (row, col) displacement.
    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::E => (0, 1),
            Direction::W => (0, -1),
            Direction::N => (-1, 0),
            Direction::S => (1, 0),
            Direction::NE => (-1, 1),
            Direction::NW => (-1, -1),
            Direction::SE => (1, 1),
            Direction::SW => (1, -1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::E => Direction::W,
            Direction::W => Direction::E,
            Direction::N => Direction::S,
            Direction::S => Direction::N,
            Direction::NE => Direction::SW,
            Direction::NW => Direction::SE,
            Direction::SE => Direction::NW,
            Direction::SW => Direction::NE,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Direction::E => "E",
            Direction::W => "W",
            Direction::N => "N",
            Direction::S => "S",
            Direction::NE => "NE",
            Direction::NW => "NW",
            Direction::SE => "SE",
            Direction::SW => "SW",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Direction {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Direction::ALL
            .into_iter()
            .find(|d| d.label().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

/// Directions a topology provides ports for.
pub fn directions(kind: Neighborhood) -> &'static [Direction] {
    use Direction::*;
    match kind {
        Neighborhood::Linear | Neighborhood::Ring => &[E, W],
        Neighborhood::Mesh2D | Neighborhood::Torus2D => &[E, W, N, S],
        Neighborhood::Xnet => &Direction::ALL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeId {
    pub row: usize,
    pub col: usize,
}

impl PeId {
    pub fn new(row: usize, col: usize) -> Self {
        PeId { row, col }
    }

    pub fn from_index(index: usize, cols: usize) -> Self {
        PeId {
            row: index / cols,
            col: index % cols,
        }
    }

    pub fn linear_index(self, cols: usize) -> usize {
        self.row * cols + self.col
    }
}

impl fmt::Display for PeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("{kind} network cannot be built on a {rows}x{cols} PE grid")]
    DimensionMismatch {
        kind: Neighborhood,
        rows: usize,
        cols: usize,
    },
}

/// Explicit neighbour relation of one neighbourhood network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyGraph {
    kind: Neighborhood,
    rows: usize,
    cols: usize,
    // one slot per Direction, indexed by `Direction::slot`
    ports: Vec<[Option<usize>; 8]>,
}

/// Builds the `kind` network over a `rows x cols` grid.
///
/// Linear and ring need a single row, ring at least three PEs. Mesh, torus
/// and Xnet need more than one row; the torus needs at least three rows and
/// three columns so wrap links never duplicate direct ones.
pub fn build_topology(
    kind: Neighborhood,
    rows: usize,
    cols: usize,
) -> Result<TopologyGraph, TopologyError> {
    let ok = rows >= 1
        && cols >= 1
        && match kind {
            Neighborhood::Linear => rows == 1,
            Neighborhood::Ring => rows == 1 && cols >= 3,
            Neighborhood::Mesh2D | Neighborhood::Xnet => rows > 1,
            Neighborhood::Torus2D => rows >= 3 && cols >= 3,
        };
    if !ok {
        return Err(TopologyError::DimensionMismatch { kind, rows, cols });
    }
    let wraps = matches!(kind, Neighborhood::Ring | Neighborhood::Torus2D);

    let mut ports = vec![[None; 8]; rows * cols];
    for (index, slots) in ports.iter_mut().enumerate() {
        let (r, c) = ((index / cols) as i64, (index % cols) as i64);
        for &dir in directions(kind) {
            let (dr, dc) = dir.delta();
            let (mut nr, mut nc) = (r + dr, c + dc);
            if wraps {
                nr = nr.rem_euclid(rows as i64);
                nc = nc.rem_euclid(cols as i64);
            } else if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                continue;
            }
            slots[dir.slot()] = Some(nr as usize * cols + nc as usize);
        }
    }
    Ok(TopologyGraph {
        kind,
        rows,
        cols,
        ports,
    })
}

impl TopologyGraph {
    pub fn kind(&self) -> Neighborhood {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pe_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn pe(&self, index: usize) -> PeId {
        PeId::from_index(index, self.cols)
    }

    pub fn has_direction(&self, dir: Direction) -> bool {
        directions(self.kind).contains(&dir)
    }

    /// Neighbour of PE `index` through port `dir`, as a linear index.
    pub fn neighbor_index(&self, index: usize, dir: Direction) -> Option<usize> {
        self.ports.get(index)?[dir.slot()]
    }

    pub fn neighbor(&self, pe: PeId, dir: Direction) -> Option<PeId> {
        self.neighbor_index(pe.linear_index(self.cols), dir)
            .map(|i| self.pe(i))
    }

    /// Neighbours of `pe` in fixed direction order.
    pub fn neighbors(&self, pe: PeId) -> Vec<(Direction, PeId)> {
        Direction::ALL
            .into_iter()
            .filter_map(|d| self.neighbor(pe, d).map(|n| (d, n)))
            .collect()
    }

    pub fn degree(&self, pe: PeId) -> usize {
        self.neighbors(pe).len()
    }

    /// Undirected edges `(u, v, label)` with `u < v`, label being the port of
    /// `u` that leads to `v`.
    pub fn edges(&self) -> Vec<(usize, usize, Direction)> {
        let mut out = Vec::new();
        for (u, slots) in self.ports.iter().enumerate() {
            for dir in Direction::ALL {
                if let Some(v) = slots[dir.slot()] {
                    if u < v {
                        out.push((u, v, dir));
                    }
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Edge list, one `u v label` line per undirected edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (u, v, d) in self.edges() {
            let _ = writeln!(s, "{u} {v} {d}");
        }
        s
    }

    /// Hop count of a shortest path between two PEs.
    pub fn route_distance(&self, src: PeId, dst: PeId) -> usize {
        let (dr, dc) = self.axis_distances(src, dst);
        match self.kind {
            Neighborhood::Linear
            | Neighborhood::Ring
            | Neighborhood::Mesh2D
            | Neighborhood::Torus2D => dr + dc,
            Neighborhood::Xnet => dr.max(dc),
        }
    }

    /// Per-axis hop counts (rows, cols), taking wrap links into account.
    pub fn axis_distances(&self, src: PeId, dst: PeId) -> (usize, usize) {
        let dr = src.row.abs_diff(dst.row);
        let dc = src.col.abs_diff(dst.col);
        match self.kind {
            Neighborhood::Ring => (dr, dc.min(self.cols - dc)),
            Neighborhood::Torus2D => (dr.min(self.rows - dr), dc.min(self.cols - dc)),
            _ => (dr, dc),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ids(g: &TopologyGraph, pe: PeId) -> BTreeSet<PeId> {
        g.neighbors(pe).into_iter().map(|(_, n)| n).collect()
    }

    #[test]
    fn mesh_corner() {
        let g = build_topology(Neighborhood::Mesh2D, 4, 4).unwrap();
        let n = g.neighbors(PeId::new(0, 0));
        assert_eq!(
            n,
            vec![
                (Direction::E, PeId::new(0, 1)),
                (Direction::S, PeId::new(1, 0))
            ]
        );
    }

    #[test]
    fn torus_corner_wraps() {
        let g = build_topology(Neighborhood::Torus2D, 4, 4).unwrap();
        let expect: BTreeSet<_> = [
            PeId::new(0, 1),
            PeId::new(1, 0),
            PeId::new(0, 3),
            PeId::new(3, 0),
        ]
        .into_iter()
        .collect();
        assert_eq!(ids(&g, PeId::new(0, 0)), expect);
        assert_eq!(
            g.neighbor(PeId::new(0, 0), Direction::N),
            Some(PeId::new(3, 0))
        );
    }

    #[test]
    fn xnet_degrees() {
        let g = build_topology(Neighborhood::Xnet, 4, 4).unwrap();
        assert_eq!(g.degree(PeId::new(1, 1)), 8);
        assert_eq!(g.degree(PeId::new(0, 0)), 3);
    }

    #[test]
    fn ring_wraps_at_ends() {
        let g = build_topology(Neighborhood::Ring, 1, 4).unwrap();
        let expect: BTreeSet<_> = [PeId::new(0, 3), PeId::new(0, 1)].into_iter().collect();
        assert_eq!(ids(&g, PeId::new(0, 0)), expect);
    }

    #[test]
    fn distances() {
        let far = (PeId::new(0, 0), PeId::new(3, 3));
        let d = |k| {
            build_topology(k, 4, 4)
                .unwrap()
                .route_distance(far.0, far.1)
        };
        assert_eq!(d(Neighborhood::Mesh2D), 6);
        assert_eq!(d(Neighborhood::Torus2D), 2);
        assert_eq!(d(Neighborhood::Xnet), 3);
        let ring = build_topology(Neighborhood::Ring, 1, 8).unwrap();
        assert_eq!(ring.route_distance(PeId::new(0, 1), PeId::new(0, 7)), 2);
        let line = build_topology(Neighborhood::Linear, 1, 8).unwrap();
        assert_eq!(line.route_distance(PeId::new(0, 1), PeId::new(0, 7)), 6);
    }

    #[test]
    fn dimension_mismatches() {
        use Neighborhood::*;
        for (kind, r, c) in [
            (Linear, 2, 2),
            (Ring, 1, 2),
            (Ring, 2, 4),
            (Mesh2D, 1, 4),
            (Xnet, 1, 9),
            (Torus2D, 2, 4),
            (Torus2D, 4, 2),
        ] {
            assert_eq!(
                build_topology(kind, r, c),
                Err(TopologyError::DimensionMismatch {
                    kind,
                    rows: r,
                    cols: c
                }),
                "{kind} {r}x{c}"
            );
        }
        assert!(build_topology(Linear, 1, 1).unwrap().edges().is_empty());
    }

    #[test]
    fn edge_list_format() {
        let g = build_topology(Neighborhood::Linear, 1, 3).unwrap();
        assert_eq!(g.to_edge_list(), "0 1 E\n1 2 E\n");
    }

    #[test]
    fn direction_parsing() {
        assert_eq!("ne".parse::<Direction>(), Ok(Direction::NE));
        assert_eq!("SW".parse::<Direction>(), Ok(Direction::SW));
        assert!("up".parse::<Direction>().is_err());
        for d in Direction::ALL {
            assert_eq!(d.opposite().opposite(), d);
            let (a, b) = d.delta();
            assert_eq!(d.opposite().delta(), (-a, -b));
        }
    }
}
