//! Oracles shared by the integration tests and the acceptance suite. They
//! are written from the textbook definitions, not from the library code.
#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};

use mppsoc::config::{Methodology, Processor};
use mppsoc::rules::RuleId;
use mppsoc::{MpNocKind, MppSoCConfig, Neighborhood, TopologyGraph};

/// Every neighbourhood option, absent first.
pub fn neighborhood_options() -> Vec<Option<Neighborhood>> {
    std::iter::once(None)
        .chain(Neighborhood::ALL.iter().copied().map(Some))
        .collect()
}

pub fn mpnoc_options() -> Vec<Option<MpNocKind>> {
    std::iter::once(None)
        .chain(MpNocKind::ALL.iter().copied().map(Some))
        .collect()
}

pub fn config(
    rows: u32,
    cols: u32,
    neighborhood: Option<Neighborhood>,
    mpnoc: Option<MpNocKind>,
) -> MppSoCConfig {
    MppSoCConfig {
        processor: Processor::Minimips,
        methodology: Methodology::Reduction,
        rows,
        cols,
        acu_mem_bytes: 1024,
        pe_mem_bytes: 256,
        neighborhood,
        mpnoc,
        mem_init: None,
    }
}

/// The design rules, restated: which ones does this machine break?
pub fn rule_oracle(
    rows: u32,
    cols: u32,
    neighborhood: Option<Neighborhood>,
    mpnoc: Option<MpNocKind>,
) -> Vec<RuleId> {
    let n = rows * cols;
    let delta = matches!(
        mpnoc,
        Some(MpNocKind::DeltaOmega | MpNocKind::DeltaBaseline | MpNocKind::DeltaButterfly)
    );
    let one_d = matches!(
        neighborhood,
        Some(Neighborhood::Linear | Neighborhood::Ring)
    );
    let two_d = matches!(
        neighborhood,
        Some(Neighborhood::Mesh2D | Neighborhood::Torus2D | Neighborhood::Xnet)
    );
    let mut out = Vec::new();
    if delta && n & (n - 1) != 0 {
        out.push(RuleId::R1);
    }
    if rows == 1 && two_d {
        out.push(RuleId::R2);
    }
    if rows > 1 && one_d {
        out.push(RuleId::R3);
    }
    out
}

/// Hop distances from `src` by breadth-first search over the adjacency.
pub fn bfs(g: &TopologyGraph, src: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.pe_count()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for (_, v) in g.neighbors(g.pe(u)) {
            let v = v.linear_index(g.cols());
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Grid shapes a topology accepts, up to `max` x `max`.
pub fn admissible_shapes(kind: Neighborhood, max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for rows in 1..=max {
        for cols in 1..=max {
            let ok = match kind {
                Neighborhood::Linear => rows == 1,
                Neighborhood::Ring => rows == 1 && cols >= 3,
                Neighborhood::Mesh2D | Neighborhood::Xnet => rows > 1,
                Neighborhood::Torus2D => rows >= 3 && cols >= 3,
            };
            if ok {
                out.push((rows, cols));
            }
        }
    }
    out
}

pub fn edge_formula(kind: Neighborhood, rows: usize, cols: usize) -> usize {
    let n = rows * cols;
    let mesh = 2 * rows * cols - rows - cols;
    match kind {
        Neighborhood::Linear => n - 1,
        Neighborhood::Ring => n,
        Neighborhood::Mesh2D => mesh,
        Neighborhood::Torus2D => 2 * rows * cols,
        Neighborhood::Xnet => mesh + 2 * (rows - 1) * (cols - 1),
    }
}

pub const DELTAS: [MpNocKind; 3] = [
    MpNocKind::DeltaOmega,
    MpNocKind::DeltaBaseline,
    MpNocKind::DeltaButterfly,
];

fn rotl(x: usize, n: usize) -> usize {
    if n == 0 {
        return x;
    }
    ((x << 1) | (x >> (n - 1))) & ((1 << n) - 1)
}

fn rotr_low(x: usize, w: usize) -> usize {
    if w <= 1 {
        return x;
    }
    let m = (1 << w) - 1;
    let low = x & m;
    (x & !m) | (low >> 1) | ((low & 1) << (w - 1))
}

fn swap01(x: usize, b: usize) -> usize {
    let lo = x & 1;
    let hi = (x >> b) & 1;
    (x & !1 & !(1 << b)) | hi | (lo << b)
}

/// Position of a message entering stage `k` (k = n means the output ports)
/// given its position on the link leaving stage k-1.
fn enter(kind: MpNocKind, n: usize, k: usize, pos: usize) -> usize {
    match kind {
        MpNocKind::DeltaOmega => {
            if k < n {
                rotl(pos, n)
            } else {
                pos
            }
        }
        MpNocKind::DeltaButterfly => {
            if k == 0 {
                pos
            } else {
                swap01(pos, n - k)
            }
        }
        MpNocKind::DeltaBaseline => {
            if k == 0 {
                pos
            } else {
                rotr_low(pos, n - k + 1)
            }
        }
        _ => unreachable!(),
    }
}

/// Walks one message through the stages, each switch set by the
/// destination bit of its stage. Returns the (stage, output link) pairs used
/// and the output port reached.
pub fn stage_walk(
    kind: MpNocKind,
    ports: usize,
    src: usize,
    dst: usize,
) -> (Vec<(usize, usize)>, usize) {
    let n = ports.trailing_zeros() as usize;
    let mut pos = src;
    let mut links = Vec::with_capacity(n);
    for k in 0..n {
        pos = enter(kind, n, k, pos);
        pos = (pos & !1) | ((dst >> (n - 1 - k)) & 1);
        links.push((k, pos));
    }
    (links, enter(kind, n, n, pos))
}

/// Permutation realised by one full assignment of switch states (bit
/// `k * ports/2 + j` crosses switch j of stage k).
pub fn realised_permutation(kind: MpNocKind, ports: usize, setting: u64) -> Vec<usize> {
    let n = ports.trailing_zeros() as usize;
    let half = ports / 2;
    (0..ports)
        .map(|src| {
            let mut pos = src;
            for k in 0..n {
                pos = enter(kind, n, k, pos);
                if (setting >> (k * half + pos / 2)) & 1 == 1 {
                    pos ^= 1;
                }
            }
            enter(kind, n, n, pos)
        })
        .collect()
}

/// True when the (src, dst) pairs can share one pass: distinct sources,
/// distinct destinations, no stage output link used twice, and every walk
/// ends at its destination.
pub fn pass_is_conflict_free(kind: MpNocKind, ports: usize, pairs: &[(usize, usize)]) -> bool {
    let mut srcs = HashSet::new();
    let mut dsts = HashSet::new();
    let mut links = HashSet::new();
    for &(s, d) in pairs {
        if !srcs.insert(s) || !dsts.insert(d) {
            return false;
        }
        let (used, exit) = stage_walk(kind, ports, s, d);
        if exit != d {
            return false;
        }
        for l in used {
            if !links.insert(l) {
                return false;
            }
        }
    }
    true
}

/// Visits every permutation of 0..n (Heap's algorithm).
pub fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Grid shape (rows, cols) for `n` PEs that `kind` accepts, squarest first.
pub fn shape_for(kind: Neighborhood, n: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for rows in 1..=n {
        if !n.is_multiple_of(rows) {
            continue;
        }
        let cols = n / rows;
        let ok = match kind {
            Neighborhood::Linear => rows == 1,
            Neighborhood::Ring => rows == 1 && cols >= 3,
            Neighborhood::Mesh2D | Neighborhood::Xnet => rows > 1,
            Neighborhood::Torus2D => rows >= 3 && cols >= 3,
        };
        if ok && best.is_none_or(|(r, c)| rows.abs_diff(cols) < r.abs_diff(c)) {
            best = Some((rows, cols));
        }
    }
    best
}
