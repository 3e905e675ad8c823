//! The mpNoC global router.
//!
//! The router connects PEs to each other, the ACU to the PEs, or an I/O
//! device to the PEs, one mode at a time. Its internal network is fixed when
//! the machine is built: a shared bus, a crossbar, or a Delta multistage
//! network of `log2(N)` stages of 2x2 switches (omega, baseline or butterfly
//! wiring) with destination-tag routing.
//!
//! Routing is done in synchronous passes. Each pass carries a conflict-free
//! subset of the pending messages, picked greedily with the lowest source
//! first; blocked messages wait for the next pass.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::config::MpNocKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    Pe(usize),
    Acu,
    Device,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Pe(i) => write!(f, "PE{i}"),
            Endpoint::Acu => f.write_str("ACU"),
            Endpoint::Device => f.write_str("DEV"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MpNocMode {
    PeToPe,
    AcuToPe,
    DeviceToPe,
}

impl fmt::Display for MpNocMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MpNocMode::PeToPe => "pe-pe",
            MpNocMode::AcuToPe => "acu-pe",
            MpNocMode::DeviceToPe => "device-pe",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchState {
    Straight,
    Crossed,
}

/// Cycle charges of one transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NocCostModel {
    /// Cycles per pass through a crossbar or Delta network.
    pub transit_per_pass: u64,
    /// Cycles per bus grant on the shared bus.
    pub bus_per_pass: u64,
    /// Cycles to configure the communication mode.
    pub mode_config: u64,
}

impl Default for NocCostModel {
    fn default() -> Self {
        NocCostModel {
            transit_per_pass: 4,
            bus_per_pass: 1,
            mode_config: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MpNocError {
    #[error("{kind} needs a power-of-two port count, got {ports}")]
    PortCountNotPowerOfTwo { kind: MpNocKind, ports: usize },
    #[error("router needs at least one port")]
    NoPorts,
    #[error("not a permutation of 0..{ports}")]
    NotAPermutation { ports: usize },
    #[error("{endpoint} is outside the {ports}-port router")]
    PortOutOfRange { endpoint: Endpoint, ports: usize },
    #[error("{src} -> {dst} is not allowed in {mode} mode")]
    ModeMismatch {
        mode: MpNocMode,
        src: Endpoint,
        dst: Endpoint,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MpNocNetwork {
    kind: MpNocKind,
    ports: usize,
    stages: usize,
    // wiring[k] maps a link index onto stage k's input (k < stages);
    // wiring[stages] maps the last stage's outputs onto the network outputs.
    wiring: Vec<Vec<usize>>,
}

/// Outcome of routing a message set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingResult {
    requests: Vec<(Endpoint, Endpoint)>,
    passes: Vec<Vec<usize>>,
    conflicts: usize,
}

impl RoutingResult {
    pub fn pass_count(&self) -> usize {
        self.passes.len()
    }

    /// Messages that lost arbitration in the first pass and had to wait.
    pub fn conflicts(&self) -> usize {
        self.conflicts
    }

    /// Request indices carried by each pass.
    pub fn pass_indices(&self) -> &[Vec<usize>] {
        &self.passes
    }

    pub fn pass_sets(&self) -> Vec<Vec<(Endpoint, Endpoint)>> {
        self.passes
            .iter()
            .map(|p| p.iter().map(|&i| self.requests[i]).collect())
            .collect()
    }

    /// PE-to-PE pass sets as plain port pairs.
    pub fn port_pass_sets(&self) -> Vec<Vec<(usize, usize)>> {
        self.pass_sets()
            .into_iter()
            .map(|p| {
                p.into_iter()
                    .filter_map(|pair| match pair {
                        (Endpoint::Pe(s), Endpoint::Pe(d)) => Some((s, d)),
                        _ => None,
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub src: Endpoint,
    pub dst: Endpoint,
    pub payload: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub src: Endpoint,
    pub dst: Endpoint,
    pub payload: u32,
    /// 0-based pass the message travelled in.
    pub pass: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferOutcome {
    /// In delivery order: by pass, then by source priority.
    pub deliveries: Vec<Delivery>,
    pub passes: usize,
    pub conflicts: usize,
    pub latency: u64,
}

impl TransferOutcome {
    pub fn per_destination(&self) -> BTreeMap<Endpoint, Vec<u32>> {
        let mut out: BTreeMap<Endpoint, Vec<u32>> = BTreeMap::new();
        for d in &self.deliveries {
            out.entry(d.dst).or_default().push(d.payload);
        }
        out
    }
}

fn identity(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Rotates the low `width` bits of `x` right by one.
fn rotate_right_low(x: usize, width: usize) -> usize {
    if width <= 1 {
        return x;
    }
    let mask = (1 << width) - 1;
    let low = x & mask;
    (x & !mask) | (low >> 1) | ((low & 1) << (width - 1))
}

fn swap_bits(x: usize, a: usize, b: usize) -> usize {
    if ((x >> a) & 1) != ((x >> b) & 1) {
        x ^ (1 << a) ^ (1 << b)
    } else {
        x
    }
}

fn delta_wiring(kind: MpNocKind, ports: usize, stages: usize) -> Vec<Vec<usize>> {
    let perm = |f: &dyn Fn(usize) -> usize| (0..ports).map(f).collect::<Vec<_>>();
    let mut wiring = Vec::with_capacity(stages + 1);
    match kind {
        MpNocKind::DeltaOmega => {
            // perfect shuffle (rotate left) in front of every stage
            let shuffle = |x: usize| {
                if stages == 0 {
                    x
                } else {
                    ((x << 1) | (x >> (stages - 1))) & (ports - 1)
                }
            };
            for _ in 0..stages {
                wiring.push(perm(&shuffle));
            }
            wiring.push(identity(ports));
        }
        MpNocKind::DeltaButterfly => {
            // after stage k, exchange bit 0 with bit stages-1-k
            wiring.push(identity(ports));
            for k in 0..stages {
                let hi = stages - 1 - k;
                wiring.push(perm(&|x| swap_bits(x, 0, hi)));
            }
        }
        MpNocKind::DeltaBaseline => {
            // after stage k, inverse shuffle inside blocks of 2^(stages-k)
            wiring.push(identity(ports));
            for k in 0..stages {
                let width = stages - k;
                wiring.push(perm(&|x| rotate_right_low(x, width)));
            }
        }
        MpNocKind::SharedBus | MpNocKind::Crossbar => unreachable!("not a Delta network"),
    }
    wiring
}

/// Builds the internal network of a `ports`-port router.
pub fn build_network(kind: MpNocKind, ports: usize) -> Result<MpNocNetwork, MpNocError> {
    if ports == 0 {
        return Err(MpNocError::NoPorts);
    }
    if !kind.is_delta() {
        return Ok(MpNocNetwork {
            kind,
            ports,
            stages: 0,
            wiring: Vec::new(),
        });
    }
    if !ports.is_power_of_two() {
        return Err(MpNocError::PortCountNotPowerOfTwo { kind, ports });
    }
    let stages = ports.trailing_zeros() as usize;
    let wiring = delta_wiring(kind, ports, stages);
    Ok(MpNocNetwork {
        kind,
        ports,
        stages,
        wiring,
    })
}

impl MpNocNetwork {
    pub fn kind(&self) -> MpNocKind {
        self.kind
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    /// Number of switch stages; zero for the bus and the crossbar.
    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn switches_per_stage(&self) -> usize {
        if self.kind.is_delta() {
            self.ports / 2
        } else {
            0
        }
    }

    /// Switch output link taken at each stage by a destination-tag routed
    /// message. Empty for non-Delta networks.
    pub fn path(&self, src: usize, dst: usize) -> Vec<usize> {
        let mut links = Vec::with_capacity(self.stages);
        let mut pos = src;
        for k in 0..self.stages {
            pos = self.wiring[k][pos];
            let bit = (dst >> (self.stages - 1 - k)) & 1;
            pos = (pos & !1) | bit;
            links.push(pos);
        }
        debug_assert!(self.stages == 0 || self.wiring[self.stages][pos] == dst);
        links
    }

    /// Output port reached from `src` when every switch on the way is set
    /// by destination tag `dst`.
    pub fn exit_port(&self, src: usize, dst: usize) -> usize {
        match self.path(src, dst).last() {
            Some(&last) => self.wiring[self.stages][last],
            None => dst,
        }
    }

    /// Switch settings for one pass, or `None` if two messages contend for
    /// a switch output.
    pub fn switch_states(&self, pairs: &[(usize, usize)]) -> Option<Vec<Vec<Option<SwitchState>>>> {
        let mut states = vec![vec![None; self.switches_per_stage()]; self.stages];
        let mut used = HashSet::new();
        for &(src, dst) in pairs {
            let mut pos = src;
            for (k, (wires, stage)) in self.wiring.iter().zip(states.iter_mut()).enumerate() {
                let input = wires[pos];
                let bit = (dst >> (self.stages - 1 - k)) & 1;
                let output = (input & !1) | bit;
                if !used.insert((k, output)) {
                    return None;
                }
                let state = if input & 1 == bit {
                    SwitchState::Straight
                } else {
                    SwitchState::Crossed
                };
                let slot = &mut stage[input >> 1];
                match slot {
                    Some(s) if *s != state => return None,
                    _ => *slot = Some(state),
                }
                pos = output;
            }
        }
        Some(states)
    }

    fn check_endpoint(&self, e: Endpoint) -> Result<(), MpNocError> {
        match e {
            Endpoint::Pe(i) if i >= self.ports => Err(MpNocError::PortOutOfRange {
                endpoint: e,
                ports: self.ports,
            }),
            _ => Ok(()),
        }
    }

    /// Routes an arbitrary message set in greedy passes.
    ///
    /// Per pass, a destination accepts one message. The bus carries one
    /// message per pass. A crossbar input may fan out to several outputs;
    /// a Delta input carries one message and no two messages may share a
    /// switch output.
    pub fn route(&self, requests: &[(Endpoint, Endpoint)]) -> Result<RoutingResult, MpNocError> {
        for &(s, d) in requests {
            self.check_endpoint(s)?;
            self.check_endpoint(d)?;
        }
        let mut pending: Vec<usize> = (0..requests.len()).collect();
        pending.sort_by_key(|&i| (requests[i], i));

        let mut passes = Vec::new();
        while !pending.is_empty() {
            let mut dsts = HashSet::new();
            let mut srcs = HashSet::new();
            let mut links = HashSet::new();
            let mut routed = Vec::new();
            let mut waiting = Vec::new();
            for i in pending {
                let (src, dst) = requests[i];
                let fits = match self.kind {
                    MpNocKind::SharedBus => routed.is_empty(),
                    MpNocKind::Crossbar => !dsts.contains(&dst),
                    _ => {
                        !dsts.contains(&dst)
                            && !srcs.contains(&src)
                            && match (src, dst) {
                                (Endpoint::Pe(s), Endpoint::Pe(d)) => self
                                    .path(s, d)
                                    .iter()
                                    .enumerate()
                                    .all(|(k, &l)| !links.contains(&(k, l))),
                                _ => true,
                            }
                    }
                };
                if !fits {
                    waiting.push(i);
                    continue;
                }
                dsts.insert(dst);
                srcs.insert(src);
                if let (Endpoint::Pe(s), Endpoint::Pe(d)) = (src, dst) {
                    links.extend(self.path(s, d).into_iter().enumerate());
                }
                routed.push(i);
            }
            passes.push(routed);
            pending = waiting;
        }
        let conflicts = requests.len() - passes.first().map_or(0, Vec::len);
        Ok(RoutingResult {
            requests: requests.to_vec(),
            passes,
            conflicts,
        })
    }

    /// Routes a full permutation `i -> perm[i]` of the PE ports.
    pub fn route_permutation(&self, perm: &[usize]) -> Result<RoutingResult, MpNocError> {
        let mut seen = vec![false; self.ports];
        if perm.len() != self.ports {
            return Err(MpNocError::NotAPermutation { ports: self.ports });
        }
        for &d in perm {
            if d >= self.ports || std::mem::replace(&mut seen[d], true) {
                return Err(MpNocError::NotAPermutation { ports: self.ports });
            }
        }
        let requests: Vec<_> = perm
            .iter()
            .enumerate()
            .map(|(s, &d)| (Endpoint::Pe(s), Endpoint::Pe(d)))
            .collect();
        self.route(&requests)
    }

    pub fn pass_cost(&self, costs: &NocCostModel) -> u64 {
        match self.kind {
            MpNocKind::SharedBus => costs.bus_per_pass,
            _ => costs.transit_per_pass,
        }
    }

    /// Delivers `messages` in `mode`; latency is one mode-configuration
    /// charge plus the per-pass cost for every pass.
    pub fn transfer(
        &self,
        mode: MpNocMode,
        messages: &[Message],
        costs: &NocCostModel,
    ) -> Result<TransferOutcome, MpNocError> {
        for m in messages {
            let allowed = matches!(
                (mode, m.src, m.dst),
                (MpNocMode::PeToPe, Endpoint::Pe(_), Endpoint::Pe(_))
                    | (MpNocMode::AcuToPe, Endpoint::Acu, Endpoint::Pe(_))
                    | (MpNocMode::AcuToPe, Endpoint::Pe(_), Endpoint::Acu)
                    | (MpNocMode::DeviceToPe, Endpoint::Device, Endpoint::Pe(_))
                    | (MpNocMode::DeviceToPe, Endpoint::Pe(_), Endpoint::Device)
            );
            if !allowed {
                return Err(MpNocError::ModeMismatch {
                    mode,
                    src: m.src,
                    dst: m.dst,
                });
            }
        }
        let requests: Vec<_> = messages.iter().map(|m| (m.src, m.dst)).collect();
        let routing = self.route(&requests)?;
        let mut deliveries = Vec::with_capacity(messages.len());
        for (pass, indices) in routing.pass_indices().iter().enumerate() {
            for &i in indices {
                let m = messages[i];
                deliveries.push(Delivery {
                    src: m.src,
                    dst: m.dst,
                    payload: m.payload,
                    pass,
                });
            }
        }
        let passes = routing.pass_count();
        Ok(TransferOutcome {
            deliveries,
            passes,
            conflicts: routing.conflicts(),
            latency: passes as u64 * self.pass_cost(costs) + costs.mode_config,
        })
    }
}
