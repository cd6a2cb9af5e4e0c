use std::fmt;

use serde::{Deserialize, Serialize};

use super::OfdmNumerology;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeId {
    Node1,
    Node2,
    Node3,
}

impl NodeId {
    pub const ALL: [NodeId; 3] = [NodeId::Node1, NodeId::Node2, NodeId::Node3];

    /// Zero-based position, handy for arrays.
    pub fn index(self) -> usize {
        match self {
            NodeId::Node1 => 0,
            NodeId::Node2 => 1,
            NodeId::Node3 => 2,
        }
    }

    /// One-based node number as used in reports.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(NodeId::Node1),
            2 => Ok(NodeId::Node2),
            3 => Ok(NodeId::Node3),
            _ => Err(invalid(format!("unknown node {n}, expected 1..=3"))),
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PayloadKind {
    SensingZc,
    CommQpsk,
}

/// Subcarrier index sets (1-based, ascending) for one node's transmit signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandAllocation {
    pub node: NodeId,
    pub fft_size: usize,
    pub active: Vec<usize>,
    pub guard: Vec<usize>,
    pub pilots: Vec<usize>,
    pub data: Vec<usize>,
    pub payload_kind: PayloadKind,
}

impl SubbandAllocation {
    /// Active block `first..=last` with pilots every `pilot_spacing` bins,
    /// anchored at `first`.
    pub fn from_block(
        node: NodeId,
        fft_size: usize,
        first: usize,
        last: usize,
        pilot_spacing: usize,
        payload_kind: PayloadKind,
    ) -> Result<Self> {
        if first < 1 || last > fft_size || first > last {
            return Err(invalid(format!("active block {first}..={last} outside 1..={fft_size}")));
        }
        let width = last - first + 1;
        if pilot_spacing < 2 {
            return Err(invalid("pilot_spacing must be at least 2"));
        }
        if pilot_spacing > width {
            return Err(invalid(format!("pilot_spacing {pilot_spacing} exceeds subband width {width}")));
        }
        let active: Vec<usize> = (first..=last).collect();
        let guard: Vec<usize> = (1..first).chain(last + 1..=fft_size).collect();
        let (pilots, data) = active.iter().partition(|&&n| (n - first) % pilot_spacing == 0);
        Ok(Self {
            node,
            fft_size,
            active,
            guard,
            pilots,
            data,
            payload_kind,
        })
    }

    pub fn first(&self) -> usize {
        self.active[0]
    }

    pub fn last(&self) -> usize {
        *self.active.last().expect("allocation has active bins")
    }

    pub fn is_pilot(&self, n: usize) -> bool {
        self.pilots.binary_search(&n).is_ok()
    }

    pub fn contains(&self, n: usize) -> bool {
        n >= self.first() && n <= self.last() && self.active.binary_search(&n).is_ok()
    }

    /// Occupied bandwidth |active| * delta_f.
    pub fn bandwidth(&self, numerology: &OfdmNumerology) -> f64 {
        self.active.len() as f64 * numerology.subcarrier_spacing()
    }

    /// Position of each pilot within `active`.
    pub fn pilot_positions(&self) -> Vec<usize> {
        self.pilots.iter().map(|p| p - self.first()).collect()
    }

    /// Position of each data bin within `active`.
    pub fn data_positions(&self) -> Vec<usize> {
        self.data.iter().map(|d| d - self.first()).collect()
    }

    pub fn overlaps(&self, other: &SubbandAllocation) -> bool {
        self.first() <= other.last() && other.first() <= self.last()
    }
}

/// Edge guard, inter-subband gap and subband width for an SBFD split of
/// `fft_size` bins. For 2048 bins this gives 64 / 63 / 598.
fn sbfd_layout(fft_size: usize) -> Result<(usize, usize, usize)> {
    if fft_size < 64 {
        return Err(invalid("SBFD layout needs at least 64 subcarriers"));
    }
    let edge = fft_size / 32;
    let gap = edge - 1;
    let width = (fft_size - 2 * edge - 2 * gap) / 3;
    Ok((edge, gap, width))
}

/// SBFD allocation: node 1 and node 2 take the lower and middle sensing
/// subbands, node 3 the upper communication subband.
pub fn build_allocation(node: NodeId, numerology: &OfdmNumerology, pilot_spacing: usize) -> Result<SubbandAllocation> {
    let (edge, gap, width) = sbfd_layout(numerology.fft_size)?;
    let first = edge + 1 + node.index() * (width + gap);
    let kind = match node {
        NodeId::Node1 | NodeId::Node2 => PayloadKind::SensingZc,
        NodeId::Node3 => PayloadKind::CommQpsk,
    };
    SubbandAllocation::from_block(node, numerology.fft_size, first, first + width - 1, pilot_spacing, kind)
}

/// Allocation spanning the whole usable band, used by the multiband and
/// same-band benchmarks where every node transmits a sensing signal.
pub fn build_full_band_allocation(
    node: NodeId,
    numerology: &OfdmNumerology,
    pilot_spacing: usize,
) -> Result<SubbandAllocation> {
    let (edge, _, _) = sbfd_layout(numerology.fft_size)?;
    SubbandAllocation::from_block(
        node,
        numerology.fft_size,
        edge + 1,
        numerology.fft_size - edge,
        pilot_spacing,
        PayloadKind::SensingZc,
    )
}

impl std::str::FromStr for NodeId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches("node");
        let n: usize = digits.parse().map_err(|_| invalid(format!("bad node id '{s}'")))?;
        NodeId::from_number(n)
    }
}
