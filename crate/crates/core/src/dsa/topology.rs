use alloc::vec::Vec;

use rand::Rng as _;

use super::DsaError;
use crate::math;
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    InNetwork,
    OutNetwork,
    Jammer,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::InNetwork => "in-network",
            Role::OutNetwork => "out-network",
            Role::Jammer => "jammer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: usize,
    pub role: Role,
    pub x: f64,
    pub y: f64,
}

/// A transmitter and its receiver, both in-network node ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Link {
    pub tx: usize,
    pub rx: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopologyConfig {
    pub in_network: usize,
    pub out_network: usize,
    pub jammers: usize,
    /// Side of the square region in meters.
    pub side: f64,
    /// Transmission and interference range in meters.
    pub range: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            in_network: 100,
            out_network: 2,
            jammers: 2,
            side: 50.0,
            range: 10.0,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<(), DsaError> {
        if self.in_network < 2 {
            return Err(DsaError::BadConfig("need at least two in-network nodes"));
        }
        if !(self.side > 0.0) || !(self.range > 0.0) {
            return Err(DsaError::BadConfig("region side and range must be positive"));
        }
        Ok(())
    }
}

/// Node ids: in-network first, then out-network users, then jammers.
/// In-network node `i` transmits on link `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub range: f64,
    pub side: f64,
}

impl Topology {
    /// Builds a topology from explicit parts (fixtures, loaded files).
    pub fn from_parts(nodes: Vec<Node>, links: Vec<Link>, range: f64, side: f64) -> Result<Self, DsaError> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(DsaError::BadConfig("node ids must be 0..n in order"));
            }
        }
        for l in &links {
            let ok = |id: usize| nodes.get(id).is_some_and(|n| n.role == Role::InNetwork);
            if !ok(l.tx) || !ok(l.rx) || l.tx == l.rx {
                return Err(DsaError::BadConfig("links must join two distinct in-network nodes"));
            }
        }
        Ok(Self {
            nodes,
            links,
            range,
            side,
        })
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (&self.nodes[a], &self.nodes[b]);
        math::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y))
    }

    pub fn within_range(&self, a: usize, b: usize) -> bool {
        self.distance(a, b) <= self.range
    }

    pub fn ids_with_role(&self, role: Role) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(move |n| n.role == role).map(|n| n.id)
    }

    pub fn in_network(&self) -> Vec<usize> {
        self.ids_with_role(Role::InNetwork).collect()
    }

    pub fn out_network(&self) -> Vec<usize> {
        self.ids_with_role(Role::OutNetwork).collect()
    }

    pub fn jammers(&self) -> Vec<usize> {
        self.ids_with_role(Role::Jammer).collect()
    }
}

/// Uniform placement; every in-network node picks a receiver uniformly among
/// the in-network nodes within range. Nodes without any neighbor are moved
/// until all have one.
pub fn generate_topology(cfg: &TopologyConfig, seed: u64) -> Result<Topology, DsaError> {
    cfg.validate()?;
    let mut r = rng::stream(seed, &[tag::TOPOLOGY]);
    let place = |r: &mut rng::Rng| (r.random_range(0.0..=cfg.side), r.random_range(0.0..=cfg.side));
    let n_in = cfg.in_network;
    let mut pos: Vec<(f64, f64)> = (0..n_in).map(|_| place(&mut r)).collect();
    let close = |a: (f64, f64), b: (f64, f64)| {
        let d2 = (a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1);
        d2 <= cfg.range * cfg.range
    };
    let mut resamples = 0;
    loop {
        let lonely: Vec<usize> = (0..n_in)
            .filter(|&i| !(0..n_in).any(|j| j != i && close(pos[i], pos[j])))
            .collect();
        if lonely.is_empty() {
            break;
        }
        for i in lonely {
            resamples += 1;
            if resamples > 10_000 {
                return Err(DsaError::InfeasiblePlacement);
            }
            pos[i] = place(&mut r);
        }
    }
    let mut nodes: Vec<Node> = pos
        .iter()
        .enumerate()
        .map(|(id, &(x, y))| Node {
            id,
            role: Role::InNetwork,
            x,
            y,
        })
        .collect();
    for (count, role) in [(cfg.out_network, Role::OutNetwork), (cfg.jammers, Role::Jammer)] {
        for _ in 0..count {
            let (x, y) = place(&mut r);
            nodes.push(Node {
                id: nodes.len(),
                role,
                x,
                y,
            });
        }
    }
    let links = (0..n_in)
        .map(|i| {
            let nbrs: Vec<usize> = (0..n_in).filter(|&j| j != i && close(pos[i], pos[j])).collect();
            Link {
                tx: i,
                rx: nbrs[r.random_range(0..nbrs.len())],
            }
        })
        .collect();
    Ok(Topology {
        nodes,
        links,
        range: cfg.range,
        side: cfg.side,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_population() {
        let t = generate_topology(&TopologyConfig::default(), 1).unwrap();
        assert_eq!(t.in_network().len(), 100);
        assert_eq!(t.out_network().len(), 2);
        assert_eq!(t.jammers().len(), 2);
        assert_eq!(t.links.len(), 100);
        for n in &t.nodes {
            assert!((0.0..=50.0).contains(&n.x) && (0.0..=50.0).contains(&n.y));
        }
    }

    #[test]
    fn links_are_within_range() {
        for seed in 0..10 {
            let t = generate_topology(&TopologyConfig::default(), seed).unwrap();
            for l in &t.links {
                assert!(t.distance(l.tx, l.rx) <= 10.0);
                assert_ne!(l.tx, l.rx);
            }
        }
    }

    #[test]
    fn same_seed_same_topology() {
        let c = TopologyConfig::default();
        assert_eq!(generate_topology(&c, 5).unwrap(), generate_topology(&c, 5).unwrap());
        assert_ne!(generate_topology(&c, 5).unwrap(), generate_topology(&c, 6).unwrap());
    }

    #[test]
    fn sparse_region_is_infeasible() {
        let c = TopologyConfig {
            in_network: 2,
            side: 1e6,
            range: 1.0,
            ..TopologyConfig::default()
        };
        assert_eq!(generate_topology(&c, 1).unwrap_err(), DsaError::InfeasiblePlacement);
    }
}
