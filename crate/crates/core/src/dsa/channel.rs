use alloc::vec::Vec;

use super::{DsaError, Topology};
use crate::math;

/// Physical-layer parameters of the SINR success model.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrConfig {
    pub power: f64,
    pub alpha: f64,
    /// Distances below this are clamped so gains stay finite.
    pub min_distance: f64,
    pub noise: f64,
    pub beta_db: f64,
    /// Threshold for transmissions that adapted their modulation after
    /// classifying the channel as jammed.
    pub beta_jam_db: f64,
    /// Credit adapted transmissions with half a packet instead of one.
    pub rate_discount: bool,
}

impl Default for SinrConfig {
    fn default() -> Self {
        // Noise chosen so a 10 m link sees 10 dB. With free-space decay
        // (alpha = 2) links just outside range still drown each other, so
        // the default decays faster.
        Self {
            power: 1.0,
            alpha: 3.0,
            min_distance: 1.0,
            noise: 1e-4,
            beta_db: 3.0,
            beta_jam_db: 0.0,
            rate_discount: false,
        }
    }
}

impl SinrConfig {
    pub fn validate(&self) -> Result<(), DsaError> {
        if !(self.power > 0.0) {
            return Err(DsaError::BadConfig("transmit power must be positive"));
        }
        if !(self.alpha >= 2.0) {
            return Err(DsaError::BadConfig("path-loss exponent must be at least 2"));
        }
        if !(self.noise > 0.0) || !(self.min_distance > 0.0) {
            return Err(DsaError::BadConfig("noise and distance clamp must be positive"));
        }
        if !(self.beta_db >= self.beta_jam_db) {
            return Err(DsaError::BadConfig("jammer threshold must not exceed the normal one"));
        }
        Ok(())
    }

    /// Received power at distance `d`.
    pub fn received(&self, d: f64) -> f64 {
        self.power * math::powf(d.max(self.min_distance), -self.alpha)
    }

    /// Packet credit for one successful slot.
    pub fn credit(&self, adapted: bool) -> f64 {
        if adapted && self.rate_discount {
            0.5
        } else {
            1.0
        }
    }
}

/// An in-network link transmitting in the current slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub link: usize,
    /// Uses the robust modulation (threshold `beta_jam_db`).
    pub adapted: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotOutcome {
    /// `(link, success, sinr_db)` per transmission, in input order.
    pub links: Vec<(usize, bool, f64)>,
    /// `(out-network node, success)` per active out-network user.
    pub outnet: Vec<(usize, bool)>,
}

impl SlotOutcome {
    pub fn successes(&self) -> usize {
        self.links.iter().filter(|l| l.1).count()
    }
}

/// Evaluates one data slot. Every transmitter, active jammer and active
/// out-network user radiates at full power; a link succeeds when the SINR
/// at its receiver meets its threshold. An out-network user succeeds when
/// no in-network transmitter within range is on the air.
pub fn evaluate_slot(
    topo: &Topology,
    sinr: &SinrConfig,
    transmitting: &[Transmission],
    active_jammers: &[usize],
    active_outnet: &[usize],
) -> SlotOutcome {
    let txs: Vec<usize> = transmitting.iter().map(|t| topo.links[t.link].tx).collect();
    let links = transmitting
        .iter()
        .map(|t| {
            let l = topo.links[t.link];
            let signal = sinr.received(topo.distance(l.tx, l.rx));
            let interference: f64 = txs
                .iter()
                .copied()
                .filter(|&o| o != l.tx)
                .chain(active_jammers.iter().copied())
                .chain(active_outnet.iter().copied())
                .map(|o| sinr.received(topo.distance(o, l.rx)))
                .sum();
            let ratio_db = math::linear_to_db(signal / (sinr.noise + interference));
            let beta = if t.adapted { sinr.beta_jam_db } else { sinr.beta_db };
            (t.link, ratio_db >= beta, ratio_db)
        })
        .collect();
    let outnet = active_outnet
        .iter()
        .map(|&u| (u, !txs.iter().any(|&tx| topo.within_range(tx, u))))
        .collect();
    SlotOutcome { links, outnet }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsa::{Link, Node, Role};
    use alloc::vec;

    fn square_law() -> SinrConfig {
        SinrConfig {
            alpha: 2.0,
            noise: 1e-3,
            ..SinrConfig::default()
        }
    }

    fn fixture(points: &[(f64, f64, Role)], links: &[(usize, usize)]) -> Topology {
        let nodes = points
            .iter()
            .enumerate()
            .map(|(id, &(x, y, role))| Node { id, role, x, y })
            .collect();
        let links = links.iter().map(|&(tx, rx)| Link { tx, rx }).collect();
        Topology::from_parts(nodes, links, 10.0, 50.0).unwrap()
    }

    #[test]
    fn lone_link_at_five_meters() {
        // SINR = (1/25) / 1e-3 = 40, about 16 dB.
        let t = fixture(&[(0.0, 0.0, Role::InNetwork), (5.0, 0.0, Role::InNetwork)], &[(0, 1)]);
        let out = evaluate_slot(&t, &square_law(), &[Transmission { link: 0, adapted: false }], &[], &[]);
        assert!(out.links[0].1);
        assert!((out.links[0].2 - 10.0 * 40f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn equidistant_interferer_fails() {
        // Receiver at the origin, both transmitters 5 m away.
        let t = fixture(
            &[
                (-5.0, 0.0, Role::InNetwork),
                (0.0, 0.0, Role::InNetwork),
                (5.0, 0.0, Role::InNetwork),
                (9.0, 0.0, Role::InNetwork),
            ],
            &[(0, 1), (2, 3)],
        );
        let tx = [
            Transmission { link: 0, adapted: false },
            Transmission { link: 1, adapted: false },
        ];
        let out = evaluate_slot(&t, &square_law(), &tx, &[], &[]);
        let expected = 10.0 * (0.04f64 / (1e-3 + 0.04)).log10();
        assert!((out.links[0].2 - expected).abs() < 1e-9);
        assert!(!out.links[0].1);
    }

    #[test]
    fn adapted_threshold_rescues_marginal_link() {
        // Interferer at 7 m, signal at 5 m: SINR ~ 2.8 dB, between 0 and 3.
        let t = fixture(
            &[(0.0, 0.0, Role::InNetwork), (5.0, 0.0, Role::InNetwork), (12.0, 0.0, Role::Jammer)],
            &[(0, 1)],
        );
        let plain = evaluate_slot(&t, &square_law(), &[Transmission { link: 0, adapted: false }], &[2], &[]);
        let adapted = evaluate_slot(&t, &square_law(), &[Transmission { link: 0, adapted: true }], &[2], &[]);
        let s: f64 = 0.04 / (1e-3 + 1.0 / 49.0);
        assert!((plain.links[0].2 - 10.0 * s.log10()).abs() < 1e-9);
        assert!(!plain.links[0].1);
        assert!(adapted.links[0].1);
    }

    #[test]
    fn outnet_blocked_by_nearby_transmitter() {
        let t = fixture(
            &[
                (0.0, 0.0, Role::InNetwork),
                (5.0, 0.0, Role::InNetwork),
                (8.0, 0.0, Role::OutNetwork),
                (30.0, 30.0, Role::OutNetwork),
            ],
            &[(0, 1)],
        );
        let out = evaluate_slot(&t, &square_law(), &[Transmission { link: 0, adapted: false }], &[], &[2, 3]);
        assert_eq!(out.outnet, vec![(2, false), (3, true)]);
        let quiet = evaluate_slot(&t, &square_law(), &[], &[], &[2]);
        assert_eq!(quiet.outnet, vec![(2, true)]);
        assert!(quiet.links.is_empty());
    }

    #[test]
    fn default_config_behaviour() {
        let c = SinrConfig::default();
        assert!((10.0 * (c.received(10.0) / c.noise).log10() - 10.0).abs() < 1e-9);
        let t = fixture(
            &[
                (0.0, 0.0, Role::InNetwork),
                (5.0, 0.0, Role::InNetwork),
                (10.0, 0.0, Role::InNetwork),
                (20.0, 0.0, Role::InNetwork),
            ],
            &[(0, 1), (2, 3)],
        );
        let one = evaluate_slot(&t, &c, &[Transmission { link: 0, adapted: false }], &[], &[]);
        assert!(one.links[0].1);
        // Second transmitter also 5 m from receiver 1.
        let both = [
            Transmission { link: 0, adapted: false },
            Transmission { link: 1, adapted: false },
        ];
        let out = evaluate_slot(&t, &c, &both, &[], &[]);
        assert!(out.links[0].2.abs() < 0.1);
        assert!(!out.links[0].1);
    }

    #[test]
    fn clamp_and_validation() {
        let c = SinrConfig::default();
        assert_eq!(c.received(0.0), c.received(1.0));
        assert!(c.validate().is_ok());
        let bad = SinrConfig {
            beta_jam_db: 5.0,
            ..SinrConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(c.credit(true), 1.0);
        let disc = SinrConfig {
            rate_discount: true,
            ..c
        };
        assert_eq!(disc.credit(true), 0.5);
        assert_eq!(disc.credit(false), 1.0);
    }
}
