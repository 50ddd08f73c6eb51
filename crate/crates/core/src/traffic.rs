//! Two-state (idle/busy) Markov model of out-network activity learned
//! online, and the rule that fuses its prediction with the classifier's.
//!
//! State 1 means an out-network user is present; idle, in-network and
//! jammer observations all map to state 0.

use crate::nnet::ScoreVector;
use crate::sigsynth::SignalClass;

/// Busy/idle state of the channel as seen by the traffic model.
pub type State = u8;

/// Transition counts `n[i][j]`, all starting at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovProfile {
    counts: [[u64; 2]; 2],
    last: Option<State>,
}

impl Default for MarkovProfile {
    fn default() -> Self {
        Self::new()
    }
}

impl MarkovProfile {
    pub fn new() -> Self {
        Self {
            counts: [[1, 1], [1, 1]],
            last: None,
        }
    }

    pub fn counts(&self) -> [[u64; 2]; 2] {
        self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn last_state(&self) -> Option<State> {
        self.last
    }

    /// Records a transition `i -> j`.
    pub fn update(&mut self, i: State, j: State) {
        assert!(i < 2 && j < 2, "states are 0 or 1");
        self.counts[i as usize][j as usize] += 1;
        self.last = Some(j);
    }

    /// Records the next observed state, counting the transition from the
    /// previous observation if there was one.
    pub fn observe(&mut self, s: State) {
        assert!(s < 2, "states are 0 or 1");
        match self.last {
            Some(prev) => self.update(prev, s),
            None => self.last = Some(s),
        }
    }

    /// `n_ij / (n_i0 + n_i1)`.
    pub fn transition_prob(&self, i: State, j: State) -> f64 {
        let row = self.counts[i as usize];
        row[j as usize] as f64 / (row[0] + row[1]) as f64
    }

    /// Most likely next state and its probability; an even split predicts
    /// that the state persists.
    pub fn predict(&self, prev: State) -> (State, f64) {
        let p0 = self.transition_prob(prev, 0);
        let p1 = self.transition_prob(prev, 1);
        if p0 > p1 {
            (0, p0)
        } else if p1 > p0 {
            (1, p1)
        } else {
            (prev, 0.5)
        }
    }
}

/// Free-function form of [`MarkovProfile::update`].
pub fn profile_update(mut profile: MarkovProfile, i: State, j: State) -> MarkovProfile {
    profile.update(i, j);
    profile
}

pub fn transition_prob(profile: &MarkovProfile, i: State, j: State) -> f64 {
    profile.transition_prob(i, j)
}

pub fn predict(profile: &MarkovProfile, prev: State) -> (State, f64) {
    profile.predict(prev)
}

pub fn state_of(class: SignalClass) -> State {
    match class {
        SignalClass::OutNetwork => 1,
        _ => 0,
    }
}

/// Inputs to [`fuse`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionInput {
    pub traffic_state: State,
    /// In `[0.5, 1]`.
    pub traffic_conf: f64,
    pub deep_state: State,
    /// In `[0.5, 1]`.
    pub deep_conf: f64,
    /// Weight on the traffic model, in `[0, 1]`.
    pub weight: f64,
}

/// Fused state and the confidence `q` in state 0 (or `1 - q` in state 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fused {
    pub state: State,
    pub confidence: f64,
}

/// Combines the two decisions. When they agree nothing changes; otherwise
/// `q`, the weighted belief in state 0, decides: state 1 iff `q < 0.5`.
pub fn fuse(input: &FusionInput) -> Fused {
    let w = input.weight.clamp(0.0, 1.0);
    let ct = input.traffic_conf.clamp(0.5, 1.0);
    let cd = input.deep_conf.clamp(0.5, 1.0);
    if input.traffic_state == input.deep_state {
        let conf = w * ct + (1.0 - w) * cd;
        return Fused {
            state: input.traffic_state,
            confidence: conf,
        };
    }
    let q = if input.traffic_state == 0 {
        w * ct + (1.0 - w) * (1.0 - cd)
    } else {
        w * (1.0 - ct) + (1.0 - w) * cd
    };
    if q < 0.5 {
        Fused {
            state: 1,
            confidence: 1.0 - q,
        }
    } else {
        Fused {
            state: 0,
            confidence: q,
        }
    }
}

/// Deep-classifier binary view of a score vector: the state of the argmax
/// and that state's total probability, floored at 0.5.
pub fn deep_decision(scores: &ScoreVector) -> (State, f64) {
    let s = state_of(scores.argmax());
    let p_out = scores.get(SignalClass::OutNetwork);
    let p = if s == 1 { p_out } else { 1.0 - p_out };
    (s, p.clamp(0.5, 1.0))
}

/// Concrete class after fusion: out-network for state 1, otherwise the
/// best of idle, in-network and jammer.
pub fn fused_class(state: State, scores: &ScoreVector) -> SignalClass {
    if state == 1 {
        return SignalClass::OutNetwork;
    }
    let p = scores.as_array();
    let mut best = 0;
    for i in 1..3 {
        if p[i] > p[best] {
            best = i;
        }
    }
    SignalClass::ALL[best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn fresh_profile_update_trace() {
        let p = profile_update(MarkovProfile::new(), 0, 1);
        assert_eq!(p.counts(), [[1, 2], [1, 1]]);
        assert_eq!(p.total(), 5);
        assert!((p.transition_prob(0, 1) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fresh_profile_is_even() {
        let p = MarkovProfile::new();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(p.transition_prob(i, j), 0.5);
            }
        }
        assert_eq!(p.predict(0), (0, 0.5));
        assert_eq!(p.predict(1), (1, 0.5));
    }

    #[test]
    fn prediction_follows_larger_transition() {
        // n00 = 4, n01 = 1 gives p00 = 0.8.
        let mut p = MarkovProfile::new();
        for _ in 0..3 {
            p.update(0, 0);
        }
        assert_eq!(p.predict(0), (0, 0.8));
        // n00 = 1, n01 = 9 gives p01 = 0.9.
        let mut p = MarkovProfile::new();
        for _ in 0..8 {
            p.update(0, 1);
        }
        assert_eq!(p.predict(0), (1, 0.9));
    }

    #[test]
    fn estimates_converge_on_simulated_chain() {
        let mut r = crate::rng::stream(8, &[]);
        let mut p = MarkovProfile::new();
        let mut s: State = 0;
        p.observe(s);
        for _ in 0..1000 {
            let stay = r.random::<f64>() < 0.8;
            s = if stay { s } else { 1 - s };
            p.observe(s);
        }
        assert!((p.transition_prob(0, 0) - 0.8).abs() < 0.05);
        assert!((p.transition_prob(1, 1) - 0.8).abs() < 0.05);
        assert_eq!(p.total(), 1004);
    }

    #[test]
    fn fusion_cases() {
        let agree = fuse(&FusionInput {
            traffic_state: 1,
            traffic_conf: 0.6,
            deep_state: 1,
            deep_conf: 0.9,
            weight: 0.2,
        });
        assert_eq!(agree.state, 1);

        let f = fuse(&FusionInput {
            traffic_state: 0,
            traffic_conf: 0.8,
            deep_state: 1,
            deep_conf: 0.9,
            weight: 0.2,
        });
        // q = 0.2 * 0.8 + 0.8 * 0.1 = 0.24
        assert_eq!(f.state, 1);
        assert!((f.confidence - 0.76).abs() < 1e-12);

        let traffic_only = fuse(&FusionInput {
            traffic_state: 0,
            traffic_conf: 0.7,
            deep_state: 1,
            deep_conf: 1.0,
            weight: 1.0,
        });
        assert_eq!(traffic_only.state, 0);
    }

    #[test]
    fn fusion_boundary_resolves_to_idle() {
        let f = fuse(&FusionInput {
            traffic_state: 1,
            traffic_conf: 0.5,
            deep_state: 0,
            deep_conf: 0.5,
            weight: 0.5,
        });
        assert_eq!(f.state, 0);
        assert_eq!(f.confidence, 0.5);
    }

    #[test]
    fn fusion_is_monotone_in_deep_confidence() {
        for w in [0.0, 0.2, 0.5, 0.8, 1.0] {
            for ct in [0.5, 0.6, 0.8, 1.0] {
                let mut seen_one = false;
                for k in 0..=50 {
                    let cd = 0.5 + k as f64 / 100.0;
                    let s = fuse(&FusionInput {
                        traffic_state: 0,
                        traffic_conf: ct,
                        deep_state: 1,
                        deep_conf: cd,
                        weight: w,
                    })
                    .state;
                    if seen_one {
                        assert_eq!(s, 1);
                    }
                    seen_one |= s == 1;
                }
            }
        }
    }

    #[test]
    fn class_mapping() {
        assert_eq!(state_of(SignalClass::Idle), 0);
        assert_eq!(state_of(SignalClass::InNetwork), 0);
        assert_eq!(state_of(SignalClass::Jammer), 0);
        assert_eq!(state_of(SignalClass::OutNetwork), 1);
        let s = ScoreVector::new([0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(deep_decision(&s), (1, 0.5));
        assert_eq!(fused_class(0, &s), SignalClass::Jammer);
        assert_eq!(fused_class(1, &s), SignalClass::OutNetwork);
    }
}
