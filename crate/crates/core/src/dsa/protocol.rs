use alloc::vec;
use alloc::vec::Vec;

use super::ChannelStatus;
use crate::rng::{self, tag};
use crate::sigsynth::SignalClass;

/// Request type; lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RequestType {
    Idle = 0,
    InNetwork = 1,
    Jammer = 2,
}

impl RequestType {
    /// `None` for out-network, which never requests.
    pub fn of_class(class: SignalClass) -> Option<Self> {
        match class {
            SignalClass::Idle => Some(RequestType::Idle),
            SignalClass::InNetwork => Some(RequestType::InNetwork),
            SignalClass::Jammer => Some(RequestType::Jammer),
            SignalClass::OutNetwork => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Broadcast by a transmitter to compete for the data slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub sender: usize,
    pub kind: RequestType,
    /// One per data slot.
    pub priorities: Vec<f64>,
}

/// Builds the request for `status`, or `None` when the channel is held by an
/// out-network user. Slot priorities are the score times fresh uniform
/// `(0, 1]` draws keyed by `(seed, node, frame)`.
pub fn make_request(status: &ChannelStatus, node: usize, frame_index: u64, slots: usize, seed: u64) -> Option<Request> {
    let kind = RequestType::of_class(status.class)?;
    let mut r = rng::stream(seed, &[tag::PRIORITY, node as u64, frame_index]);
    let priorities = (0..slots).map(|_| status.score * rng::open_unit(&mut r)).collect();
    Some(Request {
        sender: node,
        kind,
        priorities,
    })
}

/// Broadcast by a receiver: which slots its transmitter may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub receiver: usize,
    pub transmitter: usize,
    pub approved: Vec<bool>,
}

impl Response {
    pub fn approves(&self, t: usize) -> bool {
        self.approved.get(t).copied().unwrap_or(false)
    }
}

/// The receiver's decision given its own transmitter's request and the
/// requests it overheard. A strictly better type wins every slot, a worse
/// type wins none, and equal types compete slot by slot on priority with
/// the smaller sender id winning exact ties.
pub fn make_response(receiver: usize, heard: &[Request], own: &Request, slots: usize) -> Response {
    let others: Vec<&Request> = heard.iter().filter(|r| r.sender != own.sender).collect();
    let approved = if others.iter().any(|r| r.kind < own.kind) {
        vec![false; slots]
    } else {
        let tied: Vec<&&Request> = others.iter().filter(|r| r.kind == own.kind).collect();
        (0..slots)
            .map(|t| {
                let mine = own.priorities.get(t).copied().unwrap_or(0.0);
                tied.iter().all(|r| {
                    let theirs = r.priorities.get(t).copied().unwrap_or(0.0);
                    mine > theirs || (mine == theirs && own.sender < r.sender)
                })
            })
            .collect()
    };
    Response {
        receiver,
        transmitter: own.sender,
        approved,
    }
}

/// Whether `transmitter` goes ahead in slot `t`: its receiver approved and
/// no overheard response hands the slot to someone else.
pub fn resolve_transmission(transmitter: usize, own: &Response, heard: &[Response], t: usize) -> bool {
    own.transmitter == transmitter
        && own.approves(t)
        && !heard.iter().any(|r| r.transmitter != transmitter && r.approves(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::ScoreVector;

    fn status(class: SignalClass, score: f64) -> ChannelStatus {
        ChannelStatus {
            class,
            score,
            scores: ScoreVector::peaked(class, score),
        }
    }

    fn req(sender: usize, kind: RequestType, p: &[f64]) -> Request {
        Request {
            sender,
            kind,
            priorities: p.to_vec(),
        }
    }

    #[test]
    fn outnet_never_requests() {
        assert!(make_request(&status(SignalClass::OutNetwork, 0.9), 0, 0, 10, 1).is_none());
    }

    #[test]
    fn zero_score_zero_priorities() {
        let r = make_request(&status(SignalClass::Idle, 0.0), 3, 7, 10, 1).unwrap();
        assert_eq!(r.priorities, vec![0.0; 10]);
        assert_eq!(r.kind.code(), 0);
    }

    #[test]
    fn priorities_are_keyed_and_bounded() {
        let s = status(SignalClass::InNetwork, 0.8);
        let a = make_request(&s, 3, 7, 10, 1).unwrap();
        assert_eq!(a, make_request(&s, 3, 7, 10, 1).unwrap());
        assert_ne!(a.priorities, make_request(&s, 3, 8, 10, 1).unwrap().priorities);
        assert_ne!(a.priorities, make_request(&s, 4, 7, 10, 1).unwrap().priorities);
        assert!(a.priorities.iter().all(|&p| p > 0.0 && p <= 0.8));
    }

    #[test]
    fn sole_requester_gets_everything() {
        let own = req(0, RequestType::Jammer, &[0.1, 0.2, 0.3]);
        let r = make_response(1, core::slice::from_ref(&own), &own, 3);
        assert_eq!(r.approved, vec![true; 3]);
    }

    #[test]
    fn strict_type_order() {
        let own = req(0, RequestType::Idle, &[0.1, 0.1]);
        let other = req(5, RequestType::InNetwork, &[0.9, 0.9]);
        assert_eq!(make_response(1, core::slice::from_ref(&other), &own, 2).approved, vec![true, true]);
        assert_eq!(make_response(6, core::slice::from_ref(&own), &other, 2).approved, vec![false, false]);
    }

    #[test]
    fn tied_types_compete_per_slot() {
        // Hand trace: slot 0 mine, slot 1 theirs, slot 2 exact tie won by the
        // smaller id (mine).
        let own = req(2, RequestType::InNetwork, &[0.7, 0.2, 0.5]);
        let other = req(9, RequestType::InNetwork, &[0.4, 0.6, 0.5]);
        let r = make_response(3, &[other.clone(), own.clone()], &own, 3);
        assert_eq!(r.approved, vec![true, false, true]);
        let theirs = make_response(10, &[own], &other, 3);
        assert_eq!(theirs.approved, vec![false, true, false]);
    }

    #[test]
    fn resolution_rules() {
        let own = Response {
            receiver: 1,
            transmitter: 0,
            approved: vec![true, true, false],
        };
        let other = Response {
            receiver: 5,
            transmitter: 4,
            approved: vec![false, true, false],
        };
        assert!(resolve_transmission(0, &own, core::slice::from_ref(&other), 0));
        assert!(!resolve_transmission(0, &own, core::slice::from_ref(&other), 1));
        assert!(!resolve_transmission(0, &own, &[other], 2));
    }
}
