//! Pairwise authenticated in-process channels.
//!
//! Three bidirectional FIFO links (A-B, A-C, B-C) with no loss, no
//! reordering, and no sender forgery: the sender tag on every delivered
//! message is assigned by the channel layer from the sending slot, never
//! parsed out of message content. Strategies never hold a channel handle at
//! all — the session driver performs all sends — so a spoofed identity is
//! structurally impossible through the public interface.
//!
//! A session is driven by one thread in deterministic round order, so the
//! queues live behind a plain `RefCell`.

use std::cell::RefCell;
use std::collections::VecDeque;

use super::wire::{WireMessage, WireRecord};
use super::SessionError;
use crate::party::Party;

struct Net {
    /// Directed queues indexed `[from][to]`.
    queues: [[VecDeque<WireMessage>; 3]; 3],
    records: Option<Vec<WireRecord>>,
    round: u64,
}

/// The three pairwise links of one session.
pub struct ChannelSet {
    inner: RefCell<Net>,
}

impl ChannelSet {
    /// `record` enables transcript capture of every message sent.
    pub fn new(record: bool) -> Self {
        ChannelSet {
            inner: RefCell::new(Net {
                queues: Default::default(),
                records: if record { Some(Vec::new()) } else { None },
                round: 0,
            }),
        }
    }

    /// Current protocol round, attached to recorded messages.
    pub fn round(&self) -> u64 {
        self.inner.borrow().round
    }

    pub fn set_round(&self, round: u64) {
        self.inner.borrow_mut().round = round;
    }

    /// Queues a message on the link from `from` to `to`.
    ///
    /// # Panics
    ///
    /// Panics if `from == to`; there is no self-link.
    pub fn send(&self, from: Party, to: Party, msg: WireMessage) {
        assert_ne!(from, to, "no self-link exists");
        let mut net = self.inner.borrow_mut();
        let round = net.round;
        if let Some(records) = net.records.as_mut() {
            records.push(WireRecord {
                round,
                from,
                to,
                msg: msg.clone(),
            });
        }
        net.queues[from.index()][to.index()].push_back(msg);
    }

    /// Delivers the oldest message pending from `from` to `to`, or a stall
    /// error naming the party that failed to speak.
    pub fn recv(&self, to: Party, from: Party) -> Result<WireMessage, SessionError> {
        self.inner.borrow_mut().queues[from.index()][to.index()]
            .pop_front()
            .ok_or(SessionError::Stalled { from, to })
    }

    /// Total messages still queued.
    pub fn pending(&self) -> usize {
        let net = self.inner.borrow();
        net.queues
            .iter()
            .flat_map(|row| row.iter())
            .map(|q| q.len())
            .sum()
    }

    /// Consumes the channel set, yielding the captured transcript records.
    pub fn into_records(self) -> Vec<WireRecord> {
        self.inner.into_inner().records.unwrap_or_default()
    }
}
