//! Role-resolution state machine for the postponed matching protocol.
//!
//! Every arriving node enters as a seller copy and a buyer copy. The buyer
//! copy matches greedily against the live seller copies on arrival; the
//! node's side stays open until its deadline passes, at which point a fair
//! coin fixes it (unless a partner's earlier resolution already forced it).
//!
//! Resolution rules, applied when a node's deadline passes (in deadline
//! order, ties by id):
//! - A node still undetermined flips one coin: even draw = seller, odd =
//!   buyer. Nodes whose side was forced earlier skip the coin.
//! - Resolving as seller with a held match finalizes the pair: `p` gains the
//!   provisional value and the partner becomes a buyer. The partner keeps
//!   its own seller copy (and any match that copy holds) until its own
//!   deadline; only its buyer copy is consumed.
//! - Resolving as buyer discards the held match and forces its owner, if
//!   still live and undetermined, to be a seller.
//! - Only the resolving node's own copies leave the market, so the set of
//!   live seller copies (and with it every provisional match) depends
//!   only on arrivals and deadlines, never on the coins.
//! - Whenever a node turns out to be a seller, its buyer copy becomes
//!   invalid: any seller copy matched to it drops that match but keeps its
//!   provisional value as a price floor.
//!
//! `p` changes only at seller resolutions. Matches chain: a finalized buyer
//! forces the owner of its held match to be a seller, which pays in turn,
//! so along every chain alternate pairs pay and each node is a seller with
//! marginal probability one half. The expected total is therefore half the
//! provisional matched weight.

use crate::market::MatchedPair;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Undetermined,
    Seller,
    Buyer,
}

#[derive(Debug, Clone)]
struct Entry {
    id: usize,
    deadline: u64,
    status: Status,
    /// Accounting finished: expired, or consumed by a finalized pair.
    done: bool,
    /// Seller copy still live in the market.
    seller_live: bool,
    /// Buyer copy still live; pure bookkeeping, only seller copies are
    /// ever scanned for matches.
    buyer_live: bool,
    /// Provisional matching value held by the seller copy.
    w: f64,
    /// Slot of the buyer-copy owner currently matched to this seller copy.
    matched: Option<usize>,
}

/// Protocol state shared by the exact and sketched postponed matchers.
/// Weights are supplied by the caller, everything else lives here.
#[derive(Debug, Clone)]
pub(crate) struct PostponedCore {
    entries: Vec<Entry>,
    coin: ChaCha8Rng,
    p: f64,
    pairs: Vec<MatchedPair>,
}

impl PostponedCore {
    pub fn new(coin_seed: u64) -> Self {
        PostponedCore {
            entries: Vec::new(),
            coin: ChaCha8Rng::seed_from_u64(coin_seed),
            p: 0.0,
            pairs: Vec::new(),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn pairs(&self) -> &[MatchedPair] {
        &self.pairs
    }

    pub fn live_seller_count(&self) -> usize {
        self.entries.iter().filter(|e| e.seller_live).count()
    }

    pub fn live_buyer_count(&self) -> usize {
        self.entries.iter().filter(|e| e.buyer_live).count()
    }

    /// Resolve every node whose deadline lies strictly before `now`,
    /// in (deadline, id) order.
    pub fn expire_due(&mut self, now: u64) {
        let mut due: Vec<usize> = (0..self.entries.len())
            .filter(|&i| !self.entries[i].done && self.entries[i].deadline < now)
            .collect();
        due.sort_by_key(|&i| (self.entries[i].deadline, self.entries[i].id));
        for slot in due {
            self.resolve(slot);
        }
    }

    /// Resolve everything still open, in (deadline, id) order.
    pub fn finish(&mut self) {
        self.expire_due(u64::MAX);
    }

    /// Register an arriving node; both copies enter the market.
    pub fn admit(&mut self, id: usize, deadline: u64) -> usize {
        self.entries.push(Entry {
            id,
            deadline,
            status: Status::Undetermined,
            done: false,
            seller_live: true,
            buyer_live: true,
            w: 0.0,
            matched: None,
        });
        self.entries.len() - 1
    }

    /// Greedy step for the arriving node's buyer copy: pick the live seller
    /// copy (own copy excluded) with the largest value increment, ties to the
    /// lowest node id, and re-point it when the increment is positive.
    pub fn match_arrival(&mut self, arriving: usize, mut weigh: impl FnMut(usize) -> f64) {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.entries.len() {
            if j == arriving || !self.entries[j].seller_live {
                continue;
            }
            let wj = weigh(j);
            let inc = wj - self.entries[j].w;
            let beats = match best {
                None => true,
                Some((bj, binc, _)) => {
                    inc > binc || (inc == binc && self.entries[j].id < self.entries[bj].id)
                }
            };
            if beats {
                best = Some((j, inc, wj));
            }
        }
        if let Some((j0, inc, wj0)) = best {
            if inc > 0.0 {
                self.entries[j0].matched = Some(arriving);
                self.entries[j0].w = wj0;
            }
        }
    }

    fn resolve(&mut self, slot: usize) {
        if self.entries[slot].done {
            return;
        }
        if self.entries[slot].status == Status::Undetermined {
            self.entries[slot].status = if self.coin.next_u32() & 1 == 0 {
                Status::Seller
            } else {
                Status::Buyer
            };
        }
        match self.entries[slot].status {
            Status::Seller => {
                if let Some(partner) = self.entries[slot].matched.take() {
                    // a determined seller's buyer copy is voided everywhere,
                    // so the partner here is never itself a seller
                    debug_assert_ne!(self.entries[partner].status, Status::Seller);
                    let w = self.entries[slot].w;
                    self.p += w;
                    self.pairs.push(MatchedPair {
                        seller: self.entries[slot].id,
                        buyer: self.entries[partner].id,
                        weight: w,
                    });
                    self.finalize_partner(partner);
                }
                self.entries[slot].seller_live = false;
                self.entries[slot].buyer_live = false;
                self.void_buyer_copy(slot);
                self.entries[slot].done = true;
            }
            Status::Buyer => {
                if let Some(partner) = self.entries[slot].matched.take() {
                    self.force_seller(partner);
                }
                self.entries[slot].seller_live = false;
                self.entries[slot].buyer_live = false;
                self.entries[slot].done = true;
            }
            Status::Undetermined => unreachable!("coin flipped above"),
        }
    }

    /// Buyer side of a finalized pair. Its buyer copy is consumed; its own
    /// seller copy and any match that copy holds stay in the market until
    /// the node's deadline, where the buyer branch keeps the chain going.
    fn finalize_partner(&mut self, slot: usize) {
        if self.entries[slot].done {
            return;
        }
        self.entries[slot].status = Status::Buyer;
        self.entries[slot].buyer_live = false;
    }

    /// Partner whose buyer copy backed a discarded match: it becomes a
    /// seller. Only live undetermined nodes can still be forced; the seller
    /// copy stays in the market until the node's own deadline.
    fn force_seller(&mut self, slot: usize) {
        if self.entries[slot].done || self.entries[slot].status != Status::Undetermined {
            return;
        }
        self.entries[slot].status = Status::Seller;
        self.entries[slot].buyer_live = false;
        self.void_buyer_copy(slot);
    }

    /// Drop any provisional match pointing at `slot`'s buyer copy.
    fn void_buyer_copy(&mut self, slot: usize) {
        for j in 0..self.entries.len() {
            if self.entries[j].matched == Some(slot) {
                self.entries[j].matched = None;
            }
        }
    }
}
