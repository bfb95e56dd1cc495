//! Link state, topologies and the two ways of running a reservation
//! transaction: a centralized scheduler that sees every path link, and a
//! hop-by-hop protocol where each link's scheduler folds its own state into
//! the request's constraint and the last hop decides.
//!
//! Transactions are strictly sequential; callers must serialize them.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::reservation::{
    combined_constraint, decide, request_constraint, Decision, PathSnapshot, Request, RequestId, SchemeKind, SiteId,
};
use crate::scalar::Scalar;
use crate::steprate::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("no path from {0} to {1}")]
    NoPath(SiteId, SiteId),
    #[error("path {0}->{1} is empty")]
    EmptyPath(SiteId, SiteId),
    #[error("path {0}->{1} names unknown link {2}")]
    UnknownLink(SiteId, SiteId, LinkId),
    #[error("link capacity must be positive")]
    BadCapacity,
}

/// Capacity plus the time-indexed unreserved bandwidth of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState<T> {
    pub id: LinkId,
    capacity: T,
    remaining: StepFunction<T>,
}

impl<T: Scalar> LinkState<T> {
    /// A link with no reservations, available from `since` on:
    /// `B h(t - since)`.
    pub fn empty(id: LinkId, capacity: T, since: T) -> Self {
        Self { id, capacity, remaining: StepFunction::heaviside(since, capacity) }
    }

    pub fn capacity(&self) -> T {
        self.capacity
    }

    pub fn remaining(&self) -> &StepFunction<T> {
        &self.remaining
    }

    pub fn unreserved_at(&self, t: T) -> T {
        self.remaining.evaluate(t)
    }

    pub fn can_commit(&self, d: &StepFunction<T>) -> bool {
        d.leq_within(&self.remaining, T::TOLERANCE)
    }

    /// Subtracts a reservation. Panics if `d` exceeds the unreserved
    /// bandwidth anywhere: schemes must never emit such a decision.
    pub fn commit(&mut self, d: &StepFunction<T>) {
        if d.is_zero() {
            return;
        }
        assert!(self.can_commit(d), "commit on {} exceeds remaining bandwidth: {d} vs {}", self.id, self.remaining);
        let cap = self.capacity;
        let raw = self.remaining.subtract(d);
        // clear floating residue below zero and above capacity
        self.remaining = StepFunction::from_levels(raw.levels().map(|(t, v)| (t, v.max(T::zero()).min(cap))));
    }

    /// Folds breakpoints before `now` into one initial level. Values at and
    /// after `now` are unchanged.
    pub fn compact(&mut self, now: T) {
        let mut levels = self.remaining.levels().peekable();
        let Some(first) = levels.next_if(|&(t, _)| t < now) else {
            return;
        };
        let mut current = first.1;
        while let Some((_, v)) = levels.next_if(|&(t, _)| t < now) {
            current = v;
        }
        let folded = std::iter::once((first.0, current)).chain(levels).collect::<Vec<_>>();
        self.remaining = StepFunction::from_levels(folded);
    }

    /// `0 <= remaining <= capacity` everywhere, and full capacity after the
    /// last reservation.
    pub fn invariants_hold(&self) -> bool {
        self.remaining.levels().all(|(_, v)| v >= T::zero() && v <= self.capacity)
            && (self.remaining.is_zero() || self.remaining.tail_value() == self.capacity)
    }
}

/// Sites, links and the static path table.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<T> {
    ingress: Vec<SiteId>,
    egress: Vec<SiteId>,
    links: Vec<LinkState<T>>,
    paths: BTreeMap<(SiteId, SiteId), Vec<LinkId>>,
}

impl<T: Scalar> Topology<T> {
    /// Checks that every ingress/egress pair resolves to a nonempty path of
    /// known links. Link ids are positions in `links`.
    pub fn new(
        ingress: Vec<SiteId>,
        egress: Vec<SiteId>,
        links: Vec<LinkState<T>>,
        paths: BTreeMap<(SiteId, SiteId), Vec<LinkId>>,
    ) -> Result<Self, NetworkError> {
        if links.iter().any(|l| !(l.capacity > T::zero())) {
            return Err(NetworkError::BadCapacity);
        }
        for &s in &ingress {
            for &d in &egress {
                let path = paths.get(&(s, d)).ok_or(NetworkError::NoPath(s, d))?;
                if path.is_empty() {
                    return Err(NetworkError::EmptyPath(s, d));
                }
                if let Some(&bad) = path.iter().find(|id| id.0 >= links.len()) {
                    return Err(NetworkError::UnknownLink(s, d, bad));
                }
            }
        }
        Ok(Self { ingress, egress, links, paths })
    }

    /// One bottleneck link between site 0 and site 1.
    pub fn single_link(capacity: T) -> Self {
        let links = vec![LinkState::empty(LinkId(0), capacity, T::zero())];
        let paths = BTreeMap::from([((SiteId(0), SiteId(1)), vec![LinkId(0)])]);
        Self::new(vec![SiteId(0)], vec![SiteId(1)], links, paths).expect("valid single link")
    }

    /// `n` ingress sites (ids `0..n`) and `n` egress sites (ids `n..2n`),
    /// each with one access link of `capacity`. The core is not modeled.
    pub fn star(n: usize, capacity: T) -> Self {
        let ingress: Vec<SiteId> = (0..n).map(SiteId).collect();
        let egress: Vec<SiteId> = (n..2 * n).map(SiteId).collect();
        let links = (0..2 * n).map(|i| LinkState::empty(LinkId(i), capacity, T::zero())).collect();
        let mut paths = BTreeMap::new();
        for i in 0..n {
            for j in 0..n {
                paths.insert((SiteId(i), SiteId(n + j)), vec![LinkId(i), LinkId(n + j)]);
            }
        }
        Self::new(ingress, egress, links, paths).expect("valid star")
    }

    pub fn ingress_sites(&self) -> &[SiteId] {
        &self.ingress
    }

    pub fn egress_sites(&self) -> &[SiteId] {
        &self.egress
    }

    pub fn links(&self) -> &[LinkState<T>] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &LinkState<T> {
        &self.links[id.0]
    }

    pub fn path(&self, source: SiteId, dest: SiteId) -> Result<&[LinkId], NetworkError> {
        self.paths.get(&(source, dest)).map(Vec::as_slice).ok_or(NetworkError::NoPath(source, dest))
    }

    /// Commits `d` on every link of the path. Panics like
    /// [`LinkState::commit`].
    pub fn commit_path(&mut self, source: SiteId, dest: SiteId, d: &StepFunction<T>) -> Result<(), NetworkError> {
        let path = self.path(source, dest)?.to_vec();
        assert!(
            path.iter().all(|&id| self.links[id.0].can_commit(d)),
            "decision does not fit on path {source}->{dest}"
        );
        for id in path {
            self.links[id.0].commit(d);
        }
        Ok(())
    }

    pub fn compact(&mut self, now: T) {
        for link in &mut self.links {
            link.compact(now);
        }
    }

    pub fn compact_path(&mut self, source: SiteId, dest: SiteId, now: T) -> Result<(), NetworkError> {
        for id in self.path(source, dest)?.to_vec() {
            self.links[id.0].compact(now);
        }
        Ok(())
    }
}

/// Constraint calculation, decision and state update in one step.
pub fn centralized_reserve<T: Scalar>(
    topology: &mut Topology<T>,
    scheme: &SchemeKind<T>,
    r: &Request<T>,
) -> Result<Decision<T>, NetworkError> {
    let path = topology.path(r.source, r.dest)?;
    let states = path.iter().map(|&id| topology.link(id));
    let constraint = combined_constraint(r, states.clone().map(LinkState::remaining));
    let snapshot = PathSnapshot::from_links(states.map(|l| (l.unreserved_at(r.arrival), l.capacity)));
    let decision = decide(scheme, r, &constraint, &snapshot);
    if let Decision::Accept(d) = &decision {
        topology.commit_path(r.source, r.dest, d)?;
    }
    Ok(decision)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Request travelling towards the destination, carrying the constraint
    /// folded so far.
    Forward,
    /// Decision delivered to the destination and confirmed.
    DecisionReply,
    /// Decision travelling back along the path; each hop commits it.
    CommitBack,
}

/// One protocol message as observed at a hop.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservationMessage<T> {
    pub phase: Phase,
    pub hop: usize,
    pub link: Option<LinkId>,
    pub request: RequestId,
    pub partial_constraint: StepFunction<T>,
    pub snapshot: PathSnapshot<T>,
    pub decision: Option<Decision<T>>,
}

fn inline_steps<T: Scalar>(f: &StepFunction<T>) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    f.steps().map(|(t, a)| format!("{t}:{a}")).collect::<Vec<_>>().join(";")
}

impl<T: Scalar> fmt::Display for ReservationMessage<T> {
    /// One line of the text trace log.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phase = match self.phase {
            Phase::Forward => "forward",
            Phase::DecisionReply => "decision-reply",
            Phase::CommitBack => "commit-back",
        };
        let link = self.link.map_or_else(|| "dest".to_string(), |l| l.to_string());
        write!(f, "{phase} {} hop={} link={link}", self.request, self.hop)?;
        match &self.decision {
            None => write!(f, " constraint={}", inline_steps(&self.partial_constraint)),
            Some(Decision::Reject) => write!(f, " decision=reject"),
            Some(Decision::Accept(d)) => write!(f, " decision=accept:{}", inline_steps(d)),
        }
    }
}

/// Renders a trace as the line-based log used by golden tests.
pub fn trace_log<T: Scalar>(trace: &[ReservationMessage<T>]) -> String {
    trace.iter().map(|m| format!("{m}\n")).collect()
}

/// Hop-by-hop reservation without a traced destination confirmation.
pub fn distributed_reserve<T: Scalar>(
    topology: &mut Topology<T>,
    scheme: &SchemeKind<T>,
    r: &Request<T>,
) -> Result<(Decision<T>, Vec<ReservationMessage<T>>), NetworkError> {
    distributed_reserve_with(topology, scheme, r, false)
}

/// Hop-by-hop reservation. Hop `i` computes `C^i = L_i min C^{i-1}` starting
/// from the request's own window; the last hop decides; the decision returns
/// along the reverse path and every hop commits it unchanged. With
/// `confirm`, the destination's (always successful) confirmation is traced
/// as a [`Phase::DecisionReply`] message.
pub fn distributed_reserve_with<T: Scalar>(
    topology: &mut Topology<T>,
    scheme: &SchemeKind<T>,
    r: &Request<T>,
    confirm: bool,
) -> Result<(Decision<T>, Vec<ReservationMessage<T>>), NetworkError> {
    let path = topology.path(r.source, r.dest)?.to_vec();
    let mut trace = Vec::with_capacity(2 * path.len() + 1);
    let mut constraint = request_constraint(r);
    let mut snapshot = PathSnapshot::empty();
    for (hop, &id) in path.iter().enumerate() {
        let link = topology.link(id);
        constraint = constraint.min(link.remaining());
        snapshot = snapshot.with_link(link.unreserved_at(r.arrival), link.capacity);
        trace.push(ReservationMessage {
            phase: Phase::Forward,
            hop,
            link: Some(id),
            request: r.id,
            partial_constraint: constraint.clone(),
            snapshot,
            decision: None,
        });
    }
    let decision = decide(scheme, r, &constraint, &snapshot);
    if confirm {
        trace.push(ReservationMessage {
            phase: Phase::DecisionReply,
            hop: path.len(),
            link: None,
            request: r.id,
            partial_constraint: constraint.clone(),
            snapshot,
            decision: Some(decision.clone()),
        });
    }
    for (hop, &id) in path.iter().enumerate().rev() {
        if let Decision::Accept(d) = &decision {
            topology.links[id.0].commit(d);
        }
        trace.push(ReservationMessage {
            phase: Phase::CommitBack,
            hop,
            link: Some(id),
            request: r.id,
            partial_constraint: constraint.clone(),
            snapshot,
            decision: Some(decision.clone()),
        });
    }
    Ok((decision, trace))
}
