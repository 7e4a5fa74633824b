//! Event-driven scheduler shared by the energy, kernel and dual dynamics.
//!
//! Only bonds touching the occupied region are clocked. A ring on a bond with
//! both ends empty is a no-op, so skipping those bonds is exact: when the
//! occupied region grows, the newly adjacent bond is activated and its clock
//! is advanced past the current time. Rings are ordered by (time, bond).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::env::{BondCursor, Environment};

/// Entries below this are set to zero and their mass is recorded.
pub const PRUNE_BELOW: f64 = 1e-300;

pub trait Lattice {
    fn apply(&mut self, bond: i64, index: u64, split: f64);
    fn occupied(&self, site: i64) -> bool;
    fn support(&self) -> Option<(i64, i64)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Clock only the bonds adjacent to the occupied sites, growing on demand.
    Adaptive,
    /// Clock exactly the bonds `lo..=hi`.
    Fixed(i64, i64),
}

pub struct Engine<'e> {
    env: &'e Environment,
    time: f64,
    heap: BinaryHeap<Reverse<(u64, i64)>>,
    cursors: VecDeque<BondCursor>,
    lo: i64,
    adaptive: bool,
    events: u64,
}

impl<'e> Engine<'e> {
    pub fn new<L: Lattice>(env: &'e Environment, state: &L, t0: f64, window: Window) -> Self {
        let mut e = Engine {
            env,
            time: t0,
            heap: BinaryHeap::new(),
            cursors: VecDeque::new(),
            lo: 0,
            adaptive: matches!(window, Window::Adaptive),
            events: 0,
        };
        let range = match window {
            Window::Adaptive => state.support().map(|(a, b)| (a - 1, b)),
            Window::Fixed(a, b) => (a <= b).then_some((a, b)),
        };
        if let Some((a, b)) = range {
            e.lo = a;
            for bond in a..=b {
                e.push_back(bond);
            }
        }
        e
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Active bond range, if any.
    pub fn window(&self) -> Option<(i64, i64)> {
        (!self.cursors.is_empty()).then(|| (self.lo, self.lo + self.cursors.len() as i64 - 1))
    }

    fn fresh(&self, bond: i64) -> BondCursor {
        let mut c = self.env.cursor(bond);
        c.skip_through(self.time);
        c
    }

    fn push_back(&mut self, bond: i64) {
        let c = self.fresh(bond);
        self.heap.push(Reverse((c.time.to_bits(), bond)));
        self.cursors.push_back(c);
    }

    fn push_front(&mut self, bond: i64) {
        let c = self.fresh(bond);
        self.heap.push(Reverse((c.time.to_bits(), bond)));
        self.cursors.push_front(c);
        self.lo = bond;
    }

    /// Apply every ring with time in `(now, t_end]`.
    pub fn run_until<L: Lattice>(&mut self, state: &mut L, t_end: f64) {
        while let Some(&Reverse((tb, bond))) = self.heap.peek() {
            let t = f64::from_bits(tb);
            if t > t_end {
                break;
            }
            self.heap.pop();
            let k = (bond - self.lo) as usize;
            let c = &mut self.cursors[k];
            let index = c.index;
            c.advance();
            self.heap.push(Reverse((c.time.to_bits(), bond)));
            self.time = t;
            state.apply(bond, index, self.env.split(bond, index));
            self.events += 1;
            if self.adaptive {
                let hi = self.lo + self.cursors.len() as i64 - 1;
                if bond == self.lo && state.occupied(bond) {
                    self.push_front(bond - 1);
                }
                if bond == hi && state.occupied(bond + 1) {
                    self.push_back(bond + 1);
                }
            }
        }
        if t_end > self.time {
            self.time = t_end;
        }
    }
}

/// Dense nonnegative profile over a growable site interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    lo: i64,
    v: Vec<f64>,
    pruned: f64,
}

impl Profile {
    pub fn zeros() -> Self {
        Profile { lo: 0, v: Vec::new(), pruned: 0.0 }
    }

    pub fn delta(site: i64) -> Self {
        Profile { lo: site, v: vec![1.0], pruned: 0.0 }
    }

    pub fn from_dense(lo: i64, v: Vec<f64>) -> Self {
        Profile { lo, v, pruned: 0.0 }
    }

    #[inline]
    pub fn get(&self, site: i64) -> f64 {
        let k = site - self.lo;
        if k < 0 || k >= self.v.len() as i64 {
            0.0
        } else {
            self.v[k as usize]
        }
    }

    /// Mass removed by pruning so far.
    pub fn pruned(&self) -> f64 {
        self.pruned
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.v.iter().enumerate().map(move |(k, &x)| (self.lo + k as i64, x))
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.iter().filter(|p| p.1 != 0.0)
    }

    pub fn sum(&self) -> f64 {
        self.v.iter().sum()
    }

    pub fn set(&mut self, site: i64, value: f64) {
        self.reserve(site, site);
        let k = (site - self.lo) as usize;
        self.v[k] = value;
    }

    fn reserve(&mut self, a: i64, b: i64) {
        if self.v.is_empty() {
            self.lo = a;
            self.v = vec![0.0; (b - a + 1) as usize];
            return;
        }
        let hi = self.lo + self.v.len() as i64 - 1;
        if a < self.lo {
            let extra = ((self.lo - a) as usize).max(self.v.len() / 2 + 1);
            let mut nv = vec![0.0; extra];
            nv.extend_from_slice(&self.v);
            self.v = nv;
            self.lo -= extra as i64;
        }
        if b > hi {
            let extra = ((b - hi) as usize).max(self.v.len() / 2 + 1);
            self.v.resize(self.v.len() + extra, 0.0);
        }
    }

    /// `(x, x+1) <- (B s, (1-B) s)` with `s` the bond total.
    #[inline]
    pub fn redistribute(&mut self, x: i64, split: f64) {
        let (l, r) = (self.get(x), self.get(x + 1));
        let s = l + r;
        if s == 0.0 {
            return;
        }
        self.reserve(x, x + 1);
        let k = (x - self.lo) as usize;
        let mut a = split * s;
        let mut c = s - a;
        if a < PRUNE_BELOW {
            self.pruned += a;
            a = 0.0;
        }
        if c < PRUNE_BELOW {
            self.pruned += c;
            c = 0.0;
        }
        self.v[k] = a;
        self.v[k + 1] = c;
    }

    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.v.iter().position(|&x| x != 0.0)?;
        let last = self.v.iter().rposition(|&x| x != 0.0)?;
        Some((self.lo + first as i64, self.lo + last as i64))
    }
}

impl Lattice for Profile {
    #[inline]
    fn apply(&mut self, bond: i64, _index: u64, split: f64) {
        self.redistribute(bond, split);
    }

    #[inline]
    fn occupied(&self, site: i64) -> bool {
        self.get(site) != 0.0
    }

    fn support(&self) -> Option<(i64, i64)> {
        Profile::support(self)
    }
}
