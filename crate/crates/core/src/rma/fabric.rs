use std::cell::{Cell, RefCell};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard, RwLock};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Latency, LatencyMode, LockToken, OneSided, Rank, RmaError, Slot, WindowId};

#[derive(Debug, Clone)]
pub struct FabricConfig {
    pub ranks: usize,
    pub latency: Latency,
    /// Seeds the per-endpoint jitter streams.
    pub seed: u64,
    /// Keep a globally ordered log of every transport operation.
    pub record_events: bool,
}

impl FabricConfig {
    pub fn new(ranks: usize) -> Self {
        FabricConfig {
            ranks,
            latency: Latency::ZERO,
            seed: 0,
            record_events: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Lock,
    Unlock,
    Put { offset: usize, values: Vec<Slot> },
    Get { offset: usize, values: Vec<Slot> },
}

/// One transport operation as observed by the target segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub seq: u64,
    pub origin: Rank,
    pub target: Rank,
    pub window: WindowId,
    pub kind: EventKind,
}

struct SegmentState {
    holder: Option<(Rank, u64)>,
    next_epoch: u64,
    data: Vec<Slot>,
}

struct Segment {
    state: Mutex<SegmentState>,
    released: Condvar,
}

struct Window {
    len: usize,
    segments: Vec<Segment>,
}

/// In-process backend: one segment per rank for every window, each guarded
/// by its own mutex and exclusive-lock state.
pub struct Fabric {
    config: FabricConfig,
    windows: RwLock<Vec<Arc<Window>>>,
    started: AtomicBool,
    seq: AtomicU64,
    events: Mutex<Vec<Event>>,
}

impl std::fmt::Debug for Fabric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fabric")
            .field("ranks", &self.config.ranks)
            .field(
                "windows",
                &self.windows.read().map(|w| w.len()).unwrap_or(0),
            )
            .finish()
    }
}

fn lock_state(segment: &Segment) -> MutexGuard<'_, SegmentState> {
    segment.state.lock().unwrap_or_else(|e| e.into_inner())
}

impl Fabric {
    pub fn new(config: FabricConfig) -> Result<Arc<Fabric>, RmaError> {
        if config.ranks == 0 {
            return Err(RmaError::NoRanks);
        }
        Ok(Arc::new(Fabric {
            config,
            windows: RwLock::new(Vec::new()),
            started: AtomicBool::new(false),
            seq: AtomicU64::new(0),
            events: Mutex::new(Vec::new()),
        }))
    }

    pub fn ranks(&self) -> usize {
        self.config.ranks
    }

    pub fn config(&self) -> &FabricConfig {
        &self.config
    }

    /// Collective window creation. `lengths[r]` is the slot count rank `r`
    /// asked for; all entries must agree. Every segment starts zeroed.
    pub fn create_window(&self, lengths: &[usize]) -> Result<WindowId, RmaError> {
        if lengths.len() != self.config.ranks {
            return Err(RmaError::WrongParticipantCount {
                expected: self.config.ranks,
                got: lengths.len(),
            });
        }
        if lengths.windows(2).any(|w| w[0] != w[1]) {
            return Err(RmaError::LengthMismatch {
                lengths: lengths.to_vec(),
            });
        }
        let mut windows = self.windows.write().unwrap_or_else(|e| e.into_inner());
        // Checked under the write lock so no operation can slip in between.
        if self.started.load(Ordering::SeqCst) {
            return Err(RmaError::CommunicationStarted);
        }
        let len = lengths[0];
        let segments = (0..self.config.ranks)
            .map(|_| Segment {
                state: Mutex::new(SegmentState {
                    holder: None,
                    next_epoch: 0,
                    data: vec![0; len],
                }),
                released: Condvar::new(),
            })
            .collect();
        windows.push(Arc::new(Window { len, segments }));
        Ok(WindowId(windows.len() - 1))
    }

    pub fn create_window_uniform(&self, len: usize) -> Result<WindowId, RmaError> {
        self.create_window(&vec![len; self.config.ranks])
    }

    pub fn window_len(&self, window: WindowId) -> Result<usize, RmaError> {
        Ok(self.window(window)?.len)
    }

    /// Endpoint for `rank`; jitter stream derived from the fabric seed.
    pub fn endpoint(self: &Arc<Self>, rank: Rank) -> Result<Endpoint, RmaError> {
        self.check_rank(rank)?;
        let stream = self.config.seed ^ (rank.0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        Ok(Endpoint {
            fabric: Arc::clone(self),
            rank,
            rng: RefCell::new(ChaCha8Rng::seed_from_u64(stream)),
            virtual_delay: Cell::new(Duration::ZERO),
        })
    }

    pub fn endpoints(self: &Arc<Self>) -> Vec<Endpoint> {
        (0..self.config.ranks)
            .map(|r| self.endpoint(Rank(r)).expect("rank in range"))
            .collect()
    }

    /// Drains the event log (empty unless `record_events` was set).
    pub fn take_events(&self) -> Vec<Event> {
        let mut events = self.events.lock().unwrap_or_else(|e| e.into_inner());
        std::mem::take(&mut *events)
    }

    fn check_rank(&self, rank: Rank) -> Result<(), RmaError> {
        if rank.0 >= self.config.ranks {
            Err(RmaError::RankOutOfRange {
                rank,
                ranks: self.config.ranks,
            })
        } else {
            Ok(())
        }
    }

    fn window(&self, window: WindowId) -> Result<Arc<Window>, RmaError> {
        let windows = self.windows.read().unwrap_or_else(|e| e.into_inner());
        windows
            .get(window.0)
            .cloned()
            .ok_or(RmaError::UnknownWindow(window))
    }

    fn segment(&self, target: Rank, window: WindowId) -> Result<Arc<Window>, RmaError> {
        self.check_rank(target)?;
        let w = self.window(window)?;
        self.started.store(true, Ordering::SeqCst);
        Ok(w)
    }

    fn record(&self, origin: Rank, target: Rank, window: WindowId, kind: EventKind) {
        if !self.config.record_events {
            return;
        }
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        self.events
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(Event {
                seq,
                origin,
                target,
                window,
                kind,
            });
    }

    fn lock(&self, origin: Rank, target: Rank, window: WindowId) -> Result<LockToken, RmaError> {
        let w = self.segment(target, window)?;
        let segment = &w.segments[target.0];
        let mut state = lock_state(segment);
        if matches!(state.holder, Some((holder, _)) if holder == origin) {
            return Err(RmaError::Reentrant {
                origin,
                target,
                window,
            });
        }
        while state.holder.is_some() {
            state = segment
                .released
                .wait(state)
                .unwrap_or_else(|e| e.into_inner());
        }
        let epoch = state.next_epoch;
        state.next_epoch += 1;
        state.holder = Some((origin, epoch));
        self.record(origin, target, window, EventKind::Lock);
        Ok(LockToken {
            window,
            target,
            origin,
            epoch,
        })
    }

    fn unlock(&self, origin: Rank, token: &LockToken) -> Result<(), RmaError> {
        let w = self.segment(token.target, token.window)?;
        let segment = &w.segments[token.target.0];
        let mut state = lock_state(segment);
        if token.origin != origin || state.holder != Some((origin, token.epoch)) {
            return Err(RmaError::NotLocked {
                origin,
                target: token.target,
                window: token.window,
            });
        }
        state.holder = None;
        self.record(origin, token.target, token.window, EventKind::Unlock);
        drop(state);
        segment.released.notify_one();
        Ok(())
    }

    fn held_segment<'a>(
        &self,
        w: &'a Window,
        origin: Rank,
        target: Rank,
        window: WindowId,
        offset: usize,
        len: usize,
    ) -> Result<MutexGuard<'a, SegmentState>, RmaError> {
        let state = lock_state(&w.segments[target.0]);
        if !matches!(state.holder, Some((holder, _)) if holder == origin) {
            return Err(RmaError::NotLocked {
                origin,
                target,
                window,
            });
        }
        if offset.checked_add(len).map_or(true, |end| end > w.len) {
            return Err(RmaError::OutOfBounds {
                offset,
                len,
                window_len: w.len,
            });
        }
        Ok(state)
    }

    fn put(
        &self,
        origin: Rank,
        target: Rank,
        window: WindowId,
        offset: usize,
        values: &[Slot],
    ) -> Result<(), RmaError> {
        let w = self.segment(target, window)?;
        let mut state = self.held_segment(&w, origin, target, window, offset, values.len())?;
        state.data[offset..offset + values.len()].copy_from_slice(values);
        self.record(
            origin,
            target,
            window,
            EventKind::Put {
                offset,
                values: values.to_vec(),
            },
        );
        Ok(())
    }

    fn get(
        &self,
        origin: Rank,
        target: Rank,
        window: WindowId,
        offset: usize,
        len: usize,
    ) -> Result<Vec<Slot>, RmaError> {
        let w = self.segment(target, window)?;
        let state = self.held_segment(&w, origin, target, window, offset, len)?;
        let values = state.data[offset..offset + len].to_vec();
        self.record(
            origin,
            target,
            window,
            EventKind::Get {
                offset,
                values: values.clone(),
            },
        );
        Ok(values)
    }
}

/// One rank's handle on the fabric. `Send` but not `Sync`: each rank agent
/// owns exactly one.
pub struct Endpoint {
    fabric: Arc<Fabric>,
    rank: Rank,
    rng: RefCell<ChaCha8Rng>,
    virtual_delay: Cell<Duration>,
}

impl std::fmt::Debug for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Endpoint")
            .field("rank", &self.rank)
            .finish()
    }
}

impl Endpoint {
    pub fn fabric(&self) -> &Arc<Fabric> {
        &self.fabric
    }

    /// Latency accumulated in [`LatencyMode::Virtual`] since the last call.
    pub fn take_virtual_delay(&self) -> Duration {
        self.virtual_delay.replace(Duration::ZERO)
    }

    /// Accesses to the own segment are local memory traffic and free.
    fn pay_latency(&self, target: Rank) {
        let latency = self.fabric.config.latency;
        if latency.is_zero() || target == self.rank {
            return;
        }
        let mut delay = latency.fixed;
        if !latency.jitter.is_zero() {
            let jitter = self
                .rng
                .borrow_mut()
                .random_range(0..=latency.jitter.as_nanos() as u64);
            delay += Duration::from_nanos(jitter);
        }
        match latency.mode {
            LatencyMode::Sleep => std::thread::sleep(delay),
            LatencyMode::Virtual => self.virtual_delay.set(self.virtual_delay.get() + delay),
        }
    }
}

impl OneSided for Endpoint {
    fn rank(&self) -> Rank {
        self.rank
    }

    fn ranks(&self) -> usize {
        self.fabric.config.ranks
    }

    fn lock_exclusive(&self, target: Rank, window: WindowId) -> Result<LockToken, RmaError> {
        self.pay_latency(target);
        self.fabric.lock(self.rank, target, window)
    }

    fn unlock(&self, token: &LockToken) -> Result<(), RmaError> {
        self.pay_latency(token.target);
        self.fabric.unlock(self.rank, token)
    }

    fn put(
        &self,
        target: Rank,
        window: WindowId,
        offset: usize,
        values: &[Slot],
    ) -> Result<(), RmaError> {
        if !values.is_empty() {
            self.pay_latency(target);
        }
        self.fabric.put(self.rank, target, window, offset, values)
    }

    fn get(
        &self,
        target: Rank,
        window: WindowId,
        offset: usize,
        len: usize,
    ) -> Result<Vec<Slot>, RmaError> {
        self.pay_latency(target);
        self.fabric.get(self.rank, target, window, offset, len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rma::ErrorKind;
    use std::sync::Barrier;

    fn fabric(ranks: usize) -> Arc<Fabric> {
        Fabric::new(FabricConfig::new(ranks)).unwrap()
    }

    #[test]
    fn windows_start_zeroed() {
        let f = fabric(4);
        let win = f.create_window_uniform(4).unwrap();
        let eps = f.endpoints();
        for ep in &eps {
            for target in 0..4 {
                let t = ep.lock_exclusive(Rank(target), win).unwrap();
                assert_eq!(ep.get(Rank(target), win, 0, 4).unwrap(), vec![0; 4]);
                ep.unlock(&t).unwrap();
            }
        }
    }

    #[test]
    fn single_rank_single_slot() {
        let f = fabric(1);
        let win = f.create_window_uniform(1).unwrap();
        let ep = f.endpoint(Rank(0)).unwrap();
        let t = ep.lock_exclusive(Rank(0), win).unwrap();
        ep.put(Rank(0), win, 0, &[42]).unwrap();
        assert_eq!(ep.get(Rank(0), win, 0, 1).unwrap(), vec![42]);
        ep.unlock(&t).unwrap();
    }

    #[test]
    fn eight_ranks_read_every_slot_as_zero() {
        let f = fabric(8);
        let win = f.create_window_uniform(8).unwrap();
        for ep in f.endpoints() {
            for target in 0..8 {
                let t = ep.lock_exclusive(Rank(target), win).unwrap();
                for slot in 0..8 {
                    assert_eq!(ep.get(Rank(target), win, slot, 1).unwrap(), vec![0]);
                }
                ep.unlock(&t).unwrap();
            }
        }
    }

    #[test]
    fn creation_errors() {
        let f = fabric(3);
        let err = f.create_window(&[2, 2, 3]).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Configuration);
        assert_eq!(
            f.create_window(&[2, 2]).unwrap_err().kind(),
            ErrorKind::Configuration
        );
        let win = f.create_window_uniform(2).unwrap();
        let ep = f.endpoint(Rank(1)).unwrap();
        let t = ep.lock_exclusive(Rank(0), win).unwrap();
        ep.unlock(&t).unwrap();
        let err = f.create_window_uniform(2).unwrap_err();
        assert_eq!(err, RmaError::CommunicationStarted);
        assert_eq!(err.kind(), ErrorKind::Protocol);
        assert!(Fabric::new(FabricConfig::new(0)).is_err());
    }

    #[test]
    fn lock_errors() {
        let f = fabric(2);
        let win = f.create_window_uniform(4).unwrap();
        let ep = f.endpoint(Rank(0)).unwrap();
        let t = ep.lock_exclusive(Rank(1), win).unwrap();
        let err = ep.lock_exclusive(Rank(1), win).unwrap_err();
        assert!(matches!(err, RmaError::Reentrant { .. }));
        ep.unlock(&t).unwrap();
        assert!(matches!(ep.unlock(&t), Err(RmaError::NotLocked { .. })));
        let err = ep.lock_exclusive(Rank(0), WindowId(9)).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::Usage);
        assert!(matches!(
            ep.lock_exclusive(Rank(5), win),
            Err(RmaError::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn unlock_rejects_foreign_token() {
        let f = fabric(2);
        let win = f.create_window_uniform(1).unwrap();
        let eps = f.endpoints();
        let t = eps[0].lock_exclusive(Rank(1), win).unwrap();
        assert!(eps[1].unlock(&t).is_err());
        eps[0].unlock(&t).unwrap();
    }

    #[test]
    fn access_requires_lock_and_bounds() {
        let f = fabric(2);
        let win = f.create_window_uniform(4).unwrap();
        let ep = f.endpoint(Rank(0)).unwrap();
        assert!(matches!(
            ep.put(Rank(1), win, 0, &[1]),
            Err(RmaError::NotLocked { .. })
        ));
        assert!(matches!(
            ep.get(Rank(1), win, 0, 1),
            Err(RmaError::NotLocked { .. })
        ));
        let t = ep.lock_exclusive(Rank(1), win).unwrap();
        assert!(matches!(
            ep.put(Rank(1), win, 3, &[1, 2]),
            Err(RmaError::OutOfBounds { .. })
        ));
        assert!(matches!(
            ep.get(Rank(1), win, 5, 0),
            Err(RmaError::OutOfBounds { .. })
        ));
        ep.put(Rank(1), win, 3, &[7]).unwrap();
        assert_eq!(ep.get(Rank(1), win, 3, 1).unwrap(), vec![7]);
        ep.put(Rank(1), win, 0, &[]).unwrap();
        assert_eq!(ep.get(Rank(1), win, 0, 4).unwrap(), vec![0, 0, 0, 7]);
        ep.unlock(&t).unwrap();
    }

    #[test]
    fn empty_critical_section_changes_nothing() {
        let f = fabric(2);
        let win = f.create_window_uniform(2).unwrap();
        let eps = f.endpoints();
        let t = eps[0].lock_exclusive(Rank(1), win).unwrap();
        eps[0].put(Rank(1), win, 0, &[5, 6]).unwrap();
        eps[0].unlock(&t).unwrap();
        let t = eps[0].lock_exclusive(Rank(1), win).unwrap();
        eps[0].unlock(&t).unwrap();
        let t = eps[1].lock_exclusive(Rank(1), win).unwrap();
        assert_eq!(eps[1].get(Rank(1), win, 0, 2).unwrap(), vec![5, 6]);
        eps[1].unlock(&t).unwrap();
    }

    #[test]
    fn put_visible_to_next_locker() {
        let f = fabric(2);
        let win = f.create_window_uniform(1).unwrap();
        let mut eps = f.endpoints().into_iter();
        let (a, b) = (eps.next().unwrap(), eps.next().unwrap());
        let written = Arc::new(Barrier::new(2));
        std::thread::scope(|s| {
            let w = Arc::clone(&written);
            s.spawn(move || {
                let t = a.lock_exclusive(Rank(1), win).unwrap();
                a.put(Rank(1), win, 0, &[99]).unwrap();
                a.unlock(&t).unwrap();
                w.wait();
            });
            s.spawn(move || {
                written.wait();
                let t = b.lock_exclusive(Rank(1), win).unwrap();
                assert_eq!(b.get(Rank(1), win, 0, 1).unwrap(), vec![99]);
                b.unlock(&t).unwrap();
            });
        });
    }

    #[test]
    fn contended_counter_is_exact() {
        const RANKS: usize = 16;
        const ROUNDS: i64 = 100;
        let f = fabric(RANKS);
        let win = f.create_window_uniform(1).unwrap();
        std::thread::scope(|s| {
            for ep in f.endpoints() {
                s.spawn(move || {
                    for _ in 0..ROUNDS {
                        let t = ep.lock_exclusive(Rank(0), win).unwrap();
                        let v = ep.get(Rank(0), win, 0, 1).unwrap()[0];
                        std::thread::yield_now();
                        ep.put(Rank(0), win, 0, &[v + 1]).unwrap();
                        ep.unlock(&t).unwrap();
                    }
                });
            }
        });
        let ep = f.endpoint(Rank(3)).unwrap();
        let t = ep.lock_exclusive(Rank(0), win).unwrap();
        assert_eq!(
            ep.get(Rank(0), win, 0, 1).unwrap(),
            vec![RANKS as i64 * ROUNDS]
        );
        ep.unlock(&t).unwrap();
    }

    #[test]
    fn critical_sections_never_interleave() {
        let mut cfg = FabricConfig::new(4);
        cfg.record_events = true;
        let f = Fabric::new(cfg).unwrap();
        let win = f.create_window_uniform(2).unwrap();
        std::thread::scope(|s| {
            for ep in f.endpoints() {
                s.spawn(move || {
                    for i in 0..50 {
                        let t = ep.lock_exclusive(Rank(2), win).unwrap();
                        ep.put(Rank(2), win, 0, &[ep.rank().0 as i64, i]).unwrap();
                        ep.get(Rank(2), win, 0, 2).unwrap();
                        ep.unlock(&t).unwrap();
                    }
                });
            }
        });
        let mut events = f.take_events();
        events.sort_by_key(|e| e.seq);
        let mut holder = None;
        let mut sections = 0;
        for e in events {
            match e.kind {
                EventKind::Lock => {
                    assert!(holder.is_none(), "overlapping critical sections");
                    holder = Some(e.origin);
                    sections += 1;
                }
                EventKind::Unlock => {
                    assert_eq!(holder.take(), Some(e.origin));
                }
                _ => assert_eq!(holder, Some(e.origin)),
            }
        }
        assert_eq!(sections, 200);
    }

    #[test]
    fn last_unlocker_wins() {
        let f = fabric(3);
        let win = f.create_window_uniform(1).unwrap();
        let eps = f.endpoints();
        let order = Mutex::new(Vec::new());
        std::thread::scope(|s| {
            for ep in eps.iter().skip(1).map(|e| e.rank()) {
                let fabric = Arc::clone(&f);
                let order = &order;
                s.spawn(move || {
                    let ep = fabric.endpoint(ep).unwrap();
                    let t = ep.lock_exclusive(Rank(0), win).unwrap();
                    ep.put(Rank(0), win, 0, &[ep.rank().0 as i64 * 10]).unwrap();
                    order.lock().unwrap().push(ep.rank().0 as i64 * 10);
                    ep.unlock(&t).unwrap();
                });
            }
        });
        let last = *order.lock().unwrap().last().unwrap();
        let t = eps[0].lock_exclusive(Rank(0), win).unwrap();
        assert_eq!(eps[0].get(Rank(0), win, 0, 1).unwrap(), vec![last]);
        eps[0].unlock(&t).unwrap();
    }

    #[test]
    fn passive_target_is_served_while_computing() {
        let f = fabric(3);
        let win = f.create_window_uniform(1).unwrap();
        let mut eps = f.endpoints();
        let target = eps.remove(0);
        let done = AtomicBool::new(false);
        std::thread::scope(|s| {
            // Rank 0 never touches the transport until the end.
            s.spawn(|| {
                let mut acc = 0u64;
                while !done.load(Ordering::Acquire) {
                    acc = acc.wrapping_mul(31).wrapping_add(7);
                    std::hint::black_box(acc);
                }
            });
            std::thread::scope(|inner| {
                for ep in eps {
                    inner.spawn(move || {
                        for _ in 0..200 {
                            let t = ep.lock_exclusive(Rank(0), win).unwrap();
                            let v = ep.get(Rank(0), win, 0, 1).unwrap()[0];
                            ep.put(Rank(0), win, 0, &[v + 1]).unwrap();
                            ep.unlock(&t).unwrap();
                        }
                    });
                }
            });
            done.store(true, Ordering::Release);
        });
        let t = target.lock_exclusive(Rank(0), win).unwrap();
        assert_eq!(target.get(Rank(0), win, 0, 1).unwrap(), vec![400]);
        target.unlock(&t).unwrap();
    }

    #[test]
    fn get_completes_before_unlock() {
        let f = fabric(2);
        let win = f.create_window_uniform(3).unwrap();
        let eps = f.endpoints();
        let t = eps[1].lock_exclusive(Rank(0), win).unwrap();
        eps[1].put(Rank(0), win, 0, &[1, 2, 3]).unwrap();
        let got = eps[1].get(Rank(0), win, 0, 3).unwrap();
        eps[1].unlock(&t).unwrap();
        // Overwritten after release; the earlier snapshot is unaffected.
        let t = eps[0].lock_exclusive(Rank(0), win).unwrap();
        eps[0].put(Rank(0), win, 0, &[9, 9, 9]).unwrap();
        eps[0].unlock(&t).unwrap();
        assert_eq!(got, vec![1, 2, 3]);
    }

    #[test]
    fn virtual_latency_accumulates() {
        let mut cfg = FabricConfig::new(2);
        cfg.latency = Latency {
            fixed: Duration::from_micros(5),
            jitter: Duration::ZERO,
            mode: LatencyMode::Virtual,
        };
        let f = Fabric::new(cfg).unwrap();
        let win = f.create_window_uniform(1).unwrap();
        let ep = f.endpoint(Rank(0)).unwrap();
        let t = ep.lock_exclusive(Rank(1), win).unwrap();
        ep.get(Rank(1), win, 0, 1).unwrap();
        ep.unlock(&t).unwrap();
        assert_eq!(ep.take_virtual_delay(), Duration::from_micros(15));
        assert_eq!(ep.take_virtual_delay(), Duration::ZERO);
        let t = ep.lock_exclusive(Rank(0), win).unwrap();
        ep.get(Rank(0), win, 0, 1).unwrap();
        ep.unlock(&t).unwrap();
        assert_eq!(ep.take_virtual_delay(), Duration::ZERO);
    }

    #[test]
    fn jitter_is_seeded() {
        let run = |seed| {
            let mut cfg = FabricConfig::new(2);
            cfg.seed = seed;
            cfg.latency = Latency {
                fixed: Duration::from_micros(1),
                jitter: Duration::from_micros(10),
                mode: LatencyMode::Virtual,
            };
            let f = Fabric::new(cfg).unwrap();
            let win = f.create_window_uniform(1).unwrap();
            let ep = f.endpoint(Rank(0)).unwrap();
            (0..20)
                .map(|_| {
                    let t = ep.lock_exclusive(Rank(1), win).unwrap();
                    ep.unlock(&t).unwrap();
                    ep.take_virtual_delay()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }
}
