//! One hosted scene: its world, the thread that ticks it while agents are
//! present, and the latest published snapshot.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use vizenv_core::motion::{MotionError, World};
use vizenv_core::scene::{Scene, Snapshot};

struct HostState {
    world: World,
    agents: usize,
    running: bool,
    thread: Option<JoinHandle<()>>,
}

pub struct SceneHost {
    name: String,
    state: Mutex<HostState>,
    wake: Condvar,
    latest: RwLock<Arc<Snapshot>>,
    ticks: AtomicU64,
    period: Duration,
    shutdown: Arc<AtomicBool>,
}

impl SceneHost {
    pub fn new(scene: Arc<Scene>, seed: u64, tick_rate: f64, shutdown: Arc<AtomicBool>) -> Result<Arc<Self>, MotionError> {
        let world = World::new(scene.clone(), seed, 1.0 / tick_rate)?;
        let first = Arc::new(world.snapshot());
        Ok(Arc::new(SceneHost {
            name: scene.name.clone(),
            state: Mutex::new(HostState { world, agents: 0, running: false, thread: None }),
            wake: Condvar::new(),
            latest: RwLock::new(first),
            ticks: AtomicU64::new(0),
            period: Duration::from_secs_f64(1.0 / tick_rate),
            shutdown,
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn latest(&self) -> Arc<Snapshot> {
        self.latest.read().expect("snapshot lock poisoned").clone()
    }

    /// Ticks published by the simulation loop so far.
    pub fn ticks_published(&self) -> u64 {
        self.ticks.load(Ordering::Acquire)
    }

    pub fn agent_count(&self) -> usize {
        self.lock().agents
    }

    pub fn is_running(&self) -> bool {
        self.lock().running
    }

    fn lock(&self) -> MutexGuard<'_, HostState> {
        self.state.lock().expect("scene lock poisoned")
    }

    fn publish(&self, world: &World) {
        *self.latest.write().expect("snapshot lock poisoned") = Arc::new(world.snapshot());
    }

    /// Applies `f` to the world and republishes, so the caller's next frame
    /// reflects the change without waiting for a tick.
    pub fn update<T>(&self, f: impl FnOnce(&mut World) -> T) -> T {
        let mut st = self.lock();
        let out = f(&mut st.world);
        self.publish(&st.world);
        out
    }

    pub fn add_agent(self: &Arc<Self>, agent_id: u32) -> Result<(), MotionError> {
        let mut st = self.lock();
        st.world.add_agent(agent_id)?;
        st.agents += 1;
        self.publish(&st.world);
        if !st.running {
            if let Some(old) = st.thread.take() {
                // it already saw zero agents and is on its way out
                drop(st);
                let _ = old.join();
                st = self.lock();
            }
            if !st.running && st.agents > 0 {
                st.running = true;
                let host = Arc::clone(self);
                st.thread = Some(
                    std::thread::Builder::new()
                        .name(format!("sim-{}", self.name))
                        .spawn(move || host.run())
                        .expect("spawn simulation thread"),
                );
                log::debug!("scene {} started ticking", self.name);
            }
        }
        Ok(())
    }

    pub fn remove_agent(&self, agent_id: u32) {
        let mut st = self.lock();
        if st.world.remove_agent(agent_id) {
            st.agents -= 1;
            self.publish(&st.world);
        }
        self.wake.notify_all();
    }

    fn run(&self) {
        let mut next = Instant::now() + self.period;
        loop {
            let mut st = self.lock();
            loop {
                if self.shutdown.load(Ordering::Acquire) || st.agents == 0 {
                    st.running = false;
                    log::debug!("scene {} stopped ticking", self.name);
                    return;
                }
                let now = Instant::now();
                if now >= next {
                    break;
                }
                st = self.wake.wait_timeout(st, next - now).expect("scene lock poisoned").0;
            }
            st.world.step();
            self.publish(&st.world);
            self.ticks.fetch_add(1, Ordering::AcqRel);
            drop(st);

            next += self.period;
            let now = Instant::now();
            if next < now {
                // fell behind; drop the missed ticks instead of bursting
                next = now + self.period;
            }
        }
    }

    /// Wakes the loop so it notices shutdown, then joins it.
    pub fn stop(&self) {
        self.wake.notify_all();
        let handle = self.lock().thread.take();
        if let Some(h) = handle {
            let _ = h.join();
        }
    }
}
