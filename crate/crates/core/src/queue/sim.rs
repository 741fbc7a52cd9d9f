use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;

use super::config::{InitCondition, SimConfig};
use super::path::{EventKind, EventRecord, JobRecord, QueuePath, QueueSample};
use crate::dist::DistributionBundle;
use crate::error::{Error, Result};
use crate::kernels::{t_map, t_map_derivative, AgeVector};
use crate::rng::{rng_from_seed, SimRng};

/// Source of arrival epochs and service requirements.
pub trait Workload {
    /// Epoch of the first arrival after time zero, if any.
    fn first_arrival(&mut self, rng: &mut SimRng) -> Option<f64>;
    /// Gap to the next arrival after one has occurred.
    fn next_gap(&mut self, rng: &mut SimRng) -> Option<f64>;
    /// Service requirement of the next arriving job.
    fn service(&mut self, rng: &mut SimRng) -> f64;
}

/// Renewal arrivals at rate `lambda` with i.i.d. services.
pub struct RenewalWorkload<'a> {
    arrival: &'a DistributionBundle,
    service: &'a DistributionBundle,
    lambda: f64,
    stationary_delay: bool,
}

impl<'a> RenewalWorkload<'a> {
    pub fn new(arrival: &'a DistributionBundle, service: &'a DistributionBundle, lambda: f64, stationary_delay: bool) -> Self {
        RenewalWorkload { arrival, service, lambda, stationary_delay }
    }
}

impl Workload for RenewalWorkload<'_> {
    fn first_arrival(&mut self, rng: &mut SimRng) -> Option<f64> {
        let u = if self.stationary_delay { self.arrival.sample_residual(rng) } else { self.arrival.sample_service(rng) };
        Some(u / self.lambda)
    }

    fn next_gap(&mut self, rng: &mut SimRng) -> Option<f64> {
        Some(self.arrival.sample_service(rng) / self.lambda)
    }

    fn service(&mut self, rng: &mut SimRng) -> f64 {
        self.service.sample_service(rng)
    }
}

/// Fixed arrival epochs and service times, for hand-traceable runs.
#[derive(Debug, Clone, Default)]
pub struct ScriptedWorkload {
    arrivals: Vec<f64>,
    services: Vec<f64>,
    next: usize,
    served: usize,
}

impl ScriptedWorkload {
    pub fn new(arrivals: Vec<f64>, services: Vec<f64>) -> Self {
        ScriptedWorkload { arrivals, services, next: 0, served: 0 }
    }

    pub fn none() -> Self {
        Self::default()
    }
}

impl Workload for ScriptedWorkload {
    fn first_arrival(&mut self, _: &mut SimRng) -> Option<f64> {
        self.next = 1;
        self.arrivals.first().copied()
    }

    fn next_gap(&mut self, _: &mut SimRng) -> Option<f64> {
        let gap = match (self.arrivals.get(self.next), self.arrivals.get(self.next.wrapping_sub(1))) {
            (Some(b), Some(a)) => Some(b - a),
            _ => None,
        };
        self.next += 1;
        gap
    }

    fn service(&mut self, _: &mut SimRng) -> f64 {
        let v = self.services.get(self.served).copied().unwrap_or(1.0);
        self.served += 1;
        v
    }
}

#[derive(Debug, Clone, Copy)]
struct Departure {
    time: f64,
    seq: u64,
    server: usize,
}

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Departure {}

impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// reversed: the heap pops the earliest epoch, then the earliest scheduled
impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct Busy {
    job: usize,
    entry: f64,
}

struct Waiting {
    job: usize,
    arrival: f64,
    service: f64,
}

/// Event-driven FCFS simulator for one configuration.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    service: DistributionBundle,
    arrival: DistributionBundle,
    fluid_z: Vec<f64>,
    fluid_dz: Vec<f64>,
}

fn unit_mean(b: &DistributionBundle, what: &str) -> Result<()> {
    if (b.mean() - 1.0).abs() > 1e-8 {
        return Err(Error::Config(format!("{what} law must have unit mean, got {}", b.mean())));
    }
    Ok(())
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let service = DistributionBundle::new(config.service.clone())?;
        let arrival = DistributionBundle::new(config.arrival.clone())?;
        unit_mean(&service, "service")?;
        unit_mean(&arrival, "arrival")?;
        // Zbar(0) is the unit mean itself, set exactly so Zhat(0) = -Xhat^- holds bitwise
        let fluid_z = config
            .r_grid
            .nodes()
            .iter()
            .map(|&r| if r == 0.0 { 1.0 } else { service.zbar(r) })
            .collect();
        let fluid_dz = config.r_grid.nodes().iter().map(|&r| -service.sf(r)).collect();
        Ok(Simulator { config, service, arrival, fluid_z, fluid_dz })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn service(&self) -> &DistributionBundle {
        &self.service
    }

    pub fn arrival(&self) -> &DistributionBundle {
        &self.arrival
    }

    pub fn run(&self) -> QueuePath {
        self.run_with_seed(self.config.seed)
    }

    pub fn run_with_seed(&self, seed: u64) -> QueuePath {
        let lambda = self.config.arrival_rate();
        let stationary = matches!(self.config.init, InitCondition::Star);
        let mut workload = RenewalWorkload::new(&self.arrival, &self.service, lambda, stationary);
        self.run_workload(&mut workload, seed)
    }

    /// Runs with an arbitrary arrival/service source. Initial in-service
    /// jobs still follow the configured init and service law.
    pub fn run_workload(&self, workload: &mut dyn Workload, seed: u64) -> QueuePath {
        let cfg = &self.config;
        let n = cfg.servers;
        let mut rng = rng_from_seed(seed);
        let record = cfg.record_events;

        let mut slots: Vec<Option<Busy>> = vec![None; n];
        let mut idle: Vec<usize> = (0..n).rev().collect();
        let mut heap: BinaryHeap<Departure> = BinaryHeap::with_capacity(n + 1);
        let mut queue: VecDeque<Waiting> = VecDeque::new();
        let mut jobs: Vec<JobRecord> = Vec::new();
        let mut events: Vec<EventRecord> = Vec::new();
        let mut seq: u64 = 0;
        let mut job_count = 0usize;

        // initial jobs
        let (x0, ages): (usize, Vec<f64>) = match &cfg.init {
            InitCondition::Star => (n, (0..n).map(|_| self.service.sample_residual(&mut rng)).collect()),
            InitCondition::Empty => (0, Vec::new()),
            InitCondition::Explicit { in_system, ages, .. } => (*in_system, ages.clone()),
        };
        for &a in &ages {
            let remaining = self.service.sample_remaining(a, &mut rng);
            let server = idle.pop().expect("ages never exceed servers");
            let entry = -a;
            slots[server] = Some(Busy { job: job_count, entry });
            heap.push(Departure { time: remaining, seq, server });
            seq += 1;
            if record {
                jobs.push(JobRecord { arrival: entry, entry, service: a + remaining, initial: true });
            }
            job_count += 1;
        }
        for _ in ages.len()..x0 {
            let service = self.service.sample_service(&mut rng);
            queue.push_back(Waiting { job: job_count, arrival: 0.0, service });
            if record {
                jobs.push(JobRecord { arrival: 0.0, entry: f64::NAN, service, initial: true });
            }
            job_count += 1;
        }
        let mut next_arrival = match &cfg.init {
            InitCondition::Explicit { residual_arrival: Some(r), .. } => Some(*r),
            _ => workload.first_arrival(&mut rng),
        };

        let mut x = x0 as u64;
        let (mut e, mut k, mut d) = (0u64, 0u64, 0u64);
        let mut samples = Vec::with_capacity(cfg.sample_times.len());
        let mut next_sample = 0usize;
        if record {
            events.push(EventRecord { time: 0.0, kind: EventKind::Start, job: usize::MAX, x, e, k, d, in_service: (n - idle.len()) as u64 });
        }

        loop {
            let dep_time = heap.peek().map(|dp| dp.time);
            let arrival_first = match (next_arrival, dep_time) {
                (Some(a), Some(dt)) => a <= dt,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => false,
            };
            let epoch = if arrival_first { next_arrival } else { dep_time };
            let epoch = match epoch {
                Some(t) if t <= cfg.horizon => t,
                _ => break,
            };
            while next_sample < cfg.sample_times.len() && cfg.sample_times[next_sample] < epoch {
                samples.push(self.sample(cfg.sample_times[next_sample], x, e, k, d, &slots, record));
                next_sample += 1;
            }
            if arrival_first {
                e += 1;
                x += 1;
                let service = workload.service(&mut rng);
                let job = job_count;
                job_count += 1;
                if record {
                    jobs.push(JobRecord { arrival: epoch, entry: f64::NAN, service, initial: false });
                }
                if idle.is_empty() {
                    queue.push_back(Waiting { job, arrival: epoch, service });
                } else {
                    let pick = rng.random_range(0..idle.len());
                    let server = idle.swap_remove(pick);
                    slots[server] = Some(Busy { job, entry: epoch });
                    heap.push(Departure { time: epoch + service, seq, server });
                    seq += 1;
                    k += 1;
                    if record {
                        jobs[job].entry = epoch;
                    }
                }
                next_arrival = workload.next_gap(&mut rng).map(|g| epoch + g);
                if record {
                    events.push(EventRecord { time: epoch, kind: EventKind::Arrival, job, x, e, k, d, in_service: (n - idle.len()) as u64 });
                }
            } else {
                let dep = heap.pop().unwrap();
                let busy = slots[dep.server].take().unwrap();
                d += 1;
                x -= 1;
                if let Some(w) = queue.pop_front() {
                    slots[dep.server] = Some(Busy { job: w.job, entry: epoch });
                    heap.push(Departure { time: epoch + w.service, seq, server: dep.server });
                    seq += 1;
                    k += 1;
                    if record {
                        jobs[w.job].entry = epoch;
                        debug_assert!(w.arrival <= epoch);
                    }
                } else {
                    idle.push(dep.server);
                }
                if record {
                    events.push(EventRecord { time: epoch, kind: EventKind::Departure, job: busy.job, x, e, k, d, in_service: (n - idle.len()) as u64 });
                }
            }
        }
        while next_sample < cfg.sample_times.len() {
            samples.push(self.sample(cfg.sample_times[next_sample], x, e, k, d, &slots, record));
            next_sample += 1;
        }

        QueuePath {
            servers: n,
            beta: cfg.beta,
            lambda: cfg.arrival_rate(),
            seed,
            horizon: cfg.horizon,
            initial_in_system: x0 as u64,
            r_grid: cfg.r_grid.clone(),
            fluid_z: self.fluid_z.clone(),
            fluid_dz: self.fluid_dz.clone(),
            samples,
            events,
            jobs: if record { Some(jobs) } else { None },
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn sample(&self, t: f64, x: u64, e: u64, k: u64, d: u64, slots: &[Option<Busy>], keep_ages: bool) -> QueueSample {
        let ages = AgeVector::new(slots.iter().flatten().map(|b| t - b.entry).collect());
        let (z, dz) = if self.config.compute_z {
            (t_map(&self.service, &ages, &self.config.r_grid), t_map_derivative(&self.service, &ages, &self.config.r_grid))
        } else {
            (Vec::new(), Vec::new())
        };
        QueueSample {
            t,
            x,
            e,
            k,
            d,
            in_service: ages.len() as u64,
            z,
            dz,
            ages: if keep_ages { Some(ages.0) } else { None },
        }
    }
}

/// Builds a simulator and runs it with the configured seed.
pub fn run(config: &SimConfig) -> Result<QueuePath> {
    Ok(Simulator::new(config.clone())?.run())
}
