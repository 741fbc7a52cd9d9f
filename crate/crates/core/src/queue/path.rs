use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dist::DistributionBundle;
use crate::error::{Error, Result};
use crate::kernels::RGrid;
use crate::numeric::quad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Start,
    Arrival,
    Departure,
}

/// State right after one event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub job: usize,
    pub x: u64,
    pub e: u64,
    pub k: u64,
    pub d: u64,
    pub in_service: u64,
}

/// One job: arrival epoch, entry into service (negative for jobs already in
/// service at time zero, NaN if never served) and service requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub arrival: f64,
    pub entry: f64,
    pub service: f64,
    /// present at time zero
    pub initial: bool,
}

impl JobRecord {
    pub fn departure(&self) -> f64 {
        self.entry + self.service
    }

    pub fn entered(&self) -> bool {
        !self.entry.is_nan()
    }
}

/// Raw state at a sampling time.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueSample {
    pub t: f64,
    pub x: u64,
    pub e: u64,
    pub k: u64,
    pub d: u64,
    pub in_service: u64,
    /// occupancy function on the r-grid (empty if not computed)
    pub z: Vec<f64>,
    pub dz: Vec<f64>,
    pub ages: Option<Vec<f64>>,
}

/// Counts of violated pathwise identities; all zero on a correct run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct InvariantReport {
    pub checked: usize,
    pub non_idling_violations: usize,
    pub mass_balance_violations: usize,
    pub boundary_violations: usize,
}

impl InvariantReport {
    pub fn passed(&self) -> bool {
        self.non_idling_violations == 0 && self.mass_balance_violations == 0 && self.boundary_violations == 0
    }
}

/// Output of one queue run.
#[derive(Debug, Clone)]
pub struct QueuePath {
    pub servers: usize,
    pub beta: f64,
    pub lambda: f64,
    pub seed: u64,
    pub horizon: f64,
    pub initial_in_system: u64,
    pub r_grid: RGrid,
    /// `int_r^inf Gbar` on the grid
    pub fluid_z: Vec<f64>,
    /// `-Gbar(r)` on the grid
    pub fluid_dz: Vec<f64>,
    pub samples: Vec<QueueSample>,
    pub events: Vec<EventRecord>,
    pub jobs: Option<Vec<JobRecord>>,
}

/// Diffusion-scaled samples `(F - N Fbar) / sqrt(N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledPath {
    pub servers: usize,
    pub beta: f64,
    pub seed: u64,
    pub r_grid: RGrid,
    pub times: Vec<f64>,
    pub x: Vec<u64>,
    pub k: Vec<u64>,
    pub e: Vec<u64>,
    pub x_hat: Vec<f64>,
    pub z_hat: Vec<Vec<f64>>,
    pub dz_hat: Vec<Vec<f64>>,
}

/// Law-of-large-numbers scaling `F / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidPath {
    pub times: Vec<f64>,
    pub x_bar: Vec<f64>,
    pub e_bar: Vec<f64>,
    pub z_bar: Vec<Vec<f64>>,
}

impl QueuePath {
    pub fn scaled(&self) -> ScaledPath {
        let n = self.servers as f64;
        let root = n.sqrt();
        let mut out = ScaledPath {
            servers: self.servers,
            beta: self.beta,
            seed: self.seed,
            r_grid: self.r_grid.clone(),
            times: Vec::with_capacity(self.samples.len()),
            x: Vec::new(),
            k: Vec::new(),
            e: Vec::new(),
            x_hat: Vec::new(),
            z_hat: Vec::new(),
            dz_hat: Vec::new(),
        };
        for s in &self.samples {
            out.times.push(s.t);
            out.x.push(s.x);
            out.k.push(s.k);
            out.e.push(s.e);
            out.x_hat.push((s.x as f64 - n) / root);
            out.z_hat.push(s.z.iter().zip(&self.fluid_z).map(|(z, f)| (z - n * f) / root).collect());
            out.dz_hat.push(s.dz.iter().zip(&self.fluid_dz).map(|(z, f)| (z - n * f) / root).collect());
        }
        out
    }

    /// Ages of jobs in service after all events at epochs `<= t`.
    pub fn ages_at(&self, t: f64) -> Result<Vec<f64>> {
        let jobs = self.jobs_required()?;
        Ok(jobs
            .iter()
            .filter(|j| j.entered() && j.entry <= t && j.departure() > t)
            .map(|j| t - j.entry)
            .collect())
    }

    fn jobs_required(&self) -> Result<&[JobRecord]> {
        self.jobs
            .as_deref()
            .ok_or_else(|| Error::Usage("path has no job records; run with record_events".into()))
    }

    pub fn jobs(&self) -> Option<&[JobRecord]> {
        self.jobs.as_deref()
    }

    /// Weighted departures minus their compensator, `Q_f(t) - A_f(t)`, for
    /// a weight `f(age, s)`. The compensator integrates
    /// `f(a_j(s), s) h(a_j(s))` along each job's age line by composite
    /// Simpson with steps no longer than `step`.
    pub fn compensated_departure(
        &self,
        service: &DistributionBundle,
        f: impl Fn(f64, f64) -> f64,
        t: f64,
        step: f64,
    ) -> Result<f64> {
        let jobs = self.jobs_required()?;
        let mut departures = 0.0;
        let mut compensator = 0.0;
        for j in jobs.iter().filter(|j| j.entered()) {
            let start = j.entry.max(0.0);
            let end = j.departure().min(t);
            if end <= start {
                continue;
            }
            let entry = j.entry;
            compensator += quad::simpson(|s| f(s - entry, s) * service.hazard(s - entry), start, end, step);
            if j.departure() <= t {
                departures += f(j.service, j.departure());
            }
        }
        Ok(departures - compensator)
    }

    /// `(Q_f(t) - A_f(t), A_{f^2}(t))`.
    pub fn compensated_with_variation(
        &self,
        service: &DistributionBundle,
        f: impl Fn(f64, f64) -> f64,
        t: f64,
        step: f64,
    ) -> Result<(f64, f64)> {
        let m = self.compensated_departure(service, &f, t, step)?;
        let jobs = self.jobs_required()?;
        let mut qv = 0.0;
        for j in jobs.iter().filter(|j| j.entered()) {
            let start = j.entry.max(0.0);
            let end = j.departure().min(t);
            if end > start {
                let entry = j.entry;
                qv += quad::simpson(|s| f(s - entry, s).powi(2) * service.hazard(s - entry), start, end, step);
            }
        }
        Ok((m, qv))
    }

    /// Exact pathwise checks: `in_service = min(X, N)` and
    /// `K = E - (X - N)^+ + (X_0 - N)^+` at every logged event and sample,
    /// and `Zhat(0) = -Xhat^-` bitwise at every sample with occupancy values.
    pub fn invariants(&self) -> InvariantReport {
        let n = self.servers as u64;
        let over0 = self.initial_in_system.saturating_sub(n);
        let mut report = InvariantReport::default();
        let mut check = |x: u64, e: u64, k: u64, in_service: u64| {
            report.checked += 1;
            if in_service != x.min(n) {
                report.non_idling_violations += 1;
            }
            if k + x.saturating_sub(n) != e + over0 {
                report.mass_balance_violations += 1;
            }
        };
        for ev in &self.events {
            check(ev.x, ev.e, ev.k, ev.in_service);
        }
        for s in &self.samples {
            check(s.x, s.e, s.k, s.in_service);
        }
        let scaled = self.scaled();
        for (x_hat, z_hat) in scaled.x_hat.iter().zip(&scaled.z_hat) {
            if let Some(z0) = z_hat.first() {
                if *z0 != x_hat.min(0.0) {
                    report.boundary_violations += 1;
                }
            }
        }
        report
    }

    /// Initial in-service ages (jobs with nonpositive entry epochs).
    pub fn initial_ages(&self) -> Result<Vec<f64>> {
        let jobs = self.jobs_required()?;
        Ok(jobs.iter().filter(|j| j.initial && j.entered() && j.entry <= 0.0).map(|j| -j.entry).collect())
    }
}

/// Pointwise `F / N` of every sampled quantity.
pub fn fluid_scale(path: &QueuePath, servers: usize) -> FluidPath {
    let n = servers as f64;
    FluidPath {
        times: path.samples.iter().map(|s| s.t).collect(),
        x_bar: path.samples.iter().map(|s| s.x as f64 / n).collect(),
        e_bar: path.samples.iter().map(|s| s.e as f64 / n).collect(),
        z_bar: path.samples.iter().map(|s| s.z.iter().map(|z| z / n).collect()).collect(),
    }
}

const MAGIC: &[u8; 8] = b"HWSPATH1";

impl ScaledPath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Header `t,x,k,e,x_hat,z_hat_0..,dz_hat_0..`; one row per sample.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.r_grid.len();
        let mut header = String::from("t,x,k,e,x_hat");
        let has_z = self.z_hat.first().is_some_and(|z| !z.is_empty());
        if has_z {
            for i in 0..m {
                header.push_str(&format!(",z_hat_{i}"));
            }
            for i in 0..m {
                header.push_str(&format!(",dz_hat_{i}"));
            }
        }
        writeln!(w, "{header}")?;
        for i in 0..self.len() {
            let mut row = format!("{},{},{},{},{}", self.times[i], self.x[i], self.k[i], self.e[i], self.x_hat[i]);
            if has_z {
                for v in self.z_hat[i].iter().chain(&self.dz_hat[i]) {
                    row.push_str(&format!(",{v}"));
                }
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }

    /// Little-endian binary cache: magic, header counts, grid, then rows.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        let has_z = self.z_hat.first().is_some_and(|z| !z.is_empty()) as u64;
        for v in [self.servers as u64, self.seed, self.len() as u64, self.r_grid.len() as u64, has_z] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.beta.to_le_bytes())?;
        for r in self.r_grid.nodes() {
            w.write_all(&r.to_le_bytes())?;
        }
        for i in 0..self.len() {
            w.write_all(&self.times[i].to_le_bytes())?;
            for v in [self.x[i], self.k[i], self.e[i]] {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&self.x_hat[i].to_le_bytes())?;
            if has_z == 1 {
                for v in self.z_hat[i].iter().chain(&self.dz_hat[i]) {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse { location: "binary header".into(), message: "bad magic".into() });
        }
        let mut buf = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut buf)?;
            Ok(u64::from_le_bytes(buf))
        };
        let servers = next_u64(&mut r)? as usize;
        let seed = next_u64(&mut r)?;
        let rows = next_u64(&mut r)? as usize;
        let m = next_u64(&mut r)? as usize;
        let has_z = next_u64(&mut r)? == 1;
        let beta = f64::from_bits(next_u64(&mut r)?);
        let nodes = (0..m).map(|_| next_u64(&mut r).map(f64::from_bits)).collect::<Result<Vec<_>>>()?;
        let mut out = ScaledPath {
            servers,
            beta,
            seed,
            r_grid: RGrid::from_nodes(nodes)?,
            times: Vec::with_capacity(rows),
            x: Vec::new(),
            k: Vec::new(),
            e: Vec::new(),
            x_hat: Vec::new(),
            z_hat: Vec::new(),
            dz_hat: Vec::new(),
        };
        for _ in 0..rows {
            out.times.push(f64::from_bits(next_u64(&mut r)?));
            out.x.push(next_u64(&mut r)?);
            out.k.push(next_u64(&mut r)?);
            out.e.push(next_u64(&mut r)?);
            out.x_hat.push(f64::from_bits(next_u64(&mut r)?));
            if has_z {
                let z = (0..m).map(|_| next_u64(&mut r).map(f64::from_bits)).collect::<Result<Vec<_>>>()?;
                let dz = (0..m).map(|_| next_u64(&mut r).map(f64::from_bits)).collect::<Result<Vec<_>>>()?;
                out.z_hat.push(z);
                out.dz_hat.push(dz);
            } else {
                out.z_hat.push(Vec::new());
                out.dz_hat.push(Vec::new());
            }
        }
        Ok(out)
    }
}
