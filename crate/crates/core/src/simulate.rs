//! Exact simulation of Brown-Resnick fields by extremal functions.
//!
//! The extremal function rooted at site `k` is `exp(W(s) - W(s_k) - delta(s - s_k))`
//! for a centred Gaussian `W` with variogram `2 delta`. Because `W` has
//! stationary increments a single factorisation serves every root.
//!
//! Two factorisations are available. [`GaussianFactor`] is the dense
//! Cholesky factor of `Cov(W(s), W(t)) = delta(s) + delta(t) - delta(s - t)`
//! over all sites. [`AdditiveFactor`] writes `delta` as a sum of power
//! variograms of low-dimensional projections of the lag and samples each
//! independent summand on its (deduplicated) projected points, which has the
//! same law and scales to grids far beyond the dense cap.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domain::{ObservationDomain, SpaceTimeField};
use crate::error::{Error, Result};
use crate::models::{DependenceModel, PowerComponent};

/// Default site cap for the dense factor; `EXTREMO_MAX_SITES` overrides it.
pub const DEFAULT_MAX_SITES: usize = 20_000;

/// Poisson arrivals allowed per site before the sweep is declared broken.
pub const MAX_ARRIVALS_PER_SITE: usize = 1_000_000;

const TABLE_CAP: usize = 30_000_000;

pub fn max_sites() -> usize {
    std::env::var("EXTREMO_MAX_SITES")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_SITES)
}

/// Generator for replicate (or block) `stream` under a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Packed lower-triangular Cholesky factor with the jitter ladder
/// `0, 1e-10 tr/N, 1e-8 tr/N`. Returns the factor and the jitter used.
fn cholesky_packed(n: usize, entry: impl Fn(usize, usize) -> f64) -> Result<(Vec<f64>, f64)> {
    let mut a = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        for j in 0..=i {
            a[i * (i + 1) / 2 + j] = entry(i, j);
        }
    }
    let trace: f64 = (0..n).map(|i| a[i * (i + 1) / 2 + i]).sum();
    if n == 0 || trace == 0.0 {
        return Ok((vec![0.0; a.len()], 0.0));
    }
    let mut failed_row = 0;
    for jitter in [0.0, 1e-10 * trace / n as f64, 1e-8 * trace / n as f64] {
        match factor_in_place(&a, n, jitter) {
            Ok(l) => return Ok((l, jitter)),
            Err(row) => failed_row = row,
        }
    }
    Err(Error::NotPositiveDefinite { row: failed_row })
}

fn factor_in_place(a: &[f64], n: usize, jitter: f64) -> std::result::Result<Vec<f64>, usize> {
    let mut l = a.to_vec();
    for i in 0..n {
        let ri = i * (i + 1) / 2;
        for j in 0..=i {
            let rj = j * (j + 1) / 2;
            let dot: f64 = l[ri..ri + j]
                .iter()
                .zip(&l[rj..rj + j])
                .map(|(x, y)| x * y)
                .sum();
            let mut s = a[ri + j] - dot;
            if i == j {
                s += jitter;
                if !(s > 0.0) {
                    return Err(i);
                }
                l[ri + i] = s.sqrt();
            } else {
                l[ri + j] = s / l[rj + j];
            }
        }
    }
    Ok(l)
}

/// Rows `from..to` of `L z` into `out`.
fn lower_mul_rows(l: &[f64], z: &[f64], out: &mut [f64], from: usize, to: usize) {
    for i in from..to {
        let ri = i * (i + 1) / 2;
        out[i] = l[ri..=ri + i]
            .iter()
            .zip(&z[..=i])
            .map(|(a, b)| a * b)
            .sum();
    }
}

/// Dense factor of the origin-pinned covariance over all domain sites.
#[derive(Debug, Clone)]
pub struct GaussianFactor {
    sites: Vec<Vec<f64>>,
    chol: Vec<f64>,
    jitter: f64,
}

impl GaussianFactor {
    /// Factor for the sites of `domain` (cap: [`max_sites`]).
    pub fn build(model: &DependenceModel, domain: &ObservationDomain) -> Result<Self> {
        check_model_domain(model, domain)?;
        let cap = max_sites();
        if domain.site_count() > cap {
            return Err(Error::TooManySites {
                sites: domain.site_count(),
                cap,
            });
        }
        let sites = domain
            .sites()
            .into_iter()
            .map(|s| s.into_iter().map(|x| x as f64).collect())
            .collect();
        Self::from_points(model, sites)
    }

    /// Factor for arbitrary points in lag space.
    pub fn from_points(model: &DependenceModel, sites: Vec<Vec<f64>>) -> Result<Self> {
        let n = sites.len();
        let cap = max_sites();
        if n > cap {
            return Err(Error::TooManySites { sites: n, cap });
        }
        let var: Vec<f64> = sites.iter().map(|s| model.eval(s)).collect();
        let (chol, jitter) = cholesky_packed(n, |i, j| {
            let diff: Vec<f64> = sites[i].iter().zip(&sites[j]).map(|(a, b)| a - b).collect();
            var[i] + var[j] - model.eval(&diff)
        })?;
        Ok(Self {
            sites,
            chol,
            jitter,
        })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Vec<f64>] {
        &self.sites
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Entry `(i, j)` of the lower factor.
    pub fn chol(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.chol[i * (i + 1) / 2 + j]
        }
    }

    fn draw_w<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut Vec<f64>, w: &mut Vec<f64>) {
        let n = self.len();
        z.clear();
        z.extend((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        w.resize(n, 0.0);
        lower_mul_rows(&self.chol, z, w, 0, n);
    }

    /// One draw of `G(s) = W(s) - W(s_pin)`; `G(s_pin) = 0` exactly.
    pub fn sample_pinned<R: Rng + ?Sized>(&self, pin: usize, rng: &mut R) -> Result<Vec<f64>> {
        if pin >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "pin index {pin} out of range"
            )));
        }
        let (mut z, mut w) = (Vec::new(), Vec::new());
        self.draw_w(rng, &mut z, &mut w);
        let base = w[pin];
        for x in w.iter_mut() {
            *x -= base;
        }
        w[pin] = 0.0;
        Ok(w)
    }
}

struct Component {
    /// Position of each site's projection in the unique point list.
    idx: Vec<u32>,
    /// Factor over unique points `1..m` pinned at unique point 0.
    chol: Vec<f64>,
    m: usize,
    jitter: f64,
}

/// Sum of independent per-component Gaussian factors.
pub struct AdditiveFactor {
    components: Vec<Component>,
    n_sites: usize,
}

impl AdditiveFactor {
    pub fn build(model: &DependenceModel, domain: &ObservationDomain) -> Result<Self> {
        check_model_domain(model, domain)?;
        let sites: Vec<Vec<f64>> = domain
            .sites()
            .into_iter()
            .map(|s| s.into_iter().map(|x| x as f64).collect())
            .collect();
        Self::from_points(model, &sites)
    }

    pub fn from_points(model: &DependenceModel, sites: &[Vec<f64>]) -> Result<Self> {
        let components = model
            .additive_components()
            .iter()
            .map(|c| build_component(c, sites))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            components,
            n_sites: sites.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.n_sites
    }

    pub fn is_empty(&self) -> bool {
        self.n_sites == 0
    }

    /// Largest jitter added to any component.
    pub fn jitter(&self) -> f64 {
        self.components.iter().map(|c| c.jitter).fold(0.0, f64::max)
    }

    /// Unique projected points per component.
    pub fn component_sizes(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.m).collect()
    }

    pub fn sample_pinned<R: Rng + ?Sized>(&self, pin: usize, rng: &mut R) -> Result<Vec<f64>> {
        if pin >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "pin index {pin} out of range"
            )));
        }
        let mut st = AdditiveDraw::new(self);
        st.reset(rng);
        let base = st.value(pin);
        let mut g: Vec<f64> = (0..self.len()).map(|j| st.value(j) - base).collect();
        g[pin] = 0.0;
        Ok(g)
    }
}

fn build_component(c: &PowerComponent, sites: &[Vec<f64>]) -> Result<Component> {
    let mut keys: HashMap<Vec<i64>, u32> = HashMap::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut idx = Vec::with_capacity(sites.len());
    for s in sites {
        let p = c.project(s);
        let key: Vec<i64> = p.iter().map(|x| (x * 1e9).round() as i64).collect();
        let next = points.len() as u32;
        let id = *keys.entry(key).or_insert_with(|| {
            points.push(p);
            next
        });
        idx.push(id);
    }
    let m = points.len();
    let origin = &points[0];
    let rel: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(origin).map(|(a, b)| a - b).collect())
        .collect();
    let var: Vec<f64> = rel.iter().map(|r| c.variogram(r)).collect();
    let (chol, jitter) = cholesky_packed(m - 1, |i, j| {
        let diff: Vec<f64> = rel[i].iter().zip(&rel[j]).map(|(a, b)| a - b).collect();
        var[i] + var[j] - c.variogram(&diff)
    })?;
    Ok(Component {
        idx,
        chol,
        m,
        jitter,
    })
}

/// One Gaussian draw evaluated lazily, in increasing unique-point order.
struct AdditiveDraw<'a> {
    f: &'a AdditiveFactor,
    z: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    done: Vec<usize>,
}

impl<'a> AdditiveDraw<'a> {
    fn new(f: &'a AdditiveFactor) -> Self {
        let k = f.components.len();
        Self {
            f,
            z: f.components
                .iter()
                .map(|c| vec![0.0; c.m.saturating_sub(1)])
                .collect(),
            w: f.components.iter().map(|c| vec![0.0; c.m]).collect(),
            done: vec![1; k],
        }
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for z in self.z.iter_mut() {
            for x in z.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
        }
        self.done.iter_mut().for_each(|d| *d = 1);
    }

    #[inline]
    fn value(&mut self, site: usize) -> f64 {
        let mut s = 0.0;
        for (c, comp) in self.f.components.iter().enumerate() {
            let u = comp.idx[site] as usize;
            if u >= self.done[c] {
                let (from, to) = (self.done[c] - 1, u);
                lower_mul_rows(&comp.chol, &self.z[c], &mut self.w[c][1..], from, to);
                self.done[c] = u + 1;
            }
            s += self.w[c][u];
        }
        s
    }
}

struct DenseDraw<'a> {
    f: &'a GaussianFactor,
    z: Vec<f64>,
    w: Vec<f64>,
}

trait Draw {
    fn reset(&mut self, rng: &mut ChaCha20Rng);
    fn value(&mut self, site: usize) -> f64;
}

impl Draw for AdditiveDraw<'_> {
    fn reset(&mut self, rng: &mut ChaCha20Rng) {
        AdditiveDraw::reset(self, rng)
    }

    fn value(&mut self, site: usize) -> f64 {
        AdditiveDraw::value(self, site)
    }
}

impl Draw for DenseDraw<'_> {
    fn reset(&mut self, rng: &mut ChaCha20Rng) {
        self.f.draw_w(rng, &mut self.z, &mut self.w);
    }

    fn value(&mut self, site: usize) -> f64 {
        self.w[site]
    }
}

/// `delta(s_j - s_k)` for all site pairs of a domain.
struct DeltaTable {
    n_inc: usize,
    n_fixed: usize,
    /// Offset of each increasing point in the lag grid `[-(n-1), n-1]^w`.
    pos: Vec<usize>,
    center: usize,
    cells: usize,
    fixed_lag: Vec<u32>,
    table: Vec<f64>,
}

impl DeltaTable {
    fn build(model: &DependenceModel, domain: &ObservationDomain) -> Option<Self> {
        let (n, w) = (domain.n(), domain.w());
        let span = 2 * n - 1;
        let cells = span.checked_pow(w as u32)?;
        let fixed = domain.fixed_sites();
        let mut lag_ids: HashMap<Vec<i64>, u32> = HashMap::new();
        let mut lags: Vec<Vec<i64>> = Vec::new();
        let mut fixed_lag = Vec::with_capacity(fixed.len() * fixed.len());
        for a in fixed {
            for b in fixed {
                let l: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                let next = lags.len() as u32;
                let id = *lag_ids.entry(l.clone()).or_insert_with(|| {
                    lags.push(l);
                    next
                });
                fixed_lag.push(id);
            }
        }
        if lags.len().checked_mul(cells)? > TABLE_CAP {
            return None;
        }
        let mut table = Vec::with_capacity(lags.len() * cells);
        let mut lag = vec![0.0; domain.d()];
        for fl in &lags {
            for (k, &x) in fl.iter().enumerate() {
                lag[k] = x as f64;
            }
            for cell in 0..cells {
                let mut r = cell;
                for k in (0..w).rev() {
                    lag[domain.q() + k] = (r % span) as f64 - (n as f64 - 1.0);
                    r /= span;
                }
                table.push(model.eval(&lag));
            }
        }
        let m = domain.increasing_count();
        let pos = (0..m)
            .map(|lin| {
                domain
                    .increasing_coords(lin)
                    .iter()
                    .fold(0usize, |acc, &c| acc * span + (c - 1) as usize)
            })
            .collect();
        let center = (0..w).fold(0usize, |acc, _| acc * span + (n - 1));
        Some(Self {
            n_inc: m,
            n_fixed: fixed.len(),
            pos,
            center,
            cells,
            fixed_lag,
            table,
        })
    }

    #[inline]
    fn get(&self, j: usize, k: usize) -> f64 {
        let (fj, lj) = (j / self.n_inc, j % self.n_inc);
        let (fk, lk) = (k / self.n_inc, k % self.n_inc);
        let id = self.fixed_lag[fj * self.n_fixed + fk] as usize;
        self.table[id * self.cells + self.center + self.pos[lj] - self.pos[lk]]
    }
}

/// Which Gaussian factorisation drives the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// The additive factorisation.
    #[default]
    Auto,
    Dense,
    Additive,
}

enum Factor {
    Dense(GaussianFactor),
    Additive(AdditiveFactor),
}

/// Counters from one sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SweepStats {
    pub draws: usize,
    pub accepted: usize,
    pub max_arrivals: usize,
}

/// Prepared simulator: the factorisation and the `delta` table are built
/// once and shared by every replicate.
pub struct Simulator {
    model: DependenceModel,
    domain: ObservationDomain,
    factor: Factor,
    table: Option<DeltaTable>,
    coords: Vec<Vec<f64>>,
}

fn check_model_domain(model: &DependenceModel, domain: &ObservationDomain) -> Result<()> {
    if model.dim() != domain.d() {
        return Err(Error::DimensionMismatch {
            expected: domain.d(),
            got: model.dim(),
        });
    }
    Ok(())
}

impl Simulator {
    pub fn new(
        model: &DependenceModel,
        domain: &ObservationDomain,
        kind: SamplerKind,
    ) -> Result<Self> {
        check_model_domain(model, domain)?;
        let factor = match kind {
            SamplerKind::Dense => Factor::Dense(GaussianFactor::build(model, domain)?),
            SamplerKind::Auto | SamplerKind::Additive => {
                Factor::Additive(AdditiveFactor::build(model, domain)?)
            }
        };
        let table = DeltaTable::build(model, domain);
        let coords = if table.is_none() {
            domain
                .sites()
                .into_iter()
                .map(|s| s.into_iter().map(|x| x as f64).collect())
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            model: model.clone(),
            domain: domain.clone(),
            factor,
            table,
            coords,
        })
    }

    pub fn domain(&self) -> &ObservationDomain {
        &self.domain
    }

    pub fn simulate(&self, rng: &mut ChaCha20Rng) -> Result<SpaceTimeField> {
        self.simulate_with_stats(rng).map(|(f, _)| f)
    }

    pub fn simulate_with_stats(
        &self,
        rng: &mut ChaCha20Rng,
    ) -> Result<(SpaceTimeField, SweepStats)> {
        let (log_z, stats) = match &self.factor {
            Factor::Dense(f) => self.sweep(
                &mut DenseDraw {
                    f,
                    z: Vec::new(),
                    w: Vec::new(),
                },
                rng,
            )?,
            Factor::Additive(f) => self.sweep(&mut AdditiveDraw::new(f), rng)?,
        };
        let values = log_z.into_iter().map(f64::exp).collect();
        Ok((SpaceTimeField::new(self.domain.clone(), values)?, stats))
    }

    #[inline]
    fn delta(&self, j: usize, k: usize, scratch: &mut [f64]) -> f64 {
        match &self.table {
            Some(t) => t.get(j, k),
            None => {
                for (x, (a, b)) in scratch
                    .iter_mut()
                    .zip(self.coords[j].iter().zip(&self.coords[k]))
                {
                    *x = a - b;
                }
                self.model.eval(scratch)
            }
        }
    }

    /// Runs the extremal-functions sweep in log scale.
    fn sweep<D: Draw>(
        &self,
        draw: &mut D,
        rng: &mut ChaCha20Rng,
    ) -> Result<(Vec<f64>, SweepStats)> {
        let n = self.domain.site_count();
        let mut log_z = vec![f64::NEG_INFINITY; n];
        let mut stats = SweepStats::default();
        let mut scratch = vec![0.0; self.domain.d()];
        for k in 0..n {
            let mut zeta: f64 = rng.sample(Exp1);
            let mut arrivals = 0usize;
            while -zeta.ln() > log_z[k] {
                arrivals += 1;
                if arrivals > MAX_ARRIVALS_PER_SITE {
                    return Err(Error::Numerical(format!(
                        "more than {MAX_ARRIVALS_PER_SITE} arrivals at site {k}"
                    )));
                }
                stats.draws += 1;
                draw.reset(rng);
                let base = draw.value(k) + zeta.ln();
                let accept = (0..k).rev().all(|j| {
                    let y = draw.value(j) - base - self.delta(j, k, &mut scratch);
                    y < log_z[j]
                });
                if accept {
                    stats.accepted += 1;
                    log_z[k] = -zeta.ln();
                    for j in k + 1..n {
                        let y = draw.value(j) - base - self.delta(j, k, &mut scratch);
                        if !y.is_finite() {
                            return Err(Error::Numerical(format!(
                                "non-finite extremal function at site {j}"
                            )));
                        }
                        if y > log_z[j] {
                            log_z[j] = y;
                        }
                    }
                }
                zeta += rng.sample::<f64, _>(Exp1);
            }
            stats.max_arrivals = stats.max_arrivals.max(arrivals);
        }
        Ok((log_z, stats))
    }
}

/// One exact draw of the Brown-Resnick field with dependence `model` on `domain`.
pub fn simulate_brown_resnick(
    model: &DependenceModel,
    domain: &ObservationDomain,
    rng: &mut ChaCha20Rng,
) -> Result<SpaceTimeField> {
    Simulator::new(model, domain, SamplerKind::Auto)?.simulate(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;
    use crate::stats;

    fn iso() -> DependenceModel {
        DependenceModel::with_default_box(Family::IsoFrac, 3, vec![0.8, 0.4, 1.5, 1.0]).unwrap()
    }

    #[test]
    fn single_site_factor() {
        // delta(s) = 1 at s = (1, 0, 0) for C1 = 1
        let m = DependenceModel::with_default_box(Family::IsoFrac, 3, vec![1.0, 0.4, 1.5, 1.0])
            .unwrap();
        let f = GaussianFactor::from_points(&m, vec![vec![1.0, 0.0, 0.0]]).unwrap();
        assert!((f.chol(0, 0) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(f.jitter(), 0.0);
    }

    #[test]
    fn origin_row_needs_jitter_and_pins() {
        let f =
            GaussianFactor::from_points(&iso(), vec![vec![0.0; 3], vec![1.0, 1.0, 2.0]]).unwrap();
        assert!(f.jitter() > 0.0);
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            let g = f.sample_pinned(1, &mut rng).unwrap();
            assert_eq!(g[1], 0.0);
        }
    }

    #[test]
    fn factor_reconstructs_covariance() {
        let m = iso();
        let pts = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 2.0, 1.0],
            vec![4.0, 1.0, 5.0],
            vec![1.0, 3.0, 2.0],
            vec![3.0, 3.0, 3.0],
        ];
        let f = GaussianFactor::from_points(&m, pts.clone()).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..5 {
            for j in 0..5 {
                let d: Vec<f64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect();
                let mut g = m.eval(&pts[i]) + m.eval(&pts[j]) - m.eval(&d);
                if i == j {
                    g += f.jitter();
                    assert!((g - 2.0 * m.eval(&pts[i]) - f.jitter()).abs() < 1e-12);
                }
                let r: f64 = (0..5).map(|k| f.chol(i, k) * f.chol(j, k)).sum();
                num += (r - g).powi(2);
                den += g * g;
            }
        }
        assert!((num / den).sqrt() < 1e-8);
    }

    #[test]
    fn dense_cap() {
        let d = ObservationDomain::rectangle(&[3, 3], 3000, 1).unwrap();
        assert!(matches!(
            GaussianFactor::build(&iso(), &d),
            Err(Error::TooManySites {
                sites: 27000,
                cap: DEFAULT_MAX_SITES
            })
        ));
    }

    #[test]
    fn pinned_moments_match_both_factors() {
        let m = iso();
        let d = ObservationDomain::rectangle(&[1, 2], 2, 1).unwrap();
        let sites: Vec<Vec<f64>> = d
            .sites()
            .into_iter()
            .map(|s| s.into_iter().map(|x| x as f64).collect())
            .collect();
        let dense = GaussianFactor::build(&m, &d).unwrap();
        let add = AdditiveFactor::build(&m, &d).unwrap();
        let pin = 1;
        let draws = 20_000;
        for which in 0..2 {
            let mut rng = stream_rng(7, which);
            let mut sum = [[0.0; 4]; 4];
            for _ in 0..draws {
                let g = if which == 0 {
                    dense.sample_pinned(pin, &mut rng).unwrap()
                } else {
                    add.sample_pinned(pin, &mut rng).unwrap()
                };
                assert_eq!(g[pin], 0.0);
                for a in 0..4 {
                    for b in 0..4 {
                        sum[a][b] += g[a] * g[b];
                    }
                }
            }
            let rel = |a: usize| -> Vec<f64> {
                sites[a]
                    .iter()
                    .zip(&sites[pin])
                    .map(|(x, y)| x - y)
                    .collect()
            };
            for a in 0..4 {
                for b in 0..4 {
                    if a == pin || b == pin {
                        continue;
                    }
                    let dab: Vec<f64> =
                        sites[a].iter().zip(&sites[b]).map(|(x, y)| x - y).collect();
                    let want = m.eval(&rel(a)) + m.eval(&rel(b)) - m.eval(&dab);
                    let got = sum[a][b] / draws as f64;
                    assert!(
                        (got - want).abs() < 0.05 * want.abs().max(0.5),
                        "{which} {a} {b}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_site_is_unit_frechet() {
        let d = ObservationDomain::rectangle(&[1, 1], 1, 1).unwrap();
        let sim = Simulator::new(&iso(), &d, SamplerKind::Auto).unwrap();
        let mut rng = stream_rng(3, 0);
        let x: Vec<f64> = (0..5000)
            .map(|_| sim.simulate(&mut rng).unwrap().values()[0])
            .collect();
        let ks = stats::ks_statistic(&x, stats::frechet_cdf);
        assert!(stats::ks_pvalue(ks, x.len()) > 0.01);
    }

    #[test]
    fn deterministic_and_sampler_independent_law() {
        let d = ObservationDomain::rectangle(&[2, 2], 5, 1).unwrap();
        let sim = Simulator::new(&iso(), &d, SamplerKind::Auto).unwrap();
        let a = sim.simulate(&mut stream_rng(11, 4)).unwrap();
        let b = sim.simulate(&mut stream_rng(11, 4)).unwrap();
        assert_eq!(a, b);
        assert!(a.all_positive());
        let dense = Simulator::new(&iso(), &d, SamplerKind::Dense).unwrap();
        let (f, st) = dense.simulate_with_stats(&mut stream_rng(11, 4)).unwrap();
        assert!(f.all_positive());
        assert!(st.accepted >= 1 && st.accepted <= d.site_count());
    }

    #[test]
    fn delta_table_matches_model() {
        let m = DependenceModel::with_default_box(
            Family::TimeShifted,
            3,
            vec![0.4, 0.8, 0.5, 1.5, 1.5, 1.0, 1.0, -0.5],
        )
        .unwrap();
        let d = ObservationDomain::new(vec![vec![0, 0], vec![2, 1], vec![1, 3]], 4, 1).unwrap();
        let t = DeltaTable::build(&m, &d).unwrap();
        let sites = d.sites();
        for j in 0..sites.len() {
            for k in 0..sites.len() {
                let lag: Vec<f64> = sites[j]
                    .iter()
                    .zip(&sites[k])
                    .map(|(a, b)| (a - b) as f64)
                    .collect();
                assert_eq!(t.get(j, k), m.eval(&lag));
            }
        }
    }
}
