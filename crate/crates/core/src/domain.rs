//! Observation domains `F x {1..n}^w`, lags and gridded fields.
//!
//! Sites are enumerated fixed-site-major: all of `{1..n}^w` (row-major, the
//! first increasing coordinate varying slowest) for the first fixed site,
//! then for the second, and so on. Every counting loop and file format in
//! the crate relies on this order.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm used on (parts of) lag vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagNorm {
    #[default]
    Euclidean,
    L1,
    Max,
}

impl LagNorm {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            LagNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            LagNorm::L1 => v.iter().map(|x| x.abs()).sum(),
            LagNorm::Max => v.iter().fold(0.0, |m, x| f64::max(m, x.abs())),
        }
    }

    pub fn norm_i64(&self, v: &[i64]) -> f64 {
        let v: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        self.norm(&v)
    }
}

/// Integer vectors of dimension `dim` with norm at most `radius`, in
/// lexicographic order.
pub fn integer_ball(radius: i64, dim: usize, norm: LagNorm) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![-radius; dim];
    if dim == 0 {
        return vec![Vec::new()];
    }
    loop {
        if norm.norm_i64(&cur) <= radius as f64 + 1e-12 {
            out.push(cur.clone());
        }
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] < radius {
                cur[k] += 1;
                for c in cur.iter_mut().skip(k + 1) {
                    *c = -radius;
                }
                break;
            }
        }
    }
}

/// `Z(h) = { z in Z : z + h in Z }`, in the order of `sites`.
pub fn lag_closure(sites: &[Vec<i64>], h: &[i64]) -> Result<Vec<Vec<i64>>> {
    for s in sites {
        if s.len() != h.len() {
            return Err(Error::DimensionMismatch {
                expected: s.len(),
                got: h.len(),
            });
        }
    }
    let set: HashSet<&[i64]> = sites.iter().map(|s| s.as_slice()).collect();
    let mut shifted = vec![0i64; h.len()];
    Ok(sites
        .iter()
        .filter(|z| {
            for (k, (zk, hk)) in z.iter().zip(h).enumerate() {
                shifted[k] = zk + hk;
            }
            set.contains(shifted.as_slice())
        })
        .cloned()
        .collect())
}

/// A lag split into its fixed (`h_F`) and increasing (`h_I`) parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lag {
    pub fixed: Vec<i64>,
    pub increasing: Vec<i64>,
}

impl Lag {
    pub fn new(fixed: Vec<i64>, increasing: Vec<i64>) -> Self {
        Self { fixed, increasing }
    }

    /// Splits a full lag vector after its first `q` coordinates.
    pub fn split(full: &[i64], q: usize) -> Result<Self> {
        if q > full.len() {
            return Err(Error::DimensionMismatch {
                expected: q,
                got: full.len(),
            });
        }
        Ok(Self {
            fixed: full[..q].to_vec(),
            increasing: full[q..].to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.fixed.len() + self.increasing.len()
    }

    pub fn full(&self) -> Vec<i64> {
        let mut v = self.fixed.clone();
        v.extend_from_slice(&self.increasing);
        v
    }

    /// The lag as a real vector `(h_F, h_I)`, the coordinate order used by
    /// the dependence models.
    pub fn to_f64(&self) -> Vec<f64> {
        self.fixed
            .iter()
            .chain(self.increasing.iter())
            .map(|&x| x as f64)
            .collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            fixed: self.fixed.iter().map(|x| -x).collect(),
            increasing: self.increasing.iter().map(|x| -x).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.fixed.iter().chain(&self.increasing).all(|&x| x == 0)
    }
}

/// `D_n = F x {1..n}^w` with `F` a fixed finite set of integer sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationDomain {
    fixed_sites: Vec<Vec<i64>>,
    q: usize,
    n: usize,
    w: usize,
}

impl ObservationDomain {
    /// Builds a domain. With `q = 0` pass `vec![vec![]]` (a pure increasing grid).
    pub fn new(fixed_sites: Vec<Vec<i64>>, n: usize, w: usize) -> Result<Self> {
        if fixed_sites.is_empty() {
            return Err(Error::InvalidDomain(
                "fixed site list is empty (use a single empty site for q = 0)".into(),
            ));
        }
        if n == 0 {
            return Err(Error::InvalidDomain(
                "side length n must be positive".into(),
            ));
        }
        if w == 0 {
            return Err(Error::InvalidDomain(
                "at least one increasing dimension is required".into(),
            ));
        }
        let q = fixed_sites[0].len();
        let mut seen = HashSet::with_capacity(fixed_sites.len());
        for s in &fixed_sites {
            if s.len() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: s.len(),
                });
            }
            if !seen.insert(s.as_slice()) {
                return Err(Error::DuplicateSite(s.clone()));
            }
        }
        n.checked_pow(w as u32)
            .and_then(|m| m.checked_mul(fixed_sites.len()))
            .ok_or_else(|| Error::InvalidDomain("site count overflows".into()))?;
        Ok(Self {
            fixed_sites,
            q,
            n,
            w,
        })
    }

    /// Pure increasing grid `{1..n}^w`.
    pub fn increasing_only(n: usize, w: usize) -> Result<Self> {
        Self::new(vec![Vec::new()], n, w)
    }

    /// `F = {1..a_1} x ... x {1..a_q}` (row-major) times `{1..n}^w`.
    pub fn rectangle(fixed_shape: &[usize], n: usize, w: usize) -> Result<Self> {
        if fixed_shape.iter().any(|&a| a == 0) {
            return Err(Error::InvalidDomain("empty fixed rectangle".into()));
        }
        let ranges: Vec<Vec<i64>> = fixed_shape
            .iter()
            .map(|&a| (1..=a as i64).collect())
            .collect();
        let mut sites = vec![Vec::new()];
        for r in &ranges {
            let mut next = Vec::with_capacity(sites.len() * r.len());
            for s in &sites {
                for &x in r {
                    let mut t: Vec<i64> = s.clone();
                    t.push(x);
                    next.push(t);
                }
            }
            sites = next;
        }
        Self::new(sites, n, w)
    }

    /// Same fixed set with a different side length.
    pub fn with_side(&self, n: usize) -> Result<Self> {
        Self::new(self.fixed_sites.clone(), n, self.w)
    }

    pub fn fixed_sites(&self) -> &[Vec<i64>] {
        &self.fixed_sites
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn d(&self) -> usize {
        self.q + self.w
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `n^w`.
    pub fn increasing_count(&self) -> usize {
        self.n.pow(self.w as u32)
    }

    pub fn site_count(&self) -> usize {
        self.fixed_sites.len() * self.increasing_count()
    }

    /// Increasing coordinates (1-based) of the `lin`-th point of `{1..n}^w`.
    pub fn increasing_coords(&self, mut lin: usize) -> Vec<i64> {
        let mut c = vec![0i64; self.w];
        for k in (0..self.w).rev() {
            c[k] = (lin % self.n) as i64 + 1;
            lin /= self.n;
        }
        c
    }

    pub fn site_coords(&self, index: usize) -> Vec<i64> {
        let m = self.increasing_count();
        let mut c = self.fixed_sites[index / m].clone();
        c.extend(self.increasing_coords(index % m));
        c
    }

    /// All site coordinates in canonical order.
    pub fn sites(&self) -> Vec<Vec<i64>> {
        (0..self.site_count())
            .map(|i| self.site_coords(i))
            .collect()
    }

    /// Lookup table from fixed-site coordinates to their position in `F`.
    pub fn fixed_index(&self) -> HashMap<Vec<i64>, usize> {
        self.fixed_sites
            .iter()
            .enumerate()
            .map(|(k, s)| (s.clone(), k))
            .collect()
    }

    /// Canonical index of the site with the given full coordinates.
    pub fn site_index_with(
        &self,
        fixed_index: &HashMap<Vec<i64>, usize>,
        coords: &[i64],
    ) -> Option<usize> {
        if coords.len() != self.d() {
            return None;
        }
        let f = *fixed_index.get(&coords[..self.q])?;
        let mut lin = 0usize;
        for &x in &coords[self.q..] {
            if x < 1 || x > self.n as i64 {
                return None;
            }
            lin = lin * self.n + (x - 1) as usize;
        }
        Some(f * self.increasing_count() + lin)
    }

    pub fn site_index(&self, coords: &[i64]) -> Option<usize> {
        self.site_index_with(&self.fixed_index(), coords)
    }

    pub fn check_lag(&self, lag: &Lag) -> Result<()> {
        if lag.fixed.len() != self.q {
            return Err(Error::DimensionMismatch {
                expected: self.q,
                got: lag.fixed.len(),
            });
        }
        if lag.increasing.len() != self.w {
            return Err(Error::DimensionMismatch {
                expected: self.w,
                got: lag.increasing.len(),
            });
        }
        Ok(())
    }

    /// The lag closure `D_n(h)` as a pair list over `F(h_F)` plus, per
    /// increasing dimension, the half-open range of 0-based start offsets.
    pub fn closure(&self, lag: &Lag) -> Result<LagClosure> {
        self.check_lag(lag)?;
        let index = self.fixed_index();
        let mut fixed_pairs = Vec::new();
        for (k, f) in self.fixed_sites.iter().enumerate() {
            let partner: Vec<i64> = f.iter().zip(&lag.fixed).map(|(a, b)| a + b).collect();
            if let Some(&j) = index.get(&partner) {
                fixed_pairs.push((k, j));
            }
        }
        let n = self.n as i64;
        let ranges = lag
            .increasing
            .iter()
            .map(|&h| {
                let lo = (-h).max(0);
                let hi = (n - h).min(n);
                if hi > lo {
                    (lo as usize, hi as usize)
                } else {
                    (0, 0)
                }
            })
            .collect();
        Ok(LagClosure {
            fixed_pairs,
            ranges,
            shift: lag.increasing.clone(),
            n: self.n,
        })
    }
}

/// Enumerable description of `D_n(h)`.
#[derive(Debug, Clone)]
pub struct LagClosure {
    /// `(k, j)` with `F[j] = F[k] + h_F`.
    pub fixed_pairs: Vec<(usize, usize)>,
    /// Per increasing dimension, 0-based offsets `[lo, hi)` whose shift stays inside.
    pub ranges: Vec<(usize, usize)>,
    shift: Vec<i64>,
    n: usize,
}

impl LagClosure {
    pub fn len(&self) -> usize {
        self.fixed_pairs.len()
            * self
                .ranges
                .iter()
                .map(|(lo, hi)| hi - lo)
                .product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(site, partner)` for every `s in D_n(h)` in canonical order.
    pub fn for_each_pair(&self, mut f: impl FnMut(usize, usize)) {
        if self.is_empty() {
            return;
        }
        let w = self.ranges.len();
        let m = self.n.pow(w as u32);
        // linear offset of the increasing shift
        let mut shift_lin: i64 = 0;
        for &h in &self.shift {
            shift_lin = shift_lin * self.n as i64 + h;
        }
        let mut cur: Vec<usize> = self.ranges.iter().map(|r| r.0).collect();
        for &(fk, fj) in &self.fixed_pairs {
            for (c, r) in cur.iter_mut().zip(&self.ranges) {
                *c = r.0;
            }
            loop {
                let mut lin = 0usize;
                for &c in &cur {
                    lin = lin * self.n + c;
                }
                let s = fk * m + lin;
                let p = (fj * m) as i64 + lin as i64 + shift_lin;
                f(s, p as usize);
                // advance the odometer
                let mut k = w;
                let mut done = true;
                while k > 0 {
                    k -= 1;
                    cur[k] += 1;
                    if cur[k] < self.ranges[k].1 {
                        done = false;
                        break;
                    }
                    cur[k] = self.ranges[k].0;
                }
                if done {
                    break;
                }
            }
        }
    }
}

/// Real-valued observations on every site of a domain, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    domain: ObservationDomain,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(domain: ObservationDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.site_count() {
            return Err(Error::DimensionMismatch {
                expected: domain.site_count(),
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite field value {v}"
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn domain(&self) -> &ObservationDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn all_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }

    /// Sub-field on `F x prod_k [start_k + 1, start_k + len]` (0-based starts),
    /// re-indexed as `F x {1..len}^w`.
    pub fn window(&self, starts: &[usize], len: usize) -> Result<Self> {
        let d = &self.domain;
        if starts.len() != d.w() {
            return Err(Error::DimensionMismatch {
                expected: d.w(),
                got: starts.len(),
            });
        }
        if len == 0 || starts.iter().any(|&s| s + len > d.n()) {
            return Err(Error::InvalidArgument(format!(
                "window {starts:?}+{len} exceeds side length {}",
                d.n()
            )));
        }
        let sub = d.with_side(len)?;
        let m_full = d.increasing_count();
        let m_sub = sub.increasing_count();
        let mut values = Vec::with_capacity(sub.site_count());
        for f in 0..d.fixed_sites().len() {
            for lin in 0..m_sub {
                let c = sub.increasing_coords(lin);
                let mut full_lin = 0usize;
                for (k, &x) in c.iter().enumerate() {
                    full_lin = full_lin * d.n() + starts[k] + (x - 1) as usize;
                }
                values.push(self.values[f * m_full + full_lin]);
            }
        }
        Self::new(sub, values)
    }

    /// Prefix window `F x {1..len}^w`.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        self.window(&vec![0; self.domain.w()], len)
    }

    /// Field with every site reflected through the centre of the grid
    /// (both the fixed and the increasing coordinates negated).
    pub fn reversed(&self) -> Result<Self> {
        let d = &self.domain;
        let fixed: Vec<Vec<i64>> = d
            .fixed_sites()
            .iter()
            .map(|s| s.iter().map(|x| -x).collect())
            .collect();
        let rd = ObservationDomain::new(fixed, d.n(), d.w())?;
        let m = d.increasing_count();
        let mut values = vec![0.0; self.values.len()];
        for f in 0..d.fixed_sites().len() {
            for lin in 0..m {
                values[f * m + (m - 1 - lin)] = self.values[f * m + lin];
            }
        }
        Self::new(rd, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scale_domains() {
        let d = ObservationDomain::rectangle(&[15, 15], 300, 1).unwrap();
        assert_eq!(d.site_count(), 67_500);
        assert_eq!(d.d(), 3);
        let d = ObservationDomain::increasing_only(40, 3).unwrap();
        assert_eq!(d.site_count(), 64_000);
        assert_eq!(d.q(), 0);
        let d = ObservationDomain::new(vec![vec![0]], 1, 1).unwrap();
        assert_eq!(d.site_count(), 1);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            ObservationDomain::new(vec![vec![1, 2], vec![1, 2]], 3, 1),
            Err(Error::DuplicateSite(_))
        ));
        assert!(matches!(
            ObservationDomain::new(vec![vec![1, 2], vec![1]], 3, 1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(ObservationDomain::new(vec![], 3, 1).is_err());
        assert!(ObservationDomain::new(vec![vec![1]], 0, 1).is_err());
    }

    #[test]
    fn canonical_order_and_index() {
        let d = ObservationDomain::new(vec![vec![5], vec![2]], 3, 2).unwrap();
        let sites = d.sites();
        assert_eq!(sites[0], vec![5, 1, 1]);
        assert_eq!(sites[1], vec![5, 1, 2]);
        assert_eq!(sites[3], vec![5, 2, 1]);
        assert_eq!(sites[9], vec![2, 1, 1]);
        for (i, s) in sites.iter().enumerate() {
            assert_eq!(d.site_index(s), Some(i));
        }
        assert_eq!(d.site_index(&[5, 0, 1]), None);
        assert_eq!(d.site_index(&[7, 1, 1]), None);
    }

    #[test]
    fn lag_closure_examples() {
        let z: Vec<Vec<i64>> = (1..=5).map(|x| vec![x]).collect();
        assert_eq!(lag_closure(&z, &[0]).unwrap(), z);
        assert_eq!(
            lag_closure(&z, &[2]).unwrap(),
            vec![vec![1], vec![2], vec![3]]
        );
        let sq = vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]];
        assert_eq!(lag_closure(&sq, &[1, 1]).unwrap(), vec![vec![1, 1]]);
        assert!(matches!(
            lag_closure(&sq, &[1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn closure_matches_generic_lag_closure() {
        let d = ObservationDomain::new(vec![vec![0, 0], vec![1, 0], vec![0, 2], vec![1, 1]], 4, 2)
            .unwrap();
        let sites = d.sites();
        for full in integer_ball(3, 4, LagNorm::Max) {
            let lag = Lag::split(&full, 2).unwrap();
            let generic = lag_closure(&sites, &full).unwrap();
            let c = d.closure(&lag).unwrap();
            assert_eq!(c.len(), generic.len(), "lag {full:?}");
            let mut pairs = Vec::new();
            c.for_each_pair(|s, p| pairs.push((s, p)));
            let got: Vec<Vec<i64>> = pairs.iter().map(|&(s, _)| d.site_coords(s)).collect();
            assert_eq!(got, generic);
            for (s, p) in pairs {
                let shifted: Vec<i64> = d
                    .site_coords(s)
                    .iter()
                    .zip(&full)
                    .map(|(a, b)| a + b)
                    .collect();
                assert_eq!(d.site_coords(p), shifted);
            }
        }
    }

    #[test]
    fn integer_ball_counts() {
        assert_eq!(integer_ball(1, 1, LagNorm::Euclidean).len(), 3);
        assert_eq!(integer_ball(1, 2, LagNorm::Euclidean).len(), 5);
        assert_eq!(integer_ball(1, 2, LagNorm::Max).len(), 9);
        assert_eq!(integer_ball(2, 0, LagNorm::Max), vec![Vec::<i64>::new()]);
    }

    #[test]
    fn window_extracts_subgrid() {
        let d = ObservationDomain::new(vec![vec![1], vec![2]], 5, 1).unwrap();
        let values: Vec<f64> = (0..10).map(|v| v as f64 + 1.0).collect();
        let f = SpaceTimeField::new(d, values).unwrap();
        let w = f.window(&[1], 3).unwrap();
        assert_eq!(w.values(), &[2.0, 3.0, 4.0, 7.0, 8.0, 9.0]);
        assert_eq!(w.domain().n(), 3);
        assert!(f.window(&[3], 3).is_err());
    }
}
