//! Box-constrained Nelder-Mead with restarts, and shifted Halton starts.

use rand::Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let (mut inv, mut f) = (0.0, 1.0 / b);
    while i > 0 {
        inv += f * (i % base as u64) as f64;
        i /= base as u64;
        f /= b;
    }
    inv
}

/// `count` points of the Halton sequence in `[0,1)^dim` under a random
/// Cranley-Patterson rotation.
pub fn shifted_halton<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|k| (radical_inverse(i, PRIMES[k]) + shift[k]).fract())
                .collect()
        })
        .collect()
}

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Initial simplex edge in unit-cube coordinates.
    pub step: f64,
    pub xtol: f64,
    pub ftol: f64,
    pub max_evals: usize,
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            step: 0.1,
            xtol: 1e-10,
            ftol: 1e-14,
            max_evals: 6000,
            max_restarts: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub f_start: f64,
    pub evals: usize,
}

/// Maps a point into `[0, 1]` by reflection at the faces, then clamps.
fn reflect(u: &mut [f64]) {
    for x in u.iter_mut() {
        if *x < 0.0 {
            *x = -*x;
        }
        if *x > 1.0 {
            *x = 2.0 - *x;
        }
        *x = x.clamp(0.0, 1.0);
    }
}

/// Minimises `f` over the box `bounds` from `start`, restarting from the
/// best point until a restart no longer improves it.
pub fn minimize(
    f: impl Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    start: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let k = bounds.len();
    let to_x = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(bounds)
            .map(|(&t, &(lo, hi))| lo + t * (hi - lo))
            .collect()
    };
    let free: Vec<usize> = (0..k).filter(|&i| bounds[i].1 > bounds[i].0).collect();
    let mut u0: Vec<f64> = start
        .iter()
        .zip(bounds)
        .map(|(&x, &(lo, hi))| {
            if hi > lo {
                ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let fu = |u: &[f64]| {
        let v = f(&to_x(u));
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let f_start = fu(&u0);
    let mut best = f_start;
    let mut evals = 1;
    if free.is_empty() {
        return Minimum {
            x: to_x(&u0),
            f: best,
            f_start,
            evals,
        };
    }
    for _ in 0..=opts.max_restarts {
        let (u, v, e) = nelder_mead(&fu, &u0, &free, opts);
        evals += e;
        let improved = v < best - 1e-15 * best.abs() - 1e-300;
        if v <= best {
            best = v;
            u0 = u;
        }
        if !improved {
            break;
        }
    }
    Minimum {
        x: to_x(&u0),
        f: best,
        f_start,
        evals,
    }
}

fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    u0: &[f64],
    free: &[usize],
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64, usize) {
    let m = free.len();
    let mut simplex: Vec<Vec<f64>> = vec![u0.to_vec()];
    for &i in free {
        let mut p = u0.to_vec();
        p[i] = if p[i] + opts.step <= 1.0 {
            p[i] + opts.step
        } else {
            p[i] - opts.step
        };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let mut evals = values.len();
    let point = |base: &[f64], dir_from: &[f64], t: f64| -> Vec<f64> {
        let mut p: Vec<f64> = base
            .iter()
            .zip(dir_from)
            .map(|(c, x)| c + t * (c - x))
            .collect();
        reflect(&mut p);
        p
    };
    while evals < opts.max_evals {
        // order: best first; ties keep earlier vertices first
        let mut order: Vec<usize> = (0..=m).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let (fb, fw) = (values[0], values[m]);
        let size = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < opts.xtol
            || (fw - fb).abs() <= opts.ftol * fb.abs() + 1e-300 && size < opts.xtol.sqrt()
        {
            break;
        }
        let mut centroid = vec![0.0; u0.len()];
        for p in &simplex[..m] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / m as f64;
            }
        }
        let xr = point(&centroid, &simplex[m], 1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = point(&centroid, &simplex[m], 2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                simplex[m] = xe;
                values[m] = fe;
            } else {
                simplex[m] = xr;
                values[m] = fr;
            }
        } else if fr < values[m - 1] {
            simplex[m] = xr;
            values[m] = fr;
        } else {
            let (xc, fc) = if fr < values[m] {
                let xc = point(&centroid, &simplex[m], 0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = point(&centroid, &simplex[m], -0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < values[m].min(fr) {
                simplex[m] = xc;
                values[m] = fc;
            } else {
                for i in 1..=m {
                    let p: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(x, b)| b + 0.5 * (x - b))
                        .collect();
                    values[i] = f(&p);
                    simplex[i] = p;
                }
                evals += m;
            }
        }
    }
    let best = (0..=m)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    (simplex[best].clone(), values[best], evals)
}
