//! Monte Carlo evaluation of the limit constant `C_d` from its spherical
//! integral over `d + 1` directions.
//!
//! For i.i.d. uniform `θ_0..θ_d` on `S^(d-1)` the integrand is
//! `h(θ) V(θ)`, where `h` says whether the origin (the common circumcenter)
//! lies in the open simplex and `V` is the simplex volume. The constant is
//! `κ_d^(d+1) E[h V]` times a normalization; see [`Normalization`].

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{unit_ball_volume, MAX_DIM};
use crate::linalg;
use crate::sampling::SeedSpec;

/// Samples drawn per independent stream.
const BATCH: usize = 1 << 16;
/// Fewest samples `estimate_cd` accepts.
pub const MIN_SAMPLES: usize = 100_000;

/// Prefactor applied to `κ_d^(d+1) E[h V]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `d! / ((d+1)! (k-1)! d ω_d^d)`: the constant for which the window
    /// count has mean `C_d n ∫ Λ^(d+k-2) e^-Λ dΛ`. Unordered generator sets
    /// account for the `(d+1)!`, the Poisson weight of `k-1` interior points
    /// for the `(k-1)!`.
    Counting,
    /// `d! / (d ω_d^(d+k-1))`, the prefactor written without those factors.
    AsPrinted,
}

impl Normalization {
    pub fn prefactor(self, d: usize, k: usize) -> f64 {
        let df = factorial(d);
        let omega = unit_ball_volume(d);
        match self {
            Normalization::Counting => df / (factorial(d + 1) * factorial(k - 1) * d as f64 * omega.powi(d as i32)),
            Normalization::AsPrinted => df / (d as f64 * omega.powi((d + k - 1) as i32)),
        }
    }
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|i| i as f64).product()
}

/// Surface measure of `S^(d-1)`.
pub fn sphere_area(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub d: usize,
    pub k: usize,
    pub normalization: Normalization,
    /// Sample mean of `h V`.
    pub integrand_mean: f64,
}

impl ConstantEstimate {
    /// The same integral under another normalization.
    pub fn renormalized(&self, normalization: Normalization) -> ConstantEstimate {
        let ratio = normalization.prefactor(self.d, self.k) / self.normalization.prefactor(self.d, self.k);
        ConstantEstimate {
            value: self.value * ratio,
            std_error: self.std_error * ratio,
            normalization,
            ..*self
        }
    }
}

/// `h(θ) V(θ)` for `d + 1` unit vectors.
fn integrand(theta: &[[f64; MAX_DIM]], d: usize) -> f64 {
    // Barycentric weights of the origin: solve E w = -θ_0 with E = [θ_i - θ_0].
    let mut e = [[0.0; MAX_DIM]; MAX_DIM];
    for i in 0..d {
        for j in 0..d {
            e[i][j] = theta[j + 1][i] - theta[0][i];
        }
    }
    let det = linalg::determinant((0..d).map(|i| e[i][..d].to_vec()).collect());
    let Some(inv) = linalg::invert(&e, d) else {
        return 0.0;
    };
    let mut rhs = [0.0; MAX_DIM];
    for i in 0..d {
        rhs[i] = -theta[0][i];
    }
    let w = linalg::mat_vec(&inv, &rhs, d);
    let w0 = 1.0 - w[..d].iter().sum::<f64>();
    if w0 > 0.0 && w[..d].iter().all(|&x| x > 0.0) {
        det.abs() / factorial(d)
    } else {
        0.0
    }
}

fn unit_vector<R: Rng>(rng: &mut R, d: usize) -> [f64; MAX_DIM] {
    loop {
        let mut v = [0.0; MAX_DIM];
        for x in v.iter_mut().take(d) {
            *x = StandardNormal.sample(rng);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// Haar-random orthogonal matrix (Gram-Schmidt on Gaussian columns).
fn random_rotation<R: Rng>(rng: &mut R, d: usize) -> [[f64; MAX_DIM]; MAX_DIM] {
    let mut q = [[0.0; MAX_DIM]; MAX_DIM];
    let mut i = 0;
    while i < d {
        let mut v = [0.0; MAX_DIM];
        for x in v.iter_mut().take(d) {
            *x = StandardNormal.sample(rng);
        }
        for prev in q.iter().take(i) {
            let dot: f64 = (0..d).map(|j| v[j] * prev[j]).sum();
            for j in 0..d {
                v[j] -= dot * prev[j];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            for j in 0..d {
                q[i][j] = v[j] / norm;
            }
            i += 1;
        }
    }
    q
}

/// `C_d` with the counting normalization.
pub fn estimate_cd(d: usize, k: usize, samples: usize, master_seed: u64) -> Result<ConstantEstimate> {
    estimate_cd_with(d, k, samples, master_seed, Normalization::Counting, false)
}

/// `rotate` applies a fresh random rotation to every sample's directions,
/// which leaves the integrand unchanged.
pub fn estimate_cd_with(
    d: usize,
    k: usize,
    samples: usize,
    master_seed: u64,
    normalization: Normalization,
    rotate: bool,
) -> Result<ConstantEstimate> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::UnsupportedDimension(d));
    }
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    let pre = normalization.prefactor(d, k);
    if d == 1 {
        // S^0 = {-1, 1}: the two directions differ with probability 1/2 and
        // then span a segment of length 2, so E[h V] = 1 exactly.
        return Ok(ConstantEstimate {
            value: sphere_area(1).powi(2) * pre,
            std_error: 0.0,
            samples,
            d,
            k,
            normalization,
            integrand_mean: 1.0,
        });
    }
    if samples < MIN_SAMPLES {
        return Err(Error::config(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let batches = samples.div_ceil(BATCH);
    let sums = exec::map_indexed(batches, |b| {
        let mut rng = SeedSpec::new(master_seed, b as u64).rng();
        let count = BATCH.min(samples - b * BATCH);
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut theta = [[0.0; MAX_DIM]; MAX_DIM + 1];
        for _ in 0..count {
            for t in theta.iter_mut().take(d + 1) {
                *t = unit_vector(&mut rng, d);
            }
            if rotate {
                let q = random_rotation(&mut rng, d);
                for t in theta.iter_mut().take(d + 1) {
                    *t = linalg::mat_vec(&q, t, d);
                }
            }
            let v = integrand(&theta, d);
            s1 += v;
            s2 += v * v;
        }
        (s1, s2)
    });
    let (s1, s2) = sums.into_iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let m = samples as f64;
    let mean = s1 / m;
    let var = (s2 - m * mean * mean) / (m - 1.0);
    let scale = sphere_area(d).powi(d as i32 + 1) * pre;
    Ok(ConstantEstimate {
        value: scale * mean,
        std_error: scale * (var / m).sqrt(),
        samples,
        d,
        k,
        normalization,
        integrand_mean: mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrand_of_known_triangles() {
        // Equilateral triangle inscribed in the unit circle: area 3√3/4.
        let mut t = [[0.0; MAX_DIM]; MAX_DIM];
        for (i, row) in t.iter_mut().enumerate().take(3) {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0;
            row[0] = a.cos();
            row[1] = a.sin();
        }
        assert!((integrand(&t, 2) - 3.0 * 3f64.sqrt() / 4.0).abs() < 1e-12);
        // All three directions in one half-plane: origin outside.
        for (i, row) in t.iter_mut().enumerate().take(3) {
            let a = 0.5 * i as f64;
            row[0] = a.cos();
            row[1] = a.sin();
        }
        assert_eq!(integrand(&t, 2), 0.0);
    }

    #[test]
    fn circle_constant_is_exact() {
        let c = estimate_cd(1, 1, 0, 0).unwrap();
        assert_eq!(c.value, 1.0);
        assert_eq!(estimate_cd(1, 3, 0, 0).unwrap().value, 0.5);
    }

    #[test]
    fn planar_integrand_mean() {
        // Three uniform directions in the plane: with gaps g_i between them,
        // h V = (sin g1 + sin g2 + sin g3)/2 when every gap is below π, and
        // integrating over the gap simplex gives E[h V] = 3/(4π). The counting
        // constant is then exactly 1 for d = 2, k = 2.
        let c = estimate_cd(2, 2, 400_000, 5).unwrap();
        assert!((c.value - 1.0).abs() < 4.0 * c.std_error, "{c:?}");
        let printed = c.renormalized(Normalization::AsPrinted);
        assert!((printed.value - 6.0 / std::f64::consts::PI).abs() < 4.0 * printed.std_error);
    }

    #[test]
    fn reproducible_and_rotation_invariant() {
        let a = estimate_cd(3, 2, 200_000, 8).unwrap();
        assert_eq!(a, estimate_cd(3, 2, 200_000, 8).unwrap());
        let b = estimate_cd_with(3, 2, 200_000, 8, Normalization::Counting, true).unwrap();
        let joint = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < 4.0 * joint);
    }

    #[test]
    fn error_scales_as_inverse_root() {
        let a = estimate_cd(2, 2, 200_000, 1).unwrap();
        let b = estimate_cd(2, 2, 400_000, 1).unwrap();
        let ratio = b.std_error / a.std_error;
        assert!((ratio - 1.0 / 2f64.sqrt()).abs() < 0.2 / 2f64.sqrt(), "{ratio}");
    }

    #[test]
    fn too_few_samples() {
        assert!(estimate_cd(2, 2, 10, 0).is_err());
    }
}
