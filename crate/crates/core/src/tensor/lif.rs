//! Leaky integrate-and-fire neurons with hard reset.
//!
//! Each step computes `v' = v + x - v_leak`; a neuron fires when `v'` is
//! strictly greater than the threshold and its potential then resets to zero.
//! There is no lower clamp, so potentials can go negative under leak.

use super::{IntegrationTensor, Matrix, SpikeTensor};
use crate::error::{Error, Result};
use crate::scalar::Potential;

/// Neuron constants in quantized integration units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LifParams<P = i32> {
    pub v_threshold: P,
    pub v_leak: P,
    pub initial_potential: P,
}

impl<P: Potential> Default for LifParams<P> {
    fn default() -> Self {
        Self {
            v_threshold: P::one(),
            v_leak: P::zero(),
            initial_potential: P::zero(),
        }
    }
}

impl<P: Potential> LifParams<P> {
    pub fn new(v_threshold: P, v_leak: P, initial_potential: P) -> Result<Self> {
        let p = Self {
            v_threshold,
            v_leak,
            initial_potential,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.v_threshold <= P::zero() {
            return Err(Error::Config(format!("v_threshold must be > 0, got {:?}", self.v_threshold)));
        }
        Ok(())
    }

    /// One neuron update. Returns the new potential and whether it fired.
    #[inline]
    pub fn fire(&self, v: P, x: i16) -> (P, bool) {
        let v = v.saturating_add(<P as From<i16>>::from(x)).saturating_sub(self.v_leak);
        if v > self.v_threshold {
            (P::zero(), true)
        } else {
            (v, false)
        }
    }
}

/// Membrane potentials for `N x D` neurons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialState<P = i32> {
    tokens: usize,
    features: usize,
    data: Vec<P>,
}

impl<P: Potential> PotentialState<P> {
    pub fn filled(tokens: usize, features: usize, v: P) -> Self {
        Self {
            tokens,
            features,
            data: vec![v; tokens * features],
        }
    }

    pub fn from_matrix(m: &Matrix<P>) -> Self {
        Self {
            tokens: m.rows(),
            features: m.cols(),
            data: m.as_slice().to_vec(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.tokens, self.features)
    }

    #[inline]
    pub fn get(&self, n: usize, d: usize) -> P {
        self.data[n * self.features + d]
    }

    pub fn as_slice(&self) -> &[P] {
        &self.data
    }
}

/// Advances every neuron by one timestep.
///
/// Spikes come back as a single-step `(N, 1, D)` tensor.
pub fn lif_step<P: Potential>(
    v: &PotentialState<P>,
    x_t: &Matrix<i16>,
    p: &LifParams<P>,
) -> Result<(PotentialState<P>, SpikeTensor)> {
    if x_t.shape() != v.dims() {
        return Err(Error::shape(
            "lif_step",
            format!("potential {:?} vs input {:?}", v.dims(), x_t.shape()),
        ));
    }
    let (tokens, features) = v.dims();
    let mut next = v.clone();
    let mut spikes = SpikeTensor::zeros(tokens, 1, features)?;
    for n in 0..tokens {
        let row = spikes.row_mut(n, 0);
        for d in 0..features {
            let i = n * features + d;
            let (nv, s) = p.fire(v.data[i], x_t[(n, d)]);
            next.data[i] = nv;
            row[d] = s;
        }
    }
    Ok((next, spikes))
}

/// Folds [`lif_step`] over ascending timesteps starting from `initial_potential`.
pub fn lif_run<P: Potential>(x: &IntegrationTensor, p: &LifParams<P>) -> Result<SpikeTensor> {
    p.validate()?;
    let (tokens, steps, features) = x.dims();
    let mut out = SpikeTensor::zeros(tokens, steps, features)?;
    let mut v = vec![p.initial_potential; features];
    for n in 0..tokens {
        v.fill(p.initial_potential);
        for t in 0..steps {
            let xs = x.row(n, t);
            let row = out.row_mut(n, t);
            for d in 0..features {
                let (nv, s) = p.fire(v[d], xs[d]);
                v[d] = nv;
                row[d] = s;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(th: i32, leak: i32) -> LifParams {
        LifParams::new(th, leak, 0).unwrap()
    }

    #[test]
    fn quiescent_neuron_stays_at_rest() {
        let v = PotentialState::filled(2, 3, 0);
        let (v2, s) = lif_step(&v, &Matrix::zeros(2, 3), &LifParams::default()).unwrap();
        assert_eq!(v2, v);
        assert_eq!(s.count_ones(), 0);
    }

    // Threshold 1.0 represented as 10 units: 0.5 + 0.6 = 1.1 > 1.0 fires.
    #[test]
    fn crossing_threshold_fires_and_resets() {
        let v = PotentialState::filled(1, 1, 5);
        let x = Matrix::from_vec(1, 1, vec![6i16]).unwrap();
        let (v2, s) = lif_step(&v, &x, &params(10, 0)).unwrap();
        assert!(s.get(0, 0, 0));
        assert_eq!(v2.get(0, 0), 0);
    }

    // 0.5 + 0.3 - 0.1 = 0.7 stays below 1.0.
    #[test]
    fn sub_threshold_with_leak_keeps_potential() {
        let v = PotentialState::filled(1, 1, 5);
        let x = Matrix::from_vec(1, 1, vec![3i16]).unwrap();
        let (v2, s) = lif_step(&v, &x, &params(10, 1)).unwrap();
        assert!(!s.get(0, 0, 0));
        assert_eq!(v2.get(0, 0), 7);
    }

    #[test]
    fn equality_with_threshold_does_not_fire() {
        let v = PotentialState::filled(1, 1, 0);
        let x = Matrix::from_vec(1, 1, vec![10i16]).unwrap();
        let (v2, s) = lif_step(&v, &x, &params(10, 0)).unwrap();
        assert!(!s.get(0, 0, 0));
        assert_eq!(v2.get(0, 0), 10);
    }

    #[test]
    fn leak_drives_potential_negative() {
        let x = IntegrationTensor::zeros(1, 4, 1);
        let p = LifParams::new(10, 3, 0).unwrap();
        let s = lif_run(&x, &p).unwrap();
        assert_eq!(s.count_ones(), 0);
        // step-by-step the potential is -3, -6, -9, -12
        let mut v = PotentialState::filled(1, 1, 0);
        for _ in 0..4 {
            v = lif_step(&v, &Matrix::zeros(1, 1), &p).unwrap().0;
        }
        assert_eq!(v.get(0, 0), -12);
    }

    // 0.4 per step against threshold 1.0, in tenths: 4, 8, 12 -> fire, reset.
    #[test]
    fn constant_drive_fires_every_third_step() {
        let x = IntegrationTensor::from_fn(1, 12, 1, |_, _, _| 4);
        let s = lif_run(&x, &params(10, 0)).unwrap();
        let fired: Vec<usize> = (0..12).filter(|&t| s.get(0, t, 0)).collect();
        assert_eq!(fired, vec![2, 5, 8, 11]);
    }

    #[test]
    fn single_step_run_equals_lif_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = IntegrationTensor::from_fn(3, 1, 5, |_, _, _| rng.gen_range(-20..20));
        let p = LifParams::new(7, 1, 2).unwrap();
        let run = lif_run(&x, &p).unwrap();
        let (_, step) = lif_step(&PotentialState::filled(3, 5, 2), &x.step(0), &p).unwrap();
        assert_eq!(run, step);
    }

    #[test]
    fn seed_7_matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = IntegrationTensor::from_fn(4, 8, 4, |_, _, _| rng.gen_range(-300..300));
        let p = LifParams::new(250, 5, 0).unwrap();
        let s = lif_run(&x, &p).unwrap();
        for n in 0..4 {
            for d in 0..4 {
                let mut v: i64 = 0;
                for t in 0..8 {
                    v += x.get(n, t, d) as i64 - 5;
                    let fired = v > 250;
                    if fired {
                        v = 0;
                    }
                    assert_eq!(s.get(n, t, d), fired, "n={n} t={t} d={d}");
                }
            }
        }
    }

    #[test]
    fn generic_over_potential_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = IntegrationTensor::from_fn(5, 6, 7, |_, _, _| rng.gen_range(-100..100));
        let narrow = lif_run(&x, &LifParams::<i32>::new(60, 2, 0).unwrap()).unwrap();
        let wide = lif_run(&x, &LifParams::<i64>::new(60, 2, 0).unwrap()).unwrap();
        assert_eq!(narrow, wide);
    }

    #[test]
    fn rejects_non_positive_threshold_and_shape_mismatch() {
        assert!(LifParams::<i32>::new(0, 0, 0).is_err());
        let v = PotentialState::filled(2, 2, 0i32);
        assert!(lif_step(&v, &Matrix::zeros(2, 3), &LifParams::default()).is_err());
    }
}
