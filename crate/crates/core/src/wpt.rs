//! Geometry-based multi-beam MRT for wireless power transfer.
//!
//! A predicted channel is built from estimated image sources; each image
//! source gets its own conjugate beam `w_k`, and the beams are summed and
//! normalized. Because the estimated geometry is imperfect the beams may add
//! destructively at the device, so a per-beam phase rotation is optimized
//! against the true (measured) channel.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{
    channel_vector, path_gain, power_db, received_phasor, smc_channel_vector, ChannelModel,
    ChannelVector, Phasor,
};
use crate::error::{Error, Result};
use crate::geometry::{MirrorSource, Point3};

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const MAX_SWEEPS: usize = 100;
const REL_TOL: f64 = 1e-10;
const SEARCH_HALF_WIDTH: f64 = PI / 8.0;

/// Channel predicted from (estimated) image sources at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedChannel {
    pub h_total: ChannelVector,
    pub per_smc: Vec<ChannelVector>,
    pub f_c: f64,
    pub ue: Point3,
}

pub fn predicted_channel(
    sources: &[MirrorSource],
    ue: Point3,
    f_c: f64,
    model: &ChannelModel,
) -> Result<PredictedChannel> {
    let per_smc = sources
        .iter()
        .map(|s| smc_channel_vector(s, ue, f_c, model))
        .collect::<Result<Vec<_>>>()?;
    let h_total = channel_vector(sources, ue, f_c, model)?;
    Ok(PredictedChannel {
        h_total,
        per_smc,
        f_c,
        ue,
    })
}

/// Composite beam `w` and its per-source components `w_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamWeights {
    pub w: Vec<Complex64>,
    pub per_smc_w: Vec<Vec<Complex64>>,
}

impl BeamWeights {
    pub fn k(&self) -> usize {
        self.per_smc_w.len()
    }

    /// Keeps only the listed beams (0-based), renormalizing the composite.
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        let per: Vec<_> = keep
            .iter()
            .map(|&k| {
                self.per_smc_w
                    .get(k)
                    .cloned()
                    .ok_or(Error::InvalidParameter("beam index out of range"))
            })
            .collect::<Result<_>>()?;
        let w = compose(&per, &vec![0.0; per.len()])?;
        Ok(BeamWeights { w, per_smc_w: per })
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ_k e^{jφ_k} w_k`, normalized.
fn compose(per: &[Vec<Complex64>], phases: &[f64]) -> Result<Vec<Complex64>> {
    let m = per.first().map_or(0, Vec::len);
    let mut sum = vec![Complex64::new(0.0, 0.0); m];
    for (wk, &phi) in per.iter().zip(phases) {
        let rot = Complex64::from_polar(1.0, phi);
        for (s, x) in sum.iter_mut().zip(wk) {
            *s += rot * x;
        }
    }
    let n = norm(&sum);
    if !(n > 0.0) {
        return Err(Error::ZeroChannel);
    }
    Ok(sum.into_iter().map(|x| x / n).collect())
}

/// Per-source MRT beams `w_k = h̃_k*/‖h̃‖` (full predicted-channel norm), and
/// their normalized sum.
pub fn geometry_weights(pc: &PredictedChannel) -> Result<BeamWeights> {
    let total = pc.h_total.norm();
    if !(total > 0.0) {
        return Err(Error::ZeroChannel);
    }
    let per_smc_w: Vec<Vec<Complex64>> = pc
        .per_smc
        .iter()
        .map(|h| h.entries.iter().map(|x| x.conj() / total).collect())
        .collect();
    let w = compose(&per_smc_w, &vec![0.0; per_smc_w.len()])?;
    Ok(BeamWeights { w, per_smc_w })
}

/// `α̂_k = hᵀw_k·√Pt` for each beam.
pub fn smc_phasors(h_true: &ChannelVector, weights: &BeamWeights, pt: f64) -> Result<Vec<Phasor>> {
    if !(pt > 0.0) {
        return Err(Error::InvalidParameter("transmit power must be positive"));
    }
    weights
        .per_smc_w
        .iter()
        .map(|wk| Ok(Phasor(h_true.dot(wk)? * pt.sqrt())))
        .collect()
}

/// Beam phases `φ_2..φ_K` in `[0, 2π)`; the LoS beam is the reference (`φ_1 = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    pub phases: Vec<f64>,
}

impl PhaseVector {
    pub fn zeros(k: usize) -> Self {
        PhaseVector {
            phases: vec![0.0; k.saturating_sub(1)],
        }
    }

    /// All `K` phases including the fixed reference.
    pub fn full(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.phases.iter().copied())
            .collect()
    }
}

/// Path gain of the phase-rotated composite beam, evaluated through the beam
/// Gram matrix so each call is `O(K²)`.
struct PhaseObjective {
    a: Vec<Complex64>,
    gram: Vec<Complex64>,
    k: usize,
}

impl PhaseObjective {
    fn new(h: &ChannelVector, weights: &BeamWeights) -> Result<Self> {
        let k = weights.k();
        let a = weights
            .per_smc_w
            .iter()
            .map(|wk| h.dot(wk))
            .collect::<Result<Vec<_>>>()?;
        let mut gram = vec![Complex64::new(0.0, 0.0); k * k];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = weights.per_smc_w[i]
                    .iter()
                    .zip(&weights.per_smc_w[j])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
            }
        }
        Ok(PhaseObjective { a, gram, k })
    }

    /// Linear PG for the full phase list (length K).
    fn eval(&self, phases: &[f64]) -> f64 {
        let c: Vec<Complex64> = phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect();
        let num: Complex64 = c.iter().zip(&self.a).map(|(c, a)| c * a).sum();
        let mut den = 0.0;
        for i in 0..self.k {
            for j in 0..self.k {
                den += (c[i].conj() * c[j] * self.gram[i * self.k + j]).re;
            }
        }
        if den > 0.0 {
            num.norm_sqr() / den
        } else {
            0.0
        }
    }
}

/// Linear path gain of `Σ e^{jφ_k} w_k / ‖·‖` against `h`, phases of length K.
pub fn phase_objective(h: &ChannelVector, weights: &BeamWeights, phases: &[f64]) -> Result<f64> {
    if phases.len() != weights.k() {
        return Err(Error::DimensionMismatch {
            expected: weights.k(),
            got: phases.len(),
        });
    }
    Ok(PhaseObjective::new(h, weights)?.eval(phases))
}

/// Golden-section maximization of `f` on `[lo, hi]`.
fn golden_max(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - GOLDEN * (hi - lo);
    let mut x2 = lo + GOLDEN * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-12 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Result of [`optimize_phases`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOptimum {
    pub phases: PhaseVector,
    pub weights: BeamWeights,
    pub pg_db: f64,
    pub sweeps: usize,
}

/// Maximizes the path gain over beam phases `φ_2..φ_K`.
///
/// Starts from the better of zero phases and the closed-form alignment
/// `φ_k = arg α̂_1 − arg α̂_k`, then runs cyclic coordinate ascent with a
/// golden-section search over `φ_k ± π/8` per coordinate until the relative
/// improvement of a sweep drops below 1e−10 or 100 sweeps have run. A step is
/// only taken when it improves the objective.
pub fn optimize_phases(
    h_true: &ChannelVector,
    weights: &BeamWeights,
    pt: f64,
) -> Result<PhaseOptimum> {
    if !(pt > 0.0) {
        return Err(Error::InvalidParameter("transmit power must be positive"));
    }
    let k = weights.k();
    if k == 0 {
        return Err(Error::InvalidParameter("at least one beam is required"));
    }
    let objective = PhaseObjective::new(h_true, weights)?;
    let zero = vec![0.0; k];
    let mut phases = zero.clone();
    let mut best = objective.eval(&zero);
    let mut sweeps = 0;

    if k > 1 {
        let ref_arg = objective.a[0].arg();
        let aligned: Vec<f64> = std::iter::once(0.0)
            .chain(
                objective.a[1..]
                    .iter()
                    .map(|a| (ref_arg - a.arg()).rem_euclid(TAU)),
            )
            .collect();
        let v = objective.eval(&aligned);
        if v >= best {
            phases = aligned;
            best = v;
        }

        while sweeps < MAX_SWEEPS {
            sweeps += 1;
            let before = best;
            for idx in 1..k {
                let center = phases[idx];
                let mut trial = phases.clone();
                let (x, fx) = golden_max(
                    center - SEARCH_HALF_WIDTH,
                    center + SEARCH_HALF_WIDTH,
                    |x| {
                        trial[idx] = x;
                        objective.eval(&trial)
                    },
                );
                // ignore rounding-level gains on flat objectives
                if fx > best * (1.0 + 1e-14) {
                    phases[idx] = x.rem_euclid(TAU);
                    best = fx;
                }
            }
            if best <= before || (best - before) / best.max(f64::MIN_POSITIVE) < REL_TOL {
                break;
            }
        }
    }

    let w = compose(&weights.per_smc_w, &phases)?;
    let phasor = received_phasor(h_true, &w, pt)?;
    let pg_db = path_gain(phasor, pt)?.db();
    Ok(PhaseOptimum {
        phases: PhaseVector {
            phases: phases[1..].to_vec(),
        },
        weights: BeamWeights {
            w,
            per_smc_w: weights.per_smc_w.clone(),
        },
        pg_db,
        sweeps,
    })
}

/// Path gain of reciprocity-based MRT `w = h*/‖h‖`, i.e. `10·log10‖h‖²`.
pub fn perfect_csi_pg(h_true: &ChannelVector, pt: f64) -> Result<f64> {
    if !(pt > 0.0) {
        return Err(Error::InvalidParameter("transmit power must be positive"));
    }
    let n = h_true.norm();
    if !(n > 0.0) {
        return Err(Error::ZeroChannel);
    }
    let w: Vec<Complex64> = h_true.entries.iter().map(|x| x.conj() / n).collect();
    Ok(path_gain(received_phasor(h_true, &w, pt)?, pt)?.db())
}

/// Which channel the beam-phase optimizer maximizes against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseFeedback {
    /// The true (measured) channel at the device.
    #[default]
    TrueChannel,
    /// Only the predicted channel; no feedback from the device.
    PredictedOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WptReport {
    /// Per-beam phasors with the geometry weights.
    pub alpha_hat: Vec<Phasor>,
    /// Per-beam phasors after phase rotation.
    pub alpha_tilde: Vec<Phasor>,
    pub pg_predicted: f64,
    pub pg_optimized: f64,
    pub pg_perfect: f64,
    pub phases: PhaseVector,
    /// Final composite beam.
    pub weights: BeamWeights,
}

impl WptReport {
    pub fn loss_db(&self) -> f64 {
        self.pg_perfect - self.pg_optimized
    }
}

/// Geometry-based beamforming, phase optimization and the perfect-CSI benchmark
/// for one device position.
pub fn beamform(
    h_true: &ChannelVector,
    predicted: &PredictedChannel,
    pt: f64,
    feedback: PhaseFeedback,
) -> Result<WptReport> {
    let weights = geometry_weights(predicted)?;
    let alpha_hat = smc_phasors(h_true, &weights, pt)?;
    let pg_predicted = path_gain(received_phasor(h_true, &weights.w, pt)?, pt)?.db();
    let opt = match feedback {
        PhaseFeedback::TrueChannel => optimize_phases(h_true, &weights, pt)?,
        PhaseFeedback::PredictedOnly => optimize_phases(&predicted.h_total, &weights, pt)?,
    };
    let pg_optimized = path_gain(received_phasor(h_true, &opt.weights.w, pt)?, pt)?.db();
    let alpha_tilde = alpha_hat
        .iter()
        .zip(opt.phases.full())
        .map(|(a, phi)| Phasor(a.0 * Complex64::from_polar(1.0, phi)))
        .collect();
    Ok(WptReport {
        alpha_hat,
        alpha_tilde,
        pg_predicted,
        pg_optimized,
        pg_perfect: perfect_csi_pg(h_true, pt)?,
        phases: opt.phases,
        weights: opt.weights,
    })
}

/// Path gain of fixed weights `w` at each evaluation point, against the true
/// channel. Points where the geometry is degenerate yield `None`.
pub fn pg_sweep(
    w: &[Complex64],
    eval_points: &[Point3],
    true_sources: &[MirrorSource],
    f_c: f64,
    pt: f64,
    model: &ChannelModel,
) -> Result<Vec<Option<f64>>> {
    if !(pt > 0.0) {
        return Err(Error::InvalidParameter("transmit power must be positive"));
    }
    let eval = |p: &Point3| -> Result<Option<f64>> {
        match channel_vector(true_sources, *p, f_c, model) {
            Ok(h) => {
                let alpha = received_phasor(&h, w, pt)?;
                Ok(Some(power_db(alpha.0.norm_sqr() / pt)))
            }
            Err(Error::DegenerateGeometry { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        eval_points.par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        eval_points.iter().map(eval).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::wavelength;
    use crate::geometry::{mirror_sources, ula_layout, WallSegment};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FC: f64 = 3.79e9;

    fn cv(entries: Vec<Complex64>) -> ChannelVector {
        ChannelVector {
            entries,
            f: FC,
            ue: Point3::ORIGIN,
        }
    }

    fn random_vec(rng: &mut ChaCha8Rng, m: usize) -> Vec<Complex64> {
        (0..m)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn scene() -> (Vec<MirrorSource>, Point3) {
        let tx = ula_layout(
            9,
            wavelength(FC) / 2.0,
            Point3::new(0.0, 0.0, 1.5),
            Point3::X,
        )
        .unwrap();
        let walls = [
            WallSegment::new(Point3::new(-1.0, 0.5, 0.0), Point3::new(-1.0, 3.0, 0.0)).unwrap(),
            WallSegment::new(Point3::new(1.2, 0.5, 0.0), Point3::new(1.2, 3.0, 0.0)).unwrap(),
        ];
        (mirror_sources(&tx, &walls), Point3::new(0.2, 2.0, 1.4))
    }

    #[test]
    fn predicted_total_is_sum_of_parts() {
        let (src, ue) = scene();
        let pc = predicted_channel(&src, ue, FC, &ChannelModel::default()).unwrap();
        for m in 0..pc.h_total.len() {
            let s: Complex64 = pc.per_smc.iter().map(|h| h.entries[m]).sum();
            assert!((s - pc.h_total.entries[m]).norm() <= 1e-12 * s.norm());
        }
        let los = predicted_channel(&src[..1], ue, FC, &ChannelModel::default()).unwrap();
        assert_eq!(los.h_total, los.per_smc[0]);
    }

    #[test]
    fn wall_shift_bounds_phase_change() {
        let tx = ula_layout(5, 0.04, Point3::new(0.0, 0.0, 1.5), Point3::X).unwrap();
        let ue = Point3::new(0.1, 2.0, 1.4);
        let lambda = wavelength(FC);
        let wall_at =
            |x: f64| WallSegment::new(Point3::new(x, 0.0, 0.0), Point3::new(x, 3.0, 0.0)).unwrap();
        let base = predicted_channel(
            &mirror_sources(&tx, &[wall_at(1.0)]),
            ue,
            FC,
            &ChannelModel::default(),
        )
        .unwrap();
        for delta in [1e-4, 1e-3, 5e-3] {
            let moved = predicted_channel(
                &mirror_sources(&tx, &[wall_at(1.0 + delta)]),
                ue,
                FC,
                &ChannelModel::default(),
            )
            .unwrap();
            for m in 0..tx.len() {
                let d0 = ue.distance(mirror_sources(&tx, &[wall_at(1.0)])[1].layout.elements[m]);
                let d1 = ue.distance(
                    mirror_sources(&tx, &[wall_at(1.0 + delta)])[1]
                        .layout
                        .elements[m],
                );
                assert!((d1 - d0).abs() <= 2.0 * delta + 1e-12);
                let dphi = (moved.per_smc[1].entries[m] / base.per_smc[1].entries[m])
                    .arg()
                    .abs();
                assert!(dphi <= 4.0 * PI * delta / lambda + 1e-9);
            }
        }
    }

    #[test]
    fn single_beam_weights() {
        let h = cv(vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.3)]);
        let pc = PredictedChannel {
            h_total: h.clone(),
            per_smc: vec![h.clone()],
            f_c: FC,
            ue: Point3::ORIGIN,
        };
        let w = geometry_weights(&pc).unwrap();
        let n = h.norm();
        for (a, b) in w.w.iter().zip(&h.entries) {
            assert!((a - b.conj() / n).norm() < 1e-15);
        }
    }

    #[test]
    fn weights_are_unit_and_scale_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let parts: Vec<_> = (0..3).map(|_| cv(random_vec(&mut rng, 5))).collect();
        let total = cv((0..5)
            .map(|m| parts.iter().map(|p| p.entries[m]).sum())
            .collect());
        let pc = PredictedChannel {
            h_total: total.clone(),
            per_smc: parts.clone(),
            f_c: FC,
            ue: Point3::ORIGIN,
        };
        let w = geometry_weights(&pc).unwrap();
        assert!((norm(&w.w) - 1.0).abs() < 1e-12);
        let scale = |v: &ChannelVector| cv(v.entries.iter().map(|x| x * 7.5).collect());
        let pc2 = PredictedChannel {
            h_total: scale(&total),
            per_smc: parts.iter().map(scale).collect(),
            f_c: FC,
            ue: Point3::ORIGIN,
        };
        let w2 = geometry_weights(&pc2).unwrap();
        for (a, b) in w.w.iter().zip(&w2.w) {
            assert!((a - b).norm() < 1e-12);
        }
        let zero = PredictedChannel {
            h_total: cv(vec![Complex64::new(0.0, 0.0); 2]),
            per_smc: vec![],
            f_c: FC,
            ue: Point3::ORIGIN,
        };
        assert!(matches!(geometry_weights(&zero), Err(Error::ZeroChannel)));
    }

    #[test]
    fn phasor_of_orthogonal_beam_vanishes() {
        let h = cv(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let weights = BeamWeights {
            w: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            per_smc_w: vec![
                vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0)],
            ],
        };
        let a = smc_phasors(&h, &weights, 1.0).unwrap();
        assert_eq!(a[1].0, Complex64::new(0.0, 0.0));
        assert_eq!(a[0].0, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn single_beam_phasor_matches_received_phasor() {
        let (src, ue) = scene();
        let pc = predicted_channel(&src[..1], ue, FC, &ChannelModel::default()).unwrap();
        let w = geometry_weights(&pc).unwrap();
        let a = smc_phasors(&pc.h_total, &w, 2.0).unwrap();
        let r = received_phasor(&pc.h_total, &w.w, 2.0).unwrap();
        // w_1 and w differ only by ‖h̃_1‖/‖h̃‖ = 1 here
        assert!((a[0].0 - r.0).norm() < 1e-15);
    }

    #[test]
    fn single_beam_optimization_is_identity() {
        let (src, ue) = scene();
        let pc = predicted_channel(&src[..1], ue, FC, &ChannelModel::default()).unwrap();
        let h = channel_vector(&src, ue, FC, &ChannelModel::default()).unwrap();
        let r = beamform(&h, &pc, 1.0, PhaseFeedback::TrueChannel).unwrap();
        assert_eq!(r.pg_optimized, r.pg_predicted);
        assert!(r.phases.phases.is_empty());
    }

    #[test]
    fn duplicate_beams_keep_initialization() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = cv(random_vec(&mut rng, 4));
        let w1 = random_vec(&mut rng, 4);
        let weights = BeamWeights {
            w: compose(std::slice::from_ref(&w1), &[0.0]).unwrap(),
            per_smc_w: vec![w1.clone(), w1],
        };
        let a = phase_objective(&h, &weights, &[0.0, 0.3]).unwrap();
        let b = phase_objective(&h, &weights, &[0.0, 2.0]).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        let opt = optimize_phases(&h, &weights, 1.0).unwrap();
        assert_eq!(opt.phases.phases, vec![0.0]);
    }

    #[test]
    fn k2_matches_exhaustive_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let h = cv(random_vec(&mut rng, 4));
            let per = vec![random_vec(&mut rng, 4), random_vec(&mut rng, 4)];
            let weights = BeamWeights {
                w: compose(&per, &[0.0, 0.0]).unwrap(),
                per_smc_w: per,
            };
            let opt = optimize_phases(&h, &weights, 1.0).unwrap();
            // direct evaluation over 0.01° steps, independent of the Gram path
            let mut best = f64::MIN;
            for s in 0..36_000 {
                let phi = (s as f64 * 0.01).to_radians();
                let w = compose(&weights.per_smc_w, &[0.0, phi]).unwrap();
                best = best.max(10.0 * h.dot(&w).unwrap().norm_sqr().log10());
            }
            assert!((opt.pg_db - best).abs() < 1e-6, "{} vs {}", opt.pg_db, best);
        }
    }

    #[test]
    fn common_phase_offset_is_irrelevant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = cv(random_vec(&mut rng, 6));
        let per: Vec<_> = (0..3).map(|_| random_vec(&mut rng, 6)).collect();
        let weights = BeamWeights {
            w: compose(&per, &[0.0; 3]).unwrap(),
            per_smc_w: per,
        };
        let a = phase_objective(&h, &weights, &[0.0, 0.4, 1.9]).unwrap();
        let b = phase_objective(&h, &weights, &[1.1, 1.5, 3.0]).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn perfect_csi_examples() {
        let h = cv(vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)]);
        assert!((perfect_csi_pg(&h, 1.0).unwrap() - 13.9794).abs() < 1e-4);
        assert!(perfect_csi_pg(&cv(vec![Complex64::new(0.0, 0.0)]), 1.0).is_err());
    }

    #[test]
    fn exact_geometry_reaches_perfect_csi() {
        let (src, ue) = scene();
        let model = ChannelModel::default();
        let h = channel_vector(&src, ue, FC, &model).unwrap();
        let pc = predicted_channel(&src, ue, FC, &model).unwrap();
        let r = beamform(&h, &pc, 1.0, PhaseFeedback::TrueChannel).unwrap();
        assert!((r.pg_perfect - r.pg_optimized).abs() < 1e-9);
        assert!(r.pg_optimized >= r.pg_predicted - 1e-9);
    }

    #[test]
    fn perturbed_geometry_improves_monotonically() {
        let (src, ue) = scene();
        let model = ChannelModel::default();
        let h = channel_vector(&src, ue, FC, &model).unwrap();
        let tx = &src[0].layout;
        let walls = [
            WallSegment::new(Point3::new(-1.03, 0.5, 0.0), Point3::new(-1.0, 3.0, 0.0)).unwrap(),
            WallSegment::new(Point3::new(1.17, 0.5, 0.0), Point3::new(1.2, 3.0, 0.0)).unwrap(),
        ];
        let pc = predicted_channel(&mirror_sources(tx, &walls), ue, FC, &model).unwrap();
        let r = beamform(&h, &pc, 1.0, PhaseFeedback::TrueChannel).unwrap();
        assert!(r.pg_optimized >= r.pg_predicted - 1e-9);
        assert!(r.pg_perfect >= r.pg_optimized - 1e-9);
        let no_fb = beamform(&h, &pc, 1.0, PhaseFeedback::PredictedOnly).unwrap();
        assert!(no_fb.pg_perfect >= no_fb.pg_optimized - 1e-9);
        assert!(r.phases.phases.iter().all(|p| (0.0..TAU).contains(p)));
    }

    #[test]
    fn sweep_at_device_matches_optimized() {
        let (src, ue) = scene();
        let model = ChannelModel::default();
        let h = channel_vector(&src, ue, FC, &model).unwrap();
        let pc = predicted_channel(&src, ue, FC, &model).unwrap();
        let r = beamform(&h, &pc, 1.0, PhaseFeedback::TrueChannel).unwrap();
        let s = pg_sweep(&r.weights.w, &[ue], &src, FC, 1.0, &model).unwrap();
        assert!((s[0].unwrap() - r.pg_optimized).abs() < 1e-9);
        let on_element = src[0].layout.elements[0];
        assert_eq!(
            pg_sweep(&r.weights.w, &[on_element], &src, FC, 1.0, &model).unwrap(),
            vec![None]
        );
    }

    #[test]
    fn los_beam_decays_beyond_focus() {
        let tx = ula_layout(21, wavelength(FC) / 2.0, Point3::ORIGIN, Point3::X).unwrap();
        let src = [MirrorSource::line_of_sight(&tx)];
        let focus = Point3::new(0.0, 1.0, 0.0);
        let model = ChannelModel::default();
        let pc = predicted_channel(&src, focus, FC, &model).unwrap();
        let w = geometry_weights(&pc).unwrap();
        let points: Vec<_> = (0..40)
            .map(|i| Point3::new(0.0, 1.2 + 0.1 * i as f64, 0.0))
            .collect();
        let pg = pg_sweep(&w.w, &points, &src, FC, 1.0, &model).unwrap();
        for pair in pg.windows(2) {
            assert!(pair[1].unwrap() < pair[0].unwrap());
        }
    }
}
