use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controllers::policy::PolicyKind;
use crate::error::{Error, Result};

/// One evaluation point of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub mean_reward: f64,
    pub std_reward: f64,
}

pub const CURVE_HEADER: [&str; 3] = ["step", "mean_reward", "std_reward"];

pub fn write_curve(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in curve {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CURVE_HEADER {
        return Err(Error::Config(format!(
            "{} does not have the learning-curve header",
            path.display()
        )));
    }
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Seed-wise mean and spread of several curves evaluated at the same steps.
/// Curves are truncated to the shortest one.
pub fn aggregate_curves(curves: &[Vec<CurvePoint>]) -> Result<Vec<CurvePoint>> {
    let Some(len) = curves.iter().map(Vec::len).min() else {
        return Ok(Vec::new());
    };
    (0..len)
        .map(|i| {
            let step = curves[0][i].step;
            if curves.iter().any(|c| c[i].step != step) {
                return Err(Error::Config(format!(
                    "curves disagree on evaluation step {i}"
                )));
            }
            let means: Vec<f64> = curves.iter().map(|c| c[i].mean_reward).collect();
            let (mean_reward, std_reward) = mean_std(&means);
            Ok(CurvePoint {
                step,
                mean_reward,
                std_reward,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rise {
    pub steps: u64,
    /// Training wall-clock time until the crossing evaluation, if known.
    pub time_s: Option<f64>,
}

/// First evaluation whose mean reward exceeds `threshold`. `wall_times`,
/// when given, holds the elapsed training time at each curve point.
pub fn rise_statistics(
    curve: &[CurvePoint],
    wall_times: Option<&[f64]>,
    threshold: f64,
) -> Result<Rise> {
    if curve.is_empty() {
        return Err(Error::TraceTooShort { len: 0, needed: 1 });
    }
    let i = curve
        .iter()
        .position(|p| p.mean_reward > threshold)
        .ok_or(Error::NotReached { threshold })?;
    Ok(Rise {
        steps: curve[i].step,
        time_s: wall_times.and_then(|w| w.get(i).copied()),
    })
}

/// `P / (W v)` with `P` the mean of `power`, `W` the weight and `v` the
/// mean of `velocity`.
pub fn cost_of_transport(power: &[f64], velocity: &[f64], weight: f64) -> Result<f64> {
    if power.is_empty() || velocity.is_empty() {
        return Err(Error::TraceTooShort {
            len: power.len().min(velocity.len()),
            needed: 1,
        });
    }
    let p = power.iter().sum::<f64>() / power.len() as f64;
    let v = velocity.iter().sum::<f64>() / velocity.len() as f64;
    if !(v > 1e-3) {
        return Err(Error::ZeroVelocity(v));
    }
    Ok(p / (weight * v))
}

/// Normalized distance between a multichannel trace and itself shifted by
/// `period`: per channel, the mean squared shift difference over the
/// channel variance, averaged over channels, square-rooted. Zero for an
/// exactly periodic trace, about `sqrt(2)` for white noise. Constant
/// channels are skipped. Fractional shifts interpolate linearly.
pub fn periodicity_score(samples: &[Vec<f64>], dt: f64, period: f64) -> Result<f64> {
    let n = samples.len();
    let mut shift = period / dt;
    if (shift - shift.round()).abs() < 1e-9 {
        shift = shift.round();
    }
    let needed = (3.0 * shift).ceil() as usize;
    if !(period > 0.0) || n < needed.max(2) {
        return Err(Error::TraceTooShort { len: n, needed });
    }
    let channels = samples[0].len();
    let whole = shift.floor() as usize;
    let frac = shift - whole as f64;
    let usable = n - whole - usize::from(frac > 0.0);
    let mut total = 0.0;
    let mut counted = 0;
    for c in 0..channels {
        let column: Vec<f64> = samples.iter().map(|s| s[c]).collect();
        let (_, std) = mean_std(&column);
        if !(std > 1e-12) {
            continue;
        }
        let mut sq = 0.0;
        for i in 0..usable {
            let later = if frac > 0.0 {
                (1.0 - frac) * column[i + whole] + frac * column[i + whole + 1]
            } else {
                column[i + whole]
            };
            sq += (later - column[i]).powi(2);
        }
        total += sq / usable as f64 / (std * std);
        counted += 1;
    }
    if counted == 0 {
        return Ok(0.0);
    }
    Ok((total / counted as f64).sqrt())
}

/// Lowest score over candidate periods `lo..=hi`, stepping by `dt`.
pub fn best_periodicity(samples: &[Vec<f64>], dt: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let count = ((hi - lo) / dt).round() as usize;
    for k in 0..=count {
        let period = lo + k as f64 * dt;
        match periodicity_score(samples, dt, period) {
            Ok(s) if best.map_or(true, |(b, _)| s < b) => best = Some((s, period)),
            Ok(_) | Err(Error::TraceTooShort { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(Error::TraceTooShort {
        len: samples.len(),
        needed: (3.0 * lo / dt).ceil() as usize,
    })
}

/// Summary of one policy's training and disturbance results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub policy: PolicyKind,
    pub seeds: Vec<u64>,
    /// Across-seed mean and spread of the evaluation reward.
    pub curve: Vec<CurvePoint>,
    pub rise_steps: Option<u64>,
    pub rise_time_s: Option<f64>,
    pub highest_reward: f64,
    pub std_pitch: Option<f64>,
    pub std_height: Option<f64>,
    pub cot: Option<f64>,
    pub tumbles: Option<usize>,
}

impl RunMetrics {
    /// Metrics from per-seed curves and elapsed times, sorted by seed so the
    /// result does not depend on the order runs finished in.
    pub fn from_seed_runs(
        policy: PolicyKind,
        mut runs: Vec<(u64, Vec<CurvePoint>, Vec<f64>)>,
        threshold: f64,
    ) -> Result<Self> {
        runs.sort_by_key(|r| r.0);
        let curves: Vec<Vec<CurvePoint>> = runs.iter().map(|r| r.1.clone()).collect();
        let curve = aggregate_curves(&curves)?;
        let (rise_steps, rise_time_s) = match rise_statistics(&curve, None, threshold) {
            Ok(rise) => {
                let i = curve.iter().position(|p| p.step == rise.steps).unwrap();
                let times: Vec<f64> = runs.iter().filter_map(|r| r.2.get(i).copied()).collect();
                let time = (times.len() == runs.len()).then(|| mean_std(&times).0);
                (Some(rise.steps), time)
            }
            Err(Error::NotReached { .. }) => (None, None),
            Err(e) => return Err(e),
        };
        let highest_reward = curve
            .iter()
            .map(|p| p.mean_reward)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            policy,
            seeds: runs.iter().map(|r| r.0).collect(),
            curve,
            rise_steps,
            rise_time_s,
            highest_reward,
            std_pitch: None,
            std_height: None,
            cot: None,
            tumbles: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve(values: &[f64]) -> Vec<CurvePoint> {
        values
            .iter()
            .enumerate()
            .map(|(i, &m)| CurvePoint {
                step: 5000 * (i as u64 + 1),
                mean_reward: m,
                std_reward: 0.0,
            })
            .collect()
    }

    #[test]
    fn rise_example() {
        let c = curve(&[500.0, 650.0, 710.0, 800.0]);
        let r = rise_statistics(&c, Some(&[1.0, 2.0, 3.0, 4.0]), 700.0).unwrap();
        assert_eq!(r.steps, 15_000);
        assert_eq!(r.time_s, Some(3.0));
    }

    #[test]
    fn rise_not_reached() {
        let c = curve(&[500.0, 699.0, 700.0]);
        assert!(matches!(
            rise_statistics(&c, None, 700.0),
            Err(Error::NotReached { .. })
        ));
        assert!(rise_statistics(&[], None, 700.0).is_err());
    }

    proptest! {
        #[test]
        fn rise_stable_under_right_truncation(
            values in prop::collection::vec(0.0f64..1000.0, 1..40),
            cut in 0usize..40,
        ) {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let full = curve(&sorted);
            if let Ok(rise) = rise_statistics(&full, None, 700.0) {
                let keep = cut.min(full.len());
                let i = full.iter().position(|p| p.step == rise.steps).unwrap();
                if keep > i {
                    let again = rise_statistics(&full[..keep], None, 700.0).unwrap();
                    prop_assert_eq!(again.steps, rise.steps);
                } else if keep > 0 {
                    prop_assert!(rise_statistics(&full[..keep], None, 700.0).is_err());
                }
            }
        }

        #[test]
        fn cot_linear_in_power(scale in 0.1f64..10.0, p in 1.0f64..500.0, v in 0.1f64..5.0) {
            let base = cost_of_transport(&[p, p], &[v, v], 137.34).unwrap();
            let scaled = cost_of_transport(&[scale * p, scale * p], &[v, v], 137.34).unwrap();
            prop_assert!((scaled - scale * base).abs() <= 1e-12 * scaled.abs().max(1.0));
        }
    }

    #[test]
    fn cot_examples() {
        let cot = cost_of_transport(&[274.68], &[2.0], 14.0 * 9.81).unwrap();
        assert!((cot - 1.0).abs() < 1e-12);
        assert_eq!(
            cost_of_transport(&[0.0, 0.0], &[1.0, 3.0], 137.34).unwrap(),
            0.0
        );
        assert!(matches!(
            cost_of_transport(&[10.0], &[0.0005], 137.34),
            Err(Error::ZeroVelocity(_))
        ));
    }

    fn sine_trace(n: usize, dt: f64, period: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                let w = std::f64::consts::TAU / period;
                vec![(w * t).sin(), 3.0 * (w * t).cos(), (2.0 * w * t).sin(), 1.0]
            })
            .collect()
    }

    #[test]
    fn periodic_trace_scores_zero() {
        let s = sine_trace(1000, 0.01, 0.5);
        assert!(periodicity_score(&s, 0.01, 0.5).unwrap() < 1e-9);
    }

    #[test]
    fn fractional_period_interpolates() {
        // piecewise-linear signal with a period of 12.5 samples
        let tri = |t: f64| {
            let u = (t / 0.125).rem_euclid(1.0);
            if u < 0.5 {
                u
            } else {
                1.0 - u
            }
        };
        let s: Vec<Vec<f64>> = (0..400).map(|i| vec![tri(i as f64 * 0.01)]).collect();
        assert!(periodicity_score(&s, 0.01, 0.125).unwrap() < 0.1);
        let (_, period) = best_periodicity(&s, 0.01, 0.05, 0.3).unwrap();
        assert!((period - 0.12).abs() < 0.011 || (period - 0.25).abs() < 0.011);
    }

    #[test]
    fn white_noise_scores_near_sqrt_two() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let s: Vec<Vec<f64>> = (0..20_000)
            .map(|_| (0..4).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let score = periodicity_score(&s, 0.01, 0.375).unwrap();
        // a half-sample shift averages two independent samples
        let expected = 1.5f64.sqrt();
        assert!(
            (score - expected).abs() < 0.03,
            "score {score} expected {expected}"
        );
        let whole = periodicity_score(&s, 0.01, 0.4).unwrap();
        assert!((whole - 2f64.sqrt()).abs() < 0.03, "score {whole}");
    }

    #[test]
    fn short_trace_rejected() {
        let s = sine_trace(100, 0.01, 0.5);
        assert!(matches!(
            periodicity_score(&s, 0.01, 0.5),
            Err(Error::TraceTooShort {
                len: 100,
                needed: 150
            })
        ));
    }

    #[test]
    fn aggregation_ignores_seed_order() {
        let a = (1, curve(&[100.0, 800.0]), vec![10.0, 20.0]);
        let b = (0, curve(&[300.0, 600.0]), vec![12.0, 22.0]);
        let m1 = RunMetrics::from_seed_runs(PolicyKind::Direct, vec![a.clone(), b.clone()], 650.0)
            .unwrap();
        let m2 = RunMetrics::from_seed_runs(PolicyKind::Direct, vec![b, a], 650.0).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.curve[1].mean_reward, 700.0);
        assert_eq!(m1.curve[1].std_reward, 100.0);
        assert_eq!(m1.rise_steps, Some(10_000));
        assert_eq!(m1.rise_time_s, Some(21.0));
        assert_eq!(m1.highest_reward, 700.0);
    }

    #[test]
    fn curve_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("learning_curve.csv");
        let c = curve(&[1.5, 2.25]);
        write_curve(&path, &c).unwrap();
        assert_eq!(read_curve(&path).unwrap(), c);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,mean_reward,std_reward\n"));
    }
}
