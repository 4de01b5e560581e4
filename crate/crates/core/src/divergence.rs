//! Twin-network experiments and decay-regime fitting.
//!
//! Two copies of a trained network start from the same state and are driven
//! by inputs that differ at a few steps. The L1 distance between their
//! activations measures how long the network remembers the difference; a
//! straight line in log-log coordinates means power-law forgetting, a straight
//! line in log-lin coordinates means exponential forgetting.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reservoir::{step, ReservoirError, ReservoirParams, ReservoirState};
use crate::sequences::InputSequence;

/// Distances below this carry no usable logarithm in double precision.
pub const DISTANCE_FLOOR: f64 = 1e-15;

/// Relative round-off, in ulps of the state's L1 norm, below which twin
/// distances are treated as numerical noise.
pub const ROUNDOFF_ULPS: f64 = 64.0;

/// Minimum number of samples in a fit window.
pub const MIN_FIT_SAMPLES: usize = 10;

/// r² differences below this count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-6;

const NOISE_FLOOR_TAG: &str = "# noise_floor:";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivergenceError {
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("twin inputs have different lengths: {0} vs {1}")]
    InputLengthMismatch(usize, usize),
    #[error("no perturbation found: twin inputs are identical")]
    NoPerturbation,
    #[error("twin inputs end {missing} steps before the horizon of {horizon}")]
    InputTooShort { horizon: usize, missing: usize },
    #[error("perturbation did not register: distance at t=1 is zero")]
    Unregistered,
    #[error("invalid distance {value} at t={t}")]
    InvalidDistance { t: usize, value: f64 },
    #[error("invalid fit window [{lo}, {hi}] for series of length {len}")]
    InvalidWindow { lo: usize, hi: usize, len: usize },
    #[error("distance at t={t} is non-positive or below the noise floor")]
    NonPositiveDistance { t: usize },
    #[error("fit window [{lo}, {hi}] holds {count} usable samples, need {MIN_FIT_SAMPLES}")]
    TooFewSamples { lo: usize, hi: usize, count: usize },
    #[error("CSV error on line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
}

/// `Σ_i |x_i − y_i|`.
pub fn l1_distance(x: &DVector<f64>, y: &DVector<f64>) -> Result<f64, DivergenceError> {
    if x.len() != y.len() {
        return Err(DivergenceError::LengthMismatch(x.len(), y.len()));
    }
    Ok(x.iter().zip(y.iter()).map(|(a, b)| (a - b).abs()).sum())
}

/// Distances between twin networks; `distances[0]` is `t = 1`, the step at
/// which the inputs first differ.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceSeries {
    distances: Vec<f64>,
    floor: f64,
    pub descriptor: String,
}

impl DivergenceSeries {
    pub fn new(distances: Vec<f64>, descriptor: impl Into<String>) -> Result<Self, DivergenceError> {
        for (i, &d) in distances.iter().enumerate() {
            if !(d.is_finite() && d >= 0.0) {
                return Err(DivergenceError::InvalidDistance { t: i + 1, value: d });
            }
        }
        if distances.first().is_none_or(|&d| d <= 0.0) {
            return Err(DivergenceError::Unregistered);
        }
        Ok(Self {
            distances,
            floor: DISTANCE_FLOOR,
            descriptor: descriptor.into(),
        })
    }

    /// Raises the truncation floor for fits; never below [`DISTANCE_FLOOR`].
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = if floor.is_finite() { floor.max(DISTANCE_FLOOR) } else { DISTANCE_FLOOR };
        self
    }

    /// Distances below this are cut from fit windows.
    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    /// Distance at 1-based time `t`.
    pub fn at(&self, t: usize) -> f64 {
        self.distances[t - 1]
    }

    /// `[10, len/2]`, skipping the immediate transient and the noisy tail.
    pub fn default_window(&self) -> (usize, usize) {
        (10, self.len() / 2)
    }

    /// First `t` with `d(t) ≤ fraction · d(1)`.
    pub fn first_below(&self, fraction: f64) -> Option<usize> {
        let threshold = fraction * self.distances[0];
        self.distances.iter().position(|&d| d <= threshold).map(|i| i + 1)
    }

    /// CSV `t,distance`, `t` from 1. A raised floor is kept in a leading
    /// `# noise_floor:` comment.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.floor > DISTANCE_FLOOR {
            out.push_str(&format!("{NOISE_FLOOR_TAG} {:?}\n", self.floor));
        }
        out.push_str("t,distance\n");
        for (i, d) in self.distances.iter().enumerate() {
            out.push_str(&format!("{},{d:?}\n", i + 1));
        }
        out
    }

    /// Parses `t,distance` CSV. Lines starting with `#` are comments; a
    /// `# noise_floor:` comment restores the truncation floor.
    pub fn from_csv(text: &str, descriptor: impl Into<String>) -> Result<Self, DivergenceError> {
        let mut floor = DISTANCE_FLOOR;
        for (i, line) in text.lines().enumerate().take_while(|(_, l)| l.starts_with('#')) {
            if let Some(v) = line.strip_prefix(NOISE_FLOOR_TAG) {
                floor = v.trim().parse().map_err(|e| DivergenceError::Csv {
                    line: i as u64 + 1,
                    message: format!("bad noise floor: {e}"),
                })?;
            }
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).comment(Some(b'#')).from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| DivergenceError::Csv { line: 1, message: e.to_string() })?;
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "distance" {
            return Err(DivergenceError::Csv {
                line: 1,
                message: "expected header t,distance".into(),
            });
        }
        let mut distances = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| DivergenceError::Csv {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let t: usize = record[0].trim().parse().map_err(|e| DivergenceError::Csv { line, message: format!("bad t: {e}") })?;
            if t != distances.len() + 1 {
                return Err(DivergenceError::Csv {
                    line,
                    message: format!("expected t = {}, got {t}", distances.len() + 1),
                });
            }
            let d: f64 = record[1].trim().parse().map_err(|e| DivergenceError::Csv { line, message: format!("bad distance: {e}") })?;
            distances.push(d);
        }
        Ok(Self::new(distances, descriptor)?.with_floor(floor))
    }
}

/// Runs two copies of `params` from `initial`, first through `warmup`, then
/// through `input_a` and `input_b` respectively, and records the L1 distance
/// of their activations for `horizon` steps from the first differing input.
/// The fit floor is raised to the round-off level of the states' L1 norm.
///
/// No learning happens here; `params` is borrowed immutably.
pub fn run_twins(
    params: &ReservoirParams,
    initial: &ReservoirState,
    warmup: &InputSequence,
    input_a: &InputSequence,
    input_b: &InputSequence,
    horizon: usize,
) -> Result<DivergenceSeries, DivergenceError> {
    if input_a.len() != input_b.len() {
        return Err(DivergenceError::InputLengthMismatch(input_a.len(), input_b.len()));
    }
    let first = input_a
        .vectors()
        .iter()
        .zip(input_b.vectors())
        .position(|(a, b)| a != b)
        .ok_or(DivergenceError::NoPerturbation)?;
    if first + horizon > input_a.len() {
        return Err(DivergenceError::InputTooShort {
            horizon,
            missing: first + horizon - input_a.len(),
        });
    }

    let mut shared = initial.clone();
    for u in warmup.vectors().iter().chain(&input_a.vectors()[..first]) {
        shared = step(params, &shared, u)?;
    }
    let mut a = shared.clone();
    let mut b = shared;
    let mut distances = Vec::with_capacity(horizon);
    let mut scale = 0.0_f64;
    for t in first..first + horizon {
        a = step(params, &a, &input_a.vectors()[t])?;
        b = step(params, &b, &input_b.vectors()[t])?;
        distances.push(l1_distance(a.x(), b.x())?);
        scale = scale.max(a.x().lp_norm(1)).max(b.x().lp_norm(1));
    }
    let series = DivergenceSeries::new(distances, format!("twins: first difference at input {first}, horizon {horizon}"))?;
    Ok(series.with_floor(ROUNDOFF_ULPS * f64::EPSILON * scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// `d ≈ c · t^b`
    PowerLaw,
    /// `d ≈ c · e^{r t}`
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Power-law exponent `b` or exponential rate `r`.
    pub slope: f64,
    /// Intercept of the fitted line, in natural-log units.
    pub intercept: f64,
    /// Samples actually used, after floor truncation.
    pub window: (usize, usize),
    pub r_squared: f64,
    /// Set when both models fit equally well and the tie went to `Exponential`.
    pub tie: bool,
}

impl DecayFit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit is always serializable")
    }
}

/// Checks `window` against the series and cuts it at the first distance below the series floor.
fn usable_window(series: &DivergenceSeries, window: (usize, usize)) -> Result<(usize, usize), DivergenceError> {
    let (lo, hi) = window;
    if lo == 0 || lo >= hi || hi > series.len() {
        return Err(DivergenceError::InvalidWindow { lo, hi, len: series.len() });
    }
    if series.at(lo) < series.floor() {
        return Err(DivergenceError::NonPositiveDistance { t: lo });
    }
    let end = (lo..=hi).find(|&t| series.at(t) < series.floor()).map_or(hi, |t| t - 1);
    let count = end - lo + 1;
    if count < MIN_FIT_SAMPLES {
        return Err(DivergenceError::TooFewSamples { lo, hi: end, count });
    }
    Ok((lo, end))
}

/// Ordinary least squares `y ≈ a + b x`, returning `(b, a, r²)`.
fn least_squares(points: impl Iterator<Item = (f64, f64)> + Clone) -> (f64, f64, f64) {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy, syy) = points.clone().fold((0.0, 0.0, 0.0), |(a, b, c), (x, y)| {
        let (dx, dy) = (x - mx, y - my);
        (a + dx * dx, b + dx * dy, c + dy * dy)
    });
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    (slope, intercept, r2)
}

fn fit_with(series: &DivergenceSeries, window: (usize, usize), model: DecayModel) -> Result<DecayFit, DivergenceError> {
    let (lo, hi) = usable_window(series, window)?;
    let points = (lo..=hi).map(move |t| {
        let x = match model {
            DecayModel::PowerLaw => (t as f64).ln(),
            DecayModel::Exponential => t as f64,
        };
        (x, series.at(t).ln())
    });
    let (slope, intercept, r_squared) = least_squares(points);
    Ok(DecayFit {
        model,
        slope,
        intercept,
        window: (lo, hi),
        r_squared,
        tie: false,
    })
}

/// Least-squares line through `(ln t, ln d)`.
pub fn fit_power_law(series: &DivergenceSeries, window: (usize, usize)) -> Result<DecayFit, DivergenceError> {
    fit_with(series, window, DecayModel::PowerLaw)
}

/// Least-squares line through `(t, ln d)`.
pub fn fit_exponential(series: &DivergenceSeries, window: (usize, usize)) -> Result<DecayFit, DivergenceError> {
    fit_with(series, window, DecayModel::Exponential)
}

/// Fits both models and keeps the one with the higher r².
pub fn classify_decay(series: &DivergenceSeries, window: (usize, usize)) -> Result<DecayFit, DivergenceError> {
    let power = fit_power_law(series, window)?;
    let exp = fit_exponential(series, window)?;
    if (power.r_squared - exp.r_squared).abs() < TIE_TOLERANCE {
        Ok(DecayFit { tie: true, ..exp })
    } else if power.r_squared > exp.r_squared {
        Ok(power)
    } else {
        Ok(exp)
    }
}

/// Trailing moving average with a full window; output has `len - window + 1` entries.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    values.windows(window.max(1)).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SquareMatrix;
    use crate::reservoir::TransferFunction;
    use crate::sequences::alternating_sequence;
    use nalgebra::DMatrix;

    fn series(f: impl Fn(f64) -> f64, len: usize) -> DivergenceSeries {
        DivergenceSeries::new((1..=len).map(|t| f(t as f64)).collect(), "synthetic").unwrap()
    }

    #[test]
    fn l1_examples() {
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let y = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(l1_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(l1_distance(&x, &y).unwrap(), 2.0);
        assert_eq!(l1_distance(&x, &y).unwrap(), l1_distance(&y, &x).unwrap());
        assert!(l1_distance(&x, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn series_invariants() {
        assert_eq!(DivergenceSeries::new(vec![0.0, 1.0], ""), Err(DivergenceError::Unregistered));
        assert!(matches!(DivergenceSeries::new(vec![1.0, -1.0], ""), Err(DivergenceError::InvalidDistance { t: 2, .. })));
        assert!(DivergenceSeries::new(vec![], "").is_err());
    }

    #[test]
    fn exact_power_law() {
        let s = series(|t| 3.0 * t.powf(-0.5), 1000);
        let fit = fit_power_law(&s, (1, 1000)).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-9);
        assert!((fit.intercept - 3.0_f64.ln()).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let exp = fit_exponential(&s, (1, 1000)).unwrap();
        assert!(exp.r_squared < fit.r_squared);
        assert_eq!(classify_decay(&s, (1, 1000)).unwrap().model, DecayModel::PowerLaw);
    }

    #[test]
    fn exact_exponential() {
        let s = series(|t| 2.0 * (-0.1 * t).exp(), 1000);
        let fit = fit_exponential(&s, (10, 300)).unwrap();
        assert!((fit.slope + 0.1).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let power = fit_power_law(&s, (10, 300)).unwrap();
        assert!(power.r_squared < fit.r_squared - 0.05, "power r² {}", power.r_squared);
        let c = classify_decay(&s, (10, 300)).unwrap();
        assert_eq!(c.model, DecayModel::Exponential);
        assert!(!c.tie);
    }

    #[test]
    fn exponential_tail_is_truncated_at_floor() {
        // 2·e^{-0.1 t} falls under 1e-15 near t = 352.
        let s = series(|t| 2.0 * (-0.1 * t).exp(), 1000);
        let fit = fit_exponential(&s, (10, 1000)).unwrap();
        assert!(fit.window.1 < 360 && fit.window.1 > 340, "{:?}", fit.window);
        assert!((fit.slope + 0.1).abs() < 1e-9);
    }

    #[test]
    fn constant_series_ties() {
        let s = series(|_| 0.5, 100);
        let c = classify_decay(&s, (10, 50)).unwrap();
        assert!(c.tie);
        assert_eq!(c.model, DecayModel::Exponential);
        assert!(c.slope.abs() < 1e-12);
    }

    #[test]
    fn window_errors() {
        let s = series(|t| 1.0 / t, 100);
        assert!(matches!(fit_power_law(&s, (0, 50)), Err(DivergenceError::InvalidWindow { .. })));
        assert!(matches!(fit_power_law(&s, (50, 50)), Err(DivergenceError::InvalidWindow { .. })));
        assert!(matches!(fit_power_law(&s, (10, 101)), Err(DivergenceError::InvalidWindow { .. })));
        assert!(matches!(fit_power_law(&s, (10, 15)), Err(DivergenceError::TooFewSamples { count: 6, .. })));
        let z = DivergenceSeries::new(vec![1.0, 0.5, 0.0, 0.0, 0.0], "").unwrap();
        assert_eq!(fit_power_law(&z, (3, 5)), Err(DivergenceError::NonPositiveDistance { t: 3 }));
    }

    #[test]
    fn csv_round_trip() {
        let s = series(|t| 1.0 / t.sqrt(), 20);
        let text = s.to_csv();
        assert!(text.starts_with("t,distance\n1,1.0\n"));
        assert_eq!(DivergenceSeries::from_csv(&text, "synthetic").unwrap(), s);
        assert!(DivergenceSeries::from_csv("t,d\n1,1\n", "").is_err());
    }

    #[test]
    fn raised_floor_truncates_and_survives_csv() {
        let s = series(|t| (-t).exp(), 60).with_floor(1e-12);
        let text = s.to_csv();
        assert!(text.starts_with("# noise_floor: 1e-12\nt,distance\n"));
        let back = DivergenceSeries::from_csv(&format!("# run_id: x\n{text}"), "synthetic").unwrap();
        assert_eq!(back.floor(), 1e-12);
        // e^{-t} < 1e-12 from t = 28 on.
        assert_eq!(fit_exponential(&back, (10, 60)).unwrap().window, (10, 27));
        assert_eq!(series(|t| t, 5).with_floor(0.0).floor(), DISTANCE_FLOOR);
        assert_eq!(series(|t| t, 5).with_floor(f64::NAN).floor(), DISTANCE_FLOOR);
    }

    #[test]
    fn twin_floor_tracks_state_magnitude() {
        let p = ReservoirParams::new(SquareMatrix::identity(2), DMatrix::from_element(2, 1, 0.3), TransferFunction::SinCritical).unwrap();
        let a = alternating_sequence(30);
        let mut flipped: Vec<f64> = a.vectors().iter().map(|v| v[0]).collect();
        flipped[0] = 5.0;
        let s = run_twins(&p, &ReservoirState::zeros(2), &InputSequence::from_scalars(&[]), &a, &InputSequence::from_scalars(&flipped), 20).unwrap();
        assert!(s.floor() > DISTANCE_FLOOR);
        assert!(s.floor() < 1e-12);
    }

    #[test]
    fn memoryless_twins_differ_only_at_the_flip() {
        let p = ReservoirParams::new(SquareMatrix::zeros(3), DMatrix::from_element(3, 1, 0.7), TransferFunction::SinCritical).unwrap();
        let a = alternating_sequence(40);
        let mut flipped: Vec<f64> = a.vectors().iter().map(|v| v[0]).collect();
        flipped[5] = -flipped[5];
        let b = InputSequence::from_scalars(&flipped);
        let s = run_twins(&p, &ReservoirState::zeros(3), &alternating_sequence(10), &a, &b, 20).unwrap();
        assert!(s.at(1) > 0.0);
        assert!(s.distances()[1..].iter().all(|&d| d == 0.0));
    }

    #[test]
    fn twin_errors() {
        let p = ReservoirParams::new(SquareMatrix::identity(2), DMatrix::from_element(2, 1, 0.3), TransferFunction::SinCritical).unwrap();
        let a = alternating_sequence(10);
        let s0 = ReservoirState::zeros(2);
        let empty = InputSequence::from_scalars(&[]);
        assert_eq!(run_twins(&p, &s0, &empty, &a, &a, 5), Err(DivergenceError::NoPerturbation));
        let mut v: Vec<f64> = a.vectors().iter().map(|v| v[0]).collect();
        v[8] = 0.0;
        let b = InputSequence::from_scalars(&v);
        assert_eq!(run_twins(&p, &s0, &empty, &a, &b, 5), Err(DivergenceError::InputTooShort { horizon: 5, missing: 3 }));
        assert!(run_twins(&p, &s0, &empty, &a, &b, 2).is_ok());
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.5, 2.5, 3.5]);
    }
}
