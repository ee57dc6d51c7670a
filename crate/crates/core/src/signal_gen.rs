//! Parametric synthesis of the eleven disturbance classes.
//!
//! With `ω = 2π·f0`, `e(t) = u(t − t1) − u(t − t2)` and `h(t)` either
//! `sin(ωt)` or `sin(ωt) + a3·sin(3ωt) + a5·sin(5ωt) + a7·sin(7ωt)` for the
//! "with harmonics" classes:
//!
//! | event        | model                                                  |
//! |--------------|--------------------------------------------------------|
//! | sag          | `A·(1 − α·e(t))·h(t)`                                  |
//! | swell        | `A·(1 + β·e(t))·h(t)`                                  |
//! | interruption | `A·(1 − ρ·e(t))·h(t)`                                  |
//! | flicker      | `A·(1 + λ·sin(2π·f_f·t))·h(t)` over the whole record   |
//! | transient    | `A·sin(ωt) + A·k·exp(−(t−t1)/τ)·e(t)·sin(2π·f_n·(t−t1))` |
//! | spike/notch  | `A·sin(ωt) ± A·m·sgn(sin ωt)` inside a once-per-cycle pulse |

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PqError, Result};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DisturbanceClass {
    SwellWithHarmonics = 1,
    Swell = 2,
    Spike = 3,
    SagWithHarmonics = 4,
    Sag = 5,
    OscillatoryTransient = 6,
    Notch = 7,
    InterruptionWithHarmonics = 8,
    Interruption = 9,
    FlickerWithHarmonics = 10,
    Flicker = 11,
}

/// The base phenomenon of a class, independent of the harmonic overlay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Sag,
    Swell,
    Interruption,
    Flicker,
    Transient,
    Spike,
    Notch,
}

impl DisturbanceClass {
    pub const COUNT: usize = 11;

    pub const ALL: [DisturbanceClass; 11] = [
        DisturbanceClass::SwellWithHarmonics,
        DisturbanceClass::Swell,
        DisturbanceClass::Spike,
        DisturbanceClass::SagWithHarmonics,
        DisturbanceClass::Sag,
        DisturbanceClass::OscillatoryTransient,
        DisturbanceClass::Notch,
        DisturbanceClass::InterruptionWithHarmonics,
        DisturbanceClass::Interruption,
        DisturbanceClass::FlickerWithHarmonics,
        DisturbanceClass::Flicker,
    ];

    /// Stable integer code, 1..=11.
    pub fn code(self) -> u8 {
        self as u8
    }

    /// Zero-based position, `code - 1`.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1..=11 => Some(Self::ALL[code as usize - 1]),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DisturbanceClass::SwellWithHarmonics => "SwellWithHarmonics",
            DisturbanceClass::Swell => "Swell",
            DisturbanceClass::Spike => "Spike",
            DisturbanceClass::SagWithHarmonics => "SagWithHarmonics",
            DisturbanceClass::Sag => "Sag",
            DisturbanceClass::OscillatoryTransient => "OscillatoryTransient",
            DisturbanceClass::Notch => "Notch",
            DisturbanceClass::InterruptionWithHarmonics => "InterruptionWithHarmonics",
            DisturbanceClass::Interruption => "Interruption",
            DisturbanceClass::FlickerWithHarmonics => "FlickerWithHarmonics",
            DisturbanceClass::Flicker => "Flicker",
        }
    }

    pub fn has_harmonics(self) -> bool {
        matches!(
            self,
            DisturbanceClass::SwellWithHarmonics
                | DisturbanceClass::SagWithHarmonics
                | DisturbanceClass::InterruptionWithHarmonics
                | DisturbanceClass::FlickerWithHarmonics
        )
    }

    pub fn event_kind(self) -> EventKind {
        use DisturbanceClass::*;
        match self {
            SwellWithHarmonics | Swell => EventKind::Swell,
            SagWithHarmonics | Sag => EventKind::Sag,
            InterruptionWithHarmonics | Interruption => EventKind::Interruption,
            FlickerWithHarmonics | Flicker => EventKind::Flicker,
            OscillatoryTransient => EventKind::Transient,
            Spike => EventKind::Spike,
            Notch => EventKind::Notch,
        }
    }
}

impl fmt::Display for DisturbanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.code())
    }
}

/// Generation parameters of one waveform.
///
/// `depth` is the event magnitude: sag depth α, swell rise β, interruption
/// depth ρ, flicker modulation λ, transient amplitude k or pulse magnitude m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalParams {
    pub fundamental_hz: f64,
    pub sampling_hz: f64,
    pub duration_s: f64,
    pub amplitude_pu: f64,
    pub event_start_s: f64,
    pub event_end_s: f64,
    pub depth: f64,
    /// 3rd, 5th and 7th harmonic amplitudes relative to the fundamental.
    pub harmonic_amplitudes: [f64; 3],
    pub transient_freq_hz: f64,
    pub transient_decay_s: f64,
    pub flicker_hz: f64,
    /// Pulse width as a fraction of one fundamental cycle (spike/notch).
    pub pulse_width_cycles: f64,
    /// Pulse centre as a phase fraction of the fundamental cycle.
    pub pulse_phase_cycles: f64,
    /// Additive white Gaussian noise, off when `None`.
    pub noise_snr_db: Option<f64>,
    pub rng_seed: u64,
}

impl Default for SignalParams {
    fn default() -> Self {
        SignalParams {
            fundamental_hz: 50.0,
            sampling_hz: 3200.0,
            duration_s: 0.2,
            amplitude_pu: 1.0,
            event_start_s: 0.06,
            event_end_s: 0.14,
            depth: 0.0,
            harmonic_amplitudes: [0.0; 3],
            transient_freq_hz: 600.0,
            transient_decay_s: 0.02,
            flicker_hz: 10.0,
            pulse_width_cycles: 0.03,
            pulse_phase_cycles: 0.25,
            noise_snr_db: None,
            rng_seed: 0,
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(PqError::Parameter(msg()))
    }
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    x.is_finite() && x >= lo && x <= hi
}

impl SignalParams {
    /// Number of samples, `round(duration_s × sampling_hz)`.
    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sampling_hz).round() as usize
    }

    pub fn samples_per_cycle(&self) -> f64 {
        self.sampling_hz / self.fundamental_hz
    }

    /// Checks the structural invariants and the legal magnitude range for
    /// `class`. Legal ranges are physical bounds; the dataset generator draws
    /// from narrower default ranges (see [`ParamRanges`]).
    pub fn validate(&self, class: DisturbanceClass) -> Result<()> {
        check(
            self.fundamental_hz.is_finite() && self.fundamental_hz > 0.0,
            || format!("fundamental_hz must be positive, got {}", self.fundamental_hz),
        )?;
        check(
            self.sampling_hz.is_finite() && self.sampling_hz > 0.0,
            || format!("sampling_hz must be positive, got {}", self.sampling_hz),
        )?;
        let spc = self.samples_per_cycle();
        check(spc >= 2.0 && (spc - spc.round()).abs() <= 1e-9 * spc, || {
            format!("sampling_hz / fundamental_hz must be an integer >= 2, got {spc}")
        })?;
        check(self.duration_s.is_finite() && self.duration_s > 0.0, || {
            format!("duration_s must be positive, got {}", self.duration_s)
        })?;
        check(self.sample_count() >= 1, || "record has no samples".into())?;
        check(
            self.amplitude_pu.is_finite() && self.amplitude_pu > 0.0,
            || format!("amplitude_pu must be positive, got {}", self.amplitude_pu),
        )?;
        check(
            self.event_start_s.is_finite()
                && self.event_end_s.is_finite()
                && 0.0 < self.event_start_s
                && self.event_start_s < self.event_end_s
                && self.event_end_s <= self.duration_s,
            || {
                format!(
                    "event window must satisfy 0 < start < end <= duration, got [{}, {}] in {}",
                    self.event_start_s, self.event_end_s, self.duration_s
                )
            },
        )?;
        if let Some(snr) = self.noise_snr_db {
            check(snr.is_finite(), || "noise_snr_db must be finite".into())?;
        }

        if class.has_harmonics() {
            check(
                self.harmonic_amplitudes.iter().all(|&a| within(a, 0.0, 0.5)),
                || format!("{class}: harmonic amplitudes must lie in [0, 0.5]"),
            )?;
        } else {
            check(self.harmonic_amplitudes.iter().all(|&a| a == 0.0), || {
                format!("{class}: harmonic amplitudes must be zero for a class without harmonics")
            })?;
        }

        let depth = self.depth;
        match class.event_kind() {
            EventKind::Sag | EventKind::Interruption | EventKind::Swell => {
                check(within(depth, 0.0, 1.0), || {
                    format!("{class}: depth must lie in [0, 1], got {depth}")
                })?;
            }
            EventKind::Flicker => {
                check(depth.is_finite() && (0.0..1.0).contains(&depth), || {
                    format!("{class}: flicker modulation must lie in [0, 1), got {depth}")
                })?;
                check(
                    self.flicker_hz.is_finite()
                        && self.flicker_hz > 0.0
                        && self.flicker_hz < self.fundamental_hz,
                    || format!("{class}: flicker_hz must lie in (0, f0), got {}", self.flicker_hz),
                )?;
            }
            EventKind::Transient => {
                check(within(depth, 0.0, 1.0), || {
                    format!("{class}: transient amplitude must lie in [0, 1], got {depth}")
                })?;
                check(
                    self.transient_freq_hz.is_finite()
                        && self.transient_freq_hz > 0.0
                        && self.transient_freq_hz < self.sampling_hz / 2.0,
                    || {
                        format!(
                            "{class}: transient_freq_hz must lie below Nyquist, got {}",
                            self.transient_freq_hz
                        )
                    },
                )?;
                check(
                    self.transient_decay_s.is_finite() && self.transient_decay_s > 0.0,
                    || format!("{class}: transient_decay_s must be positive"),
                )?;
            }
            EventKind::Spike | EventKind::Notch => {
                check(within(depth, 0.0, 1.0), || {
                    format!("{class}: pulse magnitude must lie in [0, 1], got {depth}")
                })?;
                check(
                    self.pulse_width_cycles.is_finite()
                        && self.pulse_width_cycles > 0.0
                        && self.pulse_width_cycles <= 0.5,
                    || format!("{class}: pulse_width_cycles must lie in (0, 0.5]"),
                )?;
                check(within(self.pulse_phase_cycles, 0.0, 1.0), || {
                    format!("{class}: pulse_phase_cycles must lie in [0, 1]")
                })?;
            }
        }
        Ok(())
    }
}

/// One sampled waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub id: u64,
    pub label: DisturbanceClass,
    pub params: SignalParams,
    pub samples: Vec<f64>,
}

/// Closed-form model value at time `t`.
pub fn sample_waveform(class: DisturbanceClass, params: &SignalParams, t: f64) -> Result<f64> {
    params.validate(class)?;
    if !(t.is_finite() && t >= 0.0 && t <= params.duration_s) {
        return Err(PqError::Parameter(format!(
            "t = {t} outside [0, {}]",
            params.duration_s
        )));
    }
    Ok(eval_model(class, params, t))
}

fn eval_model(class: DisturbanceClass, p: &SignalParams, t: f64) -> f64 {
    let w = 2.0 * PI * p.fundamental_hz;
    let a = p.amplitude_pu;
    let fundamental = (w * t).sin();
    let carrier = if class.has_harmonics() {
        let [a3, a5, a7] = p.harmonic_amplitudes;
        fundamental + a3 * (3.0 * w * t).sin() + a5 * (5.0 * w * t).sin() + a7 * (7.0 * w * t).sin()
    } else {
        fundamental
    };
    let in_event = t >= p.event_start_s && t < p.event_end_s;
    let window = if in_event { 1.0 } else { 0.0 };

    match class.event_kind() {
        EventKind::Sag | EventKind::Interruption => a * (1.0 - p.depth * window) * carrier,
        EventKind::Swell => a * (1.0 + p.depth * window) * carrier,
        EventKind::Flicker => a * (1.0 + p.depth * (2.0 * PI * p.flicker_hz * t).sin()) * carrier,
        EventKind::Transient => {
            let base = a * carrier;
            if in_event {
                let dt = t - p.event_start_s;
                base + a
                    * p.depth
                    * (-dt / p.transient_decay_s).exp()
                    * (2.0 * PI * p.transient_freq_hz * dt).sin()
            } else {
                base
            }
        }
        EventKind::Spike | EventKind::Notch => {
            let base = a * carrier;
            if in_event && in_pulse(p, t) {
                let pulse = a * p.depth * fundamental.signum();
                if class.event_kind() == EventKind::Spike {
                    base + pulse
                } else {
                    base - pulse
                }
            } else {
                base
            }
        }
    }
}

/// True when the phase of `t` lies within half a pulse width of the pulse
/// centre (circular distance on the unit cycle).
fn in_pulse(p: &SignalParams, t: f64) -> bool {
    let phase = (t * p.fundamental_hz).fract();
    let mut d = (phase - p.pulse_phase_cycles).abs();
    if d > 0.5 {
        d = 1.0 - d;
    }
    d < p.pulse_width_cycles / 2.0
}

/// Samples the model on `t_n = n / sampling_hz`, then adds noise when enabled.
pub fn generate_signal(class: DisturbanceClass, params: &SignalParams) -> Result<SignalRecord> {
    params.validate(class)?;
    let n = params.sample_count();
    let mut samples: Vec<f64> = (0..n)
        .map(|i| eval_model(class, params, i as f64 / params.sampling_hz))
        .collect();

    if let Some(snr_db) = params.noise_snr_db {
        let power = samples.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        for x in &mut samples {
            let z: f64 = rng.sample(StandardNormal);
            *x += sigma * z;
        }
    }

    Ok(SignalRecord {
        id: 0,
        label: class,
        params: params.clone(),
        samples,
    })
}

/// Closed interval `[lo, hi]` for uniform draws.
pub type Interval = [f64; 2];

/// Per-class draw ranges used by [`generate_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamRanges {
    pub amplitude_pu: Interval,
    pub event_cycles: Interval,
    /// Minimum distance, in cycles, between the event and either record edge.
    pub edge_margin_cycles: f64,
    pub sag_depth: Interval,
    pub swell_rise: Interval,
    pub interruption_depth: Interval,
    pub flicker_modulation: Interval,
    pub flicker_hz: Interval,
    pub harmonic3: Interval,
    pub harmonic5: Interval,
    pub harmonic7: Interval,
    pub transient_amplitude: Interval,
    pub transient_decay_s: Interval,
    pub transient_freq_hz: Interval,
    pub pulse_magnitude: Interval,
    pub pulse_width_cycles: Interval,
    /// Pulse centres are snapped to the sample grid within this phase range.
    pub pulse_phase_cycles: Interval,
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            amplitude_pu: [1.0, 1.0],
            event_cycles: [1.0, 6.0],
            edge_margin_cycles: 1.0,
            sag_depth: [0.1, 0.9],
            swell_rise: [0.1, 0.8],
            interruption_depth: [0.9, 1.0],
            flicker_modulation: [0.1, 0.2],
            flicker_hz: [5.0, 20.0],
            harmonic3: [0.05, 0.15],
            harmonic5: [0.05, 0.1],
            harmonic7: [0.02, 0.05],
            transient_amplitude: [0.5, 0.9],
            transient_decay_s: [0.008, 0.040],
            transient_freq_hz: [300.0, 900.0],
            pulse_magnitude: [0.1, 0.4],
            pulse_width_cycles: [0.01, 0.05],
            pulse_phase_cycles: [0.05, 0.45],
        }
    }
}

impl ParamRanges {
    fn intervals(&self) -> [(&'static str, Interval); 16] {
        [
            ("amplitude_pu", self.amplitude_pu),
            ("event_cycles", self.event_cycles),
            ("sag_depth", self.sag_depth),
            ("swell_rise", self.swell_rise),
            ("interruption_depth", self.interruption_depth),
            ("flicker_modulation", self.flicker_modulation),
            ("flicker_hz", self.flicker_hz),
            ("harmonic3", self.harmonic3),
            ("harmonic5", self.harmonic5),
            ("harmonic7", self.harmonic7),
            ("transient_amplitude", self.transient_amplitude),
            ("transient_decay_s", self.transient_decay_s),
            ("transient_freq_hz", self.transient_freq_hz),
            ("pulse_magnitude", self.pulse_magnitude),
            ("pulse_width_cycles", self.pulse_width_cycles),
            ("pulse_phase_cycles", self.pulse_phase_cycles),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub signals_per_class: usize,
    pub classes: Vec<DisturbanceClass>,
    pub master_seed: u64,
    pub fundamental_hz: f64,
    pub sampling_hz: f64,
    /// Record length in fundamental cycles.
    pub cycles: usize,
    pub noise_snr_db: Option<f64>,
    pub ranges: ParamRanges,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            signals_per_class: 700,
            classes: DisturbanceClass::ALL.to_vec(),
            master_seed: 1159,
            fundamental_hz: 50.0,
            sampling_hz: 3200.0,
            cycles: 10,
            noise_snr_db: None,
            ranges: ParamRanges::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        check(!self.classes.is_empty(), || "dataset has no classes".into())?;
        check(self.signals_per_class > 0, || "signals_per_class must be > 0".into())?;
        check(self.cycles > 0, || "cycles must be > 0".into())?;
        for (name, [lo, hi]) in self.ranges.intervals() {
            check(lo.is_finite() && hi.is_finite() && lo <= hi, || {
                format!("range {name} = [{lo}, {hi}] is not a valid interval")
            })?;
        }
        let r = &self.ranges;
        check(r.event_cycles[0] > 0.0, || "event_cycles must be positive".into())?;
        check(
            r.edge_margin_cycles > 0.0
                && 2.0 * r.edge_margin_cycles + r.event_cycles[1] <= self.cycles as f64,
            || {
                format!(
                    "{} cycles cannot hold a {}-cycle event with {}-cycle margins",
                    self.cycles, r.event_cycles[1], r.edge_margin_cycles
                )
            },
        )?;
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        self.cycles as f64 / self.fundamental_hz
    }
}

fn uniform<R: Rng>(rng: &mut R, [lo, hi]: Interval) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Draws one parameter set for `class` from the stream keyed by
/// `(master_seed, class_code, index)`.
pub fn draw_params(spec: &DatasetSpec, class: DisturbanceClass, index: u64) -> SignalParams {
    let mut rng = rng::stream(
        Domain::Signal,
        &[spec.master_seed, class.code() as u64, index],
    );
    let r = &spec.ranges;
    let f0 = spec.fundamental_hz;
    let cycles = spec.cycles as f64;

    let rng_seed: u64 = rng.random();
    let amplitude_pu = uniform(&mut rng, r.amplitude_pu);
    let event_cycles = uniform(&mut rng, r.event_cycles);
    let start_cycles = uniform(
        &mut rng,
        [r.edge_margin_cycles, cycles - r.edge_margin_cycles - event_cycles],
    );

    let mut p = SignalParams {
        fundamental_hz: f0,
        sampling_hz: spec.sampling_hz,
        duration_s: spec.duration_s(),
        amplitude_pu,
        event_start_s: start_cycles / f0,
        event_end_s: (start_cycles + event_cycles) / f0,
        noise_snr_db: spec.noise_snr_db,
        rng_seed,
        ..SignalParams::default()
    };

    match class.event_kind() {
        EventKind::Sag => p.depth = uniform(&mut rng, r.sag_depth),
        EventKind::Swell => p.depth = uniform(&mut rng, r.swell_rise),
        EventKind::Interruption => p.depth = uniform(&mut rng, r.interruption_depth),
        EventKind::Flicker => {
            p.depth = uniform(&mut rng, r.flicker_modulation);
            p.flicker_hz = uniform(&mut rng, r.flicker_hz);
        }
        EventKind::Transient => {
            p.depth = uniform(&mut rng, r.transient_amplitude);
            p.transient_decay_s = uniform(&mut rng, r.transient_decay_s);
            p.transient_freq_hz = uniform(&mut rng, r.transient_freq_hz);
        }
        EventKind::Spike | EventKind::Notch => {
            p.depth = uniform(&mut rng, r.pulse_magnitude);
            p.pulse_width_cycles = uniform(&mut rng, r.pulse_width_cycles);
            let spc = p.samples_per_cycle().round();
            let lo = (r.pulse_phase_cycles[0] * spc).ceil() as u64;
            let hi = ((r.pulse_phase_cycles[1] * spc).floor() as u64).max(lo);
            let slot = rng.random_range(lo..=hi);
            p.pulse_phase_cycles = slot as f64 / spc;
        }
    }

    if class.has_harmonics() {
        p.harmonic_amplitudes = [
            uniform(&mut rng, r.harmonic3),
            uniform(&mut rng, r.harmonic5),
            uniform(&mut rng, r.harmonic7),
        ];
    }
    p
}

/// Generates `signals_per_class` records per class, ordered by
/// (class position, index). Ids are assigned in that order from 0.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Vec<SignalRecord>> {
    spec.validate()?;
    let n = spec.signals_per_class;
    let jobs: Vec<(usize, DisturbanceClass, usize)> = spec
        .classes
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| (0..n).map(move |i| (k, c, i)))
        .collect();

    jobs.par_iter()
        .map(|&(k, class, i)| {
            let params = draw_params(spec, class, i as u64);
            let mut rec = generate_signal(class, &params)?;
            rec.id = (k * n + i) as u64;
            Ok(rec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at_peak(p: &SignalParams) -> f64 {
        // first fundamental peak inside the event window
        let period = 1.0 / p.fundamental_hz;
        let k = ((p.event_start_s - period / 4.0) / period).ceil();
        k * period + period / 4.0
    }

    #[test]
    fn class_codes_round_trip() {
        for (i, c) in DisturbanceClass::ALL.iter().enumerate() {
            assert_eq!(c.code() as usize, i + 1);
            assert_eq!(DisturbanceClass::from_code(c.code()), Some(*c));
        }
        assert_eq!(DisturbanceClass::from_code(0), None);
        assert_eq!(DisturbanceClass::from_code(12), None);
    }

    #[test]
    fn pure_sine_at_zero() {
        let p = SignalParams::default();
        for c in [DisturbanceClass::Sag, DisturbanceClass::Swell, DisturbanceClass::Interruption] {
            assert_eq!(sample_waveform(c, &p, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn sag_swell_interruption_at_peak() {
        let mut p = SignalParams {
            depth: 0.5,
            ..Default::default()
        };
        let t = at_peak(&p);
        assert!(t >= p.event_start_s && t < p.event_end_s);
        let v = sample_waveform(DisturbanceClass::Sag, &p, t).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");

        p.depth = 0.4;
        let v = sample_waveform(DisturbanceClass::Swell, &p, t).unwrap();
        assert!((v - 1.4).abs() < 1e-12, "{v}");

        p.depth = 1.0;
        let v = sample_waveform(DisturbanceClass::Interruption, &p, t).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn rejects_bad_time_and_params() {
        let p = SignalParams::default();
        assert!(sample_waveform(DisturbanceClass::Sag, &p, -0.001).is_err());
        assert!(sample_waveform(DisturbanceClass::Sag, &p, 0.3).is_err());

        let bad = SignalParams { depth: 1.5, ..Default::default() };
        assert!(matches!(
            sample_waveform(DisturbanceClass::Sag, &bad, 0.1),
            Err(PqError::Parameter(_))
        ));
        let bad = SignalParams { sampling_hz: 3210.0, ..Default::default() };
        assert!(bad.validate(DisturbanceClass::Sag).is_err());
        let bad = SignalParams { event_start_s: 0.0, ..Default::default() };
        assert!(bad.validate(DisturbanceClass::Sag).is_err());
        let bad = SignalParams { event_end_s: 0.25, ..Default::default() };
        assert!(bad.validate(DisturbanceClass::Sag).is_err());
        let bad = SignalParams {
            harmonic_amplitudes: [0.1, 0.0, 0.0],
            ..Default::default()
        };
        assert!(bad.validate(DisturbanceClass::Sag).is_err());
        assert!(bad.validate(DisturbanceClass::SagWithHarmonics).is_ok());
    }

    #[test]
    fn default_record_length() {
        let rec = generate_signal(DisturbanceClass::Swell, &SignalParams::default()).unwrap();
        assert_eq!(rec.samples.len(), 640);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = DatasetSpec { signals_per_class: 3, ..Default::default() };
        let a = generate_dataset(&spec).unwrap();
        let b = generate_dataset(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 33);
        for (i, r) in a.iter().enumerate() {
            assert_eq!(r.id, i as u64);
        }
    }

    #[test]
    fn noise_is_seeded() {
        let p = SignalParams {
            depth: 0.3,
            noise_snr_db: Some(30.0),
            rng_seed: 7,
            ..Default::default()
        };
        let a = generate_signal(DisturbanceClass::Sag, &p).unwrap();
        let b = generate_signal(DisturbanceClass::Sag, &p).unwrap();
        let clean = generate_signal(
            DisturbanceClass::Sag,
            &SignalParams { noise_snr_db: None, ..p.clone() },
        )
        .unwrap();
        assert_eq!(a.samples, b.samples);
        assert_ne!(a.samples, clean.samples);
    }

    #[test]
    fn transient_exceeds_amplitude_only_in_window() {
        let p = SignalParams {
            depth: 0.7,
            transient_freq_hz: 500.0,
            transient_decay_s: 0.02,
            event_start_s: 0.063,
            event_end_s: 0.12,
            ..Default::default()
        };
        let rec = generate_signal(DisturbanceClass::OscillatoryTransient, &p).unwrap();
        let (mut inside, mut outside) = (0.0f64, 0.0f64);
        for (n, x) in rec.samples.iter().enumerate() {
            let t = n as f64 / p.sampling_hz;
            if t >= p.event_start_s && t < p.event_end_s {
                inside = inside.max(x.abs());
            } else {
                outside = outside.max(x.abs());
            }
        }
        assert!(outside <= p.amplitude_pu + 1e-12);
        assert!(inside > p.amplitude_pu);
    }

    #[test]
    fn single_class_single_signal() {
        let spec = DatasetSpec {
            signals_per_class: 1,
            classes: vec![DisturbanceClass::Notch],
            ..Default::default()
        };
        let d = generate_dataset(&spec).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].label, DisturbanceClass::Notch);
    }

    #[test]
    fn empty_class_list_is_rejected() {
        let spec = DatasetSpec { classes: vec![], ..Default::default() };
        assert!(matches!(generate_dataset(&spec), Err(PqError::Parameter(_))));
    }

    #[test]
    fn drawn_params_are_valid() {
        let spec = DatasetSpec::default();
        for c in DisturbanceClass::ALL {
            for i in 0..50 {
                let p = draw_params(&spec, c, i);
                p.validate(c).unwrap();
                let cycles = (p.event_end_s - p.event_start_s) * p.fundamental_hz;
                assert!((1.0..=6.0).contains(&cycles));
                assert!(p.event_start_s * p.fundamental_hz >= 1.0 - 1e-12);
                assert!((p.duration_s - p.event_end_s) * p.fundamental_hz >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn pulses_hit_the_sample_grid() {
        let spec = DatasetSpec::default();
        for c in [DisturbanceClass::Spike, DisturbanceClass::Notch] {
            for i in 0..20 {
                let p = draw_params(&spec, c, i);
                let rec = generate_signal(c, &p).unwrap();
                let hits = rec
                    .samples
                    .iter()
                    .enumerate()
                    .filter(|(n, x)| {
                        let t = *n as f64 / p.sampling_hz;
                        let clean = p.amplitude_pu * (2.0 * PI * p.fundamental_hz * t).sin();
                        (**x - clean).abs() > 1e-9
                    })
                    .count();
                assert!(hits >= 1, "{c} #{i} has no pulse samples");
            }
        }
    }
}
