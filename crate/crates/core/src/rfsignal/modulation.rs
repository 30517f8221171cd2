use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{scale_to_power, Complex64, Observation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModulationScheme {
    Bpsk,
    Qpsk,
    Psk8,
    Qam16,
    Qam64,
}

impl ModulationScheme {
    pub const ALL: [ModulationScheme; 5] = [
        ModulationScheme::Bpsk,
        ModulationScheme::Qpsk,
        ModulationScheme::Psk8,
        ModulationScheme::Qam16,
        ModulationScheme::Qam64,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModulationScheme::Bpsk => "BPSK",
            ModulationScheme::Qpsk => "QPSK",
            ModulationScheme::Psk8 => "PSK8",
            ModulationScheme::Qam16 => "QAM16",
            ModulationScheme::Qam64 => "QAM64",
        }
    }

    pub fn bits_per_symbol(self) -> u32 {
        match self {
            ModulationScheme::Bpsk => 1,
            ModulationScheme::Qpsk => 2,
            ModulationScheme::Psk8 => 3,
            ModulationScheme::Qam16 => 4,
            ModulationScheme::Qam64 => 6,
        }
    }

    /// Constellation points scaled to unit average power.
    pub fn constellation(self) -> Vec<Complex64> {
        match self {
            ModulationScheme::Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
            ModulationScheme::Qpsk => psk(4, PI / 4.0),
            ModulationScheme::Psk8 => psk(8, 0.0),
            ModulationScheme::Qam16 => square_qam(4),
            ModulationScheme::Qam64 => square_qam(8),
        }
    }
}

fn psk(order: usize, offset: f64) -> Vec<Complex64> {
    (0..order)
        .map(|k| Complex64::from_polar(1.0, offset + 2.0 * PI * k as f64 / order as f64))
        .collect()
}

fn square_qam(side: usize) -> Vec<Complex64> {
    let levels: Vec<f64> = (0..side).map(|i| (2 * i) as f64 - (side - 1) as f64).collect();
    // Mean of re² + im² over the grid is 2(side² − 1)/3.
    let norm = (2.0 * ((side * side - 1) as f64) / 3.0).sqrt();
    levels
        .iter()
        .flat_map(|&i| levels.iter().map(move |&q| Complex64::new(i / norm, q / norm)))
        .collect()
}

impl FromStr for ModulationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModulationScheme::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown modulation scheme {s:?}")))
    }
}

impl std::fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    Rectangular,
    /// Root-raised-cosine with roll-off 0.35 spanning 8 symbols.
    RootRaisedCosine,
}

const RRC_ROLLOFF: f64 = 0.35;
const RRC_SPAN: usize = 8;

/// Unit-energy root-raised-cosine taps, `span · sps + 1` long.
fn rrc_taps(sps: usize) -> Vec<f64> {
    let beta = RRC_ROLLOFF;
    let half = (RRC_SPAN * sps / 2) as isize;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| {
            let t = i as f64 / sps as f64;
            if i == 0 {
                1.0 - beta + 4.0 * beta / PI
            } else if (4.0 * beta * t).abs() == 1.0 {
                beta / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * beta)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * beta)).cos())
            } else {
                ((PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos())
                    / (PI * t * (1.0 - (4.0 * beta * t).powi(2)))
            }
        })
        .collect();
    let energy: f64 = taps.iter().map(|v| v * v).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|v| *v /= energy);
    taps
}

/// Random i.i.d. symbols, upsampled by `sps`, pulse shaped and scaled to unit
/// average power. The output has `n_symbols · sps` samples.
pub fn modulate<R: Rng + ?Sized>(
    scheme: ModulationScheme,
    n_symbols: usize,
    sps: usize,
    pulse: PulseShape,
    label: u16,
    rng: &mut R,
) -> Result<Observation> {
    if sps == 0 || n_symbols == 0 {
        return Err(Error::invalid("modulation needs at least one symbol and one sample per symbol"));
    }
    let points = scheme.constellation();
    let symbols: Vec<Complex64> = (0..n_symbols)
        .map(|_| points[rng.random_range(0..points.len())])
        .collect();

    let len = n_symbols * sps;
    let mut samples = match pulse {
        PulseShape::Rectangular => symbols
            .iter()
            .flat_map(|&s| std::iter::repeat_n(s, sps))
            .collect::<Vec<_>>(),
        PulseShape::RootRaisedCosine => {
            let taps = rrc_taps(sps);
            let delay = taps.len() / 2;
            let mut out = vec![Complex64::new(0.0, 0.0); len];
            // Zero-stuffed symbols convolved with the taps, centred on the
            // filter delay so symbol k peaks at sample k·sps.
            for (k, &s) in symbols.iter().enumerate() {
                let centre = (k * sps) as isize;
                for (t, &h) in taps.iter().enumerate() {
                    let idx = centre + t as isize - delay as isize;
                    if (0..len as isize).contains(&idx) {
                        out[idx as usize] += s * h;
                    }
                }
            }
            out
        }
    };
    scale_to_power(&mut samples, 1.0);
    Ok(Observation::new(samples, label))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfsignal::mean_power;
    use crate::rng::stream_rng;

    #[test]
    fn constellations_have_unit_power() {
        for m in ModulationScheme::ALL {
            let pts = m.constellation();
            assert_eq!(pts.len(), 1 << m.bits_per_symbol());
            assert!((mean_power(&pts) - 1.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn rectangular_bpsk_is_antipodal() {
        let obs = modulate(ModulationScheme::Bpsk, 256, 1, PulseShape::Rectangular, 0, &mut stream_rng(1, &[])).unwrap();
        assert!(obs
            .samples
            .iter()
            .all(|s| s.im == 0.0 && (s.re == 1.0 || s.re == -1.0)));
    }

    #[test]
    fn shaped_qpsk_has_unit_power() {
        let obs = modulate(ModulationScheme::Qpsk, 1024, 4, PulseShape::RootRaisedCosine, 1, &mut stream_rng(2, &[])).unwrap();
        assert_eq!(obs.len(), 4096);
        assert!((mean_power(&obs.samples) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn seeded_output_is_identical() {
        let run = || modulate(ModulationScheme::Qam16, 128, 2, PulseShape::RootRaisedCosine, 3, &mut stream_rng(5, &[9])).unwrap();
        assert_eq!(run(), run());
    }

    #[test]
    fn parses_scheme_names() {
        assert_eq!("qam64".parse::<ModulationScheme>().unwrap(), ModulationScheme::Qam64);
        assert!("OOK".parse::<ModulationScheme>().is_err());
    }
}
