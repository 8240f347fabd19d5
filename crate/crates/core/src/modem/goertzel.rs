use std::f64::consts::PI;

use super::{ModemError, PcmFrame};

/// Magnitude of the DFT of `pcm[start..start + len]` at `freq_hz`, via the
/// Goertzel recurrence.
pub fn goertzel_mag(
    pcm: &PcmFrame,
    start: usize,
    len: usize,
    freq_hz: f64,
) -> Result<f64, ModemError> {
    let end = start.checked_add(len).ok_or(ModemError::Range {
        start,
        end: usize::MAX,
        len: pcm.len(),
    })?;
    if end > pcm.len() {
        return Err(ModemError::Range {
            start,
            end,
            len: pcm.len(),
        });
    }
    if !(freq_hz >= 0.0 && freq_hz < pcm.sample_rate() as f64 / 2.0) {
        return Err(ModemError::AboveNyquist {
            freq_hz,
            sample_rate: pcm.sample_rate(),
        });
    }
    let coeff = Coeff::new(freq_hz, pcm.sample_rate());
    Ok(coeff.magnitude(&pcm.samples()[start..end]))
}

/// Precomputed recurrence coefficient for one frequency.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coeff {
    two_cos: f64,
}

impl Coeff {
    pub(crate) fn new(freq_hz: f64, sample_rate: u32) -> Self {
        let omega = 2.0 * PI * freq_hz / sample_rate as f64;
        Self {
            two_cos: 2.0 * omega.cos(),
        }
    }

    pub(crate) fn magnitude(&self, window: &[f64]) -> f64 {
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for &x in window {
            let s = x + self.two_cos * s1 - s2;
            s2 = s1;
            s1 = s;
        }
        let power = s1 * s1 + s2 * s2 - self.two_cos * s1 * s2;
        power.max(0.0).sqrt()
    }
}
