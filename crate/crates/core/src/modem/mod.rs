//! Near-ultrasonic 4-FSK modem.
//!
//! Frames are sent as a sequence of pure-tone symbols. Each channel owns four
//! tones; tone `k` of channel `c` sits at
//! `channel_base_hz + c * channel_spacing_hz + k * tone_spacing_hz`.
//!
//! On-air layout, two bits per symbol, most significant dibit first:
//!
//! ```text
//! | preamble (4) | length-1 (2) | payload (2 per hex char) | crc-8 (4) |
//! ```

mod crc;
mod frame;
mod fsk;
mod goertzel;
mod pcm;
mod wav;

pub use crc::crc8;
pub use frame::{HexPayload, UsFrame, MAX_PAYLOAD_NIBBLES};
pub use fsk::{decode, encode, frame_symbols, synthesize, DecodedFrame, RAMP_SAMPLES};
pub use goertzel::goertzel_mag;
pub use pcm::PcmFrame;
pub use wav::{read_wav, write_wav};

use serde::{Deserialize, Serialize};

/// Symbols in the preamble, the length field and the CRC field.
pub const PREAMBLE_SYMBOLS: usize = 4;
pub const LENGTH_SYMBOLS: usize = 2;
pub const CRC_SYMBOLS: usize = 4;

/// Lower edge of the inaudible band used by the modem.
pub const INAUDIBLE_FLOOR_HZ: f64 = 20_000.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModemError {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("channel {channel} out of range (channel count {count})")]
    InvalidChannel { channel: usize, count: usize },

    #[error("amplitude {0} outside (0, 1]")]
    InvalidAmplitude(f64),

    #[error("invalid modem parameters: {0}")]
    InvalidParams(String),

    #[error("window [{start}, {end}) outside buffer of {len} samples")]
    Range {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("frequency {freq_hz} Hz at or above Nyquist for {sample_rate} Hz")]
    AboveNyquist { freq_hz: f64, sample_rate: u32 },

    #[error("sample {value} at index {index} outside [-1, 1]")]
    SampleRange { index: usize, value: f64 },

    #[error("wav: {0}")]
    Wav(String),
}

/// Physical-layer parameters shared by encoder and decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModemParams {
    pub sample_rate: u32,
    /// Samples per symbol.
    pub symbol_len: usize,
    pub channel_base_hz: f64,
    pub channel_spacing_hz: f64,
    pub tone_spacing_hz: f64,
    pub tones_per_channel: usize,
    pub channel_count: usize,
    pub preamble: [u8; PREAMBLE_SYMBOLS],
    /// Minimum margin of the expected preamble tone over every other tone.
    pub detection_snr_db: f64,
}

impl Default for ModemParams {
    fn default() -> Self {
        Self {
            sample_rate: 48_000,
            symbol_len: 480,
            channel_base_hz: 20_000.0,
            channel_spacing_hz: 900.0,
            tone_spacing_hz: 200.0,
            tones_per_channel: 4,
            channel_count: 4,
            preamble: [3, 0, 3, 0],
            detection_snr_db: 6.0,
        }
    }
}

impl ModemParams {
    /// Frequency of tone `tone` on channel `channel`.
    pub fn tone_hz(&self, channel: usize, tone: usize) -> f64 {
        self.channel_base_hz
            + channel as f64 * self.channel_spacing_hz
            + tone as f64 * self.tone_spacing_hz
    }

    pub fn channel_tones(&self, channel: usize) -> Vec<f64> {
        (0..self.tones_per_channel)
            .map(|k| self.tone_hz(channel, k))
            .collect()
    }

    pub fn highest_tone_hz(&self) -> f64 {
        self.tone_hz(self.channel_count - 1, self.tones_per_channel - 1)
    }

    /// Width of one detector bin.
    pub fn bin_width_hz(&self) -> f64 {
        self.sample_rate as f64 / self.symbol_len as f64
    }

    /// Sliding-window step used by the decoder.
    pub fn hop(&self) -> usize {
        self.symbol_len / 4
    }

    pub fn frame_samples(&self, payload_len: usize) -> usize {
        (PREAMBLE_SYMBOLS + LENGTH_SYMBOLS + 2 * payload_len + CRC_SYMBOLS) * self.symbol_len
    }

    pub fn check_channel(&self, channel: usize) -> Result<(), ModemError> {
        if channel >= self.channel_count {
            return Err(ModemError::InvalidChannel {
                channel,
                count: self.channel_count,
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ModemError> {
        let bad = |msg: String| Err(ModemError::InvalidParams(msg));
        if self.tones_per_channel != 4 {
            return bad(format!(
                "frame layout is 4-FSK, got {} tones per channel",
                self.tones_per_channel
            ));
        }
        if self.channel_count == 0 {
            return bad("channel_count must be positive".into());
        }
        if self.symbol_len < 4 || !self.symbol_len.is_multiple_of(4) {
            return bad(format!(
                "symbol_len {} must be a positive multiple of 4",
                self.symbol_len
            ));
        }
        if self.symbol_len <= 2 * RAMP_SAMPLES {
            return bad(format!(
                "symbol_len {} too short for {RAMP_SAMPLES}-sample ramps",
                self.symbol_len
            ));
        }
        if self.channel_base_hz < INAUDIBLE_FLOOR_HZ {
            return bad(format!(
                "channel_base_hz {} below {INAUDIBLE_FLOOR_HZ} Hz",
                self.channel_base_hz
            ));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if self.highest_tone_hz() >= nyquist {
            return bad(format!(
                "highest tone {} Hz not below Nyquist {nyquist} Hz",
                self.highest_tone_hz()
            ));
        }
        if self.channel_spacing_hz < self.tones_per_channel as f64 * self.tone_spacing_hz {
            return bad("channels overlap".into());
        }
        let bin = self.bin_width_hz();
        let aligned = |f: f64| ((f / bin) - (f / bin).round()).abs() < 1e-9;
        for c in 0..self.channel_count {
            for k in 0..self.tones_per_channel {
                if !aligned(self.tone_hz(c, k)) {
                    return bad(format!(
                        "tone {} Hz is not a multiple of the {bin} Hz bin width",
                        self.tone_hz(c, k)
                    ));
                }
            }
        }
        if self
            .preamble
            .iter()
            .any(|&s| s as usize >= self.tones_per_channel)
        {
            return bad("preamble symbol out of range".into());
        }
        if !(self.detection_snr_db.is_finite() && self.detection_snr_db >= 0.0) {
            return bad("detection_snr_db must be finite and non-negative".into());
        }
        Ok(())
    }
}
