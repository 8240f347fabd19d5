use std::f64::consts::PI;

use super::goertzel::Coeff;
use super::{
    crc8, HexPayload, ModemError, ModemParams, PcmFrame, UsFrame, CRC_SYMBOLS, LENGTH_SYMBOLS,
    PREAMBLE_SYMBOLS,
};

/// Raised-cosine ramp length at each symbol edge (1 ms at 48 kHz).
pub const RAMP_SAMPLES: usize = 48;

/// A frame recovered by [`decode`], with the sample index where it starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedFrame {
    pub payload: HexPayload,
    pub start_sample: usize,
}

/// Tone indices for a frame, in transmission order.
pub fn frame_symbols(frame: &UsFrame, params: &ModemParams) -> Vec<u8> {
    let mut symbols = Vec::with_capacity(
        PREAMBLE_SYMBOLS + LENGTH_SYMBOLS + 2 * frame.payload.len() + CRC_SYMBOLS,
    );
    symbols.extend_from_slice(&params.preamble);
    let push_nibble = |symbols: &mut Vec<u8>, n: u8| {
        symbols.push((n >> 2) & 0b11);
        symbols.push(n & 0b11);
    };
    push_nibble(&mut symbols, (frame.payload.len() - 1) as u8);
    for &n in frame.payload.nibbles() {
        push_nibble(&mut symbols, n);
    }
    let crc = frame.crc();
    push_nibble(&mut symbols, crc >> 4);
    push_nibble(&mut symbols, crc & 0xF);
    symbols
}

fn ramp_gain(n: usize, len: usize) -> f64 {
    let edge = n.min(len - 1 - n);
    if edge >= RAMP_SAMPLES {
        1.0
    } else {
        0.5 * (1.0 - (PI * (edge as f64 + 0.5) / RAMP_SAMPLES as f64).cos())
    }
}

/// Synthesizes `frame` as 4-FSK audio with peak level `amplitude`.
pub fn encode(
    frame: &UsFrame,
    params: &ModemParams,
    amplitude: f64,
) -> Result<PcmFrame, ModemError> {
    synthesize(
        &frame_symbols(frame, params),
        frame.channel,
        params,
        amplitude,
    )
}

/// Renders an arbitrary tone-index sequence on `channel`, one ramped symbol
/// per index.
pub fn synthesize(
    symbols: &[u8],
    channel: usize,
    params: &ModemParams,
    amplitude: f64,
) -> Result<PcmFrame, ModemError> {
    params.validate()?;
    params.check_channel(channel)?;
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(ModemError::InvalidAmplitude(amplitude));
    }
    if let Some(&bad) = symbols
        .iter()
        .find(|&&s| s as usize >= params.tones_per_channel)
    {
        return Err(ModemError::InvalidFrame(format!(
            "tone index {bad} out of range"
        )));
    }
    let len = params.symbol_len;
    let fs = params.sample_rate as f64;
    let envelope: Vec<f64> = (0..len).map(|n| amplitude * ramp_gain(n, len)).collect();
    let mut samples = Vec::with_capacity(symbols.len() * len);
    for &sym in symbols {
        let w = 2.0 * PI * params.tone_hz(channel, sym as usize) / fs;
        samples.extend(
            envelope
                .iter()
                .enumerate()
                .map(|(n, g)| g * (w * n as f64).sin()),
        );
    }
    PcmFrame::new(params.sample_rate, samples)
}

/// Per-window tone magnitudes for one channel, computed lazily.
struct Spectrogram<'a> {
    samples: &'a [f64],
    symbol_len: usize,
    hop: usize,
    tones: Vec<Coeff>,
    guards: Vec<Coeff>,
    cache: Vec<Option<Vec<f64>>>,
    guard_cache: Vec<Option<f64>>,
}

impl<'a> Spectrogram<'a> {
    fn new(pcm: &'a PcmFrame, params: &ModemParams, channel: usize) -> Self {
        let windows = if pcm.len() >= params.symbol_len {
            (pcm.len() - params.symbol_len) / params.hop() + 1
        } else {
            0
        };
        let tones = (0..params.tones_per_channel)
            .map(|k| Coeff::new(params.tone_hz(channel, k), params.sample_rate))
            .collect();
        // Midway between tones is bin-aligned and orthogonal to every tone.
        let guards = (0..params.tones_per_channel)
            .map(|k| {
                Coeff::new(
                    params.tone_hz(channel, k) + params.tone_spacing_hz / 2.0,
                    params.sample_rate,
                )
            })
            .collect();
        Self {
            samples: pcm.samples(),
            symbol_len: params.symbol_len,
            hop: params.hop(),
            tones,
            guards,
            cache: vec![None; windows],
            guard_cache: vec![None; windows],
        }
    }

    fn windows(&self) -> usize {
        self.cache.len()
    }

    fn window(&self, w: usize) -> &'a [f64] {
        let start = w * self.hop;
        &self.samples[start..start + self.symbol_len]
    }

    fn tones(&mut self, w: usize) -> &[f64] {
        if self.cache[w].is_none() {
            let win = self.window(w);
            self.cache[w] = Some(self.tones.iter().map(|c| c.magnitude(win)).collect());
        }
        self.cache[w].as_deref().unwrap()
    }

    /// Mean guard-bin power for window `w`.
    fn guard_power(&mut self, w: usize) -> f64 {
        if let Some(p) = self.guard_cache[w] {
            return p;
        }
        let win = self.window(w);
        let p = self
            .guards
            .iter()
            .map(|c| c.magnitude(win).powi(2))
            .sum::<f64>()
            / self.guards.len() as f64;
        self.guard_cache[w] = Some(p);
        p
    }
}

struct Candidate {
    payload: HexPayload,
    symbols: usize,
    score: f64,
}

fn winner(mags: &[f64]) -> (usize, f64) {
    mags.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, m)| {
            if m > best.1 {
                (k, m)
            } else {
                best
            }
        })
}

fn try_frame(spec: &mut Spectrogram<'_>, params: &ModemParams, w: usize) -> Option<Candidate> {
    let stride = params.symbol_len / params.hop();
    let at = |j: usize| w + j * stride;
    let ratio = 10f64.powf(params.detection_snr_db / 20.0);
    let mut score = 0.0;

    for (j, &expected) in params.preamble.iter().enumerate() {
        if at(j) >= spec.windows() {
            return None;
        }
        let mags = spec.tones(at(j));
        let e = mags[expected as usize];
        if e <= 0.0 {
            return None;
        }
        let beaten = mags
            .iter()
            .enumerate()
            .any(|(k, &m)| k != expected as usize && e < ratio * m);
        if beaten {
            return None;
        }
        score += e;
    }

    let header_end = PREAMBLE_SYMBOLS + LENGTH_SYMBOLS;
    if at(header_end - 1) >= spec.windows() {
        return None;
    }
    let mut dibits = Vec::with_capacity(header_end + 2 * 16 + CRC_SYMBOLS);
    let mut winners = Vec::with_capacity(dibits.capacity());
    for j in PREAMBLE_SYMBOLS..header_end {
        let (k, m) = winner(spec.tones(at(j)));
        dibits.push(k as u8);
        winners.push(m);
    }
    let payload_len = (((dibits[0] << 2) | dibits[1]) + 1) as usize;
    let total = header_end + 2 * payload_len + CRC_SYMBOLS;
    if at(total - 1) >= spec.windows() {
        return None;
    }
    for j in header_end..total {
        let (k, m) = winner(spec.tones(at(j)));
        dibits.push(k as u8);
        winners.push(m);
    }

    // Noise floor from the guard bins across the whole frame.
    let floor = ((0..total).map(|j| spec.guard_power(at(j))).sum::<f64>() / total as f64).sqrt();
    if winners.iter().any(|&m| m <= 0.0 || m < floor) {
        return None;
    }

    // The symbol slots either side of the frame must be quiet relative to
    // it; this rejects syncs on preamble-like runs inside another frame.
    let level = (score + winners.iter().sum::<f64>()) / (PREAMBLE_SYMBOLS + winners.len()) as f64;
    let mut quiet =
        |v: usize| v >= spec.windows() || spec.tones(v).iter().all(|&m| m * ratio < level);
    if (w >= stride && !quiet(w - stride)) || !quiet(at(total)) {
        return None;
    }

    let nibbles: Vec<u8> = dibits.chunks(2).map(|d| (d[0] << 2) | d[1]).collect();
    let payload = HexPayload::from_nibbles(nibbles[1..1 + payload_len].to_vec()).ok()?;
    let crc = (nibbles[1 + payload_len] << 4) | nibbles[2 + payload_len];
    let mut crc_input = vec![(payload_len - 1) as u8];
    crc_input.extend(payload.packed());
    if crc8(&crc_input) != crc {
        return None;
    }
    score += winners.iter().sum::<f64>();
    Some(Candidate {
        payload,
        symbols: total,
        score,
    })
}

/// Scans `pcm` for frames on `channel`.
///
/// Windows advance by a quarter symbol. Candidates that fail sync, the
/// noise-floor check or the CRC are skipped, so decoding never fails; a
/// mismatched sample rate or unknown channel simply yields no frames.
pub fn decode(pcm: &PcmFrame, params: &ModemParams, channel: usize) -> Vec<DecodedFrame> {
    if pcm.sample_rate() != params.sample_rate
        || params.check_channel(channel).is_err()
        || params.validate().is_err()
    {
        return Vec::new();
    }
    let stride = params.symbol_len / params.hop();
    let mut spec = Spectrogram::new(pcm, params, channel);
    let mut found = Vec::new();
    let mut w = 0;
    while w < spec.windows() {
        let Some(first) = try_frame(&mut spec, params, w) else {
            w += 1;
            continue;
        };
        // The first hit may be up to a symbol early; keep the best-aligned one.
        let (best_w, best) = (w + 1..w + stride)
            .filter_map(|v| try_frame(&mut spec, params, v).map(|c| (v, c)))
            .fold(
                (w, first),
                |acc, (v, c)| if c.score > acc.1.score { (v, c) } else { acc },
            );
        found.push(DecodedFrame {
            payload: best.payload,
            start_sample: best_w * params.hop(),
        });
        w = best_w + best.symbols * stride;
    }
    found
}
