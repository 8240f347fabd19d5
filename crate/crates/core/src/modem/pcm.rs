use super::ModemError;

/// Mono audio buffer. Samples always lie in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcmFrame {
    sample_rate: u32,
    samples: Vec<f64>,
}

impl PcmFrame {
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> Result<Self, ModemError> {
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !(-1.0..=1.0).contains(*s))
        {
            return Err(ModemError::SampleRange { index, value });
        }
        Ok(Self {
            sample_rate,
            samples,
        })
    }

    /// Builds a frame, clamping every sample into range. NaN becomes 0.
    pub fn from_clamped(sample_rate: u32, mut samples: Vec<f64>) -> Self {
        for s in &mut samples {
            *s = if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) };
        }
        Self {
            sample_rate,
            samples,
        }
    }

    pub fn silence(sample_rate: u32, len: usize) -> Self {
        Self {
            sample_rate,
            samples: vec![0.0; len],
        }
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()))
    }

    /// Surrounds the buffer with `lead` and `trail` samples of silence.
    pub fn padded(&self, lead: usize, trail: usize) -> Self {
        let mut samples = Vec::with_capacity(lead + self.len() + trail);
        samples.resize(lead, 0.0);
        samples.extend_from_slice(&self.samples);
        samples.resize(lead + self.len() + trail, 0.0);
        Self {
            sample_rate: self.sample_rate,
            samples,
        }
    }

    /// Sample-wise sum, clamped. The result is as long as the longer input.
    pub fn mix(&self, other: &PcmFrame) -> Result<Self, ModemError> {
        if self.sample_rate != other.sample_rate {
            return Err(ModemError::InvalidParams(format!(
                "cannot mix {} Hz with {} Hz",
                self.sample_rate, other.sample_rate
            )));
        }
        let len = self.len().max(other.len());
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        let samples = (0..len)
            .map(|i| at(&self.samples, i) + at(&other.samples, i))
            .collect();
        Ok(Self::from_clamped(self.sample_rate, samples))
    }

    /// Multiplies every sample by `gain`, clamping the result.
    pub fn scaled(&self, gain: f64) -> Self {
        let samples = self.samples.iter().map(|&s| s * gain).collect();
        Self::from_clamped(self.sample_rate, samples)
    }
}
