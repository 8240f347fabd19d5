use std::io::Cursor;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{ModemError, PcmFrame};

const FULL_SCALE: f64 = i16::MAX as f64;

fn wav_err(e: hound::Error) -> ModemError {
    ModemError::Wav(e.to_string())
}

/// Canonical 44-byte-header RIFF/WAVE, 16-bit signed mono.
pub fn write_wav(pcm: &PcmFrame) -> Result<Vec<u8>, ModemError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: pcm.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut out = Cursor::new(Vec::with_capacity(44 + 2 * pcm.len()));
    {
        let mut w = WavWriter::new(&mut out, spec).map_err(wav_err)?;
        let mut w16 = w.get_i16_writer(pcm.len() as u32);
        for &s in pcm.samples() {
            w16.write_sample((s * FULL_SCALE).round() as i16);
        }
        w16.flush().map_err(wav_err)?;
        w.finalize().map_err(wav_err)?;
    }
    Ok(out.into_inner())
}

pub fn read_wav(bytes: &[u8]) -> Result<PcmFrame, ModemError> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != SampleFormat::Int {
        return Err(ModemError::Wav(format!(
            "unsupported format: {} channel(s), {}-bit {:?}",
            spec.channels, spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| (v as f64 / FULL_SCALE).max(-1.0)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wav_err)?;
    PcmFrame::new(spec.sample_rate, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn silence_size() {
        let bytes = write_wav(&PcmFrame::silence(48_000, 480)).unwrap();
        assert_eq!(bytes.len(), 44 + 960);
        assert_eq!(&bytes[0..4], b"RIFF");
        assert_eq!(&bytes[8..12], b"WAVE");
        assert_eq!(&bytes[36..40], b"data");
    }

    #[test]
    fn truncated_header() {
        let bytes = write_wav(&PcmFrame::silence(48_000, 480)).unwrap();
        assert!(matches!(read_wav(&bytes[..20]), Err(ModemError::Wav(_))));
        assert!(matches!(
            read_wav(b"not a wav file at all"),
            Err(ModemError::Wav(_))
        ));
    }

    #[test]
    fn rejects_stereo() {
        let spec = WavSpec {
            channels: 2,
            sample_rate: 48_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut out = Cursor::new(Vec::new());
        let mut w = WavWriter::new(&mut out, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&out.into_inner()),
            Err(ModemError::Wav(_))
        ));
    }

    proptest! {
        #[test]
        fn round_trip_within_quantization(s in proptest::collection::vec(-1.0f64..=1.0, 0..512)) {
            let pcm = PcmFrame::new(48_000, s).unwrap();
            let back = read_wav(&write_wav(&pcm).unwrap()).unwrap();
            prop_assert_eq!(back.sample_rate(), 48_000);
            prop_assert_eq!(back.len(), pcm.len());
            for (a, b) in pcm.samples().iter().zip(back.samples()) {
                prop_assert!((a - b).abs() <= 1.0 / 32767.0);
            }
        }
    }
}
