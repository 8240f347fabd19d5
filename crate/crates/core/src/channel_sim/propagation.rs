use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{AcousticScene, SimError};
use crate::modem::PcmFrame;

/// Bandwidth that `noise_floor_dbfs` is referred to.
pub const NOISE_REFERENCE_BANDWIDTH_HZ: f64 = 100.0;

/// Distance between two devices along the threshold axis, in feet.
pub fn device_distance_ft(scene: &AcousticScene, a: &str, b: &str) -> Result<f64, SimError> {
    let (a, b) = (scene.device(a)?, scene.device(b)?);
    Ok(if a.space == b.space {
        (a.distance_ft - b.distance_ft).abs()
    } else {
        a.distance_ft + b.distance_ft
    })
}

/// Acoustic loss from `tx` to `rx` in dB: log-distance spreading, door
/// occlusion when the devices are in different spaces, and carry context.
pub fn path_loss_db(scene: &AcousticScene, tx: &str, rx: &str) -> Result<f64, SimError> {
    let d = device_distance_ft(scene, tx, rx)?;
    let (txd, rxd) = (scene.device(tx)?, scene.device(rx)?);
    let losses = scene.losses();
    let d0 = losses.reference_distance_ft;
    let spreading = 20.0 * (d.max(1.0).max(d0) / d0).log10();
    let occlusion = if txd.space == rxd.space {
        0.0
    } else {
        match scene.door_state() {
            super::DoorState::Shut => losses.shut_door_loss,
            super::DoorState::Open => losses.open_door_loss,
        }
    };
    Ok(spreading
        + occlusion
        + losses.tx_context_loss.get(txd.context)
        + losses.rx_context_loss.get(rxd.context))
}

/// Standard deviation of white noise whose power in the reference band,
/// relative to a full-scale sine (power 1/2), is `noise_floor_dbfs`.
pub fn noise_sigma(noise_floor_dbfs: f64, sample_rate: u32) -> f64 {
    let band_fraction = 2.0 * NOISE_REFERENCE_BANDWIDTH_HZ / sample_rate as f64;
    (0.5 * 10f64.powf(noise_floor_dbfs / 10.0) / band_fraction).sqrt()
}

/// Applies `loss_db` and adds noise. `call_index` selects an independent
/// noise stream for the scene's seed, so the output is a pure function of
/// its arguments.
pub fn propagate(scene: &AcousticScene, pcm: &PcmFrame, loss_db: f64, call_index: u64) -> PcmFrame {
    let gain = 10f64.powf(-loss_db / 20.0);
    let sigma = noise_sigma(scene.noise_floor_dbfs(), pcm.sample_rate());
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed());
    rng.set_stream(call_index);
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    let samples = pcm
        .samples()
        .iter()
        .map(|&s| s * gain + noise.sample(&mut rng))
        .collect();
    PcmFrame::from_clamped(pcm.sample_rate(), samples)
}

/// What `rx` hears when `tx` plays `pcm`.
pub fn transmit(
    scene: &AcousticScene,
    tx: &str,
    rx: &str,
    pcm: &PcmFrame,
    call_index: u64,
) -> Result<PcmFrame, SimError> {
    let loss = path_loss_db(scene, tx, rx)?;
    Ok(propagate(scene, pcm, loss, call_index))
}

/// RF passes the threshold unattenuated; only range matters.
pub fn rf_visible(scene: &AcousticScene, a: &str, b: &str) -> Result<bool, SimError> {
    Ok(device_distance_ft(scene, a, b)? <= scene.rf().rf_range_ft)
}
