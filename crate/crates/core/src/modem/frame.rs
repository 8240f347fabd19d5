use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{crc8, ModemError};

/// Longest payload, in hex characters (8 bytes).
pub const MAX_PAYLOAD_NIBBLES: usize = 16;

/// A payload of 1 to 16 hex characters, stored as nibbles.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct HexPayload(Vec<u8>);

impl HexPayload {
    pub fn from_nibbles(nibbles: Vec<u8>) -> Result<Self, ModemError> {
        if nibbles.is_empty() || nibbles.len() > MAX_PAYLOAD_NIBBLES {
            return Err(ModemError::InvalidFrame(format!(
                "payload must be 1..={MAX_PAYLOAD_NIBBLES} hex characters, got {}",
                nibbles.len()
            )));
        }
        if let Some(n) = nibbles.iter().find(|&&n| n > 0xF) {
            return Err(ModemError::InvalidFrame(format!("{n:#x} is not a nibble")));
        }
        Ok(Self(nibbles))
    }

    pub fn nibbles(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Nibbles packed high-first; an odd trailing nibble is padded with zero.
    pub fn packed(&self) -> Vec<u8> {
        self.0
            .chunks(2)
            .map(|pair| (pair[0] << 4) | pair.get(1).copied().unwrap_or(0))
            .collect()
    }
}

impl FromStr for HexPayload {
    type Err = ModemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.strip_prefix("0x").unwrap_or(s);
        let nibbles = s
            .chars()
            .map(|c| {
                c.to_digit(16)
                    .map(|d| d as u8)
                    .ok_or_else(|| ModemError::InvalidFrame(format!("{c:?} is not a hex digit")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_nibbles(nibbles)
    }
}

impl fmt::Display for HexPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.0 {
            write!(f, "{n:x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for HexPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HexPayload({self})")
    }
}

impl Serialize for HexPayload {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HexPayload {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One ultrasonic message on a given channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsFrame {
    pub channel: usize,
    pub payload: HexPayload,
}

impl UsFrame {
    pub fn new(channel: usize, payload: &str) -> Result<Self, ModemError> {
        Ok(Self {
            channel,
            payload: payload.parse()?,
        })
    }

    /// Bytes covered by the checksum: `[len - 1] ++ packed payload`.
    pub fn crc_input(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(1 + self.payload.len().div_ceil(2));
        bytes.push((self.payload.len() - 1) as u8);
        bytes.extend(self.payload.packed());
        bytes
    }

    pub fn crc(&self) -> u8 {
        crc8(&self.crc_input())
    }
}
