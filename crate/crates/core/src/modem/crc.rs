const POLY: u8 = 0x07;

const TABLE: [u8; 256] = build_table();

const fn build_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u8;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 0x80 != 0 {
                (crc << 1) ^ POLY
            } else {
                crc << 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

/// CRC-8 with polynomial 0x07, zero init, no reflection and no final XOR.
pub fn crc8(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0u8, |crc, &b| TABLE[(crc ^ b) as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Polynomial long division of `msg * x^8` by `x^8 + x^2 + x + 1`,
    /// one message bit at a time.
    fn long_division(msg: &[u8]) -> u8 {
        let divisor: u16 = 0x107;
        let mut bits: Vec<u8> = msg
            .iter()
            .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1))
            .collect();
        bits.extend([0u8; 8]);
        let mut rem: u16 = 0;
        for bit in bits {
            rem = (rem << 1) | bit as u16;
            if rem & 0x100 != 0 {
                rem ^= divisor;
            }
        }
        rem as u8
    }

    #[test]
    fn empty_is_init() {
        assert_eq!(crc8(&[]), 0x00);
        assert_eq!(long_division(&[]), 0x00);
    }

    // Frozen from the long-division oracle.
    #[test]
    fn known_values() {
        assert_eq!(long_division(&[0x01]), 0x07);
        assert_eq!(crc8(&[0x01]), 0x07);
        assert_eq!(long_division(&[0x00, 0xAA]), 0x5F);
        assert_eq!(crc8(&[0x00, 0xAA]), 0x5F);
        // CRC-8/SMBUS check value
        assert_eq!(crc8(b"123456789"), 0xF4);
    }

    proptest! {
        #[test]
        fn matches_long_division(msg in proptest::collection::vec(any::<u8>(), 0..32)) {
            prop_assert_eq!(crc8(&msg), long_division(&msg));
        }
    }
}
