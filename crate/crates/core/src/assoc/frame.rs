use serde::Serialize;

use super::registry::InstallationId;
use crate::bits::BitVector;

pub const DEFAULT_PREAMBLE: &str = "10101010";

/// Optional framing around the bare installation id. Both are off by default,
/// so the airtime is exactly `width · T`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FrameOptions {
    pub preamble: Option<BitVector>,
    pub crc: bool,
}

impl FrameOptions {
    pub fn with_preamble(mut self) -> Self {
        self.preamble = Some(DEFAULT_PREAMBLE.parse().expect("constant preamble"));
        self
    }

    pub fn with_crc(mut self) -> Self {
        self.crc = true;
        self
    }

    pub fn frame_len(&self, width: usize) -> usize {
        self.preamble.as_ref().map_or(0, BitVector::len) + width + if self.crc { 8 } else { 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub preamble: Option<BitVector>,
    pub payload: BitVector,
    pub checksum: Option<u8>,
}

pub fn build_frame(id: &InstallationId, options: &FrameOptions) -> Frame {
    Frame {
        preamble: options.preamble.clone(),
        payload: id.bits.clone(),
        checksum: options.crc.then(|| crc8(&id.bits)),
    }
}

impl Frame {
    /// `preamble ∥ payload ∥ crc`.
    pub fn serialize(&self) -> BitVector {
        let mut out = self.preamble.clone().unwrap_or_default();
        out.extend_from(&self.payload);
        if let Some(c) = self.checksum {
            out.extend_from(&BitVector::from_u64(c as u64, 8));
        }
        out
    }
}

/// Outcome of checking a received frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedFrame {
    pub payload: BitVector,
    pub preamble_ok: bool,
    pub crc_ok: bool,
}

impl ParsedFrame {
    pub fn valid(&self) -> bool {
        self.preamble_ok && self.crc_ok
    }
}

/// Split received bits back into their fields. `None` when the length is wrong.
pub fn parse_frame(bits: &BitVector, width: usize, options: &FrameOptions) -> Option<ParsedFrame> {
    if bits.len() != options.frame_len(width) {
        return None;
    }
    let pre_len = options.preamble.as_ref().map_or(0, BitVector::len);
    let preamble_ok = options
        .preamble
        .as_ref()
        .is_none_or(|p| bits.slice(0, pre_len) == *p);
    let payload = bits.slice(pre_len, pre_len + width);
    let crc_ok = !options.crc || {
        let rx = bits.slice(pre_len + width, bits.len()).to_u64();
        rx == Some(crc8(&payload) as u64)
    };
    Some(ParsedFrame {
        payload,
        preamble_ok,
        crc_ok,
    })
}

/// CRC-8 with polynomial 0x07 and zero initial value, MSB first, no final xor.
pub fn crc8(bits: &BitVector) -> u8 {
    let mut crc = 0u8;
    for bit in bits.iter() {
        let top = (crc >> 7) ^ bit as u8;
        crc <<= 1;
        if top & 1 == 1 {
            crc ^= 0x07;
        }
    }
    crc
}
