//! Wire codec for the vibrotactile belt link.
//!
//! Every command is a fixed 6-byte frame:
//!
//! ```text
//! AA | cell | intensity | duration lo | duration hi | xor(bytes 1..=4)
//! ```

use std::collections::VecDeque;

use thiserror::Error;

pub const SYNC: u8 = 0xAA;
pub const FRAME_LEN: usize = 6;
pub const CELL_COUNT: u8 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BeltPulse {
    pub cell: u8,
    pub intensity: u8,
    pub duration_ms: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BeltError {
    #[error("{field} out of range: {value}")]
    FieldOverflow { field: &'static str, value: u64 },
    #[error("need {FRAME_LEN} bytes, have {available}")]
    Truncated { available: usize },
    #[error("bad frame; skip {consumed} bytes to resynchronise")]
    BadChecksum { consumed: usize },
}

impl BeltPulse {
    pub fn new(cell: u32, intensity: u32, duration_ms: u32) -> Result<Self, BeltError> {
        if cell >= CELL_COUNT as u32 {
            return Err(BeltError::FieldOverflow { field: "cell", value: cell as u64 });
        }
        let intensity = u8::try_from(intensity).map_err(|_| BeltError::FieldOverflow {
            field: "intensity",
            value: intensity as u64,
        })?;
        let duration_ms = u16::try_from(duration_ms).map_err(|_| BeltError::FieldOverflow {
            field: "duration",
            value: duration_ms as u64,
        })?;
        Ok(Self {
            cell: cell as u8,
            intensity,
            duration_ms,
        })
    }
}

fn checksum(payload: &[u8]) -> u8 {
    payload.iter().fold(0, |a, b| a ^ b)
}

pub fn encode_pulse(p: &BeltPulse) -> Result<[u8; FRAME_LEN], BeltError> {
    if p.cell >= CELL_COUNT {
        return Err(BeltError::FieldOverflow { field: "cell", value: p.cell as u64 });
    }
    let [lo, hi] = p.duration_ms.to_le_bytes();
    let mut f = [SYNC, p.cell, p.intensity, lo, hi, 0];
    f[5] = checksum(&f[1..5]);
    Ok(f)
}

/// Decodes the frame at the start of `bytes`.
///
/// On a bad frame the error carries how many bytes to drop before the next
/// candidate sync byte (or the whole input when there is none).
pub fn decode_frame(bytes: &[u8]) -> Result<BeltPulse, BeltError> {
    if bytes.len() < FRAME_LEN {
        return Err(BeltError::Truncated { available: bytes.len() });
    }
    let f = &bytes[..FRAME_LEN];
    if f[0] == SYNC && f[1] < CELL_COUNT && checksum(&f[1..5]) == f[5] {
        return Ok(BeltPulse {
            cell: f[1],
            intensity: f[2],
            duration_ms: u16::from_le_bytes([f[3], f[4]]),
        });
    }
    let consumed = bytes[1..].iter().position(|&b| b == SYNC).map_or(bytes.len(), |i| i + 1);
    Err(BeltError::BadChecksum { consumed })
}

/// Incremental decoder for a byte stream with possible corruption.
///
/// While hunting for sync it only trusts a frame that is directly followed by
/// another valid frame, or that ends exactly at the end of the stream, and
/// otherwise keeps scanning from the next `AA`, including ones inside the
/// rejected frame. Once a frame is trusted it locks and decodes frame by
/// frame until the next bad frame.
#[derive(Debug, Default)]
pub struct StreamDecoder {
    buf: VecDeque<u8>,
    locked: bool,
    errors: usize,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend(bytes);
    }

    /// Number of skips over unparseable input so far.
    pub fn errors(&self) -> usize {
        self.errors
    }

    fn frame_at(&self, i: usize) -> Option<Result<BeltPulse, BeltError>> {
        if self.buf.len() < i + FRAME_LEN {
            return None;
        }
        let f: Vec<u8> = self.buf.range(i..i + FRAME_LEN).copied().collect();
        Some(decode_frame(&f))
    }

    /// Returns the next pulse, or `None` once more bytes are needed.
    pub fn next_pulse(&mut self) -> Option<BeltPulse> {
        self.next_inner(false)
    }

    fn next_inner(&mut self, at_end: bool) -> Option<BeltPulse> {
        loop {
            match self.buf.iter().position(|&b| b == SYNC) {
                None => {
                    self.errors += usize::from(!self.buf.is_empty());
                    self.buf.clear();
                    return None;
                }
                Some(0) => {}
                Some(i) => {
                    self.errors += 1;
                    self.buf.drain(..i);
                    self.locked = false;
                }
            }
            let Some(first) = self.frame_at(0) else {
                if at_end {
                    self.errors += 1;
                    self.buf.clear();
                }
                return None;
            };
            let Ok(p) = first else {
                self.errors += 1;
                self.locked = false;
                self.buf.pop_front();
                continue;
            };
            if !self.locked {
                let confirmed = match self.frame_at(FRAME_LEN) {
                    Some(next) => next.is_ok(),
                    None if at_end => self.buf.len() == FRAME_LEN,
                    None => return None,
                };
                if !confirmed {
                    // keep hunting from the next sync, even inside this frame
                    self.errors += 1;
                    self.buf.pop_front();
                    continue;
                }
                self.locked = true;
            }
            self.buf.drain(..FRAME_LEN);
            return Some(p);
        }
    }

    /// Decodes everything buffered, treating the buffer end as end of
    /// stream.
    pub fn drain(&mut self) -> Vec<BeltPulse> {
        let mut out = Vec::new();
        while let Some(p) = self.next_inner(true) {
            out.push(p);
        }
        out
    }
}

/// In-memory stand-in for the belt: bytes written by the host are decoded
/// into pulses the "device" has received.
#[derive(Debug, Default)]
pub struct LoopbackBelt {
    wire: Vec<u8>,
    decoder: StreamDecoder,
    received: Vec<BeltPulse>,
}

impl LoopbackBelt {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn send(&mut self, p: &BeltPulse) -> Result<(), BeltError> {
        let f = encode_pulse(p)?;
        self.write(&f);
        Ok(())
    }

    pub fn write(&mut self, bytes: &[u8]) {
        self.wire.extend_from_slice(bytes);
        self.decoder.push(bytes);
        while let Some(p) = self.decoder.next_pulse() {
            self.received.push(p);
        }
    }

    /// Flushes the decoder and returns everything received so far.
    pub fn read(&mut self) -> Vec<BeltPulse> {
        let tail = self.decoder.drain();
        self.received.extend(tail);
        std::mem::take(&mut self.received)
    }

    /// Raw bytes seen on the wire.
    pub fn wire(&self) -> &[u8] {
        &self.wire
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_frame() {
        let p = BeltPulse::new(0, 0, 0).unwrap();
        assert_eq!(encode_pulse(&p).unwrap(), [0xAA, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn default_pulse_bytes() {
        let p = BeltPulse::new(1, 200, 400).unwrap();
        // 400 = 0x0190; 0x01 ^ 0xC8 ^ 0x90 ^ 0x01 = 0x58
        assert_eq!(encode_pulse(&p).unwrap(), [0xAA, 0x01, 0xC8, 0x90, 0x01, 0x58]);
    }

    #[test]
    fn overflow() {
        assert_eq!(BeltPulse::new(16, 0, 0), Err(BeltError::FieldOverflow { field: "cell", value: 16 }));
        assert!(BeltPulse::new(0, 256, 0).is_err());
        assert!(BeltPulse::new(0, 0, 65536).is_err());
        let raw = BeltPulse { cell: 16, intensity: 0, duration_ms: 0 };
        assert!(encode_pulse(&raw).is_err());
    }

    #[test]
    fn short_input_is_truncated() {
        assert_eq!(decode_frame(&[0xAA, 0, 0, 0, 0]), Err(BeltError::Truncated { available: 5 }));
    }

    #[test]
    fn corrupt_checksum_then_valid_frame() {
        let good = encode_pulse(&BeltPulse::new(3, 9, 100).unwrap()).unwrap();
        let mut bad = encode_pulse(&BeltPulse::new(5, 7, 50).unwrap()).unwrap();
        bad[5] ^= 0x10;
        let mut bytes = bad.to_vec();
        bytes.extend(good);
        let Err(BeltError::BadChecksum { consumed }) = decode_frame(&bytes) else { panic!() };
        assert_eq!(consumed, 6);
        assert_eq!(decode_frame(&bytes[consumed..]).unwrap(), BeltPulse::new(3, 9, 100).unwrap());
    }

    #[test]
    fn loopback_delivers_pulses_in_order() {
        let mut belt = LoopbackBelt::new();
        let ps: Vec<_> = (0..16).map(|c| BeltPulse::new(c, 200, 400).unwrap()).collect();
        for p in &ps {
            belt.send(p).unwrap();
        }
        assert_eq!(belt.read(), ps);
        assert_eq!(belt.wire().len(), 16 * FRAME_LEN);
    }

    proptest! {
        #[test]
        fn round_trip(cell in 0u32..16, intensity in 0u32..256, duration in 0u32..65536) {
            let p = BeltPulse::new(cell, intensity, duration).unwrap();
            prop_assert_eq!(decode_frame(&encode_pulse(&p).unwrap()).unwrap(), p);
        }

        #[test]
        fn resync_after_garbage(
            garbage in proptest::collection::vec(any::<u8>(), 0..=64),
            cell in 0u32..16, intensity in 0u32..256, duration in 0u32..65536,
        ) {
            let p = BeltPulse::new(cell, intensity, duration).unwrap();
            let mut dec = StreamDecoder::new();
            dec.push(&garbage);
            dec.push(&encode_pulse(&p).unwrap());
            let got = dec.drain();
            prop_assert_eq!(got.last(), Some(&p));
        }
    }
}
