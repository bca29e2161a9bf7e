//! MIDI variable-length quantities: 7 bits per byte, most significant group
//! first, high bit set on every byte but the last.

use super::SmfError;

/// Largest value representable in the four bytes SMF allows.
pub const VLQ_MAX: u32 = 0x0FFF_FFFF;

/// Decodes one quantity starting at `offset`, returning the value and the
/// offset of the first byte after it.
pub fn decode_vlq(bytes: &[u8], offset: usize) -> Result<(u32, usize), SmfError> {
    let mut value: u32 = 0;
    for i in 0..4 {
        let Some(&byte) = bytes.get(offset + i) else {
            return Err(SmfError::UnexpectedEof { offset: offset + i });
        };
        value = (value << 7) | u32::from(byte & 0x7F);
        if byte & 0x80 == 0 {
            return Ok((value, offset + i + 1));
        }
    }
    Err(SmfError::IllegalVlq { offset })
}

/// Appends the minimal-length encoding of `value`.
pub fn encode_vlq(value: u32, out: &mut Vec<u8>) -> Result<(), SmfError> {
    if value > VLQ_MAX {
        return Err(SmfError::VlqOverflow(u64::from(value)));
    }
    let mut groups = [0u8; 4];
    let mut n = 0;
    let mut v = value;
    loop {
        groups[n] = (v & 0x7F) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        let continuation = if i == 0 { 0 } else { 0x80 };
        out.push(groups[i] | continuation);
    }
    Ok(())
}
