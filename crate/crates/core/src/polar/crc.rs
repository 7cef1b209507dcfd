use serde::{Deserialize, Serialize};

use crate::gf2lin::BinVector;

pub const CRC_WIDTH: usize = 16;

/// Non-reflected 16-bit CRC parameters. The default is CRC-16/CCITT-FALSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrcConfig {
    pub poly: u16,
    pub init: u16,
    pub xorout: u16,
}

impl Default for CrcConfig {
    fn default() -> Self {
        Self {
            poly: 0x1021,
            init: 0xFFFF,
            xorout: 0x0000,
        }
    }
}

/// Bitwise long division over the message bits, MSB first.
pub fn crc16(bits: &[u8], cfg: &CrcConfig) -> u16 {
    let mut reg = cfg.init;
    for &b in bits {
        let top = (reg >> 15) as u8 ^ (b & 1);
        reg <<= 1;
        if top == 1 {
            reg ^= cfg.poly;
        }
    }
    reg ^ cfg.xorout
}

/// Appends the 16 CRC bits, MSB first.
pub fn crc_attach(info: &BinVector, cfg: &CrcConfig) -> BinVector {
    let crc = crc16(info.as_slice(), cfg);
    let mut bits = info.as_slice().to_vec();
    bits.extend((0..CRC_WIDTH).rev().map(|k| ((crc >> k) & 1) as u8));
    BinVector::from_bits(bits).unwrap()
}

pub fn crc_check(data: &[u8], cfg: &CrcConfig) -> bool {
    if data.len() < CRC_WIDTH {
        return false;
    }
    let (info, tail) = data.split_at(data.len() - CRC_WIDTH);
    let crc = crc16(info, cfg);
    tail.iter()
        .enumerate()
        .all(|(k, &b)| b == ((crc >> (CRC_WIDTH - 1 - k)) & 1) as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcSelection {
    pub index: usize,
    pub crc_pass: bool,
}

/// Picks the first (lowest-metric) candidate whose data passes the CRC, or
/// the first candidate with `crc_pass = false` when none does.
pub fn select_by_crc<'a, I>(ranked: I, cfg: &CrcConfig) -> Option<CrcSelection>
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut any = false;
    for (index, data) in ranked.into_iter().enumerate() {
        any = true;
        if crc_check(data, cfg) {
            return Some(CrcSelection { index, crc_pass: true });
        }
    }
    any.then_some(CrcSelection {
        index: 0,
        crc_pass: false,
    })
}
