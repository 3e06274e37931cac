//! Observation files: an 8-byte little-endian `u64` length followed by that
//! many little-endian IEEE-754 `f64` values.

use super::Observation;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

pub fn write_observation<W: Write>(mut w: W, obs: &Observation) -> Result<()> {
    w.write_all(&(obs.len() as u64).to_le_bytes())?;
    for v in obs.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_observation<R: Read>(mut r: R) -> Result<Observation> {
    let mut header = [0u8; 8];
    r.read_exact(&mut header)?;
    let len = u64::from_le_bytes(header);
    let len = usize::try_from(len).map_err(|_| Error::Parse(format!("length {len} too large")))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != len * 8 {
        return Err(Error::Parse(format!(
            "observation header says {len} values but body holds {} bytes",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Observation::new(values)
}

pub fn to_bytes(obs: &Observation) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * obs.len());
    write_observation(&mut out, obs).expect("writing to a Vec cannot fail");
    out
}

pub fn save(path: &Path, obs: &Observation) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_observation(&mut w, obs)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Observation> {
    let f = std::fs::File::open(path)?;
    read_observation(std::io::BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_exact() {
        let obs = Observation::new(vec![1.0, -2.5]).unwrap();
        let bytes = to_bytes(&obs);
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[0..8], &2u64.to_le_bytes());
        assert_eq!(&bytes[8..16], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[16..24], &(-2.5f64).to_le_bytes());
        assert_eq!(read_observation(&bytes[..]).unwrap(), obs);
    }

    #[test]
    fn truncated_body_rejected() {
        let mut bytes = to_bytes(&Observation::new(vec![1.0, 2.0]).unwrap());
        bytes.pop();
        assert!(read_observation(&bytes[..]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        let mut bytes = 1u64.to_le_bytes().to_vec();
        bytes.extend_from_slice(&f64::NAN.to_le_bytes());
        assert!(read_observation(&bytes[..]).is_err());
    }
}
