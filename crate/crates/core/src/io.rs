//! CSV and JSON artifact writers. Floats use the shortest round-trip
//! representation so reruns reproduce files byte for byte.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::monotone::SystemIterate;
use crate::radial_ivp::RadialProfile;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_csv<P: AsRef<Path>>(path: P, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path.as_ref())
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io.into(),
        other => std::io::Error::new(std::io::ErrorKind::Other, format!("{other:?}")).into(),
    }
}

/// Pretty JSON with a trailing newline. Map keys come out sorted.
pub fn write_json<P: AsRef<Path>, T: Serialize + ?Sized>(path: P, value: &T) -> Result<()> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file<P: AsRef<Path>>(path: P) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// Columns `r, v0..v{m-1}, dv0..dv{m-1}`.
pub fn write_profile_csv<P: AsRef<Path>>(path: P, profile: &RadialProfile) -> Result<()> {
    let m = profile.dim().m as usize;
    let mut header = vec!["r".to_string()];
    header.extend((0..m).map(|k| format!("v{k}")));
    header.extend((0..m).map(|k| format!("dv{k}")));
    let rows: Vec<Vec<String>> = profile
        .grid()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut row = vec![fmt_f64(r)];
            row.extend((0..m).map(|k| fmt_f64(profile.v(k)[i])));
            row.extend((0..m).map(|k| fmt_f64(profile.dv(k)[i])));
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Columns `r, phi`.
pub fn write_witness_csv<P: AsRef<Path>>(path: P, radii: &[f64], phi: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> = radii.iter().zip(phi).map(|(r, p)| vec![fmt_f64(*r), fmt_f64(*p)]).collect();
    write_csv(path, &["r".into(), "phi".into()], &rows)
}

/// Columns `r, z, v_1..v_{m-1}, u`.
pub fn write_system_csv<P: AsRef<Path>>(path: P, it: &SystemIterate) -> Result<()> {
    let m = it.dim.m as usize;
    let mut header = vec!["r".to_string(), "z".to_string()];
    header.extend((1..m).map(|k| format!("v_{k}")));
    header.push("u".into());
    let u = it.u();
    let rows: Vec<Vec<String>> = it
        .r
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut row = vec![fmt_f64(r)];
            row.extend((0..m).map(|k| fmt_f64(it.components[k][i])));
            row.push(fmt_f64(u[i]));
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}
