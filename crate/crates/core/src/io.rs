//! On-disk formats: raw snapshots with a JSON sidecar, PGM images and CSV.
//!
//! A snapshot `name` is written as `name.bin` (little-endian `f64`, `x1`
//! varying fastest, `x3` outermost) and `name.json` (grid extents, spacing,
//! time and field name).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::GridSpec;

const FORMAT: &str = "pmlwave-snapshot";
const AXIS_ORDER: &str = "x1 fastest, last axis outermost";

/// A scalar nodal field at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub field: String,
    pub time: f64,
    pub step: usize,
    pub node_counts: Vec<usize>,
    pub spacing: Vec<f64>,
    /// Coordinates of node `(0, .., 0)`.
    pub origin: Vec<f64>,
    pub data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    format: String,
    field: String,
    time: f64,
    step: usize,
    node_counts: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    axis_order: String,
    dtype: String,
    payload: String,
}

impl Snapshot {
    /// The current `u` of `state`.
    pub fn of_state(grid: &GridSpec, state: &FieldState, dt: f64) -> Self {
        Snapshot {
            field: "u".into(),
            time: state.time(dt),
            step: state.n,
            node_counts: grid.node_counts(),
            spacing: grid.spacing(),
            origin: grid.axes().iter().map(|a| a.origin()).collect(),
            data: state.u_curr.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.node_counts.len()
    }

    /// Largest absolute value.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn with_ext(path: &Path, ext: &str) -> PathBuf {
    let mut p = path.to_path_buf();
    if matches!(p.extension().and_then(|e| e.to_str()), Some("bin" | "json")) {
        p.set_extension(ext);
    } else {
        let mut s = p.into_os_string();
        s.push(".");
        s.push(ext);
        p = s.into();
    }
    p
}

/// Writes `path.bin` and `path.json`; a `.bin` or `.json` extension on `path`
/// is replaced. Returns the payload path.
pub fn write_snapshot(snapshot: &Snapshot, path: &Path) -> Result<PathBuf> {
    let expected: usize = snapshot.node_counts.iter().product();
    if snapshot.data.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "snapshot has {} values for node counts {:?}",
            snapshot.data.len(),
            snapshot.node_counts
        )));
    }
    let bin = with_ext(path, "bin");
    let json = with_ext(path, "json");
    if let Some(dir) = bin.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(&bin)?);
    for v in &snapshot.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let meta = Sidecar {
        format: FORMAT.into(),
        field: snapshot.field.clone(),
        time: snapshot.time,
        step: snapshot.step,
        node_counts: snapshot.node_counts.clone(),
        spacing: snapshot.spacing.clone(),
        origin: snapshot.origin.clone(),
        axis_order: AXIS_ORDER.into(),
        dtype: "f64-le".into(),
        payload: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let text = serde_json::to_string_pretty(&meta).expect("sidecar serializes");
    fs::write(&json, text + "\n")?;
    Ok(bin)
}

/// Reads a snapshot written by [`write_snapshot`] from either of its files
/// or their common stem.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bin = with_ext(path, "bin");
    let json = with_ext(path, "json");
    let corrupt = |reason: String| Error::CorruptSnapshot {
        path: bin.clone(),
        reason,
    };
    let meta: Sidecar = serde_json::from_str(&fs::read_to_string(&json)?)
        .map_err(|e| corrupt(format!("bad metadata: {e}")))?;
    if meta.format != FORMAT || meta.dtype != "f64-le" {
        return Err(corrupt(format!(
            "unsupported format `{}` / dtype `{}`",
            meta.format, meta.dtype
        )));
    }
    if meta.spacing.len() != meta.node_counts.len() || meta.origin.len() != meta.node_counts.len() {
        return Err(corrupt("metadata axis lists differ in length".into()));
    }
    let bytes = fs::read(&bin)?;
    let expected = meta.node_counts.iter().product::<usize>() * 8;
    if bytes.len() != expected {
        return Err(corrupt(format!(
            "payload has {} bytes, metadata implies {expected}",
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
        .collect();
    Ok(Snapshot {
        field: meta.field,
        time: meta.time,
        step: meta.step,
        node_counts: meta.node_counts,
        spacing: meta.spacing,
        origin: meta.origin,
        data,
    })
}

/// Grey level for `v` on the symmetric scale `[-m, m]`.
pub fn grey_level(v: f64, m: f64) -> u8 {
    if !(m > 0.0) {
        return 127;
    }
    (((v / m).clamp(-1.0, 1.0) + 1.0) * 0.5 * 255.0).floor() as u8
}

/// Encodes a 2D field (or the middle `x3` slice of a 3D one) as binary PGM,
/// with `x2` increasing upwards.
pub fn pgm_bytes(snapshot: &Snapshot) -> Result<Vec<u8>> {
    let (n1, n2) = match snapshot.node_counts.as_slice() {
        [n1, n2] | [n1, n2, _] => (*n1, *n2),
        other => {
            return Err(Error::ShapeMismatch(format!(
                "image export needs a 2D or 3D field, got node counts {other:?}"
            )))
        }
    };
    let slice = match snapshot.node_counts.get(2) {
        Some(&n3) => &snapshot.data[n1 * n2 * (n3 / 2)..n1 * n2 * (n3 / 2 + 1)],
        None => &snapshot.data[..],
    };
    let m = slice.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let mut out = format!("P5\n{n1} {n2}\n255\n").into_bytes();
    out.reserve(n1 * n2);
    for row in slice.chunks(n1).rev() {
        out.extend(row.iter().map(|&v| grey_level(v, m)));
    }
    Ok(out)
}

pub fn export_image(snapshot: &Snapshot, path: &Path) -> Result<()> {
    let bytes = pgm_bytes(snapshot)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// A value that can be written as one CSV field.
pub trait CsvCell {
    fn cell(&self) -> String;
}

impl CsvCell for f64 {
    /// Shortest round-trip form, in exponent notation for very small or
    /// very large magnitudes.
    fn cell(&self) -> String {
        let a = self.abs();
        if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
            format!("{self:e}")
        } else {
            self.to_string()
        }
    }
}

impl CsvCell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl CsvCell for &str {
    fn cell(&self) -> String {
        (*self).to_string()
    }
}

impl CsvCell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl<T: CsvCell> CsvCell for &T {
    fn cell(&self) -> String {
        (*self).cell()
    }
}

/// Writes a CSV file with a header row.
pub fn write_csv<R, C>(path: &Path, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = C>,
    C: IntoIterator,
    C::Item: CsvCell,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(|c| c.cell()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(counts: Vec<usize>, data: Vec<f64>) -> Snapshot {
        let d = counts.len();
        Snapshot {
            field: "u".into(),
            time: 0.25,
            step: 7,
            spacing: vec![0.1; d],
            origin: vec![-0.1; d],
            node_counts: counts,
            data,
        }
    }

    #[test]
    fn zero_field_payload_is_72_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let s = snap(vec![3, 3], vec![0.0; 9]);
        let bin = write_snapshot(&s, &dir.path().join("z")).unwrap();
        assert_eq!(fs::metadata(&bin).unwrap().len(), 72);
        assert_eq!(read_snapshot(&bin).unwrap(), s);
        assert_eq!(read_snapshot(&dir.path().join("z.json")).unwrap(), s);
    }

    #[test]
    fn truncated_payload_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let s = snap(vec![3, 3], vec![1.5; 9]);
        let bin = write_snapshot(&s, &dir.path().join("t")).unwrap();
        let bytes = fs::read(&bin).unwrap();
        fs::write(&bin, &bytes[..bytes.len() - 3]).unwrap();
        match read_snapshot(&bin) {
            Err(Error::CorruptSnapshot { reason, .. }) => assert!(reason.contains("69")),
            other => panic!("expected corruption error, got {other:?}"),
        }
    }

    #[test]
    fn shape_mismatch_on_write() {
        let dir = tempfile::tempdir().unwrap();
        let s = snap(vec![3, 3], vec![0.0; 8]);
        assert!(matches!(
            write_snapshot(&s, &dir.path().join("x")),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn grey_levels() {
        assert_eq!(grey_level(0.0, 0.0), 127);
        assert_eq!(grey_level(0.0, 2.0), 127);
        assert_eq!(grey_level(2.0, 2.0), 255);
        assert_eq!(grey_level(-2.0, 2.0), 0);
    }

    #[test]
    fn pgm_layout() {
        let s = snap(vec![3, 2], vec![0.0; 6]);
        let bytes = pgm_bytes(&s).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert!(bytes[header.len()..].iter().all(|&p| p == 127));

        // maximum at node (2, 0): bottom row of the image
        let mut s = snap(vec![3, 2], vec![0.0; 6]);
        s.data[2] = 4.0;
        let px = &pgm_bytes(&s).unwrap()[header.len()..];
        assert_eq!(px.len(), 6);
        assert_eq!(px[3 + 2], 255);
        assert_eq!(px[..5].iter().filter(|&&p| p == 127).count(), 5);
    }

    #[test]
    fn pgm_of_3d_uses_middle_slice() {
        let mut s = snap(vec![4, 3, 5], vec![0.0; 60]);
        s.data[12 * 2] = -1.0;
        s.data[12 * 2 + 1] = 1.0;
        let bytes = pgm_bytes(&s).unwrap();
        let header = b"P5\n4 3\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let px = &bytes[header.len()..];
        assert_eq!(px.len(), 12);
        assert_eq!((px[8], px[9]), (0, 255));
    }

    #[test]
    fn csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/e.csv");
        write_csv(&p, &["t", "e"], [[0.0, 1e-3], [0.5, 2.5e-7]]).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "t,e\n0,0.001\n0.5,2.5e-7\n"
        );
        assert_eq!((-3e20f64).cell(), "-3e20");
        assert_eq!(f64::NAN.cell(), "NaN");
    }
}
