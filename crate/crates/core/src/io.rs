//! JSON persistence for surface and strip fields.
//!
//! Layout: `{version, d, nx, nz, b, kind, coeffs: [[re, im], ...], z_nodes?}`
//! with coefficients in the lattice order of [`DomainSpec::index_of`]; strip
//! fields store all slabs bottom to top, one after the other. Forward
//! transforms are normalized by `nx^d`, so stored values are true Fourier
//! coefficients.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::spectral::{DomainSpec, StripField, SurfaceField};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Surface,
    Strip,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FieldFile {
    version: u64,
    d: usize,
    nx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nz: Option<usize>,
    b: f64,
    kind: FieldKind,
    coeffs: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    z_nodes: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Surface(SurfaceField),
    Strip(StripField),
}

impl Field {
    pub fn kind(&self) -> FieldKind {
        match self {
            Field::Surface(_) => FieldKind::Surface,
            Field::Strip(_) => FieldKind::Strip,
        }
    }
}

impl From<SurfaceField> for Field {
    fn from(f: SurfaceField) -> Self {
        Field::Surface(f)
    }
}

impl From<StripField> for Field {
    fn from(f: StripField) -> Self {
        Field::Strip(f)
    }
}

fn pairs(c: &[Complex64]) -> impl Iterator<Item = [f64; 2]> + '_ {
    c.iter().map(|z| [z.re, z.im])
}

fn file_of(field: &Field) -> FieldFile {
    match field {
        Field::Surface(f) => {
            let s = f.spec();
            FieldFile {
                version: FORMAT_VERSION,
                d: s.d(),
                nx: s.nx(),
                nz: Some(s.nz()),
                b: s.b(),
                kind: FieldKind::Surface,
                coeffs: pairs(f.coeffs()).collect(),
                z_nodes: None,
            }
        }
        Field::Strip(v) => {
            let s = v.spec();
            FieldFile {
                version: FORMAT_VERSION,
                d: s.d(),
                nx: s.nx(),
                nz: Some(s.nz()),
                b: s.b(),
                kind: FieldKind::Strip,
                coeffs: v.slabs().iter().flat_map(|sl| pairs(sl)).collect(),
                z_nodes: Some(v.z_nodes().to_vec()),
            }
        }
    }
}

fn field_of(file: FieldFile) -> Result<Field> {
    if file.version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: file.version,
            expected: FORMAT_VERSION,
        });
    }
    let coeffs: Vec<Complex64> = file
        .coeffs
        .iter()
        .map(|[re, im]| Complex64::new(*re, *im))
        .collect();
    match file.kind {
        FieldKind::Surface => {
            let spec = DomainSpec::new(file.d, file.nx, file.nz.unwrap_or(65), file.b)?;
            Ok(Field::Surface(SurfaceField::from_coeffs(spec, coeffs)?))
        }
        FieldKind::Strip => {
            let nz = file
                .nz
                .or(file.z_nodes.as_ref().map(Vec::len))
                .ok_or_else(|| Error::Format("strip field needs nz or z_nodes".into()))?;
            let spec = DomainSpec::new(file.d, file.nx, nz, file.b)?;
            let n = spec.n_modes();
            if coeffs.len() != n * nz {
                return Err(Error::SizeMismatch {
                    expected: n * nz,
                    got: coeffs.len(),
                });
            }
            let slabs = coeffs.chunks(n).map(<[Complex64]>::to_vec).collect();
            let z_nodes = file.z_nodes.unwrap_or_else(|| spec.z_nodes());
            Ok(Field::Strip(StripField::from_parts(spec, z_nodes, slabs)?))
        }
    }
}

pub fn field_to_value(field: &Field) -> Value {
    serde_json::to_value(file_of(field)).expect("plain data serializes")
}

pub fn field_from_value(value: Value) -> Result<Field> {
    check_version(&value)?;
    let file: FieldFile =
        serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
    field_of(file)
}

fn check_version(value: &Value) -> Result<()> {
    match value.get("version").and_then(Value::as_u64) {
        Some(FORMAT_VERSION) => Ok(()),
        Some(found) => Err(Error::VersionMismatch {
            found,
            expected: FORMAT_VERSION,
        }),
        None => Err(Error::Format("missing integer key `version`".into())),
    }
}

pub fn field_to_string(field: &Field) -> String {
    serde_json::to_string_pretty(&file_of(field)).expect("plain data serializes")
}

pub fn field_from_str(text: &str) -> Result<Field> {
    field_from_value(serde_json::from_str(text)?)
}

pub fn save_state(path: impl AsRef<Path>, field: &Field) -> Result<()> {
    fs::write(path, field_to_string(field) + "\n")?;
    Ok(())
}

pub fn load_state(path: impl AsRef<Path>) -> Result<Field> {
    field_from_str(&fs::read_to_string(path)?)
}

pub fn load_surface(path: impl AsRef<Path>) -> Result<SurfaceField> {
    match load_state(path)? {
        Field::Surface(f) => Ok(f),
        Field::Strip(_) => Err(Error::Format("expected a surface field, found a strip".into())),
    }
}

pub fn surface_from_value(value: Value) -> Result<SurfaceField> {
    match field_from_value(value)? {
        Field::Surface(f) => Ok(f),
        Field::Strip(_) => Err(Error::Format("expected a surface field, found a strip".into())),
    }
}

pub fn strip_from_value(value: Value) -> Result<StripField> {
    match field_from_value(value)? {
        Field::Strip(f) => Ok(f),
        Field::Surface(_) => Err(Error::Format("expected a strip field, found a surface".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> DomainSpec {
        DomainSpec::new(2, 8, 9, 1.3).unwrap()
    }

    #[test]
    fn surface_round_trip() {
        let f = SurfaceField::from_fn(spec(), |x| (x[0] + 2.0 * x[1]).sin() / 3.0 + 0.1);
        let back = field_from_str(&field_to_string(&f.clone().into())).unwrap();
        assert_eq!(back, Field::Surface(f));
    }

    #[test]
    fn strip_keeps_z_nodes() {
        let v = StripField::from_fn(spec(), |x, z| (x[1] * z).cos());
        let text = field_to_string(&v.clone().into());
        let Field::Strip(back) = field_from_str(&text).unwrap() else {
            panic!("wrong kind")
        };
        assert_eq!(back.z_nodes(), v.z_nodes());
        assert_eq!(back, v);
    }

    #[test]
    fn key_names() {
        let f = SurfaceField::zeros(spec());
        let v = field_to_value(&f.into());
        for k in ["version", "d", "nx", "nz", "b", "kind", "coeffs"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        assert_eq!(v["kind"], "surface");
        assert!(v.get("z_nodes").is_none());
    }

    #[test]
    fn rejects_other_versions() {
        let f = SurfaceField::zeros(spec());
        let mut v = field_to_value(&f.into());
        v["version"] = 0.into();
        assert!(matches!(
            field_from_value(v),
            Err(Error::VersionMismatch { found: 0, expected: 1 })
        ));
        assert!(matches!(field_from_str("{\"version\": 1"), Err(Error::Json(_))));
        assert!(matches!(field_from_str("{\"d\": 1}"), Err(Error::Format(_))));
    }
}
