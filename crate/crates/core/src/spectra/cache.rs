//! On-disk cache of surface spectra keyed by profile, truncation and solver settings.
//!
//! A cache file holds a JSON header followed by the eigenfunction values as
//! little-endian `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::manifolds::ProfileCurve;

use super::sturm::{surface_spectrum_with, EigenStore, ModeCount, ModeEigenfunction, SolverOptions, SurfaceSpectrum};
use super::Spectrum;

/// Bumped whenever the solver output changes.
pub const SOLVER_VERSION: &str = "prufer-frobenius-1";

const MAGIC: &[u8; 8] = b"WSPEC01\n";

#[derive(Serialize, Deserialize)]
struct Header {
    version: String,
    key: String,
    spectrum: Spectrum,
    counts: Vec<ModeCount>,
    m_max: i64,
    options: SolverOptions,
    lo: f64,
    hi: f64,
    nodes: usize,
    modes: Vec<(i64, usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct SpectrumCache {
    pub dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Hash of the profile (sampled jet), `λ_max`, `m_max`, options and solver version.
    pub fn key(profile: &ProfileCurve, lambda_max: f64, m_max: Option<i64>, so: &SolverOptions) -> String {
        let mut h = Sha256::new();
        h.update(SOLVER_VERSION.as_bytes());
        h.update(profile.label().as_bytes());
        let (lo, hi) = profile.domain();
        for i in 0..=256 {
            let s = lo + (hi - lo) * i as f64 / 256.0;
            for v in profile.jet(s) {
                h.update(v.to_le_bytes());
            }
        }
        h.update(lambda_max.to_le_bytes());
        h.update(m_max.unwrap_or(-1).to_le_bytes());
        h.update(serde_json::to_vec(so).expect("options serialize"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.wspec"))
    }

    pub fn load(&self, key: &str) -> Result<Option<SurfaceSpectrum>> {
        let path = self.path(key);
        if !path.exists() {
            return Ok(None);
        }
        read_file(&path, key).map(Some)
    }

    pub fn store(&self, key: &str, s: &SurfaceSpectrum) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(io)?;
        let header = Header {
            version: SOLVER_VERSION.into(),
            key: key.into(),
            spectrum: s.spectrum.clone(),
            counts: s.counts.clone(),
            m_max: s.m_max,
            options: s.options,
            lo: s.store.lo,
            hi: s.store.hi,
            nodes: s.store.nodes.len(),
            modes: s.store.modes.iter().map(|e| (e.m, e.k, e.lambda)).collect(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Domain(e.to_string()))?;
        let mut buf = Vec::with_capacity(json.len() + 8 * s.store.nodes.len() * (1 + s.store.modes.len()));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
        buf.extend_from_slice(&json);
        for v in s.store.nodes.iter().chain(s.store.modes.iter().flat_map(|e| e.values.iter())) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        let final_path = self.path(key);
        let tmp = final_path.with_extension(format!("tmp{}", std::process::id()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&buf).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &final_path).map_err(io)
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Domain(format!("spectrum cache: {e}"))
}

fn read_file(path: &Path, key: &str) -> Result<SurfaceSpectrum> {
    let mut bytes = Vec::new();
    fs::File::open(path).map_err(io)?.read_to_end(&mut bytes).map_err(io)?;
    let bad = |what: &str| Error::Domain(format!("spectrum cache {}: {what}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
    let h: Header = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
    if h.version != SOLVER_VERSION || h.key != key {
        return Err(bad("version or key mismatch"));
    }
    let mut floats = bytes[16 + hlen..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let nodes: Vec<f64> = floats.by_ref().take(h.nodes).collect();
    let mut modes = Vec::with_capacity(h.modes.len());
    for (m, k, lambda) in h.modes {
        let values: Vec<f64> = floats.by_ref().take(h.nodes).collect();
        if values.len() != h.nodes {
            return Err(bad("truncated values"));
        }
        modes.push(ModeEigenfunction { m, k, lambda, values });
    }
    Ok(SurfaceSpectrum {
        spectrum: h.spectrum,
        store: EigenStore {
            lo: h.lo,
            hi: h.hi,
            nodes,
            modes,
        },
        counts: h.counts,
        m_max: h.m_max,
        options: h.options,
    })
}

/// Load from `cache` when present, otherwise solve and store.
pub fn cached_surface_spectrum(
    cache: Option<&SpectrumCache>,
    profile: &ProfileCurve,
    lambda_max: f64,
    m_max: Option<i64>,
    so: SolverOptions,
) -> Result<SurfaceSpectrum> {
    let Some(cache) = cache else {
        return surface_spectrum_with(profile, lambda_max, m_max, so);
    };
    let key = SpectrumCache::key(profile, lambda_max, m_max, &so);
    if let Ok(Some(s)) = cache.load(&key) {
        return Ok(s);
    }
    let s = surface_spectrum_with(profile, lambda_max, m_max, so)?;
    cache.store(&key, &s)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::make_round_sphere;

    #[test]
    fn round_trip() {
        let dir = std::env::temp_dir().join(format!("weylscope-cache-{}", std::process::id()));
        let cache = SpectrumCache::new(&dir);
        let p = make_round_sphere();
        let so = SolverOptions {
            grid_points: 65,
            ..SolverOptions::default()
        };
        let a = cached_surface_spectrum(Some(&cache), &p, 4.0, None, so).unwrap();
        let key = SpectrumCache::key(&p, 4.0, None, &so);
        let b = cache.load(&key).unwrap().unwrap();
        assert_eq!(a, b);
        let other = SpectrumCache::key(&p, 4.5, None, &so);
        assert_ne!(key, other);
        let _ = fs::remove_dir_all(&dir);
    }
}
