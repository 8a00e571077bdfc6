//! On-disk dataset layout: a `key=value` descriptor plus one raw value file
//! and one raw occupancy file per level.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::amr::{AmrDataset, LevelGrid};
use crate::error::{Error, Result};
use crate::grid::{BlockMask, Field3, ValueType};

pub const DESCRIPTOR_NAME: &str = "dataset.txt";

fn descriptor_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(DESCRIPTOR_NAME)
    } else {
        path.to_path_buf()
    }
}

/// Writes `dataset` into directory `dir`, creating it if needed.
pub fn save_dataset(dataset: &AmrDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let vt = dataset.value_type();
    let mut desc = String::new();
    desc.push_str(&format!("levels={}\n", dataset.num_levels()));
    desc.push_str(&format!("finest_side={}\n", dataset.finest_side()));
    desc.push_str(&format!("unit_block_size={}\n", dataset.unit_block_size()));
    desc.push_str(&format!("refinement_factor={}\n", dataset.refinement_factor()));
    desc.push_str(&format!("value_type={vt}\n"));
    for (i, level) in dataset.levels().iter().enumerate() {
        let values_name = format!("level{i}.bin");
        let mask_name = format!("level{i}.mask");
        let mut bytes = Vec::with_capacity(level.values().len() * vt.byte_width());
        for &v in level.values().as_slice() {
            vt.write_le(v, &mut bytes);
        }
        fs::write(dir.join(&values_name), bytes)?;
        let mask: Vec<u8> = level.occupancy().bits().iter().map(|&b| b as u8).collect();
        fs::write(dir.join(&mask_name), mask)?;
        desc.push_str(&format!("level{i}.values={values_name}\n"));
        desc.push_str(&format!("level{i}.mask={mask_name}\n"));
    }
    fs::write(dir.join(DESCRIPTOR_NAME), desc)?;
    Ok(())
}

pub(crate) fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub(crate) fn required<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = map
        .get(key)
        .ok_or_else(|| Error::Format(format!("missing key `{key}`")))?;
    raw.parse()
        .map_err(|_| Error::Format(format!("bad value `{raw}` for key `{key}`")))
}

/// Reads a dataset from a directory or a descriptor file path.
pub fn load_dataset(path: &Path) -> Result<AmrDataset> {
    let desc_path = descriptor_path(path);
    let base = desc_path.parent().unwrap_or(Path::new("."));
    let map = parse_key_values(&fs::read_to_string(&desc_path)?)?;
    let num_levels: usize = required(&map, "levels")?;
    let finest_side: usize = required(&map, "finest_side")?;
    let unit: usize = required(&map, "unit_block_size")?;
    let factor: usize = required(&map, "refinement_factor")?;
    let vt: ValueType = required(&map, "value_type")?;
    if num_levels == 0 || factor == 0 {
        return Err(Error::Format("levels and refinement_factor must be positive".into()));
    }

    let mut levels = Vec::with_capacity(num_levels);
    let mut side = finest_side;
    for i in 0..num_levels {
        if i > 0 {
            if side % factor != 0 {
                return Err(Error::Format(format!("level {i} side is not integral")));
            }
            side /= factor;
        }
        if unit == 0 || side % unit != 0 {
            return Err(Error::Format(format!(
                "unit_block_size {unit} does not divide level {i} side {side}"
            )));
        }
        let values_rel: String = required(&map, &format!("level{i}.values"))?;
        let mask_rel: String = required(&map, &format!("level{i}.mask"))?;
        let raw = fs::read(base.join(values_rel))?;
        let n = side.pow(3);
        let w = vt.byte_width();
        if raw.len() != n * w {
            return Err(Error::Format(format!(
                "level {i} values: expected {} bytes, found {}",
                n * w,
                raw.len()
            )));
        }
        let values: Vec<f64> = raw.chunks_exact(w).map(|c| vt.read_le(c)).collect();
        let nb = side / unit;
        let mask_raw = fs::read(base.join(mask_rel))?;
        if mask_raw.len() != nb.pow(3) {
            return Err(Error::Format(format!(
                "level {i} mask: expected {} bytes, found {}",
                nb.pow(3),
                mask_raw.len()
            )));
        }
        let bits = mask_raw
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::Format(format!("level {i} mask byte {other}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mask = BlockMask::from_bits([nb; 3], bits)?;
        let field = Field3::from_vec([side; 3], values)?;
        let level = LevelGrid::new(field.clone(), unit, mask)?;
        if level.values() != &field {
            return Err(Error::Structural(format!("level {i} has non-zero values in empty blocks")));
        }
        levels.push(level);
    }
    AmrDataset::new(levels, factor, vt)
}
