//! Threshold halo finder: connected regions of over-dense cells.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::grid::Field3;

pub const DEFAULT_THRESHOLD_FACTOR: f64 = 81.66;
pub const DEFAULT_MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaloParams {
    /// Candidate cells hold at least this multiple of the field mean.
    pub threshold_factor: f64,
    pub min_cells: usize,
}

impl Default for HaloParams {
    fn default() -> Self {
        Self {
            threshold_factor: DEFAULT_THRESHOLD_FACTOR,
            min_cells: DEFAULT_MIN_CELLS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Halo {
    /// Mass-weighted center in cell coordinates.
    pub center_of_mass: [f64; 3],
    pub cell_count: usize,
    /// Sum of member cell values.
    pub mass: f64,
    /// Smallest linear cell index in the halo; used to order ties.
    pub first_cell: usize,
}

/// Halos of `field` sorted by mass, heaviest first. Components are
/// 6-connected; ties in mass go to the halo with the smaller first cell.
pub fn halo_find(field: &Field3, params: HaloParams) -> Result<Vec<Halo>> {
    let n = field.len();
    let mean = field.as_slice().iter().sum::<f64>() / n as f64;
    if !(mean > 0.0) {
        return Err(Error::InvalidInput(format!("halo finding needs a positive field mean, got {mean}")));
    }
    let threshold = params.threshold_factor * mean;
    let dims = field.dims();
    let data = field.as_slice();
    let candidate: Vec<bool> = data.iter().map(|&v| v >= threshold).collect();
    let mut visited = vec![false; n];
    let mut halos = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !candidate[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let (mut mass, mut count) = (0.0, 0usize);
        let mut moment = [0.0; 3];
        while let Some(i) = queue.pop_front() {
            let p = [i % dims[0], i / dims[0] % dims[1], i / (dims[0] * dims[1])];
            let v = data[i];
            mass += v;
            count += 1;
            for a in 0..3 {
                moment[a] += v * p[a] as f64;
            }
            let strides = [1, dims[0], dims[0] * dims[1]];
            for a in 0..3 {
                if p[a] > 0 {
                    let j = i - strides[a];
                    if candidate[j] && !visited[j] {
                        visited[j] = true;
                        queue.push_back(j);
                    }
                }
                if p[a] + 1 < dims[a] {
                    let j = i + strides[a];
                    if candidate[j] && !visited[j] {
                        visited[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if count >= params.min_cells {
            halos.push(Halo {
                center_of_mass: moment.map(|m| m / mass),
                cell_count: count,
                mass,
                first_cell: start,
            });
        }
    }
    halos.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.first_cell.cmp(&b.first_cell)));
    Ok(halos)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaloComparison {
    /// `|m_candidate - m_reference| / m_reference` of the heaviest halos.
    pub rel_mass_diff: f64,
    /// Absolute cell-count difference of the heaviest halos.
    pub cell_count_diff: usize,
}

pub fn halo_compare(reference: &[Halo], candidate: &[Halo]) -> Result<HaloComparison> {
    let biggest = |h: &[Halo]| h.iter().max_by(|a, b| a.mass.total_cmp(&b.mass)).cloned();
    let (Some(r), Some(c)) = (biggest(reference), biggest(candidate)) else {
        return Err(Error::InvalidInput("halo comparison needs non-empty halo lists".into()));
    };
    Ok(HaloComparison {
        rel_mass_diff: (c.mass - r.mass).abs() / r.mass,
        cell_count_diff: r.cell_count.abs_diff(c.cell_count),
    })
}
