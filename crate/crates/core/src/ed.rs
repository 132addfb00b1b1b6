//! Exact ground states and Schmidt decompositions for small chains.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::rsos::PathBasis;
use crate::sparse::CsrMatrix;
use crate::spectrum::EntanglementSpectrum;
use crate::tensor::{lanczos_lowest, svd_full};

/// Lowest eigenpair of a sparse symmetric operator.
///
/// The vector's sign is fixed so that its largest-magnitude entry is positive.
pub fn ground_state(h: &CsrMatrix, seed: u64, tol: f64) -> Result<(f64, Vec<f64>)> {
    if h.dim() == 0 {
        return Err(Error::domain("empty Hamiltonian"));
    }
    let pair = lanczos_lowest(|x, y| h.matvec(x, y), h.dim(), seed, tol, 200)?;
    let mut v = pair.vector;
    let pivot = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((pair.value, v))
}

fn check_cut(cut: usize, sites: usize) -> Result<()> {
    if cut == 0 || cut >= sites {
        return Err(Error::domain(format!("cut {cut} outside 1..={}", sites.saturating_sub(1))));
    }
    Ok(())
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Schmidt decomposition of a state on the constrained path basis.
///
/// The amplitude matrix ψ[left path][right path] is split into its connected
/// blocks (left and right paths linked by a nonzero amplitude), and each block
/// is decomposed on its own. Left and right paths sharing a cut height can
/// still couple to neighbouring heights, so a block may span several cut
/// heights; each Schmidt value is labelled by the cut height a_{l−1} carrying
/// most of its left vector.
pub fn schmidt_constrained(basis: &PathBasis, state: &[f64], cut: usize) -> Result<EntanglementSpectrum> {
    check_cut(cut, basis.sites())?;
    if state.len() != basis.len() {
        return Err(Error::shape(format!("state has {} entries for {} paths", state.len(), basis.len())));
    }
    let mut rows: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut cols: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut entries = Vec::new();
    for (i, &amp) in state.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        let h = basis.heights(i);
        let nr = rows.len();
        let r = *rows.entry(h[..cut].to_vec()).or_insert(nr);
        let nc = cols.len();
        let c = *cols.entry(h[cut..].to_vec()).or_insert(nc);
        entries.push((r, c, amp));
    }
    let row_height: Vec<u32> = {
        let mut v = vec![0; rows.len()];
        for (path, &r) in &rows {
            v[r] = path[cut - 1];
        }
        v
    };

    // union-find over rows (0..nr) and columns (nr..nr+nc)
    let nr = rows.len();
    let mut parent: Vec<usize> = (0..nr + cols.len()).collect();
    for &(r, c, _) in &entries {
        let (a, b) = (find(&mut parent, r), find(&mut parent, nr + c));
        parent[a] = b;
    }
    let mut blocks: BTreeMap<usize, (Vec<usize>, Vec<usize>, Vec<(usize, usize, f64)>)> = BTreeMap::new();
    for r in 0..nr {
        let root = find(&mut parent, r);
        blocks.entry(root).or_default().0.push(r);
    }
    for c in 0..cols.len() {
        let root = find(&mut parent, nr + c);
        blocks.entry(root).or_default().1.push(c);
    }
    for &(r, c, a) in &entries {
        let root = find(&mut parent, r);
        blocks.get_mut(&root).expect("block exists").2.push((r, c, a));
    }

    let mut singular = Vec::new();
    let mut labels = Vec::new();
    for (block_rows, block_cols, block_entries) in blocks.values() {
        let ri: BTreeMap<usize, usize> = block_rows.iter().enumerate().map(|(k, &r)| (r, k)).collect();
        let ci: BTreeMap<usize, usize> = block_cols.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        let mut m = Array2::<f64>::zeros((block_rows.len(), block_cols.len()));
        for &(r, c, a) in block_entries {
            m[[ri[&r], ci[&c]]] += a;
        }
        let (u, s, _) = svd_full(m.view())?;
        for (k, &sv) in s.iter().enumerate() {
            let mut weight: BTreeMap<u32, f64> = BTreeMap::new();
            for (local, &r) in block_rows.iter().enumerate() {
                *weight.entry(row_height[r]).or_default() += u[[local, k]] * u[[local, k]];
            }
            let label = weight
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&h, _)| h)
                .unwrap_or(0);
            singular.push(sv);
            labels.push(label);
        }
    }
    EntanglementSpectrum::from_singular_values(cut, &singular, Some(labels))
}

/// Embeds a path-basis state in the `p^L` tensor-product space as
/// `(configuration index, amplitude)` pairs.
pub fn embed(basis: &PathBasis, state: &[f64]) -> Vec<(u64, f64)> {
    (0..basis.len()).map(|i| (basis.tensor_index(i), state[i])).collect()
}

/// Plain bipartite SVD of a state given by its nonzero entries in the `d^L`
/// product basis (site 0 most significant).
pub fn schmidt_tensor_sparse(entries: &[(u64, f64)], d: usize, sites: usize, cut: usize) -> Result<EntanglementSpectrum> {
    check_cut(cut, sites)?;
    let right_dim = (d as u64)
        .checked_pow((sites - cut) as u32)
        .ok_or_else(|| Error::domain("right subsystem too large"))?;
    let mut rows: BTreeMap<u64, usize> = BTreeMap::new();
    let mut cols: BTreeMap<u64, usize> = BTreeMap::new();
    for &(idx, a) in entries {
        if a != 0.0 {
            let n = rows.len();
            rows.entry(idx / right_dim).or_insert(n);
            let n = cols.len();
            cols.entry(idx % right_dim).or_insert(n);
        }
    }
    if rows.is_empty() {
        return Err(Error::numeric("state has zero norm"));
    }
    let mut m = Array2::<f64>::zeros((rows.len(), cols.len()));
    for &(idx, a) in entries {
        if a != 0.0 {
            m[[rows[&(idx / right_dim)], cols[&(idx % right_dim)]]] += a;
        }
    }
    let (_, s, _) = svd_full(m.view())?;
    EntanglementSpectrum::from_singular_values(cut, &s, None)
}

/// [`schmidt_tensor_sparse`] for a dense vector of length `d^L`.
pub fn schmidt_tensor(state: &[f64], d: usize, cut: usize) -> Result<EntanglementSpectrum> {
    let sites = (1..=64)
        .find(|&n| (d as u128).pow(n as u32) == state.len() as u128)
        .ok_or_else(|| Error::shape(format!("state length {} is not a power of {d}", state.len())))?;
    let entries: Vec<(u64, f64)> = state.iter().enumerate().map(|(i, &a)| (i as u64, a)).collect();
    schmidt_tensor_sparse(&entries, d, sites, cut)
}

/// Probability of each height at each site, `[site][height − 1]`.
pub fn occupation_constrained(basis: &PathBasis, state: &[f64]) -> Vec<Vec<f64>> {
    let p = basis.p() as usize;
    let mut occ = vec![vec![0.0; p]; basis.sites()];
    let norm: f64 = state.iter().map(|x| x * x).sum();
    for (i, &a) in state.iter().enumerate() {
        for (site, h) in basis.heights(i).into_iter().enumerate() {
            occ[site][h as usize - 1] += a * a / norm;
        }
    }
    occ
}

/// Probability of each local level at each site for a dense `d^L` state.
pub fn occupation_tensor(state: &[f64], d: usize, sites: usize) -> Vec<Vec<f64>> {
    let mut occ = vec![vec![0.0; d]; sites];
    let norm: f64 = state.iter().map(|x| x * x).sum();
    for (i, &a) in state.iter().enumerate() {
        let mut rest = i;
        for site in (0..sites).rev() {
            occ[site][rest % d] += a * a / norm;
            rest /= d;
        }
    }
    occ
}
