use crate::error::{Error, Result};
use crate::model::FTensor;

/// Assignments whose total diagonal weight differs by less than this are ties.
pub const TIE_EPSILON: f64 = 1e-9;

/// Rows whose best diagonal weight falls below this mark the apparatus as uninformative.
pub const INFORMATIVE_THRESHOLD: f64 = 0.5;

/// Bijection `φ` from cells to sector indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerMap {
    phi: Vec<usize>,
    inverse: Vec<usize>,
    confidence: Vec<f64>,
    uninformative: bool,
}

impl PointerMap {
    /// Builds the map from `φ(α)` directly; confidences are set to 1.
    pub fn from_phi(phi: Vec<usize>) -> Result<Self> {
        let n = phi.len();
        let mut inverse = vec![usize::MAX; n];
        for (alpha, &r) in phi.iter().enumerate() {
            if r >= n || inverse[r] != usize::MAX {
                return Err(Error::Structural(format!("{phi:?} is not a permutation")));
            }
            inverse[r] = alpha;
        }
        Ok(PointerMap {
            phi,
            inverse,
            confidence: vec![1.0; n],
            uninformative: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_phi((0..n).collect()).expect("identity is a permutation")
    }

    pub fn n(&self) -> usize {
        self.phi.len()
    }

    /// `φ(α)`: the sector signalled by cell `α`.
    pub fn sector_of_cell(&self, alpha: usize) -> usize {
        self.phi[alpha]
    }

    /// `φ^{-1}(r)`: the cell that signals sector `r`.
    pub fn cell_of_sector(&self, r: usize) -> usize {
        self.inverse[r]
    }

    pub fn phi(&self) -> &[usize] {
        &self.phi
    }

    /// `F_{φ(α),φ(α);α}` for each cell.
    pub fn confidence(&self) -> &[f64] {
        &self.confidence
    }

    pub fn uninformative(&self) -> bool {
        self.uninformative
    }
}

/// Maximum-weight perfect matching; `weight[row][col]`, returns the column of each row.
///
/// Shortest augmenting path form of the Hungarian method on the negated weights.
fn max_weight_assignment(weight: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = weight.len();
    let cost = |i: usize, j: usize| -weight[i][j];
    // 1-based potentials with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[owner[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| weight[i][col_of_row[i]]).sum();
    (col_of_row, total)
}

/// Finds the unique cell-to-sector correspondence supported by the diagonal of `F`.
pub fn find_pointer_map(f: &FTensor) -> Result<PointerMap> {
    let n = f.n();
    // weight[r][α] = F_{r,r;α}
    let weight: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|a| f.get(r, r, a).re).collect()).collect();
    let (cell_of_row, best) = max_weight_assignment(&weight);

    // A second assignment as good as the first exists iff forbidding one of the
    // optimal edges costs less than the tie tolerance.
    const FORBIDDEN: f64 = -1e6;
    for r in 0..n {
        if n == 1 {
            break;
        }
        let mut w = weight.clone();
        w[r][cell_of_row[r]] = FORBIDDEN;
        let (_, alt) = max_weight_assignment(&w);
        if best - alt < TIE_EPSILON {
            return Err(Error::AmbiguousPointer(format!(
                "assignments with total weight {best} and {alt} are indistinguishable"
            )));
        }
    }
    for r in 0..n {
        let assigned = weight[r][cell_of_row[r]];
        for (a, &x) in weight[r].iter().enumerate() {
            if a != cell_of_row[r] && x > assigned - TIE_EPSILON {
                return Err(Error::AmbiguousPointer(format!(
                    "sector {r} has weight {x} in cell {a} against {assigned} in its assigned cell {}",
                    cell_of_row[r]
                )));
            }
        }
    }

    let mut phi = vec![0; n];
    for (r, &a) in cell_of_row.iter().enumerate() {
        phi[a] = r;
    }
    let mut map = PointerMap::from_phi(phi)?;
    map.confidence = (0..n).map(|a| weight[map.phi[a]][a]).collect();
    map.uninformative = map.confidence.iter().any(|&c| c < INFORMATIVE_THRESHOLD);
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ideal_tensor;
    use num_complex::Complex64;

    fn diagonal_tensor(rows: &[&[f64]]) -> FTensor {
        let n = rows.len();
        FTensor::from_fn(n, 0.0, |r, s, a| {
            if r == s {
                Complex64::new(rows[r][a], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    // Oracle: exhaustive search over all permutations.
    fn brute_force(weight: &[Vec<f64>]) -> f64 {
        fn rec(weight: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == weight.len() {
                return 0.0;
            }
            let mut best = f64::NEG_INFINITY;
            for c in 0..weight.len() {
                if !used[c] {
                    used[c] = true;
                    best = best.max(weight[row][c] + rec(weight, row + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        rec(weight, 0, &mut vec![false; weight.len()])
    }

    #[test]
    fn assignment_matches_exhaustive_search() {
        let weights = [
            vec![vec![0.1, 0.7, 0.2], vec![0.5, 0.4, 0.1], vec![0.3, 0.3, 0.4]],
            vec![vec![4.0, 1.0, 3.0, 0.0], vec![2.0, 0.0, 5.0, 1.0], vec![3.0, 2.0, 2.0, 2.0], vec![0.0, 0.5, 1.0, 6.0]],
        ];
        for w in &weights {
            let (cols, total) = max_weight_assignment(w);
            let mut sorted = cols.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..w.len()).collect::<Vec<_>>());
            assert!((total - brute_force(w)).abs() < 1e-12);
        }
    }

    #[test]
    fn ideal_form_recovers_phi() {
        let map = find_pointer_map(&ideal_tensor(&[2, 0, 1], 0.0)).unwrap();
        assert_eq!(map.phi(), &[2, 0, 1]);
        assert_eq!(map.cell_of_sector(0), 1);
        assert_eq!(map.confidence(), &[1.0, 1.0, 1.0]);
        assert!(!map.uninformative());
    }

    #[test]
    fn exact_tie_is_ambiguous() {
        let f = diagonal_tensor(&[&[0.5, 0.5], &[0.0, 1.0]]);
        assert!(matches!(find_pointer_map(&f), Err(Error::AmbiguousPointer(_))));
        let f = diagonal_tensor(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(matches!(find_pointer_map(&f), Err(Error::AmbiguousPointer(_))));
    }

    #[test]
    fn weak_pointer_is_flagged() {
        let f = diagonal_tensor(&[&[0.45, 0.3, 0.25], &[0.1, 0.8, 0.1], &[0.0, 0.1, 0.9]]);
        let map = find_pointer_map(&f).unwrap();
        assert_eq!(map.phi(), &[0, 1, 2]);
        assert!(map.uninformative());
    }

    #[test]
    fn relabeling_cells_relabels_phi() {
        let f = diagonal_tensor(&[&[0.1, 0.8, 0.1], &[0.7, 0.2, 0.1], &[0.05, 0.05, 0.9]]);
        let base = find_pointer_map(&f).unwrap();
        let perm = [2, 0, 1];
        let g = f.permute_cells(&perm);
        let map = find_pointer_map(&g).unwrap();
        for a in 0..3 {
            assert_eq!(map.sector_of_cell(a), base.sector_of_cell(perm[a]));
        }
    }
}
