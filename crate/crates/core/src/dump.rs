//! JSON-friendly encodings of complex data: every amplitude becomes a `[re, im]` pair.

use crate::qit::{CMatrix, CVector, PureState, C64};

pub type Pair = [f64; 2];

pub fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

pub fn unpair(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn vector_pairs(v: &CVector) -> Vec<Pair> {
    v.iter().map(|&z| pair(z)).collect()
}

/// Row-major nested pairs.
pub fn matrix_pairs(m: &CMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| pair(m[(r, c)])).collect())
        .collect()
}

pub fn states_pairs(states: &[PureState]) -> Vec<Vec<Pair>> {
    states.iter().map(|s| vector_pairs(s.vector())).collect()
}

pub fn vector_from_pairs(p: &[Pair]) -> CVector {
    CVector::from_iterator(p.len(), p.iter().map(|&x| unpair(x)))
}

pub fn matrix_from_pairs(rows: &[Vec<Pair>]) -> CMatrix {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(nr, nc, |r, c| unpair(rows[r][c]))
}

/// `serde(with = ...)` adapter for matrices.
pub mod matrix {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        matrix_pairs(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<Pair>>::deserialize(d)?;
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(matrix_from_pairs(&rows))
    }
}
