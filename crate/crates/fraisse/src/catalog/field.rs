//! Arithmetic of the small fields GF(2), GF(3), GF(4). Scalars are 0..q-1;
//! for GF(4) the encoding is 0, 1, ω = 2, ω+1 = 3 with ω² = ω + 1.

pub fn supported(q: u8) -> bool {
    matches!(q, 2 | 3 | 4)
}

pub fn add(q: u8, x: u8, y: u8) -> u8 {
    match q {
        2 | 3 => (x + y) % q,
        4 => x ^ y,
        _ => panic!("unsupported field GF({q})"),
    }
}

pub fn mul(q: u8, x: u8, y: u8) -> u8 {
    match q {
        2 | 3 => (x * y) % q,
        4 => {
            // Polynomial multiplication mod x² + x + 1 over GF(2).
            let mut acc = 0u8;
            let mut a = x;
            let mut b = y;
            while b != 0 {
                if b & 1 != 0 {
                    acc ^= a;
                }
                b >>= 1;
                a <<= 1;
                if a & 0b100 != 0 {
                    a ^= 0b111;
                }
            }
            acc
        }
        _ => panic!("unsupported field GF({q})"),
    }
}

/// Componentwise vector addition.
pub fn vec_add(q: u8, x: &[u8], y: &[u8]) -> Vec<u8> {
    x.iter().zip(y).map(|(&a, &b)| add(q, a, b)).collect()
}

/// Scalar multiple of a vector.
pub fn vec_scale(q: u8, c: u8, x: &[u8]) -> Vec<u8> {
    x.iter().map(|&a| mul(q, c, a)).collect()
}

/// All vectors of GF(q)^d in lexicographic order.
pub fn all_vectors(q: u8, d: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u8>| {
                (0..q).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

pub fn inv(q: u8, x: u8) -> u8 {
    (1..q).find(|&y| mul(q, x, y) == 1).expect("nonzero scalar")
}

pub fn neg(q: u8, x: u8) -> u8 {
    (0..q).find(|&y| add(q, x, y) == 0).expect("additive inverse")
}

/// Coefficients expressing `v` as a combination of `basis`, if any.
pub fn express(q: u8, basis: &[Vec<u8>], v: &[u8]) -> Option<Vec<u8>> {
    // Solve basisᵀ·x = v by elimination on the augmented matrix.
    let d = v.len();
    let n = basis.len();
    let mut m: Vec<Vec<u8>> = (0..d)
        .map(|row| {
            let mut r: Vec<u8> = basis.iter().map(|b| b[row]).collect();
            r.push(v[row]);
            r
        })
        .collect();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut next_row = 0;
    for col in 0..n {
        if let Some(p) = (next_row..d).find(|&r| m[r][col] != 0) {
            m.swap(next_row, p);
            let scale = inv(q, m[next_row][col]);
            for x in m[next_row].iter_mut() {
                *x = mul(q, scale, *x);
            }
            for r in 0..d {
                if r != next_row && m[r][col] != 0 {
                    let f = m[r][col];
                    for c in 0..=n {
                        let s = mul(q, f, m[next_row][c]);
                        m[r][c] = add(q, m[r][c], neg(q, s));
                    }
                }
            }
            pivot_of_col[col] = Some(next_row);
            next_row += 1;
        }
    }
    // Inconsistent if a zero row has nonzero augment.
    for r in next_row..d {
        if m[r][n] != 0 {
            return None;
        }
    }
    let mut x = vec![0u8; n];
    for col in 0..n {
        if let Some(r) = pivot_of_col[col] {
            x[col] = m[r][n];
        }
    }
    // Free columns (dependent basis input) default to 0; verify.
    let mut check = vec![0u8; d];
    for (i, b) in basis.iter().enumerate() {
        check = vec_add(q, &check, &vec_scale(q, x[i], b));
    }
    if check == v { Some(x) } else { None }
}

/// Incremental row-echelon basis for independence testing.
pub struct Echelon {
    q: u8,
    rows: Vec<Vec<u8>>,
}

impl Echelon {
    pub fn new(q: u8) -> Echelon {
        Echelon { q, rows: vec![] }
    }

    /// Adds `v` if independent of the rows so far; returns whether it was.
    pub fn insert(&mut self, v: &[u8]) -> bool {
        let q = self.q;
        let mut v = v.to_vec();
        for row in &self.rows {
            let pivot = row.iter().position(|&x| x != 0).expect("reduced row");
            if v[pivot] != 0 {
                let f = v[pivot];
                for i in 0..v.len() {
                    v[i] = add(q, v[i], neg(q, mul(q, f, row[i])));
                }
            }
        }
        if v.iter().all(|&x| x == 0) {
            return false;
        }
        let pivot = v.iter().position(|&x| x != 0).expect("nonzero");
        let scale = inv(q, v[pivot]);
        for x in v.iter_mut() {
            *x = mul(q, scale, *x);
        }
        self.rows.push(v);
        self.rows.sort_by_key(|r| r.iter().position(|&x| x != 0));
        true
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_axioms_by_table() {
        for q in [2u8, 3, 4] {
            for x in 0..q {
                assert_eq!(add(q, x, 0), x);
                assert_eq!(mul(q, x, 1), x);
                assert_eq!(mul(q, x, 0), 0);
                // Additive inverse exists.
                assert!((0..q).any(|y| add(q, x, y) == 0));
                // Multiplicative inverse for nonzero.
                if x != 0 {
                    assert!((1..q).any(|y| mul(q, x, y) == 1));
                }
                for y in 0..q {
                    assert_eq!(add(q, x, y), add(q, y, x));
                    assert_eq!(mul(q, x, y), mul(q, y, x));
                    for z in 0..q {
                        assert_eq!(add(q, add(q, x, y), z), add(q, x, add(q, y, z)));
                        assert_eq!(mul(q, mul(q, x, y), z), mul(q, x, mul(q, y, z)));
                        assert_eq!(mul(q, x, add(q, y, z)), add(q, mul(q, x, y), mul(q, x, z)));
                    }
                }
            }
        }
    }

    #[test]
    fn gf4_generator() {
        // ω² = ω + 1 and ω³ = 1.
        assert_eq!(mul(4, 2, 2), 3);
        assert_eq!(mul(4, 2, 3), 1);
    }
}
