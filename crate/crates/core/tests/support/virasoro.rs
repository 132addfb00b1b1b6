//! Brute-force level degeneracies of irreducible Virasoro modules.
//!
//! Builds the Verma module over a primary of weight h with the PBW basis
//! L_{-n1} … L_{-nk}|h⟩ (n1 ≥ … ≥ nk ≥ 1), computes the Shapovalov (Gram)
//! matrix at each level with exact rationals, and returns its rank. Null
//! vectors drop out of the rank, which is the dimension of the irreducible
//! quotient at that level.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

type Monomial = Vec<u32>;
type State = BTreeMap<Monomial, BigRational>;

pub struct Verma {
    c: BigRational,
    h: BigRational,
    memo: HashMap<(i64, Monomial), State>,
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn add_into(acc: &mut State, coef: &BigRational, s: &State) {
    for (mono, v) in s {
        let e = acc.entry(mono.clone()).or_insert_with(BigRational::zero);
        *e += coef * v;
    }
    acc.retain(|_, v| !v.is_zero());
}

impl Verma {
    /// Minimal model M(p+1, p), primary (r, s).
    pub fn minimal(p: i64, r: i64, s: i64) -> Self {
        let c = BigRational::one() - rat(6, p * (p + 1));
        let d = r * (p + 1) - s * p;
        let h = rat(d * d - 1, 4 * p * (p + 1));
        Self { c, h, memo: HashMap::new() }
    }

    /// L_m applied to one PBW monomial, re-expanded in the PBW basis.
    fn apply(&mut self, m: i64, mono: &[u32]) -> State {
        let key = (m, mono.to_vec());
        if let Some(s) = self.memo.get(&key) {
            return s.clone();
        }
        let level: i64 = mono.iter().map(|&n| n as i64).sum();
        let mut out = State::new();
        if m == 0 {
            out.insert(mono.to_vec(), &self.h + BigRational::from_integer(level.into()));
        } else if mono.is_empty() {
            if m < 0 {
                out.insert(vec![(-m) as u32], BigRational::one());
            }
        } else if m < 0 && -m >= mono[0] as i64 {
            let mut v = vec![(-m) as u32];
            v.extend_from_slice(mono);
            out.insert(v, BigRational::one());
        } else {
            let n1 = mono[0] as i64;
            let rest = &mono[1..];
            // L_m L_{-n1} rest = L_{-n1} L_m rest + (m + n1) L_{m-n1} rest + central term
            let inner = self.apply(m, rest);
            for (mono2, coef) in &inner {
                let moved = self.apply(-n1, mono2);
                add_into(&mut out, coef, &moved);
            }
            if m + n1 != 0 {
                let comm = self.apply(m - n1, rest);
                add_into(&mut out, &BigRational::from_integer((m + n1).into()), &comm);
            }
            if m == n1 {
                let central = &self.c * rat(m * m * m - m, 12);
                let mut single = State::new();
                single.insert(rest.to_vec(), BigRational::one());
                add_into(&mut out, &central, &single);
            }
        }
        self.memo.insert(key, out.clone());
        out
    }

    fn inner(&mut self, bra: &[u32], ket: &[u32]) -> BigRational {
        let mut state = State::new();
        state.insert(ket.to_vec(), BigRational::one());
        // ⟨h| L_{λk} … L_{λ1} applied right to left
        for &n in bra {
            let mut next = State::new();
            for (mono, coef) in &state {
                let s = self.apply(n as i64, mono);
                add_into(&mut next, coef, &s);
            }
            state = next;
        }
        state.get(&Vec::new()).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Dimension of the irreducible quotient at `level`.
    pub fn level_dimension(&mut self, level: u32) -> usize {
        let basis = partitions(level);
        let n = basis.len();
        let mut gram = vec![vec![BigRational::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.inner(&basis[i], &basis[j]);
                gram[i][j] = v.clone();
                gram[j][i] = v;
            }
        }
        rank(gram)
    }
}

/// Partitions of n as descending part lists.
pub fn partitions(n: u32) -> Vec<Vec<u32>> {
    fn go(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=max.min(n)).rev() {
            prefix.push(part);
            go(n - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

fn rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, pivot);
        let pv = m[r][c].clone();
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] / &pv;
                for k in c..cols {
                    let t = &f * &m[r][k];
                    m[i][k] -= t;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}
