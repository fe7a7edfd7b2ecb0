use std::collections::BTreeMap;

use crate::SdpError;

/// One term `v * X[block][i][j]` of a linear functional on the block variable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

/// A linear functional `<A, X> = sum of v * X_ij` over its terms.
///
/// Because X is symmetric, a term on (i, j) and one on (j, i) act on the same
/// variable; the functional is stored as given and symmetrized on conversion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coeff {
    pub terms: Vec<Term>,
}

impl Coeff {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entry(block: usize, i: usize, j: usize, v: f64) -> Self {
        Self {
            terms: vec![Term { block, i, j, v }],
        }
    }

    pub fn with(mut self, block: usize, i: usize, j: usize, v: f64) -> Self {
        self.push(block, i, j, v);
        self
    }

    pub fn push(&mut self, block: usize, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.terms.push(Term { block, i, j, v });
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Merged symmetric entries per block: `(i, j) -> A_ij` for `i <= j`, where
    /// `A_ij` is the off-diagonal matrix entry (half of the combined weight).
    pub(crate) fn upper(&self) -> BTreeMap<(usize, usize, usize), f64> {
        let mut out = BTreeMap::new();
        for t in &self.terms {
            let (a, b) = if t.i <= t.j { (t.i, t.j) } else { (t.j, t.i) };
            let v = if a == b { t.v } else { 0.5 * t.v };
            *out.entry((t.block, a, b)).or_insert(0.0) += v;
        }
        out.retain(|_, v| *v != 0.0);
        out
    }

    pub fn eval(&self, x: &[nalgebra::DMatrix<f64>]) -> f64 {
        self.terms.iter().map(|t| t.v * x[t.block][(t.i, t.j)]).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A semidefinite program over a tuple of real symmetric PSD blocks.
///
/// Box inequalities `lower <= <A, X> <= upper` accept infinite bounds; they are
/// turned into equalities with nonnegative slacks before solving.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    pub equalities: Vec<(Coeff, f64)>,
    pub box_inequalities: Vec<(Coeff, f64, f64)>,
    pub objective: Coeff,
    pub sense: Sense,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>, sense: Sense) -> Self {
        Self {
            block_dims,
            equalities: Vec::new(),
            box_inequalities: Vec::new(),
            objective: Coeff::new(),
            sense,
        }
    }

    pub fn feasibility(block_dims: Vec<usize>) -> Self {
        Self::new(block_dims, Sense::Minimize)
    }

    pub fn add_eq(&mut self, a: Coeff, rhs: f64) {
        self.equalities.push((a, rhs));
    }

    pub fn add_box(&mut self, a: Coeff, lower: f64, upper: f64) {
        self.box_inequalities.push((a, lower, upper));
    }

    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn validate(&self) -> Result<(), SdpError> {
        let check = |c: &Coeff, what: &str| -> Result<(), SdpError> {
            for t in &c.terms {
                let n = *self.block_dims.get(t.block).ok_or_else(|| {
                    SdpError::Malformed(format!("{what}: block {} does not exist", t.block))
                })?;
                if t.i >= n || t.j >= n {
                    return Err(SdpError::Malformed(format!(
                        "{what}: entry ({}, {}) outside block {} of size {n}",
                        t.i, t.j, t.block
                    )));
                }
                if !t.v.is_finite() {
                    return Err(SdpError::Malformed(format!("{what}: non-finite coefficient")));
                }
            }
            Ok(())
        };
        if self.block_dims.is_empty() || self.block_dims.contains(&0) {
            return Err(SdpError::Malformed("empty block structure".into()));
        }
        check(&self.objective, "objective")?;
        for (k, (a, b)) in self.equalities.iter().enumerate() {
            check(a, &format!("equality {k}"))?;
            if !b.is_finite() {
                return Err(SdpError::Malformed(format!("equality {k}: non-finite rhs")));
            }
        }
        for (k, (a, lo, hi)) in self.box_inequalities.iter().enumerate() {
            check(a, &format!("inequality {k}"))?;
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(SdpError::Malformed(format!("inequality {k}: bad bounds")));
            }
        }
        Ok(())
    }

    /// Lower the problem to `min <C, X> s.t. <A_k, X> = b_k, X in K` where K is
    /// the PSD blocks followed by one nonnegative orthant for the slacks.
    pub fn standard_form(&self) -> StandardForm {
        let mut rows = Vec::new();
        let mut b = Vec::new();
        let mut origin = Vec::new();
        for (k, (a, rhs)) in self.equalities.iter().enumerate() {
            rows.push(Row::from_coeff(a, &[]));
            b.push(*rhs);
            origin.push(RowOrigin::Equality(k));
        }
        let mut nlp = 0;
        for (k, (a, lo, hi)) in self.box_inequalities.iter().enumerate() {
            if lo == hi {
                rows.push(Row::from_coeff(a, &[]));
                b.push(*lo);
                origin.push(RowOrigin::Lower(k));
                continue;
            }
            if lo.is_finite() {
                rows.push(Row::from_coeff(a, &[(nlp, -1.0)]));
                b.push(*lo);
                origin.push(RowOrigin::Lower(k));
                nlp += 1;
            }
            if hi.is_finite() {
                rows.push(Row::from_coeff(a, &[(nlp, 1.0)]));
                b.push(*hi);
                origin.push(RowOrigin::Upper(k));
                nlp += 1;
            }
        }
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let c = Row::from_coeff(&self.objective, &[]).scaled(sign);
        StandardForm {
            psd_dims: self.block_dims.clone(),
            nlp,
            rows,
            b,
            c,
            origin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowOrigin {
    Equality(usize),
    Lower(usize),
    Upper(usize),
}

/// A sparse symmetric data matrix with every stored entry listed in both
/// triangles, plus coefficients on the slack orthant.
#[derive(Clone, Debug, Default)]
pub struct Row {
    pub psd: Vec<(usize, usize, usize, f64)>,
    pub lp: Vec<(usize, f64)>,
}

impl Row {
    fn from_coeff(a: &Coeff, lp: &[(usize, f64)]) -> Self {
        let mut psd = Vec::new();
        for ((blk, i, j), v) in a.upper() {
            psd.push((blk, i, j, v));
            if i != j {
                psd.push((blk, j, i, v));
            }
        }
        Row {
            psd,
            lp: lp.to_vec(),
        }
    }

    pub(crate) fn scaled(mut self, s: f64) -> Self {
        for e in &mut self.psd {
            e.3 *= s;
        }
        for e in &mut self.lp {
            e.1 *= s;
        }
        self
    }

    pub fn norm(&self) -> f64 {
        let p: f64 = self.psd.iter().map(|e| e.3 * e.3).sum();
        let l: f64 = self.lp.iter().map(|e| e.1 * e.1).sum();
        (p + l).sqrt()
    }

    pub fn nnz(&self) -> usize {
        self.psd.len() + self.lp.len()
    }
}

#[derive(Clone, Debug)]
pub struct StandardForm {
    pub psd_dims: Vec<usize>,
    pub nlp: usize,
    pub rows: Vec<Row>,
    pub b: Vec<f64>,
    pub c: Row,
    pub origin: Vec<RowOrigin>,
}

impl StandardForm {
    pub fn m(&self) -> usize {
        self.rows.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn off_diagonal_terms_are_split_symmetrically() {
        let c = Coeff::entry(0, 0, 1, 2.0).with(0, 1, 0, 2.0);
        let up = c.upper();
        assert_eq!(up.get(&(0, 0, 1)), Some(&2.0));
        let x = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert_eq!(c.eval(&[x]), 2.0);
    }

    #[test]
    fn box_rows_get_one_slack_per_finite_side() {
        let mut p = SdpProblem::new(vec![2], Sense::Minimize);
        p.add_box(Coeff::entry(0, 0, 1, 1.0), -1.0, 1.0);
        p.add_box(Coeff::entry(0, 0, 0, 1.0), 0.0, f64::INFINITY);
        p.add_box(Coeff::entry(0, 1, 1, 1.0), 0.5, 0.5);
        let s = p.standard_form();
        assert_eq!(s.m(), 4);
        assert_eq!(s.nlp, 3);
        assert_eq!(s.origin[3], RowOrigin::Lower(2));
    }

    #[test]
    fn validation_rejects_out_of_range_entries() {
        let mut p = SdpProblem::new(vec![2], Sense::Minimize);
        p.add_eq(Coeff::entry(0, 2, 0, 1.0), 1.0);
        assert!(p.validate().is_err());
    }
}
