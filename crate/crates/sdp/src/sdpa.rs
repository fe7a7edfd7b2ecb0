use std::fmt::Write;

use crate::problem::SdpProblem;

/// Render the standard form in SDPA sparse format.
///
/// SDPA maximizes `<F0, Y>` subject to `<F_k, Y> = c_k`, so the constraint
/// matrices are written as `F_k = A_k`, the right-hand sides as `c`, and the
/// objective as `F0 = -C` of the minimization form. The slack orthant becomes a
/// diagonal block with negative size.
pub fn to_sdpa(p: &SdpProblem) -> String {
    let sf = p.standard_form();
    let mut out = String::new();
    let nblocks = sf.psd_dims.len() + usize::from(sf.nlp > 0);
    let _ = writeln!(out, "\"exported by kscert\"");
    let _ = writeln!(out, "{}", sf.m());
    let _ = writeln!(out, "{nblocks}");
    let mut sizes: Vec<String> = sf.psd_dims.iter().map(|d| d.to_string()).collect();
    if sf.nlp > 0 {
        sizes.push(format!("-{}", sf.nlp));
    }
    let _ = writeln!(out, "{}", sizes.join(" "));
    let b: Vec<String> = sf.b.iter().map(|v| format!("{v:.17e}")).collect();
    let _ = writeln!(out, "{}", b.join(" "));
    let lp_block = sf.psd_dims.len() + 1;
    let mut emit = |mat: usize, row: &crate::problem::Row, sign: f64| {
        for &(blk, i, j, v) in &row.psd {
            if i <= j {
                let _ = writeln!(out, "{mat} {} {} {} {:.17e}", blk + 1, i + 1, j + 1, sign * v);
            }
        }
        for &(i, v) in &row.lp {
            let _ = writeln!(out, "{mat} {lp_block} {} {} {:.17e}", i + 1, i + 1, sign * v);
        }
    };
    emit(0, &sf.c, -1.0);
    for (k, r) in sf.rows.iter().enumerate() {
        emit(k + 1, r, 1.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Coeff, Sense};

    #[test]
    fn header_and_entries() {
        let mut p = SdpProblem::new(vec![2], Sense::Maximize);
        p.objective = Coeff::entry(0, 0, 1, 2.0);
        p.add_eq(Coeff::entry(0, 0, 0, 1.0), 1.0);
        p.add_box(Coeff::entry(0, 1, 1, 1.0), 0.0, 3.0);
        let s = to_sdpa(&p);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "3");
        assert_eq!(lines[2], "2");
        assert_eq!(lines[3], "2 -2");
        // maximize 2 X01 -> minimize -2 X01 -> F0 = +1 at (1,2)
        assert!(lines.iter().any(|l| l.starts_with("0 1 1 2 1.0")));
        assert!(lines.iter().any(|l| l.starts_with("2 2 1 1 -1.0")));
    }
}
