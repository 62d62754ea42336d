use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use super::{LinearProgram, Relation, Sense};

/// Renders the program in free-format MPS (ROWS / COLUMNS / RHS / BOUNDS),
/// with an `OBJSENSE` section for maximization and integer markers around
/// binary columns. Meant for debugging dumps.
pub fn to_mps(lp: &LinearProgram, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", name);
    if lp.sense == Sense::Maximize {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    let _ = writeln!(out, "ROWS\n N obj");
    for (i, row) in lp.rows.iter().enumerate() {
        let kind = match row.relation {
            Relation::Le => 'L',
            Relation::Eq => 'E',
            Relation::Ge => 'G',
        };
        let _ = writeln!(out, " {} r{}", kind, i);
    }
    // column-wise entries
    let mut cols: alloc::vec::Vec<alloc::vec::Vec<(usize, f64)>> =
        alloc::vec![alloc::vec::Vec::new(); lp.num_vars()];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, c) in &row.coeffs {
            if c != 0.0 {
                cols[j].push((i, c));
            }
        }
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    for j in 0..lp.num_vars() {
        if lp.binary[j] != in_int {
            let tag = if lp.binary[j] { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    M{} 'MARKER' '{}'", j, tag);
            in_int = lp.binary[j];
        }
        if lp.objective[j] != 0.0 {
            let _ = writeln!(out, "    x{} obj {}", j, fmt_num(lp.objective[j]));
        }
        for &(i, c) in &cols[j] {
            let _ = writeln!(out, "    x{} r{} {}", j, i, fmt_num(c));
        }
        if lp.objective[j] == 0.0 && cols[j].is_empty() {
            let _ = writeln!(out, "    x{} obj 0", j);
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{} 'MARKER' 'INTEND'", lp.num_vars());
    }
    let _ = writeln!(out, "RHS");
    for (i, row) in lp.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    rhs r{} {}", i, fmt_num(row.rhs));
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        if lp.binary[j] && lo == 0.0 && hi == 1.0 {
            let _ = writeln!(out, " BV bnd x{}", j);
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " FR bnd x{}", j);
            }
            (true, true) if lo == hi => {
                let _ = writeln!(out, " FX bnd x{} {}", j, fmt_num(lo));
            }
            _ => {
                if !lo.is_finite() {
                    let _ = writeln!(out, " MI bnd x{}", j);
                } else if lo != 0.0 {
                    let _ = writeln!(out, " LO bnd x{} {}", j, fmt_num(lo));
                }
                if hi.is_finite() {
                    let _ = writeln!(out, " UP bnd x{} {}", j, fmt_num(hi));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

fn fmt_num(v: f64) -> String {
    format!("{:?}", v)
}
