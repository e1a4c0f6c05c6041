use std::fmt::Write;

use super::program::{AffineForm, ConicProgram};

fn form(out: &mut String, f: &AffineForm) {
    let f = f.compact();
    let _ = write!(out, "{:.16e}", f.constant);
    for (v, a) in f.terms {
        let _ = write!(out, " {v}:{a:.16e}");
    }
    out.push('\n');
}

/// Plain-text listing of a program. Numbers carry 17 significant digits so
/// the data can be re-solved with an external solver.
pub fn dump_program(p: &ConicProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "variables {}", p.var_count);
    out.push_str("minimize");
    for (i, c) in p.objective.iter().enumerate() {
        if *c != 0.0 {
            let _ = write!(out, " {i}:{c:.16e}");
        }
    }
    out.push('\n');
    let _ = writeln!(out, "nonneg {}", p.nonneg.len());
    for f in &p.nonneg {
        form(&mut out, f);
    }
    let _ = writeln!(out, "eq {}", p.eq.len());
    for f in &p.eq {
        form(&mut out, f);
    }
    let _ = writeln!(out, "soc {}", p.soc.len());
    for s in &p.soc {
        let _ = writeln!(out, "cone {}", s.tail.len() + 1);
        form(&mut out, &s.head);
        for t in &s.tail {
            form(&mut out, t);
        }
    }
    let _ = writeln!(out, "psd {}", p.psd.len());
    for b in &p.psd {
        let _ = writeln!(out, "block {} {}", b.dim, b.terms.len());
        for c in 0..b.dim {
            for r in c..b.dim {
                let v = b.constant[(r, c)];
                if v != 0.0 {
                    let _ = writeln!(out, "c {r} {c} {v:.16e}");
                }
            }
        }
        for &(v, r, c, a) in &b.terms {
            let _ = writeln!(out, "t {v} {r} {c} {a:.16e}");
        }
    }
    out
}
