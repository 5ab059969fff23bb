//! Human-readable LP-style dump of a [`ConvexProblem`].
//!
//! The grammar follows the CPLEX LP layout closely enough that external
//! tools can read most dumps:
//!
//! ```text
//! Minimize | Maximize
//!  obj: <terms> [ + [ <q> <var> ^2 ... ] / 2 ] [ + <constant> ]
//! Subject To
//!  <row name>: <terms> <= | >= | = <rhs>
//!  <row name>: <terms> + [ <q> <var> ^2 ... ] / 2 <= <rhs>
//! Bounds
//!  <lo> <= <var> <= <hi>      (-inf / +inf for missing sides)
//! End
//! ```
//!
//! `<terms>` is a sequence of `+ <coef> <var>` / `- <coef> <var>`. Row names
//! encode the row tag (`margin_3`, `valid_3`, `ubcut`, `pair_2`, ...) plus the
//! row position.

use std::fmt::Write as _;
use std::path::Path;

use super::{ConvexProblem, Relation, RowTag, Sense};
use crate::error::{Error, Result};

fn terms(out: &mut String, coeffs: &[f64], names: &[String]) {
    let mut first = true;
    for (a, name) in coeffs.iter().zip(names) {
        if *a == 0.0 {
            continue;
        }
        let sign = if *a < 0.0 { "-" } else if first { "" } else { "+" };
        if !first || *a < 0.0 {
            let _ = write!(out, " {sign}");
        }
        let _ = write!(out, " {:?} {}", a.abs(), name);
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

fn quad(out: &mut String, diag: &[f64], names: &[String]) {
    if diag.iter().all(|&q| q == 0.0) {
        return;
    }
    out.push_str(" + [");
    let mut first = true;
    for (q, name) in diag.iter().zip(names) {
        if *q == 0.0 {
            continue;
        }
        if !first {
            out.push_str(" +");
        }
        let _ = write!(out, " {:?} {} ^2", q, name);
        first = false;
    }
    out.push_str(" ] / 2");
}

fn row_name(tag: RowTag, r: usize) -> String {
    match tag {
        RowTag::Margin(i) => format!("margin_{}_r{r}", i + 1),
        RowTag::ValidIneq(i) => format!("valid_{}_r{r}", i + 1),
        RowTag::UpperBoundCut => format!("ubcut_r{r}"),
        RowTag::PairBound(k) => format!("pair_{}_r{r}", k + 1),
        RowTag::AbsLower(k) => format!("absl_{}_r{r}", k + 1),
        RowTag::AbsUpper(k) => format!("absu_{}_r{r}", k + 1),
        RowTag::Other => format!("r{r}"),
    }
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

/// Render `p` in the LP-style text format.
pub fn dump_lp(p: &ConvexProblem) -> String {
    let names = &p.variable_names;
    let mut out = String::new();
    out.push_str(match p.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    terms(&mut out, &p.linear_cost, names);
    quad(&mut out, &p.quadratic_diag, names);
    if p.objective_constant != 0.0 {
        let _ = write!(out, " + {:?}", p.objective_constant);
    }
    out.push_str("\nSubject To\n");
    for (r, c) in p.constraints.iter().enumerate() {
        let _ = write!(out, " {}:", row_name(c.tag, r));
        terms(&mut out, &c.coeffs, names);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {:?}", c.rhs);
    }
    for (r, q) in p.quadratic_constraints.iter().enumerate() {
        let _ = write!(out, " q{}_{}:", r, row_name(q.tag, r));
        terms(&mut out, &q.coeffs, names);
        quad(&mut out, &q.quad_diag, names);
        let _ = writeln!(out, " <= {:?}", q.rhs);
    }
    out.push_str("Bounds\n");
    for (j, name) in names.iter().enumerate() {
        let _ = writeln!(out, " {} <= {} <= {}", bound(p.lower[j]), name, bound(p.upper[j]));
    }
    out.push_str("End\n");
    out
}

/// Write [`dump_lp`] output to `path`.
pub fn write_lp(p: &ConvexProblem, path: &Path) -> Result<()> {
    std::fs::write(path, dump_lp(p)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_shape() {
        let mut p = ConvexProblem::new(Sense::Minimize, 2);
        p.variable_names = vec!["w_1".into(), "b".into()];
        p.quadratic_diag[0] = 1.0;
        p.linear_cost[1] = -2.0;
        p.lower[0] = 0.0;
        p.add_row(vec![1.0, -1.0], Relation::Ge, 1.0, RowTag::Margin(0));
        let text = dump_lp(&p);
        assert!(text.starts_with("Minimize\n obj: - 2.0 b + [ 1.0 w_1 ^2 ] / 2\n"), "{text}");
        assert!(text.contains(" margin_1_r0: 1.0 w_1 - 1.0 b >= 1.0\n"), "{text}");
        assert!(text.contains(" 0.0 <= w_1 <= +inf\n"));
        assert!(text.contains(" -inf <= b <= +inf\n"));
        assert!(text.ends_with("End\n"));
    }
}
