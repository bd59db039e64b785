//! Canonical text form. Desugared shapes for `|`, `->` and `<->` are printed
//! back in sugared form; parsing the output yields the same tree.

use super::{Affine, Family, Formula};
use num_traits::{One, Signed, Zero};

pub fn print(f: &Formula) -> String {
    let mut out = String::new();
    write(f, &mut out);
    out
}

pub(crate) fn affine(a: &Affine) -> String {
    if a.terms.is_empty() {
        return a.constant.to_string();
    }
    let mut out = String::new();
    if !a.constant.is_zero() {
        out.push_str(&a.constant.to_string());
    }
    for (v, c) in &a.terms {
        let neg = c.is_negative();
        let mag = c.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if !mag.is_one() {
            out.push_str(&mag.to_string());
            out.push('*');
        }
        out.push_str(v);
    }
    out
}

enum Shape<'a> {
    Or(Vec<&'a Formula>),
    Imp(&'a Formula, &'a Formula),
    Iff(&'a Formula, &'a Formula),
    Conj(&'a [Formula]),
    Other,
}

fn shape(f: &Formula) -> Shape<'_> {
    match f {
        Formula::Neg(inner) => match inner.as_ref() {
            Formula::And(fs) if fs.len() >= 2 => {
                let unneg: Vec<&Formula> = fs
                    .iter()
                    .filter_map(|g| if let Formula::Neg(b) = g { Some(b.as_ref()) } else { None })
                    .collect();
                if unneg.len() == fs.len() {
                    Shape::Or(unneg)
                } else if fs.len() == 2 && unneg.len() == 1 && matches!(fs[1], Formula::Neg(_)) {
                    Shape::Imp(&fs[0], unneg[0])
                } else {
                    Shape::Other
                }
            }
            _ => Shape::Other,
        },
        Formula::And(fs) => {
            if fs.len() == 2 {
                if let (Some((a, b)), Some((c, d))) = (fs[0].as_implication(), fs[1].as_implication()) {
                    if a == d && b == c {
                        return Shape::Iff(a, b);
                    }
                }
            }
            Shape::Conj(fs)
        }
        _ => Shape::Other,
    }
}

fn is_binary(f: &Formula) -> bool {
    !matches!(shape(f), Shape::Other)
}

fn operand(f: &Formula, out: &mut String) {
    if is_binary(f) {
        out.push('(');
        write(f, out);
        out.push(')');
    } else {
        write(f, out);
    }
}

fn join(fs: &[&Formula], sep: &str, out: &mut String) {
    for (i, g) in fs.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        operand(g, out);
    }
}

fn list(fs: &[Formula], out: &mut String) {
    for (i, g) in fs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write(g, out);
    }
}

fn write(f: &Formula, out: &mut String) {
    match shape(f) {
        Shape::Or(gs) => return join(&gs, " | ", out),
        Shape::Imp(a, b) => return join(&[a, b], " -> ", out),
        Shape::Iff(a, b) => return join(&[a, b], " <-> ", out),
        Shape::Conj(fs) => {
            let refs: Vec<&Formula> = fs.iter().collect();
            return join(&refs, " & ", out);
        }
        Shape::Other => {}
    }
    match f {
        Formula::Atom(p) => out.push_str(p),
        Formula::Neg(b) => {
            if matches!(b.as_ref(), Formula::BigAnd(Family::Finite(fs)) if fs.is_empty()) {
                out.push_str("false");
                return;
            }
            out.push('!');
            operand(b, out);
        }
        Formula::And(_) => unreachable!(),
        Formula::BigAnd(fam) => family("And", fam, out),
        Formula::BigOr(fam) => family("Or", fam, out),
        Formula::L(t, b) => prefix(&format!("L[{}]", affine(t)), b, out),
        Formula::Next(b) => prefix("O", b, out),
        Formula::InitL(t, b) => prefix(&format!("I[{}]", affine(t)), b, out),
        Formula::NStepL(n, t, b) => prefix(&format!("LN[{}, {}]", n, affine(t)), b, out),
        Formula::LimL(t, b) => braced(&format!("LimL[{}]", affine(t)), b, out),
        Formula::LimM(t, b) => braced(&format!("LimM[{}]", affine(t)), b, out),
        Formula::Iter(b) => {
            out.push_str("Iter(");
            write(b, out);
            out.push(')');
        }
    }
}

fn prefix(head: &str, body: &Formula, out: &mut String) {
    out.push_str(head);
    out.push(' ');
    operand(body, out);
}

fn braced(head: &str, body: &Formula, out: &mut String) {
    out.push_str(head);
    out.push_str("{ ");
    write(body, out);
    out.push_str(" }");
}

fn family(kind: &str, fam: &Family, out: &mut String) {
    match fam {
        Family::Finite(fs) => {
            if fs.is_empty() && kind == "And" {
                out.push_str("true");
                return;
            }
            out.push_str(kind);
            out.push('(');
            list(fs, out);
            out.push(')');
        }
        Family::Nat { prefix, tail } => {
            out.push_str(kind);
            out.push_str("Tail(");
            list(prefix, out);
            out.push_str(if prefix.is_empty() { "; " } else { " ; " });
            write(tail, out);
            out.push(')');
        }
        Family::Threshold { var, template, bound, strict } => {
            out.push_str(kind);
            out.push_str(&format!("Below[{} {} {}]", var, if *strict { "<" } else { "<=" }, affine(bound)));
            out.push_str("{ ");
            write(template, out);
            out.push_str(" }");
        }
        Family::WeightedSum { var, parts, bound } => {
            out.push_str(kind);
            out.push_str(&format!("Sum[{} >= {}]{{ ", var, affine(bound)));
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push_str(" ; ");
                }
                out.push_str(&p.weight.to_string());
                out.push_str(" {");
                let grid: Vec<String> = p.grid.iter().map(|g| g.to_string()).collect();
                out.push_str(&grid.join(", "));
                out.push_str("}: ");
                write(&p.template, out);
            }
            out.push_str(" }");
        }
    }
}
