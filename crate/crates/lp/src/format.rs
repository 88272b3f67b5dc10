//! CPLEX LP text format.
//!
//! The writer emits every variable in the `Bounds` section in index order, and
//! the parser uses that order when present, so `parse_lp(to_lp_string(p)) == p`.

use crate::{Cmp, LpError, Problem, Sense};
use std::collections::HashMap;
use std::fmt::Write;

/// Shortest round-trip representation; exponent form only for extreme magnitudes.
fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (String, f64)>) {
    let mut first = true;
    for (name, c) in terms {
        if c < 0.0 {
            out.push_str(" -");
        } else if !first {
            out.push_str(" +");
        }
        let mag = c.abs();
        if mag == 1.0 {
            let _ = write!(out, " {name}");
        } else {
            let _ = write!(out, " {} {name}", num(mag));
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

pub fn to_lp_string(p: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\Problem name: {}", p.name);
    out.push_str(match p.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    write_terms(
        &mut out,
        p.objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (p.variables[j].name.clone(), *c)),
    );
    out.push_str("\nSubject To\n");
    for c in &p.constraints {
        let _ = write!(out, " {}:", c.name);
        write_terms(
            &mut out,
            c.terms
                .iter()
                .map(|&(j, a)| (p.variables[j].name.clone(), a)),
        );
        let op = match c.cmp {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &p.variables {
        let (lo, hi) = (v.lower, v.upper);
        if lo == hi {
            let _ = writeln!(out, " {} = {}", v.name, num(lo));
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", num(lo), v.name, num(hi));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Colon,
    Cmp(Cmp),
}

fn parse_number(s: &str) -> Option<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Some(f64::INFINITY),
        _ => s.parse().ok(),
    }
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<Tok>, LpError> {
    let err = |msg: String| LpError::Parse { line: line_no, msg };
    let bytes = line.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            ':' => {
                toks.push(Tok::Colon);
                i += 1;
            }
            '<' | '>' | '=' => {
                let two = line.get(i..i + 2).unwrap_or("");
                let (cmp, len) = match two {
                    "<=" | "=<" => (Cmp::Le, 2),
                    ">=" | "=>" => (Cmp::Ge, 2),
                    _ => match c {
                        '<' => (Cmp::Le, 1),
                        '>' => (Cmp::Ge, 1),
                        _ => (Cmp::Eq, 1),
                    },
                };
                toks.push(Tok::Cmp(cmp));
                i += len;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                i += 1;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    let exp_sign = (d == '+' || d == '-')
                        && matches!(bytes[i - 1] as char, 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text = &line[start..i];
                let v = text
                    .parse()
                    .map_err(|_| err(format!("bad number {text:?}")))?;
                toks.push(Tok::Num(v));
            }
            _ => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_whitespace() || matches!(d, '+' | '-' | ':' | '<' | '>' | '=') {
                        break;
                    }
                    i += 1;
                }
                let word = &line[start..i];
                match parse_number(word) {
                    Some(v) if v.is_infinite() => toks.push(Tok::Num(v)),
                    _ => toks.push(Tok::Ident(word.to_string())),
                }
            }
        }
    }
    Ok(toks)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Objective,
    Constraints,
    Bounds,
    End,
}

struct Builder {
    problem: Problem,
    index: HashMap<String, usize>,
    bound_order: Vec<usize>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.problem.add_variable(name, 0.0, f64::INFINITY);
        self.index.insert(name.to_string(), j);
        j
    }
}

/// Parses `sign? num? ident` terms until a comparison or the end of the tokens.
fn parse_terms(
    b: &mut Builder,
    toks: &[Tok],
    line: usize,
) -> Result<(Vec<(usize, f64)>, usize), LpError> {
    let mut terms = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if matches!(toks[i], Tok::Cmp(_)) {
            break;
        }
        let mut sign = 1.0;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(i) {
            if *t == Tok::Minus {
                sign = -sign;
            }
            i += 1;
        }
        let mut coef = 1.0;
        if let Some(Tok::Num(v)) = toks.get(i) {
            coef = *v;
            i += 1;
        }
        match toks.get(i) {
            Some(Tok::Ident(name)) => {
                let j = b.var(name);
                terms.push((j, sign * coef));
                i += 1;
            }
            // a bare constant such as the placeholder in an empty row
            Some(Tok::Cmp(_)) | None if coef == 0.0 => {}
            other => {
                return Err(LpError::Parse {
                    line,
                    msg: format!("expected a variable, found {other:?}"),
                })
            }
        }
    }
    Ok((terms, i))
}

fn strip_label(toks: &[Tok]) -> (Option<String>, &[Tok]) {
    if let [Tok::Ident(name), Tok::Colon, rest @ ..] = toks {
        (Some(name.clone()), rest)
    } else {
        (None, toks)
    }
}

fn signed_number(toks: &[Tok], line: usize) -> Result<f64, LpError> {
    match toks {
        [Tok::Num(v)] => Ok(*v),
        [Tok::Plus, Tok::Num(v)] => Ok(*v),
        [Tok::Minus, Tok::Num(v)] => Ok(-*v),
        _ => Err(LpError::Parse {
            line,
            msg: format!("expected a number, found {toks:?}"),
        }),
    }
}

fn parse_bound(b: &mut Builder, toks: &[Tok], line: usize) -> Result<(), LpError> {
    let err = |msg: &str| LpError::Parse {
        line,
        msg: msg.to_string(),
    };
    let ident_pos = toks
        .iter()
        .position(|t| matches!(t, Tok::Ident(_)))
        .ok_or_else(|| err("bound without a variable"))?;
    let Tok::Ident(name) = &toks[ident_pos] else {
        unreachable!()
    };
    if toks.len() == 2 && ident_pos == 0 {
        if let Tok::Ident(kw) = &toks[1] {
            if kw.eq_ignore_ascii_case("free") {
                let j = b.var(name);
                b.problem.variables[j].lower = f64::NEG_INFINITY;
                b.problem.variables[j].upper = f64::INFINITY;
                b.bound_order.push(j);
                return Ok(());
            }
        }
    }
    let j = b.var(name);
    b.bound_order.push(j);
    let left = &toks[..ident_pos];
    let right = &toks[ident_pos + 1..];
    if let [lhs @ .., Tok::Cmp(c)] = left {
        let v = signed_number(lhs, line)?;
        match c {
            Cmp::Le => b.problem.variables[j].lower = v,
            Cmp::Ge => b.problem.variables[j].upper = v,
            Cmp::Eq => {
                b.problem.variables[j].lower = v;
                b.problem.variables[j].upper = v;
            }
        }
    } else if !left.is_empty() {
        return Err(err("malformed left side of bound"));
    }
    if let [Tok::Cmp(c), rhs @ ..] = right {
        let v = signed_number(rhs, line)?;
        match c {
            Cmp::Le => b.problem.variables[j].upper = v,
            Cmp::Ge => b.problem.variables[j].lower = v,
            Cmp::Eq => {
                b.problem.variables[j].lower = v;
                b.problem.variables[j].upper = v;
            }
        }
    } else if !right.is_empty() {
        return Err(err("malformed right side of bound"));
    }
    Ok(())
}

pub fn parse_lp(text: &str) -> Result<Problem, LpError> {
    let mut b = Builder {
        problem: Problem::new("", Sense::Minimize),
        index: HashMap::new(),
        bound_order: Vec::new(),
    };
    let mut section = Section::Start;
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0;
    let mut objective: Vec<(usize, f64)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        if let Some(name) = raw.trim().strip_prefix("\\Problem name:") {
            b.problem.name = name.trim().to_string();
            continue;
        }
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let keyword = match lower.as_str() {
            "maximize" | "maximise" | "maximum" | "max" => {
                b.problem.sense = Sense::Maximize;
                Some(Section::Objective)
            }
            "minimize" | "minimise" | "minimum" | "min" => {
                b.problem.sense = Sense::Minimize;
                Some(Section::Objective)
            }
            "subject to" | "such that" | "st" | "s.t." | "st." => Some(Section::Constraints),
            "bounds" | "bound" => Some(Section::Bounds),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(next) = keyword {
            if section == Section::Objective {
                let (_, body) = strip_label(&pending);
                let (terms, used) = parse_terms(&mut b, body, pending_line)?;
                if used != body.len() {
                    return Err(LpError::Parse {
                        line: pending_line,
                        msg: "comparison in objective".into(),
                    });
                }
                objective = terms;
                pending.clear();
            } else if !pending.is_empty() {
                return Err(LpError::Parse {
                    line: pending_line,
                    msg: "unterminated constraint".into(),
                });
            }
            section = next;
            continue;
        }
        let toks = tokenize(line, line_no)?;
        match section {
            Section::Start | Section::End => {
                return Err(LpError::Parse {
                    line: line_no,
                    msg: "content outside of a section".into(),
                })
            }
            Section::Objective => {
                if pending.is_empty() {
                    pending_line = line_no;
                }
                pending.extend(toks);
            }
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line_no;
                }
                pending.extend(toks);
                // a row is complete once a comparison is followed by a number
                let Some(cpos) = pending.iter().position(|t| matches!(t, Tok::Cmp(_))) else {
                    continue;
                };
                if !pending[cpos + 1..].iter().any(|t| matches!(t, Tok::Num(_))) {
                    continue;
                }
                let row = std::mem::take(&mut pending);
                let (label, body) = strip_label(&row);
                let (terms, used) = parse_terms(&mut b, body, pending_line)?;
                let Tok::Cmp(cmp) = body[used] else {
                    unreachable!()
                };
                let rhs = signed_number(&body[used + 1..], pending_line)?;
                let name = label.unwrap_or_else(|| format!("R{}", b.problem.constraints.len() + 1));
                b.problem.add_constraint(name, terms, cmp, rhs);
            }
            Section::Bounds => parse_bound(&mut b, &toks, line_no)?,
        }
    }
    if section != Section::End {
        return Err(LpError::Parse {
            line: text.lines().count(),
            msg: "missing End".into(),
        });
    }
    for (j, c) in objective {
        b.problem.objective[j] += c;
    }
    Ok(reorder_by_bounds(b))
}

/// Puts variables in the order of their first bound line, the rest after.
fn reorder_by_bounds(b: Builder) -> Problem {
    let Builder {
        problem: p,
        bound_order,
        ..
    } = b;
    let n = p.variables.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for j in bound_order.into_iter().chain(0..n) {
        if !seen[j] {
            seen[j] = true;
            order.push(j);
        }
    }
    let mut new_index = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    Problem {
        name: p.name,
        sense: p.sense,
        objective: order.iter().map(|&j| p.objective[j]).collect(),
        variables: order.iter().map(|&j| p.variables[j].clone()).collect(),
        constraints: p
            .constraints
            .into_iter()
            .map(|mut c| {
                c.terms.iter_mut().for_each(|t| t.0 = new_index[t.0]);
                c
            })
            .collect(),
    }
}
