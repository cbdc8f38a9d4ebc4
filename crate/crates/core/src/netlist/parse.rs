//! Line-oriented netlist parser.
//!
//! ```text
//! * comment            # comment
//! .param w1 w2
//! P1 in 0
//! R1 in n2 1k   SENSG w1=1e-4
//! C1 n2 0  10f  SENSC w1=2f w2=-1f
//! L1 n2 n3 1n   SENSL w2=0.1n
//! K1 L1 L2 0.2n
//! ```
//!
//! Sensitivity coefficients are linear in the element's conductance (R),
//! capacitance (C) or inductance (L). `SENS` is accepted on every element as
//! the kind-appropriate form.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const GROUND: &str = "0";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    R,
    C,
    L,
}

impl ElementKind {
    fn sens_keyword(self) -> &'static str {
        match self {
            ElementKind::R => "SENSG",
            ElementKind::C => "SENSC",
            ElementKind::L => "SENSL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub nodes: (String, String),
    /// Ω, F or H.
    pub nominal: f64,
    /// `(parameter index, coefficient)`, in parameter declaration order.
    /// For resistors the coefficient multiplies conductance.
    pub sens: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Port {
    pub name: String,
    pub nodes: (String, String),
}

/// Mutual inductance between two declared inductors.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub name: String,
    pub inductors: (String, String),
    pub mutual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetlistAst {
    pub params: Vec<String>,
    pub elements: Vec<Element>,
    pub ports: Vec<Port>,
    pub couplings: Vec<Coupling>,
    /// Non-ground nodes in order of first appearance.
    pub nodes: Vec<String>,
}

impl NetlistAst {
    pub fn count(&self, kind: ElementKind) -> usize {
        self.elements.iter().filter(|e| e.kind == kind).count()
    }

    /// Sensitivities of an element keyed by parameter name.
    pub fn sens_map(&self, e: &Element) -> BTreeMap<String, f64> {
        e.sens.iter().map(|&(i, c)| (self.params[i].clone(), c)).collect()
    }

    /// Renders the AST back into netlist text that parses to the same AST.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.params.is_empty() {
            let _ = writeln!(out, ".param {}", self.params.join(" "));
        }
        for p in &self.ports {
            let _ = writeln!(out, "{} {} {}", p.name, p.nodes.0, p.nodes.1);
        }
        for e in &self.elements {
            let _ = write!(out, "{} {} {} {:e}", e.name, e.nodes.0, e.nodes.1, e.nominal);
            if !e.sens.is_empty() {
                let _ = write!(out, " {}", e.kind.sens_keyword());
                for &(i, c) in &e.sens {
                    let _ = write!(out, " {}={:e}", self.params[i], c);
                }
            }
            out.push('\n');
        }
        for k in &self.couplings {
            let _ = writeln!(out, "{} {} {} {:e}", k.name, k.inductors.0, k.inductors.1, k.mutual);
        }
        out
    }
}

/// Parses a number with an optional engineering suffix
/// (`f p n u m k meg g t`, case-insensitive).
pub fn parse_value(tok: &str) -> Option<f64> {
    let lower = tok.to_ascii_lowercase();
    let split = lower
        .char_indices()
        .find(|&(i, c)| {
            c.is_ascii_alphabetic()
                && !((c == 'e')
                    && lower[i + 1..]
                        .chars()
                        .next()
                        .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+'))
        })
        .map(|(i, _)| i)
        .unwrap_or(lower.len());
    let (num, suffix) = lower.split_at(split);
    let exp = match suffix {
        "" => 0,
        "f" => -15,
        "p" => -12,
        "n" => -9,
        "u" => -6,
        "m" => -3,
        "k" => 3,
        "meg" => 6,
        "g" => 9,
        "t" => 12,
        _ => return None,
    };
    // Fold the suffix into the decimal exponent so "3n" parses as exactly 3e-9.
    let v: f64 = if exp == 0 {
        num.parse().ok()?
    } else if num.contains('e') {
        num.parse::<f64>().ok()? * 10f64.powi(exp)
    } else {
        num.parse::<f64>().ok()?;
        format!("{num}e{exp}").parse().ok()?
    };
    v.is_finite().then_some(v)
}

struct Line<'a> {
    no: usize,
    toks: Vec<&'a str>,
}

fn tokenize(text: &str) -> Vec<Line<'_>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('*') || t.starts_with('#') {
                return None;
            }
            let t = t.split('#').next().unwrap_or("");
            Some(Line {
                no: i + 1,
                toks: t.split_whitespace().collect(),
            })
        })
        .collect()
}

pub fn parse_netlist(text: &str) -> Result<NetlistAst> {
    let lines = tokenize(text);
    let mut ast = NetlistAst::default();

    // Parameters first, so element lines may precede `.param`.
    let mut param_index: HashMap<String, usize> = HashMap::new();
    for line in &lines {
        if line.toks[0].eq_ignore_ascii_case(".param") {
            if line.toks.len() < 2 {
                return Err(syntax(line.no, ".param needs at least one name"));
            }
            for &name in &line.toks[1..] {
                if param_index.contains_key(name) {
                    return Err(syntax(line.no, format!("parameter `{name}` declared twice")));
                }
                param_index.insert(name.to_string(), ast.params.len());
                ast.params.push(name.to_string());
            }
        }
    }

    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut node_seen: HashMap<String, ()> = HashMap::new();
    let mut note_node = |ast: &mut NetlistAst, n: &str| {
        if n != GROUND && node_seen.insert(n.to_string(), ()).is_none() {
            ast.nodes.push(n.to_string());
        }
    };
    let mut coupling_lines = Vec::new();

    for line in &lines {
        let head = line.toks[0];
        if head.starts_with('.') {
            if head.eq_ignore_ascii_case(".param") || head.eq_ignore_ascii_case(".end") {
                continue;
            }
            return Err(syntax(line.no, format!("unsupported directive `{head}`")));
        }
        let key = head.to_ascii_uppercase();
        if seen.insert(key.clone(), line.no).is_some() {
            return Err(Error::DuplicateElement {
                line: line.no,
                name: head.to_string(),
            });
        }
        let first = key.chars().next().unwrap_or(' ');
        match first {
            'P' => {
                if line.toks.len() != 3 {
                    return Err(syntax(line.no, "port needs exactly two nodes"));
                }
                let nodes = two_nodes(line)?;
                note_node(&mut ast, &nodes.0);
                note_node(&mut ast, &nodes.1);
                ast.ports.push(Port {
                    name: head.to_string(),
                    nodes,
                });
            }
            'R' | 'C' | 'L' => {
                let kind = match first {
                    'R' => ElementKind::R,
                    'C' => ElementKind::C,
                    _ => ElementKind::L,
                };
                let el = parse_element(line, kind, &param_index)?;
                note_node(&mut ast, &el.nodes.0);
                note_node(&mut ast, &el.nodes.1);
                ast.elements.push(el);
            }
            'K' => coupling_lines.push(line),
            _ => return Err(syntax(line.no, format!("unknown element type `{head}`"))),
        }
    }

    for line in coupling_lines {
        ast.couplings.push(parse_coupling(line, &ast)?);
    }
    Ok(ast)
}

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, msg: msg.into() }
}

fn invalid(line: usize, msg: impl Into<String>) -> Error {
    Error::InvalidValue { line, msg: msg.into() }
}

fn two_nodes(line: &Line) -> Result<(String, String)> {
    let (a, b) = (line.toks[1], line.toks[2]);
    if a == b {
        return Err(syntax(
            line.no,
            format!("`{}` connects node `{a}` to itself", line.toks[0]),
        ));
    }
    Ok((a.to_string(), b.to_string()))
}

fn parse_element(line: &Line, kind: ElementKind, params: &HashMap<String, usize>) -> Result<Element> {
    if line.toks.len() < 4 {
        return Err(syntax(
            line.no,
            format!("`{}` needs two nodes and a value", line.toks[0]),
        ));
    }
    let nodes = two_nodes(line)?;
    let nominal = parse_value(line.toks[3]).ok_or_else(|| syntax(line.no, format!("bad value `{}`", line.toks[3])))?;
    match kind {
        ElementKind::R if nominal <= 0.0 => return Err(invalid(line.no, format!("non-positive resistance {nominal}"))),
        ElementKind::L if nominal <= 0.0 => return Err(invalid(line.no, format!("non-positive inductance {nominal}"))),
        ElementKind::C if nominal < 0.0 => return Err(invalid(line.no, format!("negative capacitance {nominal}"))),
        _ => {}
    }

    let mut sens: Vec<(usize, f64)> = Vec::new();
    let mut in_group = false;
    for &tok in &line.toks[4..] {
        if !tok.contains('=') {
            let kw = tok.to_ascii_uppercase();
            if kw == "SENS" || kw == kind.sens_keyword() {
                in_group = true;
                continue;
            }
            if kw == "SENSR" {
                return Err(syntax(
                    line.no,
                    "SENSR is not supported: resistance-linear coefficients are not affine in G; use SENSG",
                ));
            }
            if kw.starts_with("SENS") {
                return Err(syntax(
                    line.no,
                    format!(
                        "`{tok}` does not apply to this element; use {} or SENS",
                        kind.sens_keyword()
                    ),
                ));
            }
            return Err(syntax(line.no, format!("unexpected token `{tok}`")));
        }
        if !in_group {
            return Err(syntax(line.no, format!("`{tok}` outside a sensitivity list")));
        }
        let (name, val) = tok.split_once('=').expect("checked contains '='");
        let idx = *params.get(name).ok_or_else(|| Error::UnknownParameter {
            line: line.no,
            name: name.to_string(),
        })?;
        let coef = parse_value(val).ok_or_else(|| syntax(line.no, format!("bad coefficient `{val}`")))?;
        if sens.iter().any(|&(i, _)| i == idx) {
            return Err(syntax(line.no, format!("parameter `{name}` given twice")));
        }
        sens.push((idx, coef));
    }
    sens.sort_by_key(|&(i, _)| i);
    Ok(Element {
        name: line.toks[0].to_string(),
        kind,
        nodes,
        nominal,
        sens,
    })
}

fn parse_coupling(line: &Line, ast: &NetlistAst) -> Result<Coupling> {
    if line.toks.len() != 4 {
        return Err(syntax(line.no, "coupling needs two inductors and a mutual inductance"));
    }
    let find = |name: &str| {
        ast.elements
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name) && e.kind == ElementKind::L)
            .ok_or_else(|| syntax(line.no, format!("`{name}` is not a declared inductor")))
    };
    let la = find(line.toks[1])?;
    let lb = find(line.toks[2])?;
    if la.name == lb.name {
        return Err(syntax(line.no, "coupling needs two distinct inductors"));
    }
    let mutual = parse_value(line.toks[3]).ok_or_else(|| syntax(line.no, format!("bad value `{}`", line.toks[3])))?;
    if mutual.abs() > (la.nominal * lb.nominal).sqrt() {
        return Err(invalid(line.no, "mutual inductance exceeds sqrt(La*Lb)"));
    }
    Ok(Coupling {
        name: line.toks[0].to_string(),
        inductors: (la.name.clone(), lb.name.clone()),
        mutual,
    })
}
