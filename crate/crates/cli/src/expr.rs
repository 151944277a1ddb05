//! Hamiltonians written as text, e.g. `0.5*|p|^2 + 0.1*cos(2*pi*q1)`.
//!
//! Variables are `q1..qn`, `p1..pn` and `t` (also `q`, `p` when `n = 1`).
//! `|q|^2`, `|p|^2`, `|q|` and `|p|` expand to sums over the coordinates,
//! integer literals are read as floats, and `sin`, `cos`, `tan`, `exp`, `ln`,
//! `sqrt`, `abs` and `pi` are available.

use evalexpr::{build_operator_tree, ContextWithMutableVariables, HashMapContext, Node, Value};

use crate::CliError;

const FUNCTIONS: [&str; 7] = ["sin", "cos", "tan", "exp", "ln", "sqrt", "abs"];

#[derive(Debug, Clone)]
pub struct Expression {
    tree: Node,
    q_names: Vec<String>,
    p_names: Vec<String>,
    aliases: bool,
}

impl Expression {
    pub fn parse(src: &str, n: usize) -> Result<Self, CliError> {
        let text = expand_norms(src, n);
        let text = rewrite_tokens(&text);
        let tree = build_operator_tree(&text).map_err(|e| CliError::Usage(format!("--H: {e}")))?;
        let expr = Expression {
            tree,
            q_names: (1..=n).map(|i| format!("q{i}")).collect(),
            p_names: (1..=n).map(|i| format!("p{i}")).collect(),
            aliases: n == 1,
        };
        for id in expr.tree.iter_variable_identifiers() {
            let known = id == "t"
                || id == "pi"
                || expr.q_names.iter().chain(&expr.p_names).any(|v| v == id)
                || (expr.aliases && (id == "q" || id == "p"));
            if !known {
                return Err(CliError::Usage(format!("--H: unknown variable `{id}` (phase space has n = {n})")));
            }
        }
        Ok(expr)
    }

    pub fn eval(&self, t: f64, q: &[f64], p: &[f64]) -> Result<f64, String> {
        let mut ctx = HashMapContext::new();
        let mut set = |name: &str, x: f64| ctx.set_value(name.to_string(), Value::Float(x)).map_err(|e| e.to_string());
        set("t", t)?;
        set("pi", std::f64::consts::PI)?;
        for (name, x) in self.q_names.iter().zip(q) {
            set(name, *x)?;
        }
        for (name, x) in self.p_names.iter().zip(p) {
            set(name, *x)?;
        }
        if self.aliases {
            set("q", q[0])?;
            set("p", p[0])?;
        }
        self.tree.eval_number_with_context(&ctx).map_err(|e| e.to_string())
    }
}

fn expand_norms(src: &str, n: usize) -> String {
    let sum = |v: char| {
        let terms: Vec<String> = (1..=n).map(|i| format!("{v}{i}^2")).collect();
        format!("({})", terms.join("+"))
    };
    let mut s = src.replace(' ', "");
    for v in ['q', 'p'] {
        s = s.replace(&format!("|{v}|^2"), &sum(v));
        s = s.replace(&format!("|{v}|"), &format!("sqrt{}", sum(v)));
    }
    s
}

/// Integer literals become floats and bare function names get the `math::` prefix.
fn rewrite_tokens(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 8);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == ':') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if FUNCTIONS.contains(&word.as_str()) && chars.get(i) == Some(&'(') {
                out.push_str("math::");
            }
            out.push_str(&word);
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let lit: String = chars[start..i].iter().collect();
            out.push_str(&lit);
            if !lit.contains(['.', 'e', 'E']) {
                out.push_str(".0");
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_and_literals() {
        let e = Expression::parse("1/2*|p|^2", 2).unwrap();
        assert_eq!(e.eval(0.0, &[0.3, 0.1], &[1.0, 2.0]).unwrap(), 2.5);
        let e = Expression::parse("p^2 + 1e-1*cos(2*pi*q)", 1).unwrap();
        assert!((e.eval(0.0, &[0.0], &[2.0]).unwrap() - 4.1).abs() < 1e-15);
        let e = Expression::parse("|p|", 2).unwrap();
        assert_eq!(e.eval(0.0, &[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn unknown_variable() {
        assert!(matches!(Expression::parse("p3^2", 2), Err(CliError::Usage(_))));
        assert!(matches!(Expression::parse("0.5*(", 1), Err(CliError::Usage(_))));
    }
}
