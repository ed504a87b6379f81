//! Test-only oracles that do not share code with the library: a generic
//! infix expression evaluator and complex-step differentiation of `J`.

#![allow(dead_code)]

use num_complex::Complex64;
use sfn::tree::FunctionLink;
use sfn::{FunctionKind, SfnModel};

/// Evaluates an infix expression over `x0, x1, ...`.
///
/// Grammar: `+` and binary `-` bind loosest, then `*` and `/`, then unary
/// minus, then right-associative `^`. Primaries are numbers (with optional
/// exponent), `xN`, `exp(e)`, `log(e)` (natural) and `(e)`.
pub fn eval_expression(src: &str, x: &[f64]) -> Result<f64, String> {
    let mut p = Parser {
        s: src.as_bytes(),
        i: 0,
        x,
    };
    let v = p.sum()?;
    p.ws();
    if p.i != p.s.len() {
        return Err(format!("trailing input at {}: `{}`", p.i, &src[p.i..]));
    }
    Ok(v)
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    x: &'a [f64],
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.s.get(self.i).is_some_and(|c| c.is_ascii_whitespace()) {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<f64, String> {
        let mut v = self.product()?;
        loop {
            if self.eat(b'+') {
                v += self.product()?;
            } else if self.eat(b'-') {
                v -= self.product()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn product(&mut self) -> Result<f64, String> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v *= self.unary()?;
            } else if self.eat(b'/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, String> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<f64, String> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(base.powf(exp));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<f64, String> {
        self.ws();
        if self.eat(b'(') {
            let v = self.sum()?;
            return if self.eat(b')') {
                Ok(v)
            } else {
                Err(format!("expected `)` at {}", self.i))
            };
        }
        let start = self.i;
        while self
            .s
            .get(self.i)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'.')
        {
            // Exponent sign inside a number literal, e.g. 1e-7.
            if matches!(self.s[self.i], b'e' | b'E')
                && self.s[start].is_ascii_digit()
                && matches!(self.s.get(self.i + 1), Some(b'-') | Some(b'+'))
            {
                self.i += 1;
            }
            self.i += 1;
        }
        let tok = std::str::from_utf8(&self.s[start..self.i]).unwrap();
        match tok {
            "" => Err(format!("unexpected input at {start}")),
            "exp" | "log" => {
                if !self.eat(b'(') {
                    return Err(format!("expected `(` after {tok}"));
                }
                let a = self.sum()?;
                if !self.eat(b')') {
                    return Err(format!("expected `)` closing {tok}"));
                }
                Ok(if tok == "exp" { a.exp() } else { a.ln() })
            }
            t if t.starts_with('x') => {
                let k: usize = t[1..].parse().map_err(|_| format!("bad variable `{t}`"))?;
                self.x.get(k).copied().ok_or_else(|| format!("no input {k}"))
            }
            t => t.parse::<f64>().map_err(|_| format!("bad number `{t}`")),
        }
    }
}

/// Evaluates `link` with complex arithmetic; weight number `target` (in
/// flatten order) gets `+ i h`.
fn eval_complex(link: &FunctionLink, x: &[f64], target: usize, h: f64, next: &mut usize) -> Complex64 {
    let mut weight = |w: f64| {
        let c = if *next == target {
            Complex64::new(w, h)
        } else {
            Complex64::new(w, 0.0)
        };
        *next += 1;
        c
    };
    let m = weight(link.weights().multiplier);
    let shape = link.weights().shape.map(&mut weight);
    let mut z = Complex64::new(x[link.baseline_input()], 0.0);
    for child in link.children() {
        z += eval_complex(child, x, target, h, next);
    }
    let one = Complex64::new(1.0, 0.0);
    match link.kind() {
        FunctionKind::Power => m * ((z * z + one).ln() * shape.unwrap()).exp(),
        FunctionKind::Exponential => m * (shape.unwrap() * z).exp(),
        FunctionKind::Logarithm => m * (z * z + one).ln(),
    }
}

/// `dJ/dw` by the complex step `Im J(w + i h) / h`, free of cancellation.
pub fn complex_step_gradient(model: &SfnModel, inputs: &[Vec<f64>], targets: &[f64]) -> Vec<f64> {
    let h = 1e-30;
    (0..model.count_weights())
        .map(|target| {
            let mut j = Complex64::new(0.0, 0.0);
            for (x, d) in inputs.iter().zip(targets) {
                let mut next = 0;
                let mut y = Complex64::new(0.0, 0.0);
                for root in model.roots() {
                    y += eval_complex(root, x, target, h, &mut next);
                }
                let e = y - d;
                j += e * e;
            }
            j.im / h
        })
        .collect()
}
