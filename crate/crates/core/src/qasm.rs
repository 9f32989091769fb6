//! Line-oriented `.vqc` circuit text format with explicit parameter tags.
//!
//! ```text
//! # comment
//! qubits 2; params 1;
//! h q[0];
//! cx q[0], q[1];
//! rz(0.5*t[0] + 0.25) q[1];
//! ```
//!
//! Keywords are case-insensitive and every statement ends with `;`.
//! An angle is a number (`pi` allowed), or `[number *] t[k] [+ number]`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::circuit::{Circuit, Gate, GateKind, ParamAngle};
use crate::error::{Error, Result};

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            match self.peek() {
                Some(found) => self.err(format!("expected '{c}', found '{found}'")),
                None => self.err(format!("expected '{c}', found end of line")),
            }
        }
    }

    fn word(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        (self.pos > start).then(|| {
            self.chars[start..self.pos]
                .iter()
                .collect::<String>()
                .to_ascii_lowercase()
        })
    }

    /// Looks ahead for a keyword without consuming it.
    fn next_is_word(&mut self, w: &str) -> bool {
        let save = self.pos;
        let found = self.word().as_deref() == Some(w);
        self.pos = save;
        found
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse() {
            Ok(v) => Ok(v),
            Err(_) => {
                self.pos = start;
                self.err("integer out of range")
            }
        }
    }

    /// Signed real literal, or `pi`.
    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let mut sign = 1.0;
        if self.eat('-') {
            sign = -1.0;
        } else {
            self.eat('+');
        }
        if self.next_is_word("pi") {
            self.word();
            return Ok(sign * core::f64::consts::PI);
        }
        self.skip_ws();
        let body = self.pos;
        let digits = |s: &mut Self| {
            let from = s.pos;
            while s.pos < s.chars.len() && s.chars[s.pos].is_ascii_digit() {
                s.pos += 1;
            }
            s.pos - from
        };
        let mut n = digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return self.err("expected number");
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text: String = self.chars[body..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) => Ok(sign * v),
            Err(_) => {
                self.pos = start;
                self.err("malformed number")
            }
        }
    }

    /// `q[<i>]` or `t[<i>]`.
    fn indexed(&mut self, name: &str) -> Result<usize> {
        match self.word() {
            Some(w) if w == name => {}
            _ => return self.err(format!("expected {name}[...]")),
        }
        self.expect('[')?;
        let i = self.integer()?;
        self.expect(']')?;
        Ok(i)
    }

    fn param_term(&mut self, coeff: f64) -> Result<ParamAngle> {
        let index = self.indexed("t")?;
        let mut offset = 0.0;
        if self.eat('+') {
            offset = self.number()?;
        } else if self.eat('-') {
            offset = -self.number()?;
        }
        if coeff == 0.0 {
            return self.err("parameter coefficient must be nonzero");
        }
        Ok(ParamAngle::affine(index, coeff, offset))
    }

    fn angle(&mut self) -> Result<ParamAngle> {
        if self.next_is_word("t") {
            return self.param_term(1.0);
        }
        if self.peek() == Some('-') {
            let save = self.pos;
            self.pos += 1;
            if self.next_is_word("t") {
                return self.param_term(-1.0);
            }
            self.pos = save;
        }
        let value = self.number()?;
        if self.eat('*') {
            return self.param_term(value);
        }
        Ok(ParamAngle::Constant(value))
    }
}

/// Statement boundaries of one line: `(start column, text)` for each `;`-terminated piece.
fn split_statements(line: &str) -> (Vec<(usize, &str)>, Option<(usize, &str)>) {
    let mut out = Vec::new();
    let mut start = 0;
    for (i, ch) in line.char_indices() {
        if ch == ';' {
            out.push((start, &line[start..i]));
            start = i + 1;
        }
    }
    let rest = &line[start..];
    let tail = (!rest.trim().is_empty()).then_some((start, rest));
    (out, tail)
}

/// Parses a `.vqc` document.
pub fn parse(text: &str) -> Result<Circuit> {
    let mut qubits: Option<usize> = None;
    let mut params: Option<usize> = None;
    let mut circuit: Option<Circuit> = None;

    for (line_idx, raw) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let code = raw.split('#').next().unwrap_or("");
        let (statements, tail) = split_statements(code);
        if let Some((col, _)) = tail {
            let column = code[..col].chars().count()
                + code[col..].chars().take_while(|c| c.is_whitespace()).count()
                + 1;
            return Err(Error::Syntax {
                line: line_no,
                column,
                message: "missing ';'".to_string(),
            });
        }
        for (start, stmt) in statements {
            let col_offset = code[..start].chars().count();
            let mut cur = Cursor::new(stmt, line_no);
            let located = |e: Error| match e {
                Error::Syntax {
                    line,
                    column,
                    message,
                } => Error::Syntax {
                    line,
                    column: column + col_offset,
                    message,
                },
                other => other,
            };
            if cur.at_end() {
                continue;
            }
            let stmt_col = {
                cur.skip_ws();
                cur.pos + 1 + col_offset
            };
            let Some(keyword) = cur.word() else {
                return Err(located(cur.err::<()>("expected statement").unwrap_err()));
            };
            match keyword.as_str() {
                "qubits" | "params" => {
                    if circuit.is_some() {
                        return Err(Error::Syntax {
                            line: line_no,
                            column: stmt_col,
                            message: format!("'{keyword}' after the first gate"),
                        });
                    }
                    let value = cur.integer().map_err(located)?;
                    let slot = if keyword == "qubits" {
                        &mut qubits
                    } else {
                        &mut params
                    };
                    if slot.is_some() {
                        return Err(Error::Syntax {
                            line: line_no,
                            column: stmt_col,
                            message: format!("duplicate '{keyword}' header"),
                        });
                    }
                    *slot = Some(value);
                }
                gate_word => {
                    let kind = match gate_word {
                        "rz" => GateKind::Rz,
                        "rx" => GateKind::Rx,
                        "h" => GateKind::H,
                        "cx" => GateKind::Cx,
                        "swap" => GateKind::Swap,
                        other => {
                            return Err(Error::Syntax {
                                line: line_no,
                                column: stmt_col,
                                message: format!("unknown statement '{other}'"),
                            })
                        }
                    };
                    if circuit.is_none() {
                        let (Some(n), Some(p)) = (qubits, params) else {
                            return Err(Error::Syntax {
                                line: line_no,
                                column: stmt_col,
                                message: "gate before 'qubits' and 'params' header".to_string(),
                            });
                        };
                        circuit = Some(Circuit::new(n, p));
                    }
                    let angle = if kind.is_rotation() {
                        cur.expect('(').map_err(located)?;
                        let a = cur.angle().map_err(located)?;
                        cur.expect(')').map_err(located)?;
                        Some(a)
                    } else {
                        None
                    };
                    let mut targets = Vec::with_capacity(2);
                    targets.push(cur.indexed("q").map_err(located)?);
                    if kind.arity() == 2 {
                        cur.expect(',').map_err(located)?;
                        targets.push(cur.indexed("q").map_err(located)?);
                    }
                    if !cur.at_end() {
                        return Err(located(cur.err::<()>("unexpected trailing input").unwrap_err()));
                    }
                    let gate = Gate {
                        kind,
                        qubits: targets,
                        angle,
                    };
                    let c = circuit.as_mut().expect("initialized above");
                    c.push(gate).map_err(|e| match e {
                        Error::InvalidGate(message) => Error::Syntax {
                            line: line_no,
                            column: stmt_col,
                            message,
                        },
                        other => other,
                    })?;
                    continue;
                }
            }
            if !cur.at_end() {
                return Err(located(cur.err::<()>("unexpected trailing input").unwrap_err()));
            }
        }
    }

    match circuit {
        Some(c) => Ok(c),
        None => match (qubits, params) {
            (Some(n), Some(p)) => Ok(Circuit::new(n, p)),
            _ => Err(Error::Syntax {
                line: text.lines().count().max(1),
                column: 1,
                message: "missing 'qubits' or 'params' header".to_string(),
            }),
        },
    }
}

fn write_angle(out: &mut String, angle: &ParamAngle) {
    match *angle {
        ParamAngle::Constant(v) => {
            let _ = write!(out, "{v:?}");
        }
        ParamAngle::Affine {
            param,
            coeff,
            offset,
        } => {
            if coeff == 1.0 {
                let _ = write!(out, "t[{param}]");
            } else {
                let _ = write!(out, "{coeff:?}*t[{param}]");
            }
            if offset != 0.0 {
                let _ = write!(out, " + {offset:?}");
            }
        }
    }
}

/// Renders a circuit as a `.vqc` document (no trailing newline).
///
/// Reals use the shortest representation that parses back to the same
/// `f64`, so `parse(serialize(c)) == c`.
pub fn serialize(circuit: &Circuit) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "qubits {}; params {};",
        circuit.width(),
        circuit.param_count()
    );
    for g in circuit.gates() {
        out.push('\n');
        out.push_str(g.kind.name());
        if let Some(a) = &g.angle {
            out.push('(');
            write_angle(&mut out, a);
            out.push(')');
        }
        out.push(' ');
        for (i, q) in g.qubits.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            let _ = write!(out, "q[{q}]");
        }
        out.push(';');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn parses_affine_rotation() {
        let c = parse("qubits 1; params 1;\nrz(0.5*t[0]) q[0];").unwrap();
        assert_eq!(c.width(), 1);
        assert_eq!(c.param_count(), 1);
        assert_eq!(c.gates(), &[Gate::rz(0, ParamAngle::affine(0, 0.5, 0.0))]);
    }

    #[test]
    fn parses_cx() {
        let c = parse("qubits 2; params 0;\ncx q[0], q[1];").unwrap();
        assert_eq!(c.gates(), &[Gate::cx(0, 1)]);
    }

    #[test]
    fn rejects_param_out_of_range() {
        let err = parse("qubits 1; params 0;\nrz(t[0]) q[0];").unwrap_err();
        assert_eq!(err, Error::ParamOutOfRange { index: 0, count: 0 });
    }

    #[test]
    fn serializes_hadamard() {
        let c = Circuit::from_gates(1, 0, vec![Gate::h(0)]).unwrap();
        assert_eq!(serialize(&c), "qubits 1; params 0;\nh q[0];");
        assert_eq!(serialize(&Circuit::new(3, 0)), "qubits 3; params 0;");
        assert_eq!(parse("qubits 3; params 0;").unwrap(), Circuit::new(3, 0));
    }

    #[test]
    fn accepts_comments_case_and_pi() {
        let src = "# header\nQUBITS 2;  Params 2; # trailing\n\
                   RX( -pi ) q[1] ;\nrz(-t[1] - 0.5) q[0];\nrz(2*t[0]+pi) q[0];\n\
                   SWAP q[1],q[0];";
        let c = parse(src).unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.gates()[0], Gate::rx(1, -core::f64::consts::PI));
        assert_eq!(c.gates()[1], Gate::rz(0, ParamAngle::affine(1, -1.0, -0.5)));
        assert_eq!(
            c.gates()[2],
            Gate::rz(0, ParamAngle::affine(0, 2.0, core::f64::consts::PI))
        );
        assert_eq!(c.gates()[3], Gate::swap(1, 0));
    }

    #[test]
    fn errors_are_located() {
        let err = parse("qubits 1; params 0;\nh q[0]").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, column: 1, .. }), "{err:?}");

        let err = parse("qubits 1; params 0;\nrz(0.1 q[0];").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, column: 8, .. }), "{err:?}");

        let err = parse("qubits 1; qubits 2;").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, column: 11, .. }), "{err:?}");

        let err = parse("h q[0];").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 1, .. }), "{err:?}");

        let err = parse("qubits 1; params 0;\nfoo q[0];").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 2, column: 1, .. }), "{err:?}");

        assert!(matches!(
            parse("qubits 2; params 0;\ncx q[0], q[2];").unwrap_err(),
            Error::QubitOutOfRange { index: 2, width: 2 }
        ));
        assert!(matches!(parse("").unwrap_err(), Error::Syntax { .. }));
        assert!(parse("qubits 1; params 1;\nrz(0*t[0]) q[0];").is_err());
    }

    #[test]
    fn round_trips_awkward_reals() {
        let c = Circuit::from_gates(
            2,
            2,
            vec![
                Gate::rz(0, 1e-300),
                Gate::rx(1, -0.0),
                Gate::rz(1, ParamAngle::affine(1, -1.0 / 3.0, -2.5e17)),
                Gate::rx(0, ParamAngle::affine(0, 1.0, 0.1 + 0.2)),
            ],
        )
        .unwrap();
        assert_eq!(parse(&serialize(&c)).unwrap(), c);
    }
}
