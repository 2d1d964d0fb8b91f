//! Reverse-Polish expressions for CDEF lines: comma-separated numbers,
//! variable names and the operators `+ - * /`.

use super::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    fn parse(tok: &str) -> Option<Op> {
        Some(match tok {
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::Div,
            _ => return None,
        })
    }

    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
        }
    }

    /// Unknown operands and division by zero give `None`.
    pub fn apply(self, a: Option<f64>, b: Option<f64>) -> Option<f64> {
        let (a, b) = (a?, b?);
        let r = match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b == 0.0 {
                    return None;
                }
                a / b
            }
        };
        r.is_finite().then_some(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Num(f64),
    /// Index into the program's variable list.
    Var(usize),
    Op(Op),
}

/// A stack-balanced expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Rpn {
    tokens: Vec<Token>,
}

impl Rpn {
    /// Parses `text`, resolving names through `lookup`. Checks that the
    /// stack never underflows and ends with exactly one value.
    pub fn parse(
        text: &str,
        line: usize,
        mut lookup: impl FnMut(&str) -> Option<usize>,
    ) -> Result<Rpn, GraphError> {
        let mut tokens = Vec::new();
        let mut depth = 0usize;
        for raw in text.split(',') {
            let tok = raw.trim();
            if tok.is_empty() {
                return Err(GraphError::Syntax {
                    line,
                    message: "empty RPN token".into(),
                });
            }
            if let Some(op) = Op::parse(tok) {
                if depth < 2 {
                    return Err(GraphError::UnbalancedRpn {
                        line,
                        expr: text.to_string(),
                    });
                }
                depth -= 1;
                tokens.push(Token::Op(op));
            } else if let Ok(n) = tok.parse::<f64>() {
                if !n.is_finite() {
                    return Err(GraphError::Syntax {
                        line,
                        message: format!("non-finite literal `{tok}`"),
                    });
                }
                depth += 1;
                tokens.push(Token::Num(n));
            } else if let Some(idx) = lookup(tok) {
                depth += 1;
                tokens.push(Token::Var(idx));
            } else {
                return Err(GraphError::UndefinedVname {
                    line,
                    name: tok.to_string(),
                });
            }
        }
        if depth != 1 {
            return Err(GraphError::UnbalancedRpn {
                line,
                expr: text.to_string(),
            });
        }
        Ok(Rpn { tokens })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    /// Evaluates at one point; `value(i)` gives variable `i`.
    pub fn eval_point(
        &self,
        stack: &mut Vec<Option<f64>>,
        value: impl Fn(usize) -> Option<f64>,
    ) -> Option<f64> {
        stack.clear();
        for t in &self.tokens {
            match t {
                Token::Num(n) => stack.push(Some(*n)),
                Token::Var(i) => stack.push(value(*i)),
                Token::Op(op) => {
                    let b = stack.pop().expect("balanced at parse time");
                    let a = stack.pop().expect("balanced at parse time");
                    stack.push(op.apply(a, b));
                }
            }
        }
        stack.pop().flatten()
    }
}

/// Pointwise evaluation over aligned series. `inputs[i]` is variable `i`;
/// every input has the same length.
pub fn eval_cdef(expr: &Rpn, inputs: &[&[Option<f64>]]) -> Vec<Option<f64>> {
    let len = inputs.first().map_or(0, |s| s.len());
    let mut stack = Vec::with_capacity(8);
    (0..len)
        .map(|k| {
            expr.eval_point(&mut stack, |i| {
                inputs.get(i).and_then(|s| s.get(k)).copied().flatten()
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f_only(name: &str) -> Option<usize> {
        (name == "f").then_some(0)
    }

    #[test]
    fn divide_by_1024() {
        let e = Rpn::parse("f,1024,/", 1, f_only).unwrap();
        let f = [Some(1024.0), Some(2048.0)];
        assert_eq!(eval_cdef(&e, &[&f]), vec![Some(1.0), Some(2.0)]);
    }

    #[test]
    fn unknown_propagates() {
        let e = Rpn::parse("f,2,*", 1, f_only).unwrap();
        let f = [None, Some(4.0)];
        assert_eq!(eval_cdef(&e, &[&f]), vec![None, Some(8.0)]);
    }

    #[test]
    fn divide_by_zero_unknown() {
        let e = Rpn::parse("f,0,/", 1, f_only).unwrap();
        let f = [Some(1.0), Some(-3.0), None];
        assert_eq!(eval_cdef(&e, &[&f]), vec![None, None, None]);
    }

    #[test]
    fn unbalanced() {
        assert!(matches!(
            Rpn::parse("f,+", 3, f_only),
            Err(GraphError::UnbalancedRpn { line: 3, .. })
        ));
        assert!(matches!(
            Rpn::parse("f,f", 1, f_only),
            Err(GraphError::UnbalancedRpn { .. })
        ));
        assert!(matches!(
            Rpn::parse("g,1,+", 1, f_only),
            Err(GraphError::UndefinedVname { .. })
        ));
    }
}
