//! User-supplied recurrence functions: parsing, evaluation with exact first
//! and second derivatives, and sampled derivative bounds over a box.

mod bounds;
mod parse;
mod scalar;

use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

pub use bounds::{
    sampled_derivative_bounds, sampled_derivative_bounds_scaled, DerivativeBounds, SampleBox,
};
pub use scalar::{Dual1, Jet, Jet2, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("variable index x{index} out of range (k = {arity}) at position {position}")]
    VariableOutOfRange {
        index: usize,
        arity: usize,
        position: usize,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("invalid sampling request: {0}")]
    Sampling(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tanh,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
        }
    }

    /// Value, first and second derivative at `x`.
    #[inline]
    fn taylor(self, x: f64) -> (f64, f64, f64) {
        match self {
            Func::Sin => {
                let (s, c) = x.sin_cos();
                (s, c, -s)
            }
            Func::Cos => {
                let (s, c) = x.sin_cos();
                (c, -s, -c)
            }
            Func::Tanh => {
                let t = x.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
            Func::Exp => {
                let e = x.exp();
                (e, e, e)
            }
        }
    }
}

/// Expression tree. Variables are zero-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Powi(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    /// Value of the subtree if it contains no variables.
    pub fn fold_constant(&self) -> Option<f64> {
        match self {
            Node::Const(c) => Some(*c),
            Node::Var(_) => None,
            Node::Neg(a) => a.fold_constant().map(|v| -v),
            Node::Add(a, b) => Some(a.fold_constant()? + b.fold_constant()?),
            Node::Sub(a, b) => Some(a.fold_constant()? - b.fold_constant()?),
            Node::Mul(a, b) => Some(a.fold_constant()? * b.fold_constant()?),
            Node::Div(a, b) => {
                let d = b.fold_constant()?;
                (d != 0.0)
                    .then(|| a.fold_constant().map(|n| n / d))
                    .flatten()
            }
            Node::Powi(a, n) => Some(a.fold_constant()?.powi(*n)),
            Node::Call(f, a) => Some(f.taylor(a.fold_constant()?).0),
        }
    }

    /// Replace fixed variables by constants and fold what becomes constant.
    fn bind(&self, fixed: &[Option<f64>]) -> Node {
        let node = match self {
            Node::Const(c) => return Node::Const(*c),
            Node::Var(i) => {
                return match fixed.get(*i).copied().flatten() {
                    Some(v) => Node::Const(v),
                    None => Node::Var(*i),
                }
            }
            Node::Neg(a) => Node::Neg(Box::new(a.bind(fixed))),
            Node::Add(a, b) => Node::Add(Box::new(a.bind(fixed)), Box::new(b.bind(fixed))),
            Node::Sub(a, b) => Node::Sub(Box::new(a.bind(fixed)), Box::new(b.bind(fixed))),
            Node::Mul(a, b) => Node::Mul(Box::new(a.bind(fixed)), Box::new(b.bind(fixed))),
            Node::Div(a, b) => Node::Div(Box::new(a.bind(fixed)), Box::new(b.bind(fixed))),
            Node::Powi(a, n) => Node::Powi(Box::new(a.bind(fixed)), *n),
            Node::Call(f, a) => Node::Call(*f, Box::new(a.bind(fixed))),
        };
        match node.fold_constant() {
            Some(v) if v.is_finite() => Node::Const(v),
            _ => node,
        }
    }

    fn emit(&self, tape: &mut Vec<Op>) {
        match self {
            Node::Const(c) => tape.push(Op::Const(*c)),
            Node::Var(i) => tape.push(Op::Var(*i)),
            Node::Neg(a) => {
                a.emit(tape);
                tape.push(Op::Neg);
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.emit(tape);
                b.emit(tape);
                tape.push(match self {
                    Node::Add(..) => Op::Add,
                    Node::Sub(..) => Op::Sub,
                    Node::Mul(..) => Op::Mul,
                    _ => Op::Div,
                });
            }
            Node::Powi(a, n) => {
                a.emit(tape);
                tape.push(Op::Powi(*n));
            }
            Node::Call(f, a) => {
                a.emit(tape);
                tape.push(Op::Call(*f));
            }
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Powi(a, n) => write!(f, "({a}^{n})"),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Powi(i32),
    Call(Func),
}

/// A parsed function of `k` variables, compiled to a postfix tape.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    root: Node,
    arity: usize,
    tape: Vec<Op>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.root == other.root
    }
}

/// Parse `text` as a function of `x1 … xk`.
pub fn parse_expression(text: &str, k: usize) -> Result<Expr, ExprError> {
    let root = parse::parse(text, k)?;
    Ok(Expr::from_node(text.to_string(), root, k))
}

impl Expr {
    fn from_node(source: String, root: Node, arity: usize) -> Self {
        let mut tape = Vec::new();
        root.emit(&mut tape);
        Self {
            source,
            root,
            arity,
            tape,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Partially evaluate with the coordinates given in `fixed` held
    /// constant; `None` entries stay free.
    pub fn bind(&self, fixed: &[Option<f64>]) -> Expr {
        let root = self.root.bind(fixed);
        Expr::from_node(self.source.clone(), root, self.arity)
    }

    /// Evaluate over any [`Scalar`]; `var(i)` supplies coordinate `i`.
    pub fn eval_with<S: Scalar>(&self, var: impl Fn(usize) -> S) -> Result<S, ExprError> {
        let mut stack: SmallVec<[S; 16]> = SmallVec::new();
        for op in &self.tape {
            let top = match *op {
                Op::Const(c) => S::constant(c),
                Op::Var(i) => var(i),
                Op::Neg => {
                    let a = stack.pop().expect("tape underflow");
                    let v = a.value();
                    a.chain(-v, -1.0, 0.0)
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack.pop().expect("tape underflow");
                    let a = stack.pop().expect("tape underflow");
                    match op {
                        Op::Add => a.add(b),
                        Op::Sub => a.sub(b),
                        Op::Mul => a.mul(b),
                        _ => {
                            let d = b.value();
                            if d == 0.0 {
                                return Err(ExprError::Domain("division by zero".into()));
                            }
                            let r = 1.0 / d;
                            a.mul(b.chain(r, -r * r, 2.0 * r * r * r))
                        }
                    }
                }
                Op::Powi(n) => {
                    let a = stack.pop().expect("tape underflow");
                    let x = a.value();
                    if x == 0.0 && n < 0 {
                        return Err(ExprError::Domain("negative power of zero".into()));
                    }
                    let nf = n as f64;
                    let f0 = x.powi(n);
                    let f1 = if n == 0 { 0.0 } else { nf * x.powi(n - 1) };
                    let f2 = if n == 0 || n == 1 {
                        0.0
                    } else {
                        nf * (nf - 1.0) * x.powi(n - 2)
                    };
                    a.chain(f0, f1, f2)
                }
                Op::Call(f) => {
                    let a = stack.pop().expect("tape underflow");
                    let (f0, f1, f2) = f.taylor(a.value());
                    a.chain(f0, f1, f2)
                }
            };
            stack.push(top);
        }
        let out = stack.pop().expect("empty tape");
        if !out.value().is_finite() {
            return Err(ExprError::Domain(format!(
                "non-finite value in `{}`",
                self.source
            )));
        }
        Ok(out)
    }

    fn check_arity(&self, x: &[f64]) -> Result<(), ExprError> {
        if x.len() != self.arity {
            return Err(ExprError::Arity {
                expected: self.arity,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        self.check_arity(x)?;
        self.eval_with(|i| x[i])
    }

    /// Value and gradient by forward-mode dual numbers.
    pub fn eval_with_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>), ExprError> {
        self.check_arity(x)?;
        let k = self.arity;
        let jet = self.eval_with(|i| Jet::var(x[i], i, k))?;
        let g = jet.gradient(k);
        if g.iter().any(|d| !d.is_finite()) {
            return Err(ExprError::Domain("non-finite derivative".into()));
        }
        Ok((jet.v, g))
    }

    /// Value, gradient and row-major Hessian by second-order jets.
    pub fn eval_with_hessian(&self, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>), ExprError> {
        self.check_arity(x)?;
        let k = self.arity;
        let jet = self.eval_with(|i| Jet2::var(x[i], i, k))?;
        let jet = if jet.dim() < k {
            jet.add(Jet2::var(0.0, 0, k).mul(Jet2::constant(0.0)))
        } else {
            jet
        };
        Ok((jet.v, jet.g, jet.h))
    }

    /// Value and derivative along coordinate `axis`, others held at `x`.
    #[inline]
    pub fn eval_partial(&self, x: &[f64], axis: usize) -> Result<(f64, f64), ExprError> {
        let d = self.eval_with(|i| {
            if i == axis {
                Dual1::var(x[i])
            } else {
                Dual1::constant(x[i])
            }
        })?;
        Ok((d.v, d.d))
    }
}

/// Evaluate `ast` and its exact gradient at `point`.
pub fn evaluate_with_gradient(ast: &Expr, point: &[f64]) -> Result<(f64, Vec<f64>), ExprError> {
    ast.eval_with_gradient(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn parses_sum_with_call() {
        let e = parse_expression("200*x1 + sin(x2)", 2).unwrap();
        assert!(matches!(e.root(), Node::Add(..)));
    }

    #[test]
    fn rejects_variable_beyond_arity() {
        let err = parse_expression("x3", 2).unwrap_err();
        assert!(matches!(
            err,
            ExprError::VariableOutOfRange {
                index: 3,
                arity: 2,
                ..
            }
        ));
        assert!(matches!(
            parse_expression("x0", 2),
            Err(ExprError::VariableOutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn unbalanced_paren_reports_position() {
        let err = parse_expression("2*(x1", 1).unwrap_err();
        assert_eq!(
            err,
            ExprError::Syntax {
                position: 5,
                message: "expected `)`".into()
            }
        );
    }

    #[test]
    fn unknown_identifier_and_excluded_abs() {
        assert!(matches!(
            parse_expression("foo(x1)", 1),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_expression("abs(x1)", 1),
            Err(ExprError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_expression("x1 x1", 1),
            Err(ExprError::Syntax { position: 3, .. })
        ));
    }

    #[test]
    fn power_is_right_associative_and_integral() {
        let e = parse_expression("2^3^2", 1).unwrap();
        assert_eq!(e.eval(&[0.0]).unwrap(), 512.0);
        let e = parse_expression("-x1^2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]).unwrap(), -9.0);
        let e = parse_expression("x1^-1", 1).unwrap();
        assert_eq!(e.eval(&[4.0]).unwrap(), 0.25);
        assert!(parse_expression("x1^0.5", 1).is_err());
        assert!(parse_expression("x1^x1", 1).is_err());
    }

    #[test]
    fn gradient_examples() {
        let e = parse_expression("200*x1 + sin(x2)", 2).unwrap();
        let (v, g) = evaluate_with_gradient(&e, &[0.5, 0.0]).unwrap();
        assert_eq!(v, 100.0);
        assert_eq!(g, vec![200.0, 1.0]);

        let e = parse_expression("x1*x2", 2).unwrap();
        assert_eq!(
            evaluate_with_gradient(&e, &[2.0, 3.0]).unwrap(),
            (6.0, vec![3.0, 2.0])
        );

        let e = parse_expression("sin(x1)", 1).unwrap();
        let (v, g) = evaluate_with_gradient(&e, &[std::f64::consts::FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn division_by_zero_is_a_domain_error() {
        let e = parse_expression("1/(x1 - 1)", 1).unwrap();
        assert!(matches!(
            e.eval_with_gradient(&[1.0]),
            Err(ExprError::Domain(_))
        ));
        let e = parse_expression("exp(x1)", 1).unwrap();
        assert!(matches!(e.eval(&[1e4]), Err(ExprError::Domain(_))));
    }

    #[test]
    fn hessian_of_product_and_sine() {
        let e = parse_expression("x1*x2^2 + cos(x1)", 2).unwrap();
        let (_, g, h) = e.eval_with_hessian(&[0.3, 2.0]).unwrap();
        assert_abs_diff_eq!(g[0], 4.0 - 0.3f64.sin(), epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], 2.0 * 0.3 * 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h[0], -0.3f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(h[1], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h[2], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(h[3], 0.6, epsilon = 1e-14);
        // constants still report a full-size Hessian
        let c = parse_expression("3", 2).unwrap();
        let (v, g, h) = c.eval_with_hessian(&[0.1, 0.2]).unwrap();
        assert_eq!((v, g.len(), h.len()), (3.0, 2, 4));
    }

    #[test]
    fn binding_folds_fixed_coordinates() {
        let e = parse_expression("200*x1 + sin(x2) * x2^2", 2).unwrap();
        let b = e.bind(&[None, Some(0.7)]);
        match b.root() {
            Node::Add(_, rhs) => assert!(matches!(**rhs, Node::Const(_))),
            other => panic!("unexpected {other}"),
        }
        for t in [-1.0, 0.0, 0.4] {
            assert_abs_diff_eq!(
                b.eval(&[t, 99.0]).unwrap(),
                e.eval(&[t, 0.7]).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    fn arb_expr(depth: u32) -> BoxedStrategy<String> {
        let leaf = prop_oneof![
            (-3.0f64..3.0).prop_map(|c| format!("{c:.3}")),
            (1usize..=3).prop_map(|i| format!("x{i}")),
        ];
        leaf.prop_recursive(depth, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| format!("({a} / (2.5 + cos({b})))")),
                (inner.clone(), 0i32..4).prop_map(|(a, n)| format!("({a})^{n}")),
                inner.clone().prop_map(|a| format!("sin({a})")),
                inner.clone().prop_map(|a| format!("tanh({a})")),
                inner.prop_map(|a| format!("exp(0.3*cos({a}))")),
            ]
        })
        .boxed()
    }

    proptest! {
        #[test]
        fn dual_gradient_matches_central_differences(
            src in arb_expr(4),
            x in proptest::array::uniform3(-1.5f64..1.5),
        ) {
            let e = parse_expression(&src, 3).unwrap();
            let (v, g) = e.eval_with_gradient(&x).unwrap();
            prop_assert!((v - e.eval(&x).unwrap()).abs() <= 1e-12 * (1.0 + v.abs()));
            let h = 1e-6;
            for i in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (e.eval(&xp).unwrap() - e.eval(&xm).unwrap()) / (2.0 * h);
                // central differences carry O(h^2) truncation and O(eps/h) rounding
                let scale = 1.0 + v.abs() + g[i].abs();
                prop_assert!((fd - g[i]).abs() <= 1e-6 * scale, "{src}: fd {fd} vs dual {}", g[i]);
            }
        }

        #[test]
        fn hessian_is_symmetric_and_matches_gradient_differences(
            src in arb_expr(3),
            x in proptest::array::uniform3(-1.0f64..1.0),
        ) {
            let e = parse_expression(&src, 3).unwrap();
            let (_, _, hess) = e.eval_with_hessian(&x).unwrap();
            let h = 1e-5;
            for i in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let gp = e.eval_with_gradient(&xp).unwrap().1;
                let gm = e.eval_with_gradient(&xm).unwrap().1;
                for j in 0..3 {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    let an = hess[i * 3 + j];
                    prop_assert!((an - hess[j * 3 + i]).abs() <= 1e-9 * (1.0 + an.abs()));
                    prop_assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()), "{src}: {fd} vs {an}");
                }
            }
        }
    }
}
