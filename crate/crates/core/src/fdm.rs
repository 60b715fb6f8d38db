//! Finite-difference reduction of periodic linear ODEs to Jacobi operators.
//!
//! Coefficients have period 1 and are sampled at `x0 + j h`, `h = 1/p`.
//! Row `j` of the stencil lands in the operator as diagonal `a_j`, super
//! `b_j` and sub-diagonal entry `c_{j-1}` (the sub entry of row `j`).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::operator::PeriodicJacobiOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OdeOrder {
    /// `g1 y' + g2 y = g3`
    First,
    /// `y'' + g1 y' + g2 y = g3` with constant `g1`
    SecondConstG1,
    /// `y'' + g1 y' + g2 y = g3`
    SecondGeneral,
}

impl OdeOrder {
    pub fn name(&self) -> &'static str {
        match self {
            OdeOrder::First => "first",
            OdeOrder::SecondConstG1 => "second-const-g1",
            OdeOrder::SecondGeneral => "second-general",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "first" => Some(OdeOrder::First),
            "second-const-g1" => Some(OdeOrder::SecondConstG1),
            "second-general" => Some(OdeOrder::SecondGeneral),
            _ => None,
        }
    }
}

/// Built-in coefficient functions of `x`.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    Constant { value: f64 },
    /// `amplitude * sin(2 pi frequency x + phase) + offset`
    Sine { amplitude: f64, frequency: f64, phase: f64, offset: f64 },
    /// `amplitude * cos(2 pi frequency x + phase) + offset`
    Cosine { amplitude: f64, frequency: f64, phase: f64, offset: f64 },
    /// `amplitude * (2 frac(frequency x) - 1) + offset`
    Sawtooth { amplitude: f64, frequency: f64, offset: f64 },
    /// `sum_k coefficients[k] x^k`
    Polynomial { coefficients: Vec<f64> },
}

impl Generator {
    pub fn kind(&self) -> &'static str {
        match self {
            Generator::Constant { .. } => "constant",
            Generator::Sine { .. } => "sine",
            Generator::Cosine { .. } => "cosine",
            Generator::Sawtooth { .. } => "sawtooth",
            Generator::Polynomial { .. } => "polynomial",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Generator::Constant { value } => *value,
            Generator::Sine { amplitude, frequency, phase, offset } => amplitude * (2.0 * PI * frequency * x + phase).sin() + offset,
            Generator::Cosine { amplitude, frequency, phase, offset } => amplitude * (2.0 * PI * frequency * x + phase).cos() + offset,
            Generator::Sawtooth { amplitude, frequency, offset } => {
                let t = frequency * x;
                amplitude * (2.0 * (t - t.floor()) - 1.0) + offset
            }
            Generator::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c),
        }
    }
}

/// A coefficient given as samples or as a generator.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Samples(Vec<f64>),
    Generator(Generator),
}

impl Coefficient {
    pub fn constant(value: f64) -> Self {
        Coefficient::Generator(Generator::Constant { value })
    }

    /// Values at `x0 + j h`, `j = 0..p`.
    pub fn sample(&self, name: &str, p: usize, x0: f64) -> Result<Vec<f64>> {
        let v = match self {
            Coefficient::Samples(s) if s.len() == p => s.clone(),
            Coefficient::Samples(s) => {
                return Err(Error::usage(format!("field `{name}` has length {} but p = {p}", s.len())));
            }
            Coefficient::Generator(g) => {
                let h = 1.0 / p as f64;
                (0..p).map(|j| g.eval(x0 + j as f64 * h)).collect()
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::usage(format!("field `{name}` has non-finite values")));
        }
        Ok(v)
    }

    /// The single value of a scalar coefficient.
    pub fn scalar(&self, name: &str) -> Result<f64> {
        match self {
            Coefficient::Samples(s) if s.len() == 1 => Ok(s[0]),
            Coefficient::Generator(Generator::Constant { value }) => Ok(*value),
            _ => Err(Error::usage(format!("field `{name}` must be a scalar for this order"))),
        }
        .and_then(|v: f64| {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::usage(format!("field `{name}` is not finite")))
            }
        })
    }
}

/// A periodic ODE with period-1 coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct OdeProblem {
    pub order: OdeOrder,
    pub p: usize,
    /// Anchor of sample 0; metadata apart from generator sampling.
    pub x0: f64,
    pub g1: Coefficient,
    pub g2: Coefficient,
    /// Right-hand side; accepted but not part of the operator.
    pub g3: Option<Coefficient>,
}

impl OdeProblem {
    pub fn new(order: OdeOrder, p: usize, g1: Coefficient, g2: Coefficient) -> Result<Self> {
        let prob = OdeProblem {
            order,
            p,
            x0: 0.0,
            g1,
            g2,
            g3: None,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::usage(format!("p must be at least 2, got {}", self.p)));
        }
        if !self.x0.is_finite() {
            return Err(Error::usage("x0 must be finite"));
        }
        Ok(())
    }

    /// Step `1/p`.
    pub fn h(&self) -> f64 {
        1.0 / self.p as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.h()
    }
}

/// Operator plus messages for the caller.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretized {
    pub operator: PeriodicJacobiOperator,
    pub notices: Vec<String>,
}

fn expect_order(problem: &OdeProblem, order: OdeOrder) -> Result<()> {
    problem.validate()?;
    if problem.order != order {
        return Err(Error::usage(format!(
            "problem has order `{}`, expected `{}`",
            problem.order.name(),
            order.name()
        )));
    }
    Ok(())
}

/// `-g1 y(x-h) + 2h g2 y(x) + g1 y(x+h)`: `a_j = 2h g2_j`, `b_j = g1_j`,
/// `c_j = -g1_{j+1}`.
pub fn discretize_first_order(problem: &OdeProblem) -> Result<PeriodicJacobiOperator> {
    expect_order(problem, OdeOrder::First)?;
    let (p, h) = (problem.p, problem.h());
    let g1 = problem.g1.sample("g1", p, problem.x0)?;
    let g2 = problem.g2.sample("g2", p, problem.x0)?;
    let a = g2.iter().map(|v| 2.0 * h * v).collect();
    let c = (0..p).map(|j| -g1[(j + 1) % p]).collect();
    PeriodicJacobiOperator::new(a, g1, c)
}

/// `(2 - h g1) y(x-h) + (2h^2 g2 - 4) y(x) + (2 + h g1) y(x+h)`.
pub fn discretize_second_order_const_g1(problem: &OdeProblem) -> Result<PeriodicJacobiOperator> {
    expect_order(problem, OdeOrder::SecondConstG1)?;
    let (p, h) = (problem.p, problem.h());
    let g1 = problem.g1.scalar("g1")?;
    let v = problem.g2.sample("g2", p, problem.x0)?;
    let a = v.iter().map(|v| 2.0 * h * h * v - 4.0).collect();
    PeriodicJacobiOperator::with_period(p, a, alloc::vec![2.0 + h * g1; p], alloc::vec![2.0 - h * g1; p])
}

/// As the constant case with `u_j = g1(x_j)`: `b_j = 2 + h u_j`, and the sub
/// entry of row `j + 1` is `c_j = 2 - h u_{j+1}`.
pub fn discretize_second_order_general(problem: &OdeProblem) -> Result<PeriodicJacobiOperator> {
    expect_order(problem, OdeOrder::SecondGeneral)?;
    let (p, h) = (problem.p, problem.h());
    let u = problem.g1.sample("g1", p, problem.x0)?;
    let v = problem.g2.sample("g2", p, problem.x0)?;
    let a = v.iter().map(|v| 2.0 * h * h * v - 4.0).collect();
    let b = u.iter().map(|u| 2.0 + h * u).collect();
    let c = (0..p).map(|j| 2.0 - h * u[(j + 1) % p]).collect();
    PeriodicJacobiOperator::new(a, b, c)
}

/// Dispatches on the order and collects notices.
pub fn discretize(problem: &OdeProblem) -> Result<Discretized> {
    let operator = match problem.order {
        OdeOrder::First => discretize_first_order(problem)?,
        OdeOrder::SecondConstG1 => discretize_second_order_const_g1(problem)?,
        OdeOrder::SecondGeneral => discretize_second_order_general(problem)?,
    };
    let mut notices = Vec::new();
    if problem.g3.is_some() {
        notices.push(String::from(
            "g3 (right-hand side) ignored: it does not enter the operator or its spectrum",
        ));
    }
    Ok(Discretized { operator, notices })
}
