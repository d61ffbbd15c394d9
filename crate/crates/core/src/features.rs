//! Candidate-feature libraries: symbolic terms and their evaluation on observations.

use std::fmt;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::Dataset;
use crate::error::{ClsmError, Result};
use crate::scalar::Scalar;

/// One multiplicative factor of a term, referencing an input column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Power { var: usize, exp: u32 },
    Sin(usize),
    Cos(usize),
}

impl Factor {
    pub fn var(var: usize) -> Self {
        Factor::Power { var, exp: 1 }
    }

    fn column(&self) -> usize {
        match *self {
            Factor::Power { var, .. } | Factor::Sin(var) | Factor::Cos(var) => var,
        }
    }

    fn eval<T: Scalar>(&self, x: ArrayView1<'_, T>) -> T {
        match *self {
            Factor::Power { var, exp } => x[var].powi(exp as i32),
            Factor::Sin(var) => x[var].sin(),
            Factor::Cos(var) => x[var].cos(),
        }
    }
}

/// Product of factors; the empty product is the bias term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term(pub Vec<Factor>);

impl Term {
    pub fn bias() -> Self {
        Term(Vec::new())
    }

    pub fn is_bias(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval<T: Scalar>(&self, x: ArrayView1<'_, T>) -> T {
        self.0.iter().fold(T::one(), |acc, f| acc * f.eval(x))
    }

    pub fn name(&self, variables: &[String]) -> String {
        if self.is_bias() {
            return "bias".to_string();
        }
        let var = |i: usize| variables.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1));
        self.0
            .iter()
            .map(|f| match *f {
                Factor::Power { var: v, exp: 1 } => var(v),
                Factor::Power { var: v, exp } => format!("{}^{exp}", var(v)),
                Factor::Sin(v) => format!("sin({})", var(v)),
                Factor::Cos(v) => format!("cos({})", var(v)),
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Parses `a*b^2*sin(c)` style products; `1` and `bias` denote the bias term.
    pub fn parse(text: &str, variables: &[String]) -> Result<Self> {
        let text = text.trim();
        if text == "1" || text == "bias" {
            return Ok(Term::bias());
        }
        let lookup = |name: &str| {
            variables
                .iter()
                .position(|v| v == name.trim())
                .ok_or_else(|| ClsmError::config(format!("unknown variable {name:?} in term {text:?}")))
        };
        let mut factors = Vec::new();
        for piece in text.split('*') {
            let piece = piece.trim();
            let factor = if let Some(inner) = piece.strip_prefix("sin(").and_then(|p| p.strip_suffix(')')) {
                Factor::Sin(lookup(inner)?)
            } else if let Some(inner) = piece.strip_prefix("cos(").and_then(|p| p.strip_suffix(')')) {
                Factor::Cos(lookup(inner)?)
            } else if let Some((base, exp)) = piece.split_once('^') {
                let exp: u32 = exp
                    .trim()
                    .parse()
                    .map_err(|_| ClsmError::config(format!("bad exponent in term {text:?}")))?;
                Factor::Power { var: lookup(base)?, exp }
            } else {
                Factor::var(lookup(piece)?)
            };
            factors.push(factor);
        }
        Ok(Term(factors))
    }
}

/// Ordered list of candidate terms over named input variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    variables: Vec<String>,
    terms: Vec<Term>,
}

impl FeatureSpec {
    pub fn new(variables: Vec<String>, terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(ClsmError::config("feature spec needs at least one term"));
        }
        if terms.iter().filter(|t| t.is_bias()).count() > 1 {
            return Err(ClsmError::config("feature spec has more than one bias term"));
        }
        if let Some(f) = terms
            .iter()
            .flat_map(|t| t.0.iter())
            .find(|f| f.column() >= variables.len())
        {
            return Err(ClsmError::config(format!(
                "term references input column {} but only {} variables are named",
                f.column(),
                variables.len()
            )));
        }
        Ok(Self { variables, terms })
    }

    pub fn parse<S: AsRef<str>>(variables: Vec<String>, terms: &[S]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|t| Term::parse(t.as_ref(), &variables))
            .collect::<Result<Vec<_>>>()?;
        Self::new(variables, parsed)
    }

    /// `{x, sin x, cos x, x sin x, sin x cos x, x cos x, bias}` over a single variable `x`.
    pub fn trig_library() -> Self {
        Self::parse(
            vec!["x".into()],
            &["x", "sin(x)", "cos(x)", "x*sin(x)", "sin(x)*cos(x)", "x*cos(x)", "bias"],
        )
        .expect("static library is valid")
    }

    /// `{y, ydot, t, y^2, ydot^2, y*ydot, bias}` over `(y, ydot, t)`.
    pub fn oscillator_library() -> Self {
        Self::parse(
            vec!["y".into(), "ydot".into(), "t".into()],
            &["y", "ydot", "t", "y^2", "ydot^2", "y*ydot", "bias"],
        )
        .expect("static library is valid")
    }

    /// All monomials of total degree `1..=degree` in increasing degree, optionally with a bias.
    pub fn polynomial(variables: Vec<String>, degree: u32, bias: bool) -> Result<Self> {
        let n = variables.len();
        let mut terms = Vec::new();
        for d in 1..=degree {
            let mut exps = vec![0u32; n];
            monomials(n, d, 0, &mut exps, &mut terms);
        }
        if bias {
            terms.push(Term::bias());
        }
        Self::new(variables, terms)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn bias_index(&self) -> Option<usize> {
        self.terms.iter().position(Term::is_bias)
    }

    pub fn names(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.name(&self.variables)).collect()
    }

    pub fn required_inputs(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.0.iter().map(Factor::column))
            .max()
            .map_or(0, |c| c + 1)
    }

    pub fn eval_row<T: Scalar>(&self, x: ArrayView1<'_, T>) -> Vec<T> {
        self.terms.iter().map(|t| t.eval(x)).collect()
    }

    pub fn eval_matrix<T: Scalar>(&self, inputs: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if self.required_inputs() > inputs.ncols() {
            return Err(ClsmError::config(format!(
                "feature spec references input column {} but data has {} columns",
                self.required_inputs(),
                inputs.ncols()
            )));
        }
        let p = self.len();
        let mut values = Array2::zeros((inputs.nrows(), p));
        for (row_in, mut row_out) in inputs.rows().into_iter().zip(values.rows_mut()) {
            for (j, term) in self.terms.iter().enumerate() {
                row_out[j] = term.eval(row_in);
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ClsmError::NonFinite("feature library evaluation".into()));
        }
        Ok(values)
    }
}

fn monomials(n: usize, remaining: u32, start: usize, exps: &mut Vec<u32>, out: &mut Vec<Term>) {
    if remaining == 0 {
        let factors = exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(var, &exp)| Factor::Power { var, exp })
            .collect();
        out.push(Term(factors));
        return;
    }
    for v in start..n {
        exps[v] += 1;
        monomials(n, remaining - 1, v, exps, out);
        exps[v] -= 1;
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureSpecDoc {
    variables: Vec<String>,
    terms: Vec<String>,
}

impl Serialize for FeatureSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        FeatureSpecDoc {
            variables: self.variables.clone(),
            terms: self.names(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FeatureSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = FeatureSpecDoc::deserialize(deserializer)?;
        FeatureSpec::parse(doc.variables, &doc.terms).map_err(serde::de::Error::custom)
    }
}

/// Library `Θ(x)` evaluated at every observation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub values: Array2<T>,
    pub spec: FeatureSpec,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }
}

pub fn build_feature_library<T: Scalar>(d: &Dataset<T>, spec: &FeatureSpec) -> Result<FeatureMatrix<T>> {
    Ok(FeatureMatrix {
        values: spec.eval_matrix(d.inputs())?,
        spec: spec.clone(),
    })
}
