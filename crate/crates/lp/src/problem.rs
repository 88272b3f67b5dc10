use crate::LpError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)`, never containing zero coefficients.
    pub terms: Vec<(usize, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub name: String,
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl Problem {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        Problem {
            name: name.into(),
            sense,
            objective: Vec::new(),
            variables: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(0.0);
        self.variables.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    /// Adds a row, dropping zero coefficients and merging repeated variables.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        cmp: Cmp,
        rhs: f64,
    ) -> usize {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, a) in terms {
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += a,
                None => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            cmp,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.constraints[row]
            .terms
            .iter()
            .map(|&(j, a)| a * x[j])
            .sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, v) in self.variables.iter().enumerate() {
            worst = worst.max(v.lower - x[j]).max(x[j] - v.upper);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let act = self.row_activity(i, x);
            let viol = match c.cmp {
                Cmp::Le => act - c.rhs,
                Cmp::Ge => c.rhs - act,
                Cmp::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.variables.len() {
            return Err(LpError::InvalidModel(
                "objective length differs from variable count".into(),
            ));
        }
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(LpError::InvalidModel(format!(
                    "variable {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!(
                    "variable {} has an empty domain",
                    v.name
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("row {} has rhs {}", c.name, c.rhs)));
            }
            for &(j, a) in &c.terms {
                if j >= self.variables.len() || !a.is_finite() {
                    return Err(LpError::InvalidModel(format!(
                        "row {} has a bad term ({j}, {a})",
                        c.name
                    )));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::InvalidModel("non-finite objective coefficient".into()));
        }
        Ok(())
    }
}
