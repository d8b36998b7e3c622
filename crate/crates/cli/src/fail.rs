//! Error classes, their exit statuses and their JSON form.

use serde_json::{json, Value};

use dqcount::counter::CountError;
use dqcount::formula::FormulaError;
use dqcount::generators::GenError;
use dqcount::reductions::{FoError, ReductionError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Unreadable or malformed input, or a request outside a method's scope.
    Input,
    /// A budget or the time limit ran out.
    Budget,
    Timeout,
    /// Two methods disagreed, or a self-check failed.
    Mismatch,
    Internal,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Input => 1,
            Kind::Budget | Kind::Timeout => 2,
            Kind::Mismatch | Kind::Internal => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Input => "input",
            Kind::Budget => "budget",
            Kind::Timeout => "timeout",
            Kind::Mismatch => "mismatch",
            Kind::Internal => "internal",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
    /// Line and column of a syntax error.
    pub at: Option<(usize, usize)>,
    /// Extra fields for the JSON body.
    pub detail: Option<Value>,
}

impl Failure {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Failure {
            kind,
            message: message.into(),
            at: None,
            detail: None,
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Failure::new(Kind::Input, message)
    }

    pub fn with_path(mut self, path: &str) -> Self {
        self.message = format!("{path}: {}", self.message);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut err = json!({ "kind": self.kind.name(), "message": self.message });
        if let Some((line, col)) = self.at {
            err["line"] = json!(line);
            err["col"] = json!(col);
        }
        if let Some(d) = &self.detail {
            err["detail"] = d.clone();
        }
        json!({ "schema": 1, "error": err })
    }
}

impl From<FormulaError> for Failure {
    fn from(e: FormulaError) -> Self {
        let at = match &e {
            FormulaError::Syntax { line, col, .. } | FormulaError::Semantic { line, col, .. } => Some((*line, *col)),
            _ => None,
        };
        Failure {
            at,
            ..Failure::input(e.to_string())
        }
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Self {
        let kind = match &e {
            CountError::Formula(f) => return f.clone().into(),
            CountError::Budget { .. } | CountError::Diagram(_) => Kind::Budget,
            CountError::Abort(a) => match a {
                dqcount::bdd::BddAbort::Timeout | dqcount::bdd::BddAbort::Interrupted => Kind::Timeout,
                dqcount::bdd::BddAbort::NodeLimit(_) => Kind::Budget,
            },
            CountError::Arithmetic(_) => Kind::Budget,
            CountError::InternalInconsistency(_) => Kind::Internal,
            CountError::Reduction(r) => return (**r).clone().into(),
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Formula(f) => f.into(),
            ReductionError::Count(c) => c.into(),
            ReductionError::Underflow { .. } => Failure::new(Kind::Internal, e.to_string()),
            ReductionError::NotExtended { .. } => Failure::input(e.to_string()),
        }
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<FoError> for Failure {
    fn from(e: FoError) -> Self {
        let at = match &e {
            FoError::Syntax { line, col, .. } => Some((*line, *col)),
            _ => None,
        };
        Failure {
            at,
            ..Failure::input(e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_errors_carry_positions() {
        let f: Failure = FormulaError::Syntax {
            line: 3,
            col: 7,
            msg: "bad".into(),
        }
        .into();
        assert_eq!(f.kind.exit_code(), 1);
        let v = f.to_json();
        assert_eq!(v["error"]["line"], 3);
        assert_eq!(v["error"]["col"], 7);
        assert_eq!(v["schema"], 1);
    }

    #[test]
    fn budgets_exit_two() {
        let f: Failure = CountError::Budget {
            what: "x".into(),
            needed: "2".into(),
            limit: "1".into(),
        }
        .into();
        assert_eq!(f.kind.exit_code(), 2);
        let f: Failure = CountError::InternalInconsistency("x".into()).into();
        assert_eq!(f.kind.exit_code(), 3);
    }
}
