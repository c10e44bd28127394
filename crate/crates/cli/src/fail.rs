use std::fmt;

/// A failure reported on one line of stderr as `error kind=... message="..."`.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub line: Option<usize>,
}

impl Failure {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            line: None,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new("io", message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    pub fn at_line(self, line: Option<usize>) -> Self {
        Self { line, ..self }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            "config" | "usage" => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error kind={}", self.kind)?;
        if let Some(line) = self.line {
            write!(f, " line={line}")?;
        }
        // Debug quoting escapes newlines, keeping the report on one line.
        write!(f, " message={:?}", self.message.trim())
    }
}

impl From<udn::Error> for Failure {
    fn from(e: udn::Error) -> Self {
        use udn::Error::*;
        let kind = match e {
            Domain(_) => "domain",
            Model(_) => "model",
            Divergent(_) => "divergent",
            Quadrature { .. } => "quadrature",
            CurveTail { .. } => "curve-tail",
            NoSolution { .. } => "no-solution",
            Simulation(_) => "simulation",
        };
        Failure::new(kind, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let f = Failure::config("bad\nvalue").at_line(Some(4));
        let s = f.to_string();
        assert_eq!(s, r#"error kind=config line=4 message="bad\nvalue""#);
        assert_eq!(f.exit_code(), 2);
        let n: Failure = udn::Error::Simulation("x".into()).into();
        assert_eq!((n.kind, n.exit_code()), ("simulation", 1));
    }
}
