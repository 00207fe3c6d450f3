use thiserror::Error;
use venue_scores::cluster::ClusterError;
use venue_scores::corpus::CorpusError;
use venue_scores::design::DesignError;
use venue_scores::eval::EvalError;
use venue_scores::scores::ScoreError;
use venue_scores::solver::SolverError;
use venue_scores::synth::SynthError;
use venue_scores::targets::TargetError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric divergence: {0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Divergence(_) => "divergence",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TargetError> for CliError {
    fn from(e: TargetError) -> Self {
        match e {
            TargetError::Config(m) => CliError::Config(m),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Divergence { .. } => CliError::Divergence(e.to_string()),
            SolverError::Config(_) | SolverError::TooLarge(_) => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Domain(m) => CliError::Config(m),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::Solver(e) => e.into(),
            ScoreError::Design(e) => e.into(),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NotConverged { .. } => CliError::Divergence(e.to_string()),
            EvalError::Config(m) => CliError::Config(m),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::Config(_) | ClusterError::TooManyClusters { .. } => CliError::Config(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Infeasible(m) => CliError::Config(m),
            e => CliError::Data(e.to_string()),
        }
    }
}
