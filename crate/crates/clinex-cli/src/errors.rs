//! Exit-code policy: 0 success, 1 run failure, 2 usage, 3 format, 4 backend.

use clinex::corpus::FormatError;
use clinex::gateway::GatewayError;
use clinex::orders::OrderPipelineError;
use clinex::retrieval::RetrievalError;
use clinex::synth::SynthError;

#[derive(Debug)]
pub enum CliError {
    Run(String),
    Usage(String),
    Format(String),
    Backend(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Format(_) => 3,
            CliError::Backend(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Run(m) | CliError::Usage(m) | CliError::Format(m) | CliError::Backend(m) => m,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> CliError {
        CliError::Format(e.to_string())
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> CliError {
        match e {
            GatewayError::Backend(_) | GatewayError::Config(_) => CliError::Backend(e.to_string()),
            GatewayError::Template(_) => CliError::Run(e.to_string()),
        }
    }
}

impl From<RetrievalError> for CliError {
    fn from(e: RetrievalError) -> CliError {
        match e {
            RetrievalError::ZeroN => CliError::Usage(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<OrderPipelineError> for CliError {
    fn from(e: OrderPipelineError) -> CliError {
        match e {
            OrderPipelineError::NotEnoughExamples { .. } => CliError::Usage(e.to_string()),
            OrderPipelineError::ExampleWithoutOrders(_) => CliError::Format(e.to_string()),
            OrderPipelineError::Gateway(g) => g.into(),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> CliError {
        match e {
            SynthError::Argument(_) => CliError::Usage(e.to_string()),
            SynthError::Format(f) => f.into(),
            SynthError::Gateway(g) => g.into(),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Run(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
