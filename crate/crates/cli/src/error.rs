/// Failure category; each maps to a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Data,
    Numerical,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 1,
            Category::Data => 2,
            Category::Numerical => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Data => "data",
            Category::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("error[{}]: {}", .category.as_str(), .message.replace(['\n', '\r'], " "))]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            category: Category::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            category: Category::Data,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            category: Category::Numerical,
            message: message.into(),
        }
    }

    /// `error[<category>]: <message>` on a single line.
    pub fn line(&self) -> String {
        self.to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<causalcast_core::Error> for CliError {
    fn from(e: causalcast_core::Error) -> Self {
        use causalcast_core::Error as E;
        match &e {
            E::InvalidArgument(_) | E::Unstable(_) | E::CyclicContemporaneous => Self::config(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<causalcast_discovery::Error> for CliError {
    fn from(e: causalcast_discovery::Error) -> Self {
        use causalcast_discovery::Error as E;
        match e {
            E::Core(c) => c.into(),
            E::InvalidArgument(_) => Self::config(e.to_string()),
            E::InsufficientSamples { .. } | E::SameCauseEffect(_) => Self::data(e.to_string()),
            E::RankDeficient { .. } => Self::numerical(e.to_string()),
        }
    }
}

impl From<causalcast_neural::Error> for CliError {
    fn from(e: causalcast_neural::Error) -> Self {
        use causalcast_neural::Error as E;
        match e {
            E::Core(c) => c.into(),
            E::NonFiniteActivation { .. } | E::NonFiniteGradient { .. } | E::NonFiniteLoss { .. } => {
                Self::numerical(e.to_string())
            }
            E::Config(_) => Self::config(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<causalcast_eval::Error> for CliError {
    fn from(e: causalcast_eval::Error) -> Self {
        use causalcast_eval::Error as E;
        match e {
            E::Core(c) => c.into(),
            E::Neural(n) => n.into(),
            E::Config(_) => Self::config(e.to_string()),
            E::ConstantActuals => Self::numerical(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}
