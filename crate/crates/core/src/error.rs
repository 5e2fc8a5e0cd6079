use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("zero probability mass: {0}")]
    ZeroMass(String),

    #[error("no samples inside [{lower}, {upper}] ({dropped} dropped)")]
    NoSamplesInRange { lower: f64, upper: f64, dropped: usize },

    /// The budget cannot be collected even when every bin charges its full
    /// potential profit.
    #[error("infeasible budget: need {required}, at most {max_collectible} collectible (shortfall {})", required - max_collectible)]
    Infeasible { required: f64, max_collectible: f64 },

    /// The center could not collect the budget against the averaged
    /// strategy of some round of the equilibrium loop.
    #[error("infeasible budget in round {round}: need {required}, at most {max_collectible} collectible against the averaged strategy")]
    InfeasibleInRound {
        round: usize,
        required: f64,
        max_collectible: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible { .. } | Error::InfeasibleInRound { .. })
    }
}
