use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FinGraphError {
    #[error("duplicate name: {0}")]
    DuplicateName(String),
    #[error("unknown vertex: {0}")]
    UnknownVertex(String),
    #[error("unknown edge: {0}")]
    UnknownEdge(String),
    #[error("fin {0} is empty")]
    EmptyFin(String),
    #[error("fin {fin} is not a closed path at position {position}")]
    BrokenCycle { fin: String, position: usize },
    #[error("fin {fin} backtracks at position {position}")]
    BacktrackingLoop { fin: String, position: usize },
    #[error("missing colour for oriented fin {0}")]
    MissingColour(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph has no vertices")]
    Empty,
    #[error("invalid subdivision factor {0}")]
    BadSubdivision(usize),
    #[error("map is not a covering: {0}")]
    NotACovering(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("word is trivial after reduction")]
    EmptyWord,
    #[error("letter {letter} outside rank {rank}")]
    LetterOutOfRange { letter: i32, rank: usize },
    #[error("words {0} and {1} are commensurable")]
    CommensurableWords(usize, usize),
    #[error("unrecognised letter {0:?}")]
    BadLetter(char),
    #[error("rank must be between 1 and 26, got {0}")]
    BadRank(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LeightonError {
    #[error("inputs do not have isomorphic universal covers: {0}")]
    IncompatibleUniversalCovers(String),
    #[error("no admissible polyhedral pairs: {0}")]
    NoAdmissiblePairs(String),
    #[error("more than {limit} decorated star isomorphisms at one vertex pair; the cover would be too large to build")]
    StarIsomorphismLimit { limit: usize },
    #[error("inconsistent extension ratios: {0}")]
    InconsistentRatios(String),
    #[error("input is not a graph with fins: {0}")]
    BadInput(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GosError {
    #[error("malformed graph of spaces: {0}")]
    Malformed(String),
    #[error("class density is not constant for colour {colour}: {detail}")]
    InconsistentClassDensity { colour: String, detail: String },
    #[error(transparent)]
    FinGraph(#[from] FinGraphError),
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("no matching: {diagnostic} (this does not show the inputs are not commensurable)")]
    NoMatching { diagnostic: String },
    #[error("search budget exhausted: {0}")]
    BudgetExhausted(String),
    #[error("gluing equations have no positive solution: {0}")]
    NonPositiveSolution(String),
    #[error("construction failed its own verification: {0}")]
    SelfCheck(String),
    #[error(transparent)]
    Leighton(#[from] LeightonError),
    #[error(transparent)]
    Gos(#[from] GosError),
}
