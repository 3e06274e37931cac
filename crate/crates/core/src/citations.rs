//! Labels naming the result each threshold rule, bound or recipe reproduces.
//! They appear in CSV `citation_of_threshold` columns and bound reports.

pub const SQUARED_SUM: &str = "Proposition 3.1";
pub const GLRT_SMALL: &str = "Proposition 3.2";
pub const GLRT_LARGE: &str = "Proposition 3.3";
pub const LOCAL_SUM: &str = "Proposition 3.4";
pub const GOF: &str = "Proposition 3.5";
pub const GOF_SMALL_K: &str = "Proposition 3.5 (binomial tail)";
pub const NP_SINGLETON: &str = "Proposition 2.1";
pub const BAYES_LR: &str = "Theorem 2.1";
pub const GLRT_SUBOPTIMAL: &str = "Theorem 3.1";
pub const COR_DISJOINT: &str = "Corollary 2.1";
pub const COR_INTERVALS: &str = "Corollary 2.2";
pub const COR_KSETS: &str = "Corollary 2.3";
pub const COR_MATCHINGS: &str = "Corollary 2.4";
pub const COR_TREES: &str = "Corollary 2.5";
