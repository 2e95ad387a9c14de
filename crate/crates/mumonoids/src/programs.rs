//! The built-in benchmark programs and the datasets they run on.

use std::fmt;
use std::str::FromStr;

use mumonoids_core::{parse_program, Program};

use crate::generate::{self, GraphSpec};
use crate::Inputs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BenchmarkId {
    Tc,
    Sp,
    TcFilter,
    SpFilter,
    Flights,
    PathPlanning,
    MovieRec,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 7] = [
        BenchmarkId::Tc,
        BenchmarkId::Sp,
        BenchmarkId::TcFilter,
        BenchmarkId::SpFilter,
        BenchmarkId::Flights,
        BenchmarkId::PathPlanning,
        BenchmarkId::MovieRec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::Tc => "TC",
            BenchmarkId::Sp => "SP",
            BenchmarkId::TcFilter => "TC-filter",
            BenchmarkId::SpFilter => "SP-filter",
            BenchmarkId::Flights => "Flights",
            BenchmarkId::PathPlanning => "PathPlanning",
            BenchmarkId::MovieRec => "MovieRec",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            BenchmarkId::Tc => include_str!("../programs/tc.mm"),
            BenchmarkId::Sp => include_str!("../programs/sp.mm"),
            BenchmarkId::TcFilter => include_str!("../programs/tc_filter.mm"),
            BenchmarkId::SpFilter => include_str!("../programs/sp_filter.mm"),
            BenchmarkId::Flights => include_str!("../programs/flights.mm"),
            BenchmarkId::PathPlanning => include_str!("../programs/path_planning.mm"),
            BenchmarkId::MovieRec => include_str!("../programs/movie_rec.mm"),
        }
    }

    pub fn program(self) -> Program {
        parse_program(self.source()).expect("built-in programs parse")
    }

    /// Inputs for this program generated from an Erdős–Rényi graph.
    pub fn dataset(self, g: GraphSpec) -> Inputs {
        let mut inputs = Inputs::new();
        match self {
            BenchmarkId::Tc | BenchmarkId::TcFilter => {
                inputs.insert("R".into(), generate::edge_bag(&generate::erdos_renyi(g)));
            }
            BenchmarkId::Sp | BenchmarkId::SpFilter => {
                inputs.insert(
                    "R".into(),
                    generate::weighted_edge_bag(&generate::weighted_erdos_renyi(g)),
                );
            }
            BenchmarkId::Flights => {
                inputs.insert("R".into(), generate::flights(g));
            }
            BenchmarkId::PathPlanning => {
                inputs.insert("R".into(), generate::routes(g));
            }
            BenchmarkId::MovieRec => {
                let (users, start) = generate::users(g);
                inputs.insert("U".into(), users);
                inputs.insert("S".into(), start);
            }
        }
        inputs
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown benchmark `{0}`; expected one of TC, SP, TC-filter, SP-filter, Flights, PathPlanning, MovieRec")]
pub struct UnknownBenchmark(pub String);

impl FromStr for BenchmarkId {
    type Err = UnknownBenchmark;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.name().to_ascii_lowercase().replace('-', "") == norm)
            .ok_or_else(|| UnknownBenchmark(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mumonoids_core::typeck::typecheck;

    #[test]
    fn every_program_parses_and_typechecks() {
        for id in BenchmarkId::ALL {
            let p = id.program();
            typecheck(&p.input_types(), &p.body).unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }

    #[test]
    fn ids_parse_loosely() {
        assert_eq!("tc".parse::<BenchmarkId>().unwrap(), BenchmarkId::Tc);
        assert_eq!("SP-filter".parse::<BenchmarkId>().unwrap(), BenchmarkId::SpFilter);
        assert_eq!(
            "path_planning".parse::<BenchmarkId>().unwrap(),
            BenchmarkId::PathPlanning
        );
        assert!("wordcount".parse::<BenchmarkId>().is_err());
    }
}
