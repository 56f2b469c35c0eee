//! Engine selection by name, with admissibility checked against the
//! polynomial's structure before anything runs.

use std::fmt;
use std::str::FromStr;

use crate::approx::{attend_strassen_approx, attend_tensor_approx, attend_tree_approx, reduce_to_tensor, ApproxConfig};
use crate::error::{Error, Result};
use crate::exact::{
    attend_bruteforce_with, attend_cycle, attend_exact, attend_tree, AttentionInputs, AttentionOutput,
    BruteForceConfig,
};
use crate::poly::AttentionPolynomial;
use crate::structure::{build_structure, PolyClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineChoice {
    Auto,
    Brute,
    Tree,
    Cycle,
    /// Low-rank tree recursion or the low-rank cycle chain, by class.
    ApproxLowrank,
    ApproxTensor,
}

impl EngineChoice {
    pub const ALL: [EngineChoice; 6] = [
        EngineChoice::Auto,
        EngineChoice::Brute,
        EngineChoice::Tree,
        EngineChoice::Cycle,
        EngineChoice::ApproxLowrank,
        EngineChoice::ApproxTensor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EngineChoice::Auto => "auto",
            EngineChoice::Brute => "brute",
            EngineChoice::Tree => "tree",
            EngineChoice::Cycle => "cycle",
            EngineChoice::ApproxLowrank => "approx-lowrank",
            EngineChoice::ApproxTensor => "approx-tensor",
        }
    }

    pub fn is_approximate(self) -> bool {
        matches!(self, EngineChoice::ApproxLowrank | EngineChoice::ApproxTensor)
    }
}

impl fmt::Display for EngineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EngineChoice::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown engine {s:?}")))
    }
}

/// A single pure cycle through `x1` with nothing else attached.
fn is_bare_cycle(h: &AttentionPolynomial) -> bool {
    let st = build_structure(h);
    matches!(&st.class, PolyClass::SingleCycle { vertices, .. }
        if vertices[0] == 1 && st.branches.len() == 1 && st.isolated.is_empty())
}

pub fn is_admissible(choice: EngineChoice, h: &AttentionPolynomial) -> bool {
    let class = build_structure(h).class;
    match choice {
        EngineChoice::Auto | EngineChoice::Brute | EngineChoice::ApproxTensor => true,
        EngineChoice::Tree => class == PolyClass::TreeForest,
        EngineChoice::Cycle => matches!(class, PolyClass::SingleCycle { .. }),
        EngineChoice::ApproxLowrank => class == PolyClass::TreeForest || is_bare_cycle(h),
    }
}

pub fn admissible_engines(h: &AttentionPolynomial) -> Vec<EngineChoice> {
    EngineChoice::ALL.into_iter().filter(|&e| is_admissible(e, h)).collect()
}

pub fn run_engine(
    choice: EngineChoice,
    inp: &AttentionInputs,
    approx: &ApproxConfig,
    budget: u128,
) -> Result<AttentionOutput> {
    let h = inp.h();
    if !is_admissible(choice, h) {
        return Err(Error::NotAdmissible {
            engine: choice.name(),
            reason: format!("polynomial {h} is classified {}", build_structure(h).class.name()),
        });
    }
    match choice {
        EngineChoice::Brute => attend_bruteforce_with(inp, &BruteForceConfig { budget, safe: false }),
        EngineChoice::Tree => attend_tree(inp),
        EngineChoice::Cycle => attend_cycle(inp),
        EngineChoice::Auto => match build_structure(h).class {
            PolyClass::TreeForest => attend_tree(inp),
            PolyClass::SingleCycle { .. } => attend_cycle(inp),
            PolyClass::General => attend_exact(inp),
        },
        EngineChoice::ApproxLowrank => {
            if build_structure(h).class == PolyClass::TreeForest {
                attend_tree_approx(inp, approx)
            } else {
                attend_strassen_approx(inp, approx)
            }
        }
        EngineChoice::ApproxTensor => attend_tensor_approx(&reduce_to_tensor(inp), approx, inp.d_scale()),
    }
}
