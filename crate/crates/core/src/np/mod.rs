//! Non-perturbative assembly: theta-dressed differentials built from the
//! recursion table by summation over three-level graphs.

mod assemble;
mod extended;
mod graph;
pub(crate) mod subst;
mod wnp;

pub use extended::{np_extended, omega1_np, omega_bullet, Chi, HSeries, Kind};
pub use assemble::{assemble_np, graph_weight, krichever_omega, NPDifferential, NPTerm, NpContext, Slot};
pub use wnp::{check_np_loop, wnp_totals};
pub use graph::{aut_count, aut_count_bruteforce, enumerate_graphs, enumerate_naive, Graph3L, VSpec, Variant};
