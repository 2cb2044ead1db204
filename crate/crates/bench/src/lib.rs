//! Shared fixtures for the benches: reproducible Hamiltonians at sizes the
//! closure engine and both evolution backends handle in milliseconds, so a
//! full `cargo bench` stays quick on one core.

use opclass::{build_xy, build_xyzz, Boundary, Hamiltonian, XYCouplings, XYZZCouplings};

/// Open XY chain with random couplings and fields from a fixed seed.
pub fn xy_chain(num_sites: u32) -> Hamiltonian {
    let c = XYCouplings::random(num_sites, 0.3, 1.5, 91, Boundary::Open)
        .expect("valid coupling spec");
    build_xy(&c).expect("valid chain")
}

/// Alternating XX+YY / ZZ chain with random couplings from a fixed seed.
pub fn xyzz_chain(num_sites: u32) -> Hamiltonian {
    let c = XYZZCouplings::random(num_sites, 0.3, 1.5, 91).expect("valid coupling spec");
    build_xyzz(&c).expect("valid chain")
}
