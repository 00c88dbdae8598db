//! Fixtures shared by the criterion benchmarks.

use relu_pwl::network::sawtooth_net;
use relu_pwl::rational::{int, rat};
use relu_pwl::zonotope::{zonotope_family_net, Zonotope, ZonotopeFamilyParams};
use relu_pwl::{ReluNetwork, SawtoothParams};

/// Uniform sawtooth of width `w`, depth `k`, height 1.
pub fn sawtooth_params(w: usize, k: usize) -> SawtoothParams {
    SawtoothParams::uniform(w, k, int(1)).expect("w >= 2")
}

pub fn sawtooth_network(w: usize, k: usize) -> ReluNetwork {
    sawtooth_net(&sawtooth_params(w, k)).expect("valid params")
}

/// Four fixed planar generators under a
/// `w = 2` sawtooth of depth `k`.
pub fn planar_family(k: usize) -> ReluNetwork {
    let z = Zonotope::new(
        2,
        vec![
            vec![rat(1, 4), rat(1, 2)],
            vec![rat(-1, 2), int(0)],
            vec![int(0), rat(-1, 4)],
            vec![rat(-1, 4), rat(-1, 4)],
        ],
    )
    .expect("valid generators");
    let p = ZonotopeFamilyParams::new(z, sawtooth_params(2, k)).expect("valid params");
    zonotope_family_net(&p).expect("valid params")
}
