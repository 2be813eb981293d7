//! Fixed inputs shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symstat::oracle::random_dataset;
use symstat::{build_group, irreps, Dataset, FiniteRotationGroup, GroupSpec, IrrepSet, Mode};

pub struct Instance {
    pub group: FiniteRotationGroup,
    pub irreps: IrrepSet,
    pub data: Dataset,
}

/// A reproducible random instance.
pub fn instance(spec: GroupSpec, mode: Mode, n: usize, seed: u64) -> Instance {
    let group = build_group(spec).expect("valid group");
    let irreps = irreps(&group).expect("irreps");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Instance {
        group,
        irreps,
        data: random_dataset(mode, n, &mut rng),
    }
}
