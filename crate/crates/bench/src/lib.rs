//! Fixtures shared by the benchmarks.

use dce_core::channels::{ChannelKind, ChannelModel, ChannelModelSpec};
use dce_core::signal::{
    build_received_grid, make_pilot_allocation, ChannelScene, ContaminationSpec, DataFill, PilotArrangement,
    ReceivedGrid,
};
use dce_core::numerics::RngStream;

/// One user on a 64×64 TDL grid with `m` antennas at `snr_db`.
pub fn received_grid(m: usize, snr_db: f64, seed: u64) -> ReceivedGrid {
    let (nf, n) = (64, 64);
    let model = ChannelModel::new(ChannelModelSpec::new(ChannelKind::Tdl, m, nf, n)).expect("valid spec");
    let base = RngStream::new(seed, 0);
    let allocation = make_pilot_allocation(1, 1, PilotArrangement::BlockSymbol, nf, n, &mut base.fork(2))
        .expect("one user fits");
    let scene = ChannelScene {
        channels: vec![model.realize(&mut base.fork(1))],
        interferer: None,
        allocation,
        noise_var: 10f64.powf(-snr_db / 10.0),
        data_fill: DataFill::Pilot,
        contamination: ContaminationSpec::none(),
    };
    build_received_grid(scene, &mut base.fork(3)).expect("grid builds")
}
