"""Five-level atom simulation backends."""

from c4sim.sim.states import (  # noqa: F401  (re-exports)
    DIM,
    DensityMatrix,
    KrausChannel,
    Level,
    LevelBasis,
    PureState,
    Readout,
    ShotRecord,
    SimulationError,
    apply_channel,
    apply_cz,
    embed_single_qubit,
    measure_terminal,
)
from c4sim.sim.exact import exact_density, exact_distribution  # noqa: F401
from c4sim.sim.trajectory import sample_counts, sample_shots  # noqa: F401
