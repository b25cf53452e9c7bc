"""dq modelling, circuit simulation and mutual inductance identification for
series-parallel compensated wireless power transfer links."""

__version__ = "0.1.0"

from .dq_model import (  # noqa: E402
    DqInput,
    DqState,
    dq_derivatives,
    dq_steady_state,
    integrate_dq,
    vector_magnitude,
    vector_phase,
)
from .identify import IdentificationResult, identify_M, relative_error  # noqa: E402
from .oracle import SampledTrace, drive_voltage, extract_steady_state, simulate  # noqa: E402
from .params import (  # noqa: E402
    DriveSpec,
    OperatingPoint,
    SystemParams,
    Waveform,
    coupling_coefficient,
    fundamental_voltage,
    reference_params,
)
from .phasor import PhasorSolution, frequency_sweep, receiver_branch_impedance, solve_steady_state  # noqa: E402
from .transforms import DqSampleStream, alphabeta_to_dq, quadrature_delay, stream_to_dq  # noqa: E402

__all__ = [
    "DqInput",
    "DqSampleStream",
    "DqState",
    "DriveSpec",
    "IdentificationResult",
    "OperatingPoint",
    "PhasorSolution",
    "SampledTrace",
    "SystemParams",
    "Waveform",
    "alphabeta_to_dq",
    "coupling_coefficient",
    "dq_derivatives",
    "dq_steady_state",
    "drive_voltage",
    "extract_steady_state",
    "frequency_sweep",
    "fundamental_voltage",
    "identify_M",
    "integrate_dq",
    "quadrature_delay",
    "receiver_branch_impedance",
    "reference_params",
    "relative_error",
    "simulate",
    "solve_steady_state",
    "stream_to_dq",
    "vector_magnitude",
    "vector_phase",
]
