import pytest

from wpt_dq.params import REFERENCE_FREQUENCY, REFERENCE_U_DC, DriveSpec, reference_params


@pytest.fixture
def params9():
    return reference_params(9.0e-6)


@pytest.fixture
def params15():
    return reference_params(15.0e-6)


@pytest.fixture
def drive():
    return DriveSpec(U_dc=REFERENCE_U_DC, f=REFERENCE_FREQUENCY)


@pytest.fixture
def square_drive():
    return DriveSpec(U_dc=REFERENCE_U_DC, f=REFERENCE_FREQUENCY, waveform="phase_shift_square")
