import pytest

from wdmshift.dispersion import DispersionModel, load_device_calibration, load_sellmeier
from wdmshift.planner import CalibrationTargets, calibrate

# Landmarks of the reference 3.8 cm device: conversion peaks at 1.2 W total
# pump power with a theoretical ceiling of 0.896.
REF_LENGTH_M = 0.038
REF_PEAK_W = 1.2
REF_ETA_MAX = 0.896


@pytest.fixture(scope="session")
def bulk_model():
    """Bulk congruent-LiNbO3 dispersion, no waveguide offsets."""
    return DispersionModel(load_sellmeier())


@pytest.fixture(scope="session")
def device():
    """Shipped device calibration (model with offsets + reference geometry)."""
    return load_device_calibration()


@pytest.fixture(scope="session")
def coupling_cal():
    """Coupling calibration from the reference landmarks."""
    return calibrate(
        CalibrationTargets(
            length_m=REF_LENGTH_M, p_total_peak_w=REF_PEAK_W, eta_theory_max=REF_ETA_MAX
        )
    )
