import pytest

from boostbif import (CmcClosedLoop, ConverterParams, Pvmc, VmcType3,
                      build_cmc_model, build_pvmc_model, build_type3_model)


@pytest.fixture(scope="session")
def ex1_params():
    """PVMC converter with k_p = 2 and r = 0.1 ohm (eta = 0.05)."""
    return ConverterParams(v_s=3.0, L=1e-6, C_f=100e-6, R=2.0, r=0.1,
                           R_c=0.0, V_h=1.0, f_s=600e3, scheme=Pvmc(k_p=2.0))


@pytest.fixture(scope="session")
def ex2_params():
    """Type-III VMC converter with ESR and r = 0.6 ohm (eta = 0.0261)."""
    return ConverterParams(v_s=10.0, L=46.6e-6, C_f=3e-3, R=23.0, r=0.6,
                           R_c=18e-3, V_h=2.0, f_s=300e3,
                           scheme=VmcType3(K_c=35.59, z1=556.0, z2=549.0,
                                           p1=25510.0, p2=19495.0))


@pytest.fixture(scope="session")
def ex3_params():
    """Closed-loop CMC converter, no compensation ramp, power stage of ex1."""
    return ConverterParams(v_s=3.0, L=1e-6, C_f=100e-6, R=2.0, r=0.1,
                           R_c=0.0, V_h=0.0, f_s=600e3,
                           scheme=CmcClosedLoop(k_p=2.0))


@pytest.fixture(scope="session")
def ex1_model(ex1_params):
    return build_pvmc_model(ex1_params)


@pytest.fixture(scope="session")
def ex2_model(ex2_params):
    return build_type3_model(ex2_params)


@pytest.fixture(scope="session")
def ex3_model(ex3_params):
    return build_cmc_model(ex3_params)
