import pytest

from nvhp.models.models import DressedParams, HyperfinePair, NvConstants

GAMMA_N_B = 10.705 * 0.36


@pytest.fixture(autouse=True)
def isolated_dirs(tmp_path, monkeypatch):
    """Keep log files and default outputs inside the test's tmp directory"""
    monkeypatch.setenv("NVHP_LOG_DIR", str(tmp_path / "logs"))
    monkeypatch.setenv("NVHP_OUTPUT_DIR", str(tmp_path / "outputs"))


@pytest.fixture
def constants():
    return NvConstants()


@pytest.fixture
def dressed():
    return DressedParams(omega_eff=3.0, gamma_n_B=GAMMA_N_B)


@pytest.fixture
def hyperfine():
    return HyperfinePair(a_x_prime=0.6)
