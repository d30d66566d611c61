import numpy as np
import pytest

from hmmimo import NetworkConfig, noise_power

# criterion number -> list of (ok, detail); filled by test_acceptance
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def config():
    return NetworkConfig()


@pytest.fixture
def small_config():
    return NetworkConfig(total_antennas=16, users=4, cbs_antennas=8, epochs=20)


@pytest.fixture
def sigma(config):
    return noise_power(config)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        entries = ACCEPTANCE[crit]
        ok = all(e[0] for e in entries)
        failed = [d for good, d in entries if not good]
        detail = f"{len(entries) - len(failed)}/{len(entries)} checks"
        if failed:
            detail += "; failing: " + "; ".join(failed)
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} ({detail})")
