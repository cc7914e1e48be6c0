import pytest

from temcodec.signals import TWO_PI, band_spec_from_edges, modulated_test_signal
from temcodec.tem import TemParams, encode_two_channel, interleave


@pytest.fixture(scope="session")
def test_signal():
    return modulated_test_signal()


@pytest.fixture(scope="session")
def band_35_65():
    return band_spec_from_edges(TWO_PI * 35.0, TWO_PI * 65.0)


@pytest.fixture(scope="session")
def two_channel_record(test_signal):
    """Two-channel encode of the test waveform with bandwidth-sized interval."""
    delta = (1.0 / 30.0) / 2.0
    params = TemParams(kappa=1.0, delta=delta, bias=3.0, amplitude_bound=2.0)
    train_a, train_b = encode_two_channel(
        test_signal, params, (-1.0, 1.0), alpha=1.5 * delta
    )
    return params, train_a, train_b, interleave(train_a, train_b)
