import numpy as np
import pytest
from hypothesis import given, strategies as st

from fanout_dqst.dqst import enumerate_settings, estimate_elements
from fanout_dqst.formats import (
    FormatError,
    dumps_confusion,
    dumps_counts,
    dumps_estimates,
    dumps_matrix,
    dumps_zne,
    fmt_float,
    loads_confusion,
    loads_counts,
    loads_estimates,
    loads_matrix,
    loads_zne,
    read_text,
    write_text,
)
from fanout_dqst.mitigation import calibrate_confusion, calibrate_confusion_full, run_zne
from fanout_dqst.qcore import BitVector, random_density_matrix
from fanout_dqst.simkernel import CountTable, NoiseModel, Setting, exact_distribution, sample_shots

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def sample_table(n=3, shots=500, seed=4, basis="X", k=None):
    rho = random_density_matrix(n, np.random.default_rng(seed))
    s = Setting(BitVector.ones(n) if k is None else BitVector.from_string(k), basis, 3)
    return sample_shots(exact_distribution(rho, s), shots, seed)


class TestCounts:
    def test_round_trip(self):
        t = sample_table()
        text = dumps_counts(t)
        back = loads_counts(text)
        assert back == t
        assert dumps_counts(back) == text

    def test_layout(self):
        t = CountTable(Setting(BitVector.from_string("10"), "Y"), 10, {(0, 1): 3, (0, -1): 2, (2, 1): 5}, seed=7)
        lines = dumps_counts(t).splitlines()
        assert lines[:8] == [
            "# fanout-dqst count table",
            "format_version: 1",
            "n: 2",
            "k: 10",
            "basis: Y",
            "fold: 1",
            "shots: 10",
            "seed: 7",
        ]
        assert lines[8:] == ["outcome_bits,meter_sign,count", "00,+1,3", "00,-1,2", "10,+1,5"]

    def test_no_seed(self):
        t = CountTable(Setting(BitVector.zeros(1), "X"), 2, {(0, 1): 2})
        assert "seed: none" in dumps_counts(t)
        assert loads_counts(dumps_counts(t)).seed is None

    def test_bad_version(self):
        text = dumps_counts(sample_table()).replace("format_version: 1", "format_version: 2")
        with pytest.raises(FormatError):
            loads_counts(text)

    def test_missing_columns(self):
        with pytest.raises(FormatError):
            loads_counts("format_version: 1\nn: 1\n")

    def test_wrong_width(self):
        text = dumps_counts(sample_table(n=2)).replace("\n11,", "\n111,")
        with pytest.raises(FormatError):
            loads_counts(text)


class TestEstimates:
    def test_round_trip(self):
        ests = estimate_elements(sample_table(basis="Y"))
        text = dumps_estimates(ests)
        back = loads_estimates(text)
        assert back == ests and dumps_estimates(back) == text

    def test_empty(self):
        with pytest.raises(FormatError):
            dumps_estimates([])


class TestConfusion:
    def test_per_qubit(self):
        cm = calibrate_confusion(NoiseModel(readout_flip=(0.02, 0.05)), 3, 999, seed=1)
        text = dumps_confusion(cm)
        back = loads_confusion(text)
        assert all(np.array_equal(a, b) for a, b in zip(back.blocks, cm.blocks))
        assert dumps_confusion(back) == text

    def test_full(self):
        cm = calibrate_confusion_full(NoiseModel(readout_flip=(0.02, 0.05)), 2, 777, seed=2)
        back = loads_confusion(dumps_confusion(cm))
        assert back.mode == "full" and np.array_equal(back.full, cm.full)


class TestMatrix:
    def test_round_trip(self, rng):
        rho = random_density_matrix(3, rng)
        text = dumps_matrix(rho, "projected")
        assert np.array_equal(loads_matrix(text), rho.mat)
        assert dumps_matrix(loads_matrix(text), "projected") == text

    def test_size_check(self):
        text = dumps_matrix(np.eye(2) / 2).replace('"n": 1', '"n": 2')
        with pytest.raises(FormatError):
            loads_matrix(text)

    @given(st.lists(finite, min_size=8, max_size=8))
    def test_bit_exact(self, vals):
        m = (np.array(vals[0::2]) + 1j * np.array(vals[1::2])).reshape(2, 2)
        back = loads_matrix(dumps_matrix(m))
        assert np.array_equal(back.view(np.float64), m.view(np.float64))


class TestZne:
    def test_round_trip(self):
        series = run_zne(lambda f, s, r: 1 - 0.01 * f + 0.001 * r.standard_normal(), twirl_instances=5, seed=2)
        text = dumps_zne(series)
        back = loads_zne(text)
        assert back == series and back.instance_values == series.instance_values
        assert dumps_zne(back) == text


@given(finite)
def test_float_format_exact(x):
    assert float(fmt_float(x)) == x


def test_file_helpers(tmp_path):
    p = write_text(tmp_path / "a" / "b.txt", "x\ny\n")
    assert read_text(p) == "x\ny\n"
    assert p.read_bytes() == b"x\ny\n"


def test_all_settings_round_trip():
    rho = random_density_matrix(2, np.random.default_rng(1))
    for i, s in enumerate(enumerate_settings(2)):
        t = sample_shots(exact_distribution(rho, s), 50, i)
        assert loads_counts(dumps_counts(t)) == t
