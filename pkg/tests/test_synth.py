import numpy as np
import pytest
from scipy import stats

from noduleml import schema
from noduleml.dataset import preprocess
from noduleml.errors import ConfigError, DataError
from noduleml.synth import DEFAULT_SIGNAL, STRONG_SIGNAL, synthesize


class TestDeterminism:
    def test_same_seed_identical(self):
        a = synthesize(50, seed=123)
        b = synthesize(50, seed=123)
        assert a == b

    def test_different_seed_differs(self):
        assert synthesize(50, seed=1) != synthesize(50, seed=2)


class TestStructure:
    def test_nodules_per_patient_one_to_three(self):
        ds = synthesize(200, seed=5)
        counts = {}
        for rec in ds.records:
            counts[rec.patient_id] = counts.get(rec.patient_id, 0) + 1
        assert set(counts.values()) <= {1, 2, 3}
        assert len(counts) == 200

    def test_laterality_consistent_with_structure(self):
        ds = synthesize(150, seed=6)
        counts = {}
        for rec in ds.records:
            counts[rec.patient_id] = counts.get(rec.patient_id, 0) + 1
        for rec in ds.records:
            expected = "unilateral" if counts[rec.patient_id] == 1 else "multilateral"
            assert rec.laterality == expected

    def test_one_nodule_per_location(self):
        ds = synthesize(120, seed=7)
        keys = [(r.patient_id, r.location) for r in ds.records]
        assert len(keys) == len(set(keys))

    def test_preprocess_is_identity_on_synthetic(self):
        ds = synthesize(80, seed=8)
        assert preprocess(ds) == ds

    def test_minimum_patient_count(self):
        with pytest.raises(DataError):
            synthesize(5, seed=1)


class TestMarginals:
    def test_default_signal_malignant_rate(self):
        ds = synthesize(2000, seed=31)
        assert ds.labels().mean() == pytest.approx(schema.MALIGNANT_RATE, abs=0.05)

    def test_all_zero_signal_matches_intercept_rate(self):
        # binomial 99% band around the base rate implied by the intercept
        for seed in (1, 2, 3):
            ds = synthesize(1000, seed=seed, signal={})
            n = len(ds)
            k = int(ds.labels().sum())
            lo, hi = stats.binom.ppf([0.005, 0.995], n, schema.MALIGNANT_RATE)
            assert lo <= k <= hi, (seed, k, (lo, hi))

    def test_explicit_intercept_respected(self):
        ds = synthesize(2000, seed=9, signal={}, intercept=0.0)
        n = len(ds)
        k = int(ds.labels().sum())
        lo, hi = stats.binom.ppf([0.005, 0.995], n, 0.5)
        assert lo <= k <= hi

    def test_categorical_frequencies_near_targets(self):
        # every level within +/-0.04 of target in at least 20 of 25 seeds
        passes = 0
        for seed in range(25):
            ds = synthesize(1000, seed=seed)
            n = len(ds)
            ok = True
            for field, freqs in schema.MARGINAL_FREQUENCIES.items():
                counts = {lvl: 0 for lvl in schema.levels(field)}
                for rec in ds.records:
                    counts[getattr(rec, field)] += 1
                for lvl, target in freqs.items():
                    if abs(counts[lvl] / n - target) > 0.04:
                        ok = False
            if abs(ds.labels().mean() - schema.MALIGNANT_RATE) > 0.04:
                ok = False
            passes += ok
        assert passes >= 20, passes

    def test_numeric_locations_near_targets(self):
        ds = synthesize(3000, seed=17)
        ages = np.array([r.age for r in ds.records])
        sizes = np.array([r.size for r in ds.records])
        tsh = np.array([r.tsh for r in ds.records])
        assert ages.mean() == pytest.approx(46.61, abs=1.5)
        assert ages.min() >= 13 and ages.max() <= 82
        assert sizes.mean() == pytest.approx(1.73, abs=0.15)
        assert np.median(tsh) == pytest.approx(1.46, abs=0.15)
        assert (sizes > 0).all()


class TestSignalMap:
    def test_unknown_variable_rejected(self):
        with pytest.raises(ConfigError):
            synthesize(20, seed=1, signal={"bogus": 1.0})
        with pytest.raises(ConfigError):
            synthesize(20, seed=1, signal={"calcification=weird": 1.0})

    def test_known_forms_accepted(self):
        synthesize(20, seed=1, signal={"size": 0.5, "margin=unclear": 0.3})

    def test_presets_are_valid(self):
        synthesize(20, seed=1, signal=dict(DEFAULT_SIGNAL))
        synthesize(20, seed=1, signal=dict(STRONG_SIGNAL))
