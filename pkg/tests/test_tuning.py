"""Hold-out hyperparameter selection."""

import numpy as np
import pytest

from conftest import make_discrete_dataset
from freqid import tuning
from freqid.problem import build_partition
from freqid.tuning import (TuneConfig, TuneError, default_decays,
                           default_lambdas, tune, validation_error)


@pytest.fixture(scope="module")
def data():
    return make_discrete_dataset(4, 13, n=60)


class TestTuneConfig:
    def test_exactly_one_split_mode(self):
        with pytest.raises(TuneError):
            TuneConfig()
        with pytest.raises(TuneError):
            TuneConfig(train_count=5, train_fraction=0.5)
        with pytest.raises(TuneError):
            TuneConfig(train_idx=np.arange(3))   # missing val_idx

    def test_prefix_split(self):
        it, iv = TuneConfig(train_count=4).split(10)
        np.testing.assert_array_equal(it, np.arange(4))
        np.testing.assert_array_equal(iv, np.arange(4, 10))
        it, iv = TuneConfig(train_fraction=0.5).split(10)
        assert it.size == 5 and iv.size == 5

    def test_explicit_split_must_partition(self):
        cfg = TuneConfig(train_idx=np.array([0, 2]), val_idx=np.array([1]))
        with pytest.raises(TuneError):
            cfg.split(4)                          # index 3 missing
        cfg = TuneConfig(train_idx=np.array([0, 1]), val_idx=np.array([1, 2]))
        with pytest.raises(TuneError):
            cfg.split(3)                          # overlap

    def test_infeasible_prefix(self):
        with pytest.raises(TuneError):
            TuneConfig(train_count=10).split(10)

    def test_grid_defaults_and_validation(self):
        cfg = TuneConfig(train_count=5)
        pts = cfg.grid("discrete")
        assert len(pts) == default_lambdas().size * \
            default_decays("discrete").size
        with pytest.raises(TuneError):
            TuneConfig(train_count=5, lambdas=np.array([-1.0])).grid(
                "discrete")
        with pytest.raises(TuneError):
            TuneConfig(train_count=5, lambdas=np.array([]),
                       ).grid("discrete")

    def test_random_refinement_is_seeded(self):
        a = TuneConfig(train_count=5, n_random=4, seed=3).grid("discrete")
        b = TuneConfig(train_count=5, n_random=4, seed=3).grid("discrete")
        assert a == b
        lams = default_lambdas()
        decs = default_decays("discrete")
        for lam, dec in a[-4:]:
            assert lams.min() <= lam <= lams.max()
            assert decs.min() <= dec <= decs.max()


class TestValidationError:
    def test_is_holdout_mse(self, data):
        cfg = TuneConfig(train_count=40)
        v = validation_error(data, cfg, 0.5, 0.85, None, 1e-5)
        # recompute by hand
        from freqid.identify import identify, predict
        from freqid.kernels import KernelSpec
        from freqid.tuning import _subset
        it, iv = cfg.split(data.n_samples)
        m = identify(_subset(data, it), KernelSpec.discrete(0.85), None,
                     0.5, 1e-5)
        resid = data.outputs[iv] - predict(m, data.sample_times[iv])
        assert v == pytest.approx(float(np.mean(resid ** 2)), rel=1e-12)

    def test_wraps_failures(self, data):
        cfg = TuneConfig(train_count=40)
        with pytest.raises(TuneError, match="identification failed"):
            validation_error(data, cfg, -1.0, 0.85, None, 1e-5)


class TestTune:
    def test_singleton_grid_returns_that_point(self, data):
        cfg = TuneConfig(train_count=40, lambdas=np.array([0.5]),
                         decays=np.array([0.8]))
        res = tune(data, cfg, None, 1e-5)
        assert res.lam == 0.5 and res.decay == 0.8
        assert res.table.shape == (1, 3)
        assert res.v == res.table[0, 2]

    def test_table_covers_grid_and_is_deterministic(self, data):
        cfg = TuneConfig(train_count=40, lambdas=np.array([0.1, 1.0]),
                         decays=np.array([0.7, 0.9]))
        r1 = tune(data, cfg, None, 1e-5)
        r2 = tune(data, cfg, None, 1e-5)
        assert r1.table.shape == (4, 3)
        np.testing.assert_array_equal(r1.table, r2.table)
        assert (r1.lam, r1.decay, r1.v) == (r2.lam, r2.decay, r2.v)
        assert r1.v == r1.table[:, 2].min()

    def test_ties_break_toward_stronger_regularization(self, data,
                                                       monkeypatch):
        monkeypatch.setattr(tuning, "validation_error",
                            lambda *a, **k: 1.0)
        cfg = TuneConfig(train_count=40, lambdas=np.array([0.1, 1.0]),
                         decays=np.array([0.7, 0.9]))
        res = tune(data, cfg, None, 1e-5)
        assert res.lam == 1.0 and res.decay == 0.9

    def test_failed_candidates_score_infinity(self, data, monkeypatch):
        calls = {"n": 0}

        def flaky(*a, **k):
            calls["n"] += 1
            if calls["n"] == 1:
                raise TuneError("boom")
            return float(calls["n"])

        monkeypatch.setattr(tuning, "validation_error", flaky)
        cfg = TuneConfig(train_count=40, lambdas=np.array([0.1, 1.0]),
                         decays=np.array([0.7]))
        res = tune(data, cfg, None, 1e-5)
        assert res.table[0, 2] == np.inf
        assert res.lam == 1.0

    def test_all_failures_raise(self, data, monkeypatch):
        def dead(*a, **k):
            raise TuneError("nope")

        monkeypatch.setattr(tuning, "validation_error", dead)
        cfg = TuneConfig(train_count=40, lambdas=np.array([0.1]),
                         decays=np.array([0.7]))
        with pytest.raises(TuneError, match="all candidates failed"):
            tune(data, cfg, None, 1e-5)

    def test_save_table_format(self, data, tmp_path):
        cfg = TuneConfig(train_count=40, lambdas=np.array([0.5]),
                         decays=np.array([0.8]))
        res = tune(data, cfg, None, 1e-5)
        out = tmp_path / "table.csv"
        res.save_table(out)
        lines = out.read_text().splitlines()
        assert lines[0] == "lambda,decay,v"
        lam, dec, v = (float(x) for x in lines[1].split(","))
        assert (lam, dec, v) == (res.lam, res.decay, res.v)

    def test_constrained_tuning_runs(self, data):
        p = build_partition(np.pi, np.pi / 40)
        cfg = TuneConfig(train_count=40, lambdas=np.array([0.5]),
                         decays=np.array([0.85]))
        res = tune(data, cfg, p, 1e-5)
        assert np.isfinite(res.v)
