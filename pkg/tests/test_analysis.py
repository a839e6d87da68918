import numpy as np
import pytest

from loopgas.analysis import (FlipIntervalEstimate, aggregate_repetitions,
                              fit_finite_size, flip_interval)


def test_clean_single_flip():
    xs = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    labels = [-1, -1, -1, 1, 1, 1]
    est = flip_interval(xs, labels)
    assert est.x_lo == 0.2 and est.x_hi == 0.3
    assert np.isclose(est.center, 0.25)
    assert np.isclose(est.half_width, 0.05)


def test_noisy_multi_flip():
    xs = (0.1, 0.2, 0.3, 0.4)
    labels = (-1, 1, -1, 1)
    est = flip_interval(xs, labels)
    assert est.x_lo == 0.1 and est.x_hi == 0.4
    assert np.isclose(est.center, 0.25)
    assert np.isclose(est.half_width, 0.15)


def test_uniform_labels_rejected():
    with pytest.raises(ValueError):
        flip_interval([0.1, 0.2, 0.3], [-1, -1, -1])
    with pytest.raises(ValueError):
        flip_interval([0.1, 0.2, 0.3], [1, 1, 1])


def test_equal_extremes_rejected():
    # boundary labels agree, so no topological-to-ferromagnetic interval exists
    with pytest.raises(ValueError):
        flip_interval([0.1, 0.2, 0.3], [-1, 1, -1])


def test_unsorted_xs_rejected():
    with pytest.raises(ValueError):
        flip_interval([0.3, 0.1, 0.2], [-1, -1, 1])


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        flip_interval([0.1, 0.2], [-1])


def test_fss_two_point_exact():
    # two points determine the line exactly: x_c'(p) = b + a / sqrt(p)
    fit = fit_finite_size([(1.0, 0.3), (4.0, 0.25)])
    # 1/sqrt(1) = 1, 1/sqrt(4) = 0.5 -> slope 0.1, intercept 0.2
    assert np.isclose(fit.slope, 0.1)
    assert np.isclose(fit.intercept, 0.2)
    assert fit.intercept_stderr == 0.0


def test_fss_one_point_rejected():
    with pytest.raises(ValueError):
        fit_finite_size([(1.0, 0.3)])


def test_fss_paper_qcnn_centers():
    points = [(1, 0.272), (2, 0.267), (4, 0.282), (6, 0.246)]
    fit = fit_finite_size(points)
    assert abs(fit.intercept - 0.252) < 2e-3
    assert abs(fit.intercept_stderr - 0.026) < 1e-3


def test_fss_paper_kmeans_centers():
    points = [(1, 0.262), (2, 0.272), (4, 0.282), (6, 0.277)]
    fit = fit_finite_size(points)
    assert 0.28 <= fit.intercept <= 0.30
    assert abs(fit.intercept_stderr - 0.006) < 1e-3


def test_fss_accepts_estimates():
    points = [(1, FlipIntervalEstimate(0.26, 0.30)),
              (4, FlipIntervalEstimate(0.24, 0.26))]
    fit = fit_finite_size(points)
    assert np.isclose(fit.slope, (0.28 - 0.25) / 0.5)


def test_aggregate():
    ests = [FlipIntervalEstimate(0.15, 0.25), FlipIntervalEstimate(0.25, 0.35)]
    mean, std = aggregate_repetitions(ests)
    assert np.isclose(mean, 0.25)
    assert np.isclose(std, np.std([0.2, 0.3], ddof=1))
    assert np.isclose(std, 0.0707, atol=1e-4)


def test_aggregate_identical():
    ests = [FlipIntervalEstimate(0.2, 0.3)] * 3
    mean, std = aggregate_repetitions(ests)
    assert mean == 0.25 and std == 0.0


def test_aggregate_single():
    mean, std = aggregate_repetitions([FlipIntervalEstimate(0.2, 0.3)])
    assert mean == 0.25 and std == 0.0
