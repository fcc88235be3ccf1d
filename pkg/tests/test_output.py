import numpy as np

from src.modules.estimator import FitResult, ModelParams
from src.modules.output import ellipse_frame, read_roots_json, roots_payload, weights_frame, write_roots_json
from src.modules.roots import RootSet


def root_set_of(*thetas):
    fits = [FitResult(theta=theta, weights=np.full(4, 0.5), iterations=3, converged=True,
                      weight_sum=2.0, weighted_loglik=-7.5, start_index=i) for i, theta in enumerate(thetas)]
    return RootSet(roots=fits, basin_counts=[1] * len(fits), provenance=[[i] for i in range(len(fits))],
                   n_failed=1, failures={'maximum iterations reached': 1}, mle=thetas[0])


def test_payload_schema():
    payload = roots_payload(root_set_of(ModelParams([0.0, 1.0], np.eye(2))), {'seed': 3})
    root = payload['roots'][0]
    assert {'id', 'mu', 'sigma', 'dim', 'basin_count', 'weight_sum', 'weighted_loglik',
            'iterations', 'converged'} <= set(root)
    assert root['sigma'] == [1.0, 0.0, 0.0, 1.0]
    assert payload['meta']['seed'] == 3
    assert payload['meta']['n_failed'] == 1
    assert 'created_at' in payload['meta']


def test_json_round_trip(tmp_path):
    theta = ModelParams([0.5, -1.0], [[2.0, 0.3], [0.3, 1.0]])
    path = str(tmp_path / 'out' / 'roots.json')
    write_roots_json(path, roots_payload(root_set_of(theta), {}))
    meta, roots = read_roots_json(path)
    assert np.array_equal(roots[0]['theta'].mu, theta.mu)
    assert np.array_equal(roots[0]['theta'].sigma, theta.sigma)
    assert meta['mle']['dim'] == 2


def test_ellipses_include_mle():
    frame = ellipse_frame(root_set_of(ModelParams(np.zeros(2), np.eye(2))), 0.95, 20)
    assert list(frame.columns) == ['root_id', 'slice', 'point_index', 'x1', 'x2']
    assert sorted(frame['root_id'].unique()) == ['0', 'mle']
    assert len(frame) == 40


def test_trivariate_slices():
    frame = ellipse_frame(root_set_of(ModelParams(np.zeros(3), np.eye(3))), 0.9, 10,
                          columns=['a', 'b', 'c'], include_mle=False)
    assert len(frame) == 30
    assert sorted(frame['slice'].unique()) == [0, 1, 2]


def test_univariate_has_no_ellipses():
    frame = ellipse_frame(root_set_of(ModelParams([0.0], [[1.0]])), 0.95, 10)
    assert frame.empty


def test_weights_frame():
    frame = weights_frame(root_set_of(ModelParams(np.zeros(2), np.eye(2)), ModelParams(np.ones(2), np.eye(2))), 4)
    assert list(frame.columns) == ['observation', 'root_0', 'root_1']
    assert frame['root_1'].tolist() == [0.5] * 4
