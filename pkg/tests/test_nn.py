import math

import numpy as np
import pytest

from fedblockhealth.errors import DomainError, FormatError
from fedblockhealth.nn import (
    AnnSpec,
    BatchNorm,
    CnnSpec,
    Conv2D,
    Dense,
    Flatten,
    MaxPool,
    Model,
    TrainConfig,
    backward,
    build_ann,
    build_cnn,
    dumps_checkpoint,
    evaluate,
    forward,
    load_checkpoint,
    loads_checkpoint,
    loss,
    save_checkpoint,
    sgd_step,
    train,
)
from fedblockhealth.rng import make_rng


def _model_loss(model, x, y):
    probs, _ = forward(model, x, training=True)
    return loss(probs, y)


def gradient_errors(model, x, y, h=1e-5):
    """Norm-wise relative error of backprop vs central differences, per parameter tensor."""
    probs, cache = forward(model, x, training=True)
    grads = backward(model, cache, y)
    errors = []
    for layer, g in zip(model.layers, grads):
        for name, p in layer.params.items():
            fd = np.zeros_like(p)
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                old = p[i]
                p[i] = old + h
                up = _model_loss(model, x, y)
                p[i] = old - h
                down = _model_loss(model, x, y)
                p[i] = old
                fd[i] = (up - down) / (2 * h)
            # floor: a bias feeding batch norm has an exactly-zero gradient,
            # where both sides are pure rounding noise
            denom = max(np.linalg.norm(fd) + np.linalg.norm(g[name]), 1e-6)
            errors.append((f"{layer.kind}.{name}", np.linalg.norm(fd - g[name]) / denom))
    return errors


def _random_case(kind, seed):
    """A small softmax-headed model exercising one layer variant, plus a batch."""
    rng = make_rng(seed)
    n = int(rng.integers(2, 5))
    k = int(rng.integers(2, 5))
    if kind == "dense":
        d_in, d_h = int(rng.integers(2, 6)), int(rng.integers(2, 6))
        act = ["linear", "relu", "sigmoid"][seed % 3]
        layers = [Dense(d_in, d_h, act), Dense(d_h, k, "softmax")]
        shape = (d_in,)
    elif kind == "conv2d":
        c, f = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        kern = int(rng.integers(1, 4))
        stride = int(rng.integers(1, 3))
        pad = int(rng.integers(0, 2))
        hw = int(rng.integers(kern + 1, 7))
        act = ["linear", "relu", "sigmoid"][seed % 3]
        conv = Conv2D(c, f, kernel=kern, stride=stride, padding=pad, activation=act)
        shape = (c, hw, hw)
        out = conv.output_shape(shape)
        layers = [conv, Flatten(), Dense(int(np.prod(out)), k, "softmax")]
    elif kind == "maxpool":
        c, w = int(rng.integers(1, 3)), int(rng.integers(2, 4))
        hw = int(rng.integers(w, 9))
        shape = (c, hw, hw)
        conv = Conv2D(c, 2, kernel=3, padding=1, activation="linear")
        pool = MaxPool(w)
        out = pool.output_shape(conv.output_shape(shape))
        layers = [conv, pool, Flatten(), Dense(int(np.prod(out)), k, "softmax")]
    elif kind == "batchnorm":
        if seed % 2:
            c, hw = int(rng.integers(1, 4)), int(rng.integers(2, 4))
            shape = (c, hw, hw)
            layers = [Conv2D(c, 2, kernel=3, padding=1, activation="linear"), BatchNorm(2), Flatten(),
                      Dense(2 * hw * hw, k, "softmax")]
        else:
            d = int(rng.integers(2, 5))
            shape = (d,)
            layers = [Dense(d, 3, "linear"), BatchNorm(3), Dense(3, k, "softmax")]
        n = max(n, 3)
    elif kind == "flatten":
        shape = (2, 3, 3)
        layers = [Conv2D(2, 2, kernel=2, padding=0, activation="sigmoid"), Flatten(), Dense(8, k, "softmax")]
    else:
        raise AssertionError(kind)
    model = Model(layers, shape).init(rng)
    for layer in model.layers:
        # non-trivial affine parameters so their gradients are exercised
        if "gamma" in layer.params:
            layer.params["gamma"][...] = rng.uniform(0.5, 1.5, layer.params["gamma"].shape)
            layer.params["beta"][...] = rng.normal(0, 0.3, layer.params["beta"].shape)
        if "b" in layer.params:
            layer.params["b"][...] = rng.normal(0, 0.1, layer.params["b"].shape)
    x = rng.normal(size=(n,) + shape)
    y = rng.integers(0, k, size=n)
    return model, x, y


LAYER_VARIANTS = ["dense", "conv2d", "maxpool", "batchnorm", "flatten"]


@pytest.mark.parametrize("kind", LAYER_VARIANTS)
@pytest.mark.parametrize("seed", range(10))
def test_gradients_match_central_differences(kind, seed):
    model, x, y = _random_case(kind, seed)
    for name, err in gradient_errors(model, x, y):
        assert err < 1e-4, (name, err)


def test_dense_single_sample_outer_product():
    rng = make_rng(3)
    layer = Dense(4, 3, "softmax")
    model = Model([layer], (4,)).init(rng)
    x = rng.normal(size=(1, 4))
    probs, cache = forward(model, x, training=True)
    grads = backward(model, cache, [2])
    delta = probs[0] - np.eye(3)[2]
    np.testing.assert_allclose(grads[0]["W"], np.outer(delta, x[0]), rtol=0, atol=1e-15)
    np.testing.assert_allclose(grads[0]["b"], delta, rtol=0, atol=1e-15)


def test_zero_learning_signal_gives_zero_gradients():
    model = Model([Dense(2, 2, "softmax")], (2,))
    model.layers[0].params["b"][...] = [800.0, 0.0]  # softmax saturates to exactly one-hot
    probs, cache = forward(model, np.zeros((3, 2)), training=True)
    assert np.array_equal(probs, np.tile([1.0, 0.0], (3, 1)))
    for g in backward(model, cache, [0, 0, 0]):
        for arr in g.values():
            assert np.abs(arr).max() <= 1e-9


def test_sigmoid_of_zero():
    model = Model([Dense(1, 1, "sigmoid")], (1,))
    model.layers[0].params["W"][...] = 1.0
    out, _ = forward(model, np.zeros((1, 1)))
    assert out[0, 0] == 0.5


def test_maxpool_selects_max():
    pool = MaxPool(2)
    y, _ = pool.forward(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]), False)
    assert y.shape == (1, 1, 1, 1) and y[0, 0, 0, 0] == 4.0


def test_maxpool_routes_gradient_to_first_argmax():
    pool = MaxPool(2)
    x = np.array([[[[5.0, 5.0], [1.0, 5.0]]]])
    y, cache = pool.forward(x, True)
    dx, _ = pool.backward(np.ones_like(y), cache)
    assert dx.tolist() == [[[[1.0, 0.0], [0.0, 0.0]]]]


def _naive_dense_net(layers, x):
    out = []
    for sample in x:
        a = list(sample)
        for layer in layers:
            W, b = layer.params["W"], layer.params["b"]
            z = []
            for j in range(layer.n_out):
                s = b[j]
                for i in range(layer.n_in):
                    s += W[j, i] * a[i]
                z.append(s)
            if layer.activation == "relu":
                a = [max(v, 0.0) for v in z]
            elif layer.activation == "sigmoid":
                a = [1.0 / (1.0 + math.exp(-v)) for v in z]
            elif layer.activation == "softmax":
                m = max(z)
                e = [math.exp(v - m) for v in z]
                a = [v / sum(e) for v in e]
            else:
                a = z
        out.append(a)
    return np.array(out)


def test_forward_matches_naive_loop_evaluator():
    rng = make_rng(8)
    model = Model([Dense(6, 5, "relu"), Dense(5, 4, "sigmoid"), Dense(4, 3, "softmax")], (6,)).init(rng)
    for layer in model.layers:
        layer.params["b"][...] = rng.normal(size=layer.params["b"].shape)
    x = rng.normal(size=(7, 6))
    out, _ = forward(model, x)
    np.testing.assert_allclose(out, _naive_dense_net(model.layers, x), rtol=0, atol=1e-12)


def test_conv_matches_naive_loops():
    rng = make_rng(9)
    conv = Conv2D(2, 3, kernel=3, stride=2, padding=1, activation="linear")
    conv.init(rng)
    conv.params["b"][...] = rng.normal(size=3)
    x = rng.normal(size=(2, 2, 7, 6))
    y, _ = conv.forward(x, False)
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    W, b = conv.params["W"], conv.params["b"]
    ref = np.zeros(y.shape)
    for n in range(2):
        for f in range(3):
            for i in range(y.shape[2]):
                for j in range(y.shape[3]):
                    ref[n, f, i, j] = b[f] + (W[f] * xp[n, :, 2 * i:2 * i + 3, 2 * j:2 * j + 3]).sum()
    np.testing.assert_allclose(y, ref, rtol=0, atol=1e-12)


def test_softmax_rows_sum_to_one():
    rng = make_rng(1)
    model = Model([Dense(5, 10, "softmax")], (5,)).init(rng)
    probs, _ = forward(model, rng.normal(scale=3, size=(50, 5)))
    assert np.abs(probs.sum(axis=1) - 1).max() <= 1e-12
    assert (probs > 0).all() and (probs < 1).all()


@pytest.mark.parametrize("shape", [(64, 3), (8, 3, 4, 5)])
def test_batchnorm_training_output_is_standardized(shape):
    rng = make_rng(2)
    bn = BatchNorm(3)
    x = rng.normal(loc=4.0, scale=3.0, size=shape)
    y, _ = bn.forward(x, True)
    y2 = BatchNorm._to_2d(y)
    np.testing.assert_allclose(y2.mean(axis=0), 0, atol=1e-6)
    var = y2.var(axis=0)
    expected = BatchNorm._to_2d(x).var(axis=0) / (BatchNorm._to_2d(x).var(axis=0) + bn.epsilon)
    np.testing.assert_allclose(var, expected, atol=1e-12)
    np.testing.assert_allclose(var, 1, atol=1e-5)


def test_batchnorm_running_statistics_update_and_inference():
    bn = BatchNorm(2, momentum=0.1)
    x = np.array([[1.0, 10.0], [3.0, 14.0]])
    bn.forward(x, True)
    np.testing.assert_allclose(bn.buffers["running_mean"], [0.2, 1.2])
    np.testing.assert_allclose(bn.buffers["running_var"], [0.9 + 0.1, 0.9 + 0.4])
    y, _ = bn.forward(x, False)
    np.testing.assert_allclose(y[:, 0], (x[:, 0] - 0.2) / np.sqrt(1.0 + 1e-5))


def test_batchnorm_clamps_negative_running_variance():
    bn = BatchNorm(1)
    bn.buffers["running_var"][...] = -1e-6
    y, _ = bn.forward(np.array([[1.0]]), False)
    assert np.isfinite(y).all()


def test_flatten_round_trip():
    f = Flatten()
    x = np.arange(2 * 3 * 4 * 5, dtype=float).reshape(2, 3, 4, 5)
    y, cache = f.forward(x, True)
    dx, _ = f.backward(y, cache)
    assert y.shape == (2, 60) and np.array_equal(dx, x)


def test_loss_values():
    assert loss(np.eye(3), [0, 1, 2]) <= 1e-9
    assert loss(np.full((4, 10), 0.1), [0, 1, 2, 3]) == pytest.approx(math.log(10), abs=1e-12)
    rng = make_rng(5)
    p = rng.dirichlet(np.ones(6), size=20)
    y = rng.integers(0, 6, 20)
    ref = sum(-math.log(p[i, y[i]]) for i in range(20)) / 20
    assert loss(p, y) == pytest.approx(ref, abs=1e-12)
    with pytest.raises(DomainError):
        loss(p, np.full(20, 6))


def test_backward_rejects_stale_or_inference_cache():
    rng = make_rng(0)
    model = Model([Dense(2, 2, "softmax")], (2,)).init(rng)
    x = rng.normal(size=(3, 2))
    _, cache = forward(model, x, training=False)
    with pytest.raises(DomainError):
        backward(model, cache, [0, 1, 0])
    _, cache = forward(model, x, training=True)
    sgd_step(model, backward(model, cache, [0, 1, 0]), 0.1)
    with pytest.raises(DomainError):
        backward(model, cache, [0, 1, 0])


def test_forward_shape_mismatch():
    model = build_ann(AnnSpec(), make_rng(0))
    with pytest.raises(DomainError):
        forward(model, np.zeros((2, 1, 27, 28)))


def test_sgd_step_scalar_example():
    model = Model([Dense(1, 1, "softmax")], (1,))
    model.layers[0].params["W"][...] = 1.0
    sgd_step(model, [{"W": np.array([[0.5]]), "b": np.array([0.0])}], 0.1)
    assert model.layers[0].params["W"][0, 0] == pytest.approx(0.95, abs=1e-15)
    sgd_step(model, [{"W": np.array([[0.5]]), "b": np.array([0.0])}], 0.0)
    assert model.layers[0].params["W"][0, 0] == pytest.approx(0.95, abs=1e-15)


def test_sgd_converges_on_convex_quadratic():
    # descend f(w) = 0.5 * ||w - c||^2 using the step with analytic gradients
    model = Model([Dense(3, 1, "softmax")], (3,))
    c = np.array([[1.5, -2.0, 0.25]])
    for _ in range(200):
        g = model.layers[0].params["W"] - c
        sgd_step(model, [{"W": g, "b": np.zeros(1)}], 0.1)
    assert np.abs(model.layers[0].params["W"] - c).max() < 1e-6


def test_flat_parameter_round_trip_is_exact():
    model = build_cnn(CnnSpec(), make_rng(4))
    vec = model.get_flat()
    other = build_cnn(CnnSpec(), make_rng(5))
    other.set_flat(vec)
    assert np.array_equal(other.get_flat(), vec)
    state = model.get_state()
    other.set_state(state)
    assert np.array_equal(other.get_state(), state)
    with pytest.raises(DomainError):
        other.set_flat(vec[:-1])


def _conv_params(c_in, c_out, k=3):
    return c_out * c_in * k * k + c_out


def test_cnn_shape_and_parameter_count():
    model = build_cnn(CnnSpec(), make_rng(0))
    assert model.output_shape == (10,)
    # three 2x2 pools: 28 -> 14 -> 7 -> 3, last conv keeps 3x3
    expected = (_conv_params(1, 8) + _conv_params(8, 8) + _conv_params(8, 16) + _conv_params(16, 16)
                + 2 * 16 + (16 * 3 * 3) * 64 + 64 + 64 * 10 + 10)
    assert model.n_params == expected == 14114
    assert model.get_state().size == expected + 2 * 16
    kinds = [layer.kind for layer in model.layers]
    assert kinds.count("conv2d") == 4 and kinds.count("dense") == 2 and kinds.count("batchnorm") == 1
    probs, _ = forward(model, np.zeros((2, 1, 28, 28)))
    assert probs.shape == (2, 10)


def test_cnn_rejects_degenerate_specs():
    base = CnnSpec()
    # one extra pool still fits (3 -> 1); two extra pooled blocks collapse to zero
    assert build_cnn(CnnSpec(pool=(True,) * 4)).output_shape == (10,)
    with pytest.raises(DomainError):
        build_cnn(CnnSpec(channels=base.channels + (16, 16), pool=base.pool + (True, True)))
    with pytest.raises(DomainError):
        build_cnn(CnnSpec(channels=()))
    with pytest.raises(DomainError):
        build_cnn(CnnSpec(channels=(8,), pool=(True, True)))


def test_ann_shapes_and_counts():
    model = build_ann(AnnSpec(), make_rng(0))
    dense = [layer for layer in model.layers if layer.kind == "dense"]
    assert [(d.n_in, d.n_out) for d in dense] == [(784, 128), (128, 64), (64, 10)]
    assert model.n_params == 784 * 128 + 128 + 128 * 64 + 64 + 64 * 10 + 10
    logistic = build_ann(AnnSpec(hidden=()), make_rng(0))
    assert [(d.n_in, d.n_out) for d in logistic.layers if d.kind == "dense"] == [(784, 10)]


def test_evaluate_matches_per_sample_loop():
    rng = make_rng(6)
    model = build_cnn(CnnSpec(), rng)
    x = rng.uniform(size=(23, 1, 28, 28))
    y = rng.integers(0, 10, 23)
    acc, mean_loss = evaluate(model, x, y, batch_size=7)
    hits, total = 0, 0.0
    for i in range(23):
        p, _ = forward(model, x[i:i + 1])
        hits += int(p.argmax() == y[i])
        total += -math.log(max(p[0, y[i]], 1e-12))
    assert acc == hits / 23
    assert mean_loss == pytest.approx(total / 23, abs=1e-12)
    with pytest.raises(DomainError):
        evaluate(model, x[:0], y[:0])


def test_evaluate_perfect_and_uniform_models():
    model = Model([Flatten(), Dense(4, 4, "softmax")], (1, 2, 2))
    model.layers[1].params["W"][...] = 100 * np.eye(4)
    x = np.eye(4).reshape(4, 1, 2, 2)
    acc, _ = evaluate(model, x, [0, 1, 2, 3])
    assert acc == 1.0
    model.layers[1].params["W"][...] = 0
    _, uniform_loss = evaluate(model, x, [0, 1, 2, 3])
    assert uniform_loss == pytest.approx(math.log(4), abs=1e-12)


def test_training_is_deterministic_and_learns():
    rng = make_rng(0)
    x = rng.normal(size=(60, 4))
    y = (x[:, 0] > 0).astype(int)
    runs = []
    for _ in range(2):
        model = Model([Dense(4, 8, "relu"), Dense(8, 2, "softmax")], (4,)).init(make_rng(1))
        history = train(model, x, y, TrainConfig(0.1, 10, 6), make_rng(2))
        runs.append((history, model.get_state()))
    assert runs[0][0] == runs[1][0]
    assert np.array_equal(runs[0][1], runs[1][1])
    assert runs[0][0][-1] < runs[0][0][0]
    model = Model([Dense(4, 8, "relu"), Dense(8, 2, "softmax")], (4,)).init(make_rng(1))
    before = model.get_state()
    assert train(model, x, y, TrainConfig(0.1, 0, 6), make_rng(2)) == []
    assert np.array_equal(model.get_state(), before)


def test_checkpoint_round_trip(tmp_path):
    rng = make_rng(7)
    model = build_cnn(CnnSpec(), rng)
    forward(model, rng.uniform(size=(4, 1, 28, 28)), training=True)  # move running stats
    data = dumps_checkpoint(model)
    assert data[:4] == b"FBH1"
    clone = loads_checkpoint(data)
    assert clone.specs() == model.specs()
    assert np.array_equal(clone.get_state(), model.get_state())
    digest = save_checkpoint(tmp_path / "m.fbh", model)
    import hashlib
    assert digest == hashlib.sha256((tmp_path / "m.fbh").read_bytes()).hexdigest()
    assert np.array_equal(load_checkpoint(tmp_path / "m.fbh").get_state(), model.get_state())


@pytest.mark.parametrize("mutate", [
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:-8],
    lambda b: b[:6],
])
def test_checkpoint_rejects_corruption(mutate):
    data = dumps_checkpoint(build_ann(AnnSpec(hidden=(4,)), make_rng(0)))
    with pytest.raises(FormatError):
        loads_checkpoint(mutate(data))
