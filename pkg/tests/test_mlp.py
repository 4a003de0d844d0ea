import numpy as np
import pytest

from hostility import mlp
from hostility.embeddings import AlignedDataset
from hostility.errors import DimensionError, InputError

from oracles import fd_gradients, max_relative_error, sample_smooth_batch


def zero_model(head, input_dim=6, hidden_dim=4):
    k = mlp.HEAD_DIMS[head]
    return mlp.MlpModel(
        head=head,
        W1=np.zeros((input_dim, hidden_dim)),
        b1=np.zeros(hidden_dim),
        W2=np.zeros((hidden_dim, k)),
        b2=np.zeros(k),
    )


def random_model(rng, head, input_dim, hidden_dim):
    return mlp.init_mlp(head, seed=int(rng.integers(1 << 30)), input_dim=input_dim, hidden_dim=hidden_dim)


def small_dataset(rng, n=24, dim=6, hostile_only=False):
    X = rng.standard_normal((n, dim))
    Y = np.zeros((n, 5), dtype=np.int64)
    for i in range(n):
        if not hostile_only and rng.random() < 0.5:
            Y[i, 0] = 1
        else:
            Y[i, 1 + rng.integers(4)] = 1
    return AlignedDataset(X=X, Y=Y, ids=tuple(f"p{i}" for i in range(n)))


# ------------------------------------------------------------------- init

def test_init_deterministic_and_bounded():
    a = mlp.init_mlp("coarse", seed=3)
    b = mlp.init_mlp("coarse", seed=3)
    assert np.array_equal(a.W1, b.W1) and np.array_equal(a.W2, b.W2)
    assert np.all(a.b1 == 0) and np.all(a.b2 == 0)
    assert np.max(np.abs(a.W1)) <= np.sqrt(6.0 / 1024)
    c = mlp.init_mlp("coarse", seed=4)
    assert not np.array_equal(a.W1, c.W1)


def test_init_fine_head_dims():
    m = mlp.init_mlp("fine", seed=0, input_dim=16, hidden_dim=8)
    assert m.W2.shape == (8, 4) and m.out_dim == 4


# ---------------------------------------------------------------- forward

def test_forward_zero_model():
    m = zero_model("coarse")
    hidden, logits = mlp.forward(m, np.ones(6))
    assert np.all(hidden == 0) and np.all(logits == 0)


def test_forward_toy_relu():
    m = mlp.MlpModel(
        head="coarse",
        W1=np.array([[1.0, 0.0], [0.0, 1.0]]),
        b1=np.zeros(2),
        W2=np.zeros((2, 2)),
        b2=np.zeros(2),
    )
    hidden, _ = mlp.forward(m, np.array([-1.0, 2.0]))
    np.testing.assert_array_equal(hidden, [0.0, 2.0])


def test_forward_dropout_zero_matches_infer():
    rng = np.random.default_rng(0)
    m = mlp.init_mlp("fine", seed=1, input_dim=10, hidden_dim=5)
    x = rng.standard_normal(10)
    h_train, z_train = mlp.forward(m, x, mode="train", dropout_p=0.0, mask_source=rng)
    h_infer, z_infer = mlp.forward(m, x)
    np.testing.assert_array_equal(h_train, h_infer)
    np.testing.assert_array_equal(z_train, z_infer)


def test_forward_shape_check():
    with pytest.raises(DimensionError):
        mlp.forward(zero_model("coarse"), np.ones(7))


def test_dropout_expectation_matches_infer():
    rng = np.random.default_rng(11)
    m = mlp.init_mlp("coarse", seed=2, input_dim=20, hidden_dim=8)
    x = rng.standard_normal(20) * 3.0
    infer_pre = x @ m.W1 + m.b1
    total = np.zeros_like(infer_pre)
    draws = 100_000
    masks = mlp.sample_dropout_masks(rng, (draws, 20), 0.3)
    total = ((x * masks) @ m.W1 + m.b1).mean(axis=0)
    scale = np.max(np.abs(infer_pre))
    np.testing.assert_allclose(total, infer_pre, atol=0.01 * scale)


# ------------------------------------------------------------------- loss

def test_loss_symmetry_cases():
    assert mlp.loss(np.zeros(2), np.array([1.0, 0.0]), "coarse") == pytest.approx(np.log(2), rel=1e-12)
    assert mlp.loss(np.zeros(4), np.array([1, 0, 1, 0]), "fine") == pytest.approx(np.log(2), rel=1e-12)


def test_loss_single_unit_value():
    # frozen from the stable formula: max(2,0) - 2*1 + log(1+e^-2)
    value = mlp.loss(np.array([2.0, 2.0, 2.0, 2.0]), np.ones(4), "fine")
    assert value == pytest.approx(0.12692801104297263, rel=1e-12)


def test_loss_stable_at_extreme_logits():
    for z in (-1e4, -10.0, 0.0, 10.0, 1e4):
        vf = mlp.loss(np.full(4, z), np.array([1, 0, 1, 0]), "fine")
        vc = mlp.loss(np.array([z, -z]), np.array([1.0, 0.0]), "coarse")
        assert np.isfinite(vf) and vf >= 0
        assert np.isfinite(vc) and vc >= 0


# ------------------------------------------------------------------- grad

def test_grad_zero_model_coarse_b2():
    m = zero_model("coarse")
    X = np.ones((1, 6))
    T = np.array([[1.0, 0.0]])
    g = mlp.grad(m, X, T, "coarse")
    np.testing.assert_allclose(g.b2, [-0.5, 0.5], atol=1e-15)


def test_grad_no_dropout_equals_ones_mask():
    rng = np.random.default_rng(3)
    m = random_model(rng, "fine", 8, 5)
    X = rng.standard_normal((6, 8))
    T = (rng.random((6, 4)) < 0.5).astype(float)
    a = mlp.grad(m, X, T, "fine")
    b = mlp.grad(m, X, T, "fine", masks=np.ones_like(X))
    for name in ("W1", "b1", "W2", "b2"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_grad_matches_finite_differences_quick():
    rng = np.random.default_rng(4)
    for head in ("coarse", "fine"):
        m = random_model(rng, head, 16, 8)
        X, T, masks = sample_smooth_batch(rng, m, 4, head, dropout_p=0.25)
        analytic = mlp.grad(m, X, T, head, masks=masks).by_name()
        reference = fd_gradients(m, X, T, head, masks=masks)
        assert max_relative_error(analytic, reference) < 1e-4


def test_grad_empty_batch():
    with pytest.raises(InputError):
        mlp.grad(zero_model("coarse"), np.zeros((0, 6)), np.zeros((0, 2)), "coarse")


# ------------------------------------------------------------------ adamw

def test_adamw_pure_decay():
    m = mlp.MlpModel("coarse", W1=np.ones((1, 1)), b1=np.zeros(1), W2=np.zeros((1, 2)), b2=np.zeros(2))
    zero = mlp.Grads(W1=np.zeros((1, 1)), b1=np.zeros(1), W2=np.zeros((1, 2)), b2=np.zeros(2))
    updated, state = mlp.adamw_step(m, zero, mlp.init_opt_state(m), mlp.TrainConfig())
    assert updated.W1[0, 0] == pytest.approx(1 - 3e-8, rel=1e-12)
    assert state.t == 1


def test_adamw_first_step_unit_gradient():
    cfg = mlp.TrainConfig(weight_decay=0.0)
    m = mlp.MlpModel("coarse", W1=np.ones((1, 1)), b1=np.zeros(1), W2=np.zeros((1, 2)), b2=np.zeros(2))
    g = mlp.Grads(W1=np.ones((1, 1)), b1=np.zeros(1), W2=np.zeros((1, 2)), b2=np.zeros(2))
    updated, _ = mlp.adamw_step(m, g, mlp.init_opt_state(m), cfg)
    assert updated.W1[0, 0] == pytest.approx(1 - cfg.learning_rate / (1 + cfg.adam_eps), rel=1e-12)


def test_adamw_bias_not_decayed():
    m = mlp.MlpModel("coarse", W1=np.ones((1, 1)), b1=np.ones(1), W2=np.zeros((1, 2)), b2=np.zeros(2))
    zero = mlp.Grads(W1=np.zeros((1, 1)), b1=np.zeros(1), W2=np.zeros((1, 2)), b2=np.zeros(2))
    updated, _ = mlp.adamw_step(m, zero, mlp.init_opt_state(m), mlp.TrainConfig())
    assert updated.b1[0] == 1.0


def test_adamw_identical_tensors_evolve_identically():
    rng = np.random.default_rng(5)
    m = mlp.MlpModel("coarse", W1=np.full((2, 2), 0.5), b1=np.zeros(2), W2=np.full((2, 2), 0.5), b2=np.zeros(2))
    state = mlp.init_opt_state(m)
    cfg = mlp.TrainConfig(learning_rate=1e-2)
    for _ in range(5):
        g = np.full((2, 2), float(rng.standard_normal()))
        grads = mlp.Grads(W1=g.copy(), b1=np.zeros(2), W2=g.copy(), b2=np.zeros(2))
        m, state = mlp.adamw_step(m, grads, state, cfg)
    np.testing.assert_array_equal(m.W1, m.W2)


# ------------------------------------------------------------------ train

def test_train_zero_epochs_is_initial_model():
    rng = np.random.default_rng(6)
    data = small_dataset(rng)
    cfg = mlp.TrainConfig(epochs=0, seed=9)
    model, history = mlp.train_mlp(data, None, "coarse", cfg, hidden_dim=4)
    init = mlp.init_mlp("coarse", seed=9, input_dim=6, hidden_dim=4)
    assert np.array_equal(model.W1, init.W1) and np.array_equal(model.b2, init.b2)
    assert history.train_loss == ()


def test_train_deterministic():
    rng = np.random.default_rng(7)
    data = small_dataset(rng)
    val = small_dataset(rng, n=10)
    cfg = mlp.TrainConfig(epochs=3, seed=5, batch_size=8, learning_rate=1e-3)
    m1, h1 = mlp.train_mlp(data, val, "coarse", cfg, hidden_dim=4)
    m2, h2 = mlp.train_mlp(data, val, "coarse", cfg, hidden_dim=4)
    for name in ("W1", "b1", "W2", "b2"):
        assert np.array_equal(getattr(m1, name), getattr(m2, name))
    assert h1 == h2
    assert len(h1.train_loss) == 3 and len(h1.val_weighted_f1) == 3


def test_train_fine_requires_hostile_rows():
    rng = np.random.default_rng(8)
    data = small_dataset(rng)  # contains non-hostile rows
    with pytest.raises(InputError):
        mlp.train_mlp(data, None, "fine", mlp.TrainConfig(epochs=1))
    hostile = small_dataset(rng, hostile_only=True)
    model, _ = mlp.train_mlp(hostile, None, "fine", mlp.TrainConfig(epochs=1), hidden_dim=4)
    assert model.out_dim == 4


def test_train_empty_dataset():
    data = AlignedDataset(X=np.zeros((0, 4)), Y=np.zeros((0, 5), dtype=np.int64), ids=())
    with pytest.raises(InputError):
        mlp.train_mlp(data, None, "coarse", mlp.TrainConfig())


# ---------------------------------------------------------------- predict

def test_predict_zero_model_uniform():
    np.testing.assert_array_equal(mlp.predict(zero_model("coarse"), np.ones((3, 6))), np.full((3, 2), 0.5))
    np.testing.assert_array_equal(mlp.predict(zero_model("fine"), np.ones((3, 6))), np.full((3, 4), 0.5))


def test_predict_softmax_rows_sum_to_one():
    rng = np.random.default_rng(9)
    m = random_model(rng, "coarse", 12, 6)
    probs = mlp.predict(m, rng.standard_normal((40, 12)) * 50)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    fine = mlp.predict(random_model(rng, "fine", 12, 6), rng.standard_normal((40, 12)))
    assert np.all((fine > 0) & (fine < 1))
    # extreme logits saturate to the closed interval but never leave it or NaN
    extreme = mlp.predict(random_model(rng, "fine", 12, 6), rng.standard_normal((40, 12)) * 1e3)
    assert np.all((extreme >= 0) & (extreme <= 1))


def test_predict_softmax_known_value():
    m = zero_model("coarse")
    m.b2[:] = [np.log(3.0), 0.0]
    np.testing.assert_allclose(mlp.predict(m, np.zeros((1, 6)))[0], [0.75, 0.25], atol=1e-15)


def test_predict_dim_mismatch():
    with pytest.raises(DimensionError):
        mlp.predict(zero_model("coarse"), np.ones((2, 7)))


# ----------------------------------------------------- fine-tuned features

def test_extract_finetuned_matches_forward():
    rng = np.random.default_rng(10)
    m = random_model(rng, "coarse", 10, 7)
    X = rng.standard_normal((5, 10))
    H = mlp.extract_finetuned(m, X)
    assert H.shape == (5, 7) and np.all(H >= 0)
    for i in range(5):
        hidden, _ = mlp.forward(m, X[i])
        # batched vs single-row matmul may differ in the last ulp
        np.testing.assert_allclose(H[i], hidden, rtol=1e-12, atol=1e-15)
    assert np.all(mlp.extract_finetuned(zero_model("coarse"), X[:, :6]) == 0)


# ------------------------------------------------------------- checkpoint

def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    cfg = mlp.TrainConfig(seed=21)
    model = random_model(rng, "fine", 14, 9)
    path = tmp_path / "m.ckpt"
    mlp.save_model(model, path, train_config=cfg)
    loaded, header = mlp.load_model(path)
    assert header["head"] == "fine" and header["train_config"]["seed"] == 21
    # float32 storage: save -> load -> save is byte-identical
    again = tmp_path / "m2.ckpt"
    mlp.save_model(loaded, again, train_config=cfg)
    assert path.read_bytes() == again.read_bytes()
    np.testing.assert_allclose(loaded.W1, model.W1, atol=1e-6)
    X = rng.standard_normal((4, 14))
    np.testing.assert_allclose(mlp.predict(loaded, X), mlp.predict(model, X), atol=1e-5)


def test_checkpoint_errors(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"{}")
    with pytest.raises(mlp.CheckpointError):
        mlp.load_model(path)
    model = zero_model("coarse")
    good = tmp_path / "good.ckpt"
    mlp.save_model(model, good)
    good.write_bytes(good.read_bytes() + b"\x00\x00")
    with pytest.raises(mlp.CheckpointError):
        mlp.load_model(good)


def test_train_config_validation():
    with pytest.raises(InputError):
        mlp.TrainConfig(learning_rate=0.0)
    with pytest.raises(InputError):
        mlp.TrainConfig(dropout_p=1.0)
    with pytest.raises(InputError):
        mlp.TrainConfig(batch_size=0)
