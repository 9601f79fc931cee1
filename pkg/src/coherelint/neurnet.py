"""From-scratch recurrent classifiers: SimpleRNN and LSTM cells, softmax head,
cross-entropy, full backpropagation through time, Adam, and a finite-difference
gradient checker. Everything runs in float64 on numpy.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .embedding import EmbeddedPair

CELL_RNN = "rnn"
CELL_LSTM = "lstm"

MODEL_MAGIC = b"CO3D"
MODEL_VERSION = 1


class NumericError(ArithmeticError):
    pass


class NonFiniteActivation(NumericError):
    pass


class NonFiniteGradient(NumericError):
    pass


class ModelFileError(ValueError):
    pass


class CorruptFile(ModelFileError):
    pass


class VersionMismatch(ModelFileError):
    pass


@dataclass
class ModelConfig:
    cell: str
    input_dim: int
    hidden: int = 100
    classes: int = 2
    clip_norm: float = 5.0

    def __post_init__(self):
        if self.cell not in (CELL_RNN, CELL_LSTM):
            raise ValueError(f"cell must be '{CELL_RNN}' or '{CELL_LSTM}'")
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if self.classes != 2:
            raise ValueError("only two-class heads are supported")


@dataclass
class RecurrentModel:
    config: ModelConfig
    params: dict


@dataclass
class TrainConfig:
    batch_size: int = 50
    epochs: int = 30
    seed: int = 0
    shuffle: bool = True
    lr: float = 0.001


@dataclass
class AdamState:
    step: int
    m: dict
    v: dict
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


RNN_PARAMS = ("W_x", "W_h", "b", "W_out", "b_out")
LSTM_PARAMS = (
    "W_xi", "W_hi", "b_i",
    "W_xf", "W_hf", "b_f",
    "W_xc", "W_hc", "b_c",
    "W_xo", "W_ho", "b_o",
    "W_out", "b_out",
)


def param_names(cfg):
    return RNN_PARAMS if cfg.cell == CELL_RNN else LSTM_PARAMS


def _glorot(rng, fan_out, fan_in):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_model(cfg, seed):
    """Glorot-uniform weights, zero biases; LSTM forget bias starts at 1."""
    rng = np.random.default_rng(seed)
    h, d, c = cfg.hidden, cfg.input_dim, cfg.classes
    params = {}
    if cfg.cell == CELL_RNN:
        params["W_x"] = _glorot(rng, h, d)
        params["W_h"] = _glorot(rng, h, h)
        params["b"] = np.zeros(h)
    else:
        for gate in "ifco":
            params[f"W_x{gate}"] = _glorot(rng, h, d)
            params[f"W_h{gate}"] = _glorot(rng, h, h)
            params[f"b_{gate}"] = np.zeros(h)
        params["b_f"] = np.ones(h)
    params["W_out"] = _glorot(rng, c, h)
    params["b_out"] = np.zeros(c)
    return RecurrentModel(config=cfg, params=params)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def _as_matrix(x):
    if isinstance(x, EmbeddedPair):
        return x.matrix
    return np.asarray(x, dtype=np.float64)


def _softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cache(model, X):
    """Run the recurrence over every timestep of X (B, T, D); cache activations."""
    p = model.params
    B, T, _ = X.shape
    h = model.config.hidden
    cache = {"X": X}
    if model.config.cell == CELL_RNN:
        XW = X @ p["W_x"].T
        H = np.zeros((T + 1, B, h))
        for t in range(T):
            H[t + 1] = np.tanh(XW[:, t] + H[t] @ p["W_h"].T + p["b"])
        cache["H"] = H
    else:
        XWi = X @ p["W_xi"].T
        XWf = X @ p["W_xf"].T
        XWc = X @ p["W_xc"].T
        XWo = X @ p["W_xo"].T
        H = np.zeros((T + 1, B, h))
        Cs = np.zeros((T + 1, B, h))
        I = np.empty((T, B, h))
        F = np.empty((T, B, h))
        G = np.empty((T, B, h))
        O = np.empty((T, B, h))
        TC = np.empty((T, B, h))
        for t in range(T):
            i = _sigmoid(XWi[:, t] + H[t] @ p["W_hi"].T + p["b_i"])
            f = _sigmoid(XWf[:, t] + H[t] @ p["W_hf"].T + p["b_f"])
            g = np.tanh(XWc[:, t] + H[t] @ p["W_hc"].T + p["b_c"])
            o = _sigmoid(XWo[:, t] + H[t] @ p["W_ho"].T + p["b_o"])
            Cs[t + 1] = f * Cs[t] + i * g
            tc = np.tanh(Cs[t + 1])
            H[t + 1] = o * tc
            I[t], F[t], G[t], O[t], TC[t] = i, f, g, o, tc
        cache.update(H=H, Cs=Cs, I=I, F=F, G=G, O=O, TC=TC)
    logits = cache["H"][-1] @ p["W_out"].T + p["b_out"]
    if not np.isfinite(logits).all():
        raise NonFiniteActivation(
            "non-finite activations in forward pass; consider setting clip_norm"
        )
    cache["logits"] = logits
    cache["probs"] = _softmax(logits)
    return cache


def _backward(model, cache, dlogits):
    """BPTT from a gradient on the logits; returns (param grads, input grads)."""
    p = model.params
    X = cache["X"]
    H = cache["H"]
    B, T, D = X.shape
    grads = {}
    grads["W_out"] = dlogits.T @ H[-1]
    grads["b_out"] = dlogits.sum(axis=0)
    dh = dlogits @ p["W_out"]

    if model.config.cell == CELL_RNN:
        dpre_all = np.zeros((B, T, H.shape[2]))
        dW_h = np.zeros_like(p["W_h"])
        db = np.zeros_like(p["b"])
        for t in range(T - 1, -1, -1):
            dpre = dh * (1.0 - H[t + 1] ** 2)
            dpre_all[:, t] = dpre
            dW_h += dpre.T @ H[t]
            db += dpre.sum(axis=0)
            dh = dpre @ p["W_h"]
        flat = dpre_all.reshape(B * T, -1)
        grads["W_x"] = flat.T @ X.reshape(B * T, D)
        grads["W_h"] = dW_h
        grads["b"] = db
        dX = (dpre_all @ p["W_x"]).reshape(B, T, D)
        return grads, dX

    Cs, I, F, G, O, TC = (cache[k] for k in ("Cs", "I", "F", "G", "O", "TC"))
    h = H.shape[2]
    da = {g: np.zeros((B, T, h)) for g in "ifco"}
    dW_h = {g: np.zeros_like(p[f"W_h{g}"]) for g in "ifco"}
    db = {g: np.zeros(h) for g in "ifco"}
    dc = np.zeros((B, h))
    for t in range(T - 1, -1, -1):
        i, f, g, o, tc = I[t], F[t], G[t], O[t], TC[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * Cs[t]
        da_i = di * i * (1.0 - i)
        da_f = df * f * (1.0 - f)
        da_g = dg * (1.0 - g * g)
        da_o = do * o * (1.0 - o)
        da["i"][:, t] = da_i
        da["f"][:, t] = da_f
        da["c"][:, t] = da_g
        da["o"][:, t] = da_o
        h_prev = H[t]
        dW_h["i"] += da_i.T @ h_prev
        dW_h["f"] += da_f.T @ h_prev
        dW_h["c"] += da_g.T @ h_prev
        dW_h["o"] += da_o.T @ h_prev
        for gate, d_gate in (("i", da_i), ("f", da_f), ("c", da_g), ("o", da_o)):
            db[gate] += d_gate.sum(axis=0)
        dh = (
            da_i @ p["W_hi"]
            + da_f @ p["W_hf"]
            + da_g @ p["W_hc"]
            + da_o @ p["W_ho"]
        )
        dc = dc * f
    Xflat = X.reshape(B * T, D)
    dX = np.zeros((B, T, D))
    for gate in "ifco":
        flat = da[gate].reshape(B * T, h)
        grads[f"W_x{gate}"] = flat.T @ Xflat
        grads[f"W_h{gate}"] = dW_h[gate]
        grads[f"b_{gate}"] = db[gate]
        dX += da[gate] @ p[f"W_x{gate}"]
    return grads, dX


def forward(model, x):
    """Single-example forward pass.

    Returns hidden_states (T, hidden), logits (classes,), probs (classes,).
    The recurrence always runs over all max_len rows, padding included.
    """
    X = _as_matrix(x)[None, :, :]
    cache = _forward_cache(model, X)
    return {
        "hidden_states": cache["H"][1:, 0, :],
        "logits": cache["logits"][0],
        "probs": cache["probs"][0],
    }


def forward_batch(model, X):
    """Batched forward; X is (B, T, D). Returns (logits, probs), each (B, classes)."""
    cache = _forward_cache(model, np.asarray(X, dtype=np.float64))
    return cache["logits"], cache["probs"]


def _stack_batch(batch):
    X = np.stack([_as_matrix(x) for x, _ in batch])
    y = np.array([label for _, label in batch], dtype=np.intp)
    return X, y


def _nll(probs, y):
    return float(-np.mean(np.log(probs[np.arange(len(y)), y])))


def global_norm(grads):
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def loss_and_grad(model, batch):
    """Mean cross-entropy over the batch and its BPTT gradients.

    Gradients are rescaled to the configured global clip norm when they
    exceed it.
    """
    if not batch:
        raise ValueError("empty batch")
    X, y = _stack_batch(batch)
    cache = _forward_cache(model, X)
    probs = cache["probs"]
    loss = _nll(probs, y)
    dlogits = probs.copy()
    dlogits[np.arange(len(y)), y] -= 1.0
    dlogits /= len(y)
    grads, _ = _backward(model, cache, dlogits)
    clip = model.config.clip_norm
    if clip is not None:
        norm = global_norm(grads)
        if norm > clip:
            scale = clip / norm
            grads = {k: g * scale for k, g in grads.items()}
    if not np.isfinite(loss) or any(
        not np.isfinite(g).all() for g in grads.values()
    ):
        raise NonFiniteGradient("non-finite loss or gradient")
    return loss, grads


def input_gradient(model, x, class_index):
    """Gradient of one output logit with respect to the input matrix (T, D)."""
    X = _as_matrix(x)[None, :, :]
    cache = _forward_cache(model, X)
    dlogits = np.zeros_like(cache["logits"])
    dlogits[0, class_index] = 1.0
    _, dX = _backward(model, cache, dlogits)
    if not np.isfinite(dX).all():
        raise NonFiniteGradient("non-finite input gradient")
    return dX[0]


def init_adam(params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
    return AdamState(
        step=0,
        m={k: np.zeros_like(v) for k, v in params.items()},
        v={k: np.zeros_like(v) for k, v in params.items()},
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def adam_step(params, grads, state):
    """One Adam update with bias correction; inputs are left untouched."""
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_params, m, v = {}, {}, {}
    for k, g in grads.items():
        m[k] = b1 * state.m[k] + (1.0 - b1) * g
        v[k] = b2 * state.v[k] + (1.0 - b2) * g * g
        m_hat = m[k] / (1.0 - b1 ** t)
        v_hat = v[k] / (1.0 - b2 ** t)
        new_params[k] = params[k] - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new_state = AdamState(
        step=t, m=m, v=v, lr=state.lr, beta1=state.beta1,
        beta2=state.beta2, eps=state.eps,
    )
    return new_params, new_state


def train(model_cfg, train_set, tc):
    """Fit a model on (input, class index) examples.

    Per-epoch history records the mean batch loss and the accuracy of the
    within-epoch forward passes (computed before each update), so an extra
    full pass over the data is never needed.
    """
    if not train_set:
        raise ValueError("empty training set")
    if tc.epochs < 1:
        raise ValueError("epochs must be >= 1")
    if tc.batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    model = init_model(model_cfg, tc.seed)
    state = init_adam(model.params, lr=tc.lr)
    rng = np.random.default_rng(tc.seed)
    n = len(train_set)
    history = []
    for _ in range(tc.epochs):
        order = rng.permutation(n) if tc.shuffle else np.arange(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, tc.batch_size):
            batch = [train_set[i] for i in order[start:start + tc.batch_size]]
            X, y = _stack_batch(batch)
            cache = _forward_cache(model, X)
            probs = cache["probs"]
            loss = _nll(probs, y)
            correct += int(np.sum(probs.argmax(axis=1) == y))
            dlogits = probs.copy()
            dlogits[np.arange(len(y)), y] -= 1.0
            dlogits /= len(y)
            grads, _ = _backward(model, cache, dlogits)
            clip = model_cfg.clip_norm
            if clip is not None:
                norm = global_norm(grads)
                if norm > clip:
                    grads = {k: g * (clip / norm) for k, g in grads.items()}
            new_params, state = adam_step(model.params, grads, state)
            model = RecurrentModel(config=model_cfg, params=new_params)
            loss_sum += loss * len(batch)
        history.append(
            {"loss": loss_sum / n, "train_accuracy": correct / n}
        )
    return model, history


def grad_check(model_cfg, batch, seed=0, delta=1e-4):
    """Max relative error between BPTT and central finite differences.

    Runs on a freshly initialized model with clipping disabled (clipping
    would rescale the analytic side only).
    """
    cfg = replace(model_cfg, clip_norm=None)
    model = init_model(cfg, seed)
    _, grads = loss_and_grad(model, batch)
    X, y = _stack_batch(batch)

    def loss_at(params):
        cache = _forward_cache(RecurrentModel(cfg, params), X)
        return _nll(cache["probs"], y)

    worst = 0.0
    for name in param_names(cfg):
        base = model.params[name]
        flat = base.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + delta
            up = loss_at(model.params)
            flat[i] = orig - delta
            down = loss_at(model.params)
            flat[i] = orig
            numeric = (up - down) / (2.0 * delta)
            analytic = grads[name].reshape(-1)[i]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


def write_model_file(path, config, arrays):
    """Shared container: magic, version byte, JSON config block, raw float64
    arrays in the given order. `arrays` is a list of (name, ndarray).
    """
    config = dict(config)
    config["arrays"] = [[name, list(a.shape)] for name, a in arrays]
    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(bytes([MODEL_VERSION]))
        fh.write(len(blob).to_bytes(4, "little"))
        fh.write(blob)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_model_file(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 9 or data[:4] != MODEL_MAGIC:
        raise CorruptFile(f"{path}: not a model file")
    if data[4] != MODEL_VERSION:
        raise VersionMismatch(
            f"{path}: format version {data[4]}, expected {MODEL_VERSION}"
        )
    blob_len = int.from_bytes(data[5:9], "little")
    if len(data) < 9 + blob_len:
        raise CorruptFile(f"{path}: truncated config block")
    try:
        config = json.loads(data[9:9 + blob_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: unreadable config block: {exc}") from None
    offset = 9 + blob_len
    arrays = {}
    for name, shape in config.get("arrays", []):
        count = int(np.prod(shape)) if shape else 1
        nbytes = 8 * count
        if len(data) < offset + nbytes:
            raise CorruptFile(f"{path}: truncated array '{name}'")
        arrays[name] = np.frombuffer(
            data, dtype="<f8", count=count, offset=offset
        ).reshape(shape).copy()
        offset += nbytes
    if offset != len(data):
        raise CorruptFile(f"{path}: {len(data) - offset} trailing bytes")
    return config, arrays


def save_model(model, path):
    cfg = model.config
    config = {
        "kind": cfg.cell,
        "input_dim": cfg.input_dim,
        "hidden": cfg.hidden,
        "classes": cfg.classes,
        "clip_norm": cfg.clip_norm,
    }
    arrays = [(name, model.params[name]) for name in param_names(cfg)]
    write_model_file(path, config, arrays)


def load_model(path):
    config, arrays = read_model_file(path)
    kind = config.get("kind")
    if kind not in (CELL_RNN, CELL_LSTM):
        raise ModelFileError(
            f"{path}: kind '{kind}' is not a recurrent model"
        )
    cfg = ModelConfig(
        cell=kind,
        input_dim=config["input_dim"],
        hidden=config["hidden"],
        classes=config["classes"],
        clip_norm=config["clip_norm"],
    )
    params = {name: arrays[name] for name in param_names(cfg)}
    return RecurrentModel(config=cfg, params=params)
