"""From-scratch LSTM forecaster (numpy only).

Gate activations are the hard sigmoid max(0, min(1, 0.2 z + 0.5)); cell
input and cell output activations are ReLU; the output head is linear.
Training: sliding windows of `window` steps to the next value, min-max
scaling fit on the training portion only, Adam, inverted dropout on the
hidden state, and a plateau schedule (lr x0.1 after 3 consecutive
validation-loss increases, stop after 10).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEIGHT_NAMES = ["w_ix", "w_im", "b_i", "w_fx", "w_fm", "b_f",
                "w_cx", "w_cm", "b_c", "w_ox", "w_om", "b_o", "w_ym", "b_y"]


@dataclass
class LstmConfig:
    units: int = 128
    batch_size: int = 32
    dropout: float = 0.2
    learning_rate: float = 0.001
    window: int = 12
    lr_patience: int = 3
    stop_patience: int = 10
    lr_factor: float = 0.1
    max_epochs: int = 100
    val_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if min(self.units, self.batch_size, self.window, self.lr_patience,
               self.stop_patience, self.max_epochs) < 1:
            raise ValueError("config counts must be positive")
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


@dataclass
class LstmWeights:
    w_ix: np.ndarray
    w_im: np.ndarray
    b_i: np.ndarray
    w_fx: np.ndarray
    w_fm: np.ndarray
    b_f: np.ndarray
    w_cx: np.ndarray
    w_cm: np.ndarray
    b_c: np.ndarray
    w_ox: np.ndarray
    w_om: np.ndarray
    b_o: np.ndarray
    w_ym: np.ndarray
    b_y: np.ndarray

    def as_dict(self):
        return {name: getattr(self, name) for name in WEIGHT_NAMES}

    def copy(self):
        return LstmWeights(**{k: v.copy() for k, v in self.as_dict().items()})

    @classmethod
    def zeros_like(cls, other):
        return cls(**{k: np.zeros_like(v) for k, v in other.as_dict().items()})


@dataclass
class CellState:
    m: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, batch, units):
        return cls(np.zeros((batch, units)), np.zeros((batch, units)))


def hard_sigmoid(z):
    return np.clip(0.2 * z + 0.5, 0.0, 1.0)


def _dhard_sigmoid(z):
    return 0.2 * ((z > -2.5) & (z < 2.5))


def _relu(z):
    return np.maximum(z, 0.0)


def _drelu(z):
    return (z > 0.0).astype(np.float64)


def init_weights(cfg: LstmConfig, input_dim=1, output_dim=1, seed=None) -> LstmWeights:
    """Glorot-uniform kernels, zero biases except forget bias = 1."""
    gen = np.random.default_rng(cfg.seed if seed is None else seed)
    u = cfg.units

    def glorot(rows, cols):
        lim = np.sqrt(6.0 / (rows + cols))
        return gen.uniform(-lim, lim, size=(rows, cols))

    kw = {}
    for gate in "ifco":
        kw[f"w_{gate}x" if gate != "c" else "w_cx"] = glorot(u, input_dim)
        kw[f"w_{gate}m" if gate != "c" else "w_cm"] = glorot(u, u)
        kw[f"b_{gate}"] = np.ones(u) if gate == "f" else np.zeros(u)
    kw["w_ym"] = glorot(output_dim, u)
    kw["b_y"] = np.zeros(output_dim)
    return LstmWeights(**kw)


def _step(x, m_prev, c_prev, w: LstmWeights):
    """One cell step; returns activations plus the pre-activations
    needed for backprop."""
    zi = x @ w.w_ix.T + m_prev @ w.w_im.T + w.b_i
    zf = x @ w.w_fx.T + m_prev @ w.w_fm.T + w.b_f
    zc = x @ w.w_cx.T + m_prev @ w.w_cm.T + w.b_c
    zo = x @ w.w_ox.T + m_prev @ w.w_om.T + w.b_o
    i = hard_sigmoid(zi)
    f = hard_sigmoid(zf)
    g = _relu(zc)
    o = hard_sigmoid(zo)
    c = f * c_prev + i * g
    hc = _relu(c)
    m = o * hc
    return dict(x=x, m_prev=m_prev, c_prev=c_prev, zi=zi, zf=zf, zc=zc, zo=zo,
                i=i, f=f, g=g, o=o, c=c, hc=hc, m=m)


def cell_forward(x_t, state: CellState, w: LstmWeights):
    """Public single-step forward: (y_t, new state)."""
    x = np.atleast_2d(np.asarray(x_t, dtype=np.float64))
    squeeze = np.ndim(x_t) <= 1
    if x.shape[1] != w.w_ix.shape[1]:
        raise ValueError(f"input dim {x.shape[1]} != {w.w_ix.shape[1]}")
    m_prev = np.atleast_2d(state.m)
    c_prev = np.atleast_2d(state.c)
    cache = _step(x, m_prev, c_prev, w)
    y = cache["m"] @ w.w_ym.T + w.b_y
    new = CellState(cache["m"], cache["c"])
    if squeeze:
        return y[0], CellState(new.m[0], new.c[0])
    return y, new


def forward_sequence(X, w: LstmWeights, dropout_mask=None):
    """Run a (B, T, in) batch; output is read from the last step only.

    dropout_mask, when given, is a (B, units) inverted-dropout mask
    applied to the hidden state at every step.
    """
    X = np.asarray(X, dtype=np.float64)
    batch, steps, _ = X.shape
    units = w.b_i.shape[0]
    m = np.zeros((batch, units))
    c = np.zeros((batch, units))
    caches = []
    for t in range(steps):
        cache = _step(X[:, t, :], m, c, w)
        m = cache["m"] if dropout_mask is None else cache["m"] * dropout_mask
        c = cache["c"]
        caches.append(cache)
    y = m @ w.w_ym.T + w.b_y
    return y, caches


def bptt_gradients(X, Y, w: LstmWeights, dropout_mask=None, loss_scale=1.0):
    """Exact mean-squared-error gradients through time.

    Returns (grads as LstmWeights, scalar loss). Loss is the MSE of the
    last-step output against Y, times loss_scale.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    y, caches = forward_sequence(X, w, dropout_mask)
    batch, steps, _ = X.shape
    diff = y - Y
    loss = loss_scale * float(np.mean(diff**2))
    grads = LstmWeights.zeros_like(w)
    dy = loss_scale * 2.0 * diff / diff.size

    m_last = caches[-1]["m"] if dropout_mask is None else caches[-1]["m"] * dropout_mask
    grads.w_ym += dy.T @ m_last
    grads.b_y += dy.sum(axis=0)
    dm = dy @ w.w_ym
    dc = np.zeros_like(dm)
    for t in range(steps - 1, -1, -1):
        cache = caches[t]
        if dropout_mask is not None:
            dm = dm * dropout_mask
        do = dm * cache["hc"]
        dc = dc + dm * cache["o"] * _drelu(cache["c"])
        di = dc * cache["g"]
        dg = dc * cache["i"]
        df = dc * cache["c_prev"]
        dc_prev = dc * cache["f"]
        dzi = di * _dhard_sigmoid(cache["zi"])
        dzf = df * _dhard_sigmoid(cache["zf"])
        dzc = dg * _drelu(cache["zc"])
        dzo = do * _dhard_sigmoid(cache["zo"])
        x, m_prev = cache["x"], cache["m_prev"]
        grads.w_ix += dzi.T @ x
        grads.w_im += dzi.T @ m_prev
        grads.b_i += dzi.sum(axis=0)
        grads.w_fx += dzf.T @ x
        grads.w_fm += dzf.T @ m_prev
        grads.b_f += dzf.sum(axis=0)
        grads.w_cx += dzc.T @ x
        grads.w_cm += dzc.T @ m_prev
        grads.b_c += dzc.sum(axis=0)
        grads.w_ox += dzo.T @ x
        grads.w_om += dzo.T @ m_prev
        grads.b_o += dzo.sum(axis=0)
        dm = dzi @ w.w_im + dzf @ w.w_fm + dzc @ w.w_cm + dzo @ w.w_om
        dc = dc_prev
    return grads, loss


class Adam:
    def __init__(self, weights: LstmWeights, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = LstmWeights.zeros_like(weights)
        self.v = LstmWeights.zeros_like(weights)

    def update(self, weights: LstmWeights, grads: LstmWeights, lr: float):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        corr1 = 1 - b1**self.t
        corr2 = 1 - b2**self.t
        for name in WEIGHT_NAMES:
            g = getattr(grads, name)
            m = getattr(self.m, name)
            v = getattr(self.v, name)
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            getattr(weights, name)[...] -= lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)


class PlateauSchedule:
    """Learning-rate plateau handling on the validation loss.

    Every 3rd consecutive deterioration multiplies the rate by 0.1; the
    10th consecutive deterioration signals stop.
    """

    def __init__(self, lr, factor=0.1, lr_patience=3, stop_patience=10):
        self.lr = lr
        self.factor = factor
        self.lr_patience = lr_patience
        self.stop_patience = stop_patience
        self.prev = None
        self.streak = 0

    def update(self, loss):
        """Feed one validation loss; returns (current lr, stop flag)."""
        if self.prev is not None and loss > self.prev:
            self.streak += 1
            if self.streak % self.lr_patience == 0:
                self.lr *= self.factor
        else:
            self.streak = 0
        self.prev = loss
        return self.lr, self.streak >= self.stop_patience


@dataclass
class MinMaxScaler:
    lo: float
    hi: float

    @classmethod
    def fit(cls, values):
        lo = float(np.min(values))
        hi = float(np.max(values))
        if hi == lo:
            hi = lo + 1.0
        return cls(lo, hi)

    def scale(self, x):
        return (np.asarray(x, dtype=np.float64) - self.lo) / (self.hi - self.lo)

    def unscale(self, x):
        return np.asarray(x, dtype=np.float64) * (self.hi - self.lo) + self.lo


@dataclass
class TrainedLstm:
    weights: LstmWeights
    config: LstmConfig
    scaler: MinMaxScaler
    train_losses: list = field(default_factory=list)
    val_losses: list = field(default_factory=list)
    stopped_epoch: int | None = None

    def save(self, path):
        meta = dict(config=self.config.__dict__, lo=self.scaler.lo, hi=self.scaler.hi,
                    version=1)
        import json

        np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                 **self.weights.as_dict())

    @classmethod
    def load(cls, path):
        import json

        data = np.load(path if str(path).endswith(".npz") else str(path) + ".npz")
        meta = json.loads(bytes(data["__meta__"]).decode())
        cfg = LstmConfig(**meta["config"])
        w = LstmWeights(**{name: data[name] for name in WEIGHT_NAMES})
        return cls(weights=w, config=cfg, scaler=MinMaxScaler(meta["lo"], meta["hi"]))


def make_windows(values, window):
    """Sliding (window -> next value) supervised pairs."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values) - window
    if n < 1:
        raise ValueError(f"series length {len(values)} too short for window {window}")
    X = np.stack([values[i:i + window] for i in range(n)])[:, :, None]
    Y = values[window:][:, None]
    return X, Y


def train_lstm(series, cfg: LstmConfig) -> TrainedLstm:
    """Train on a monthly series; chronological 80/20 train/validation
    split of the windows, scaling fit on the training portion only."""
    values = np.asarray(series, dtype=np.float64)
    if len(values) <= cfg.window + 1:
        raise ValueError("series too short for the step window")
    n_windows = len(values) - cfg.window
    n_val = max(1, int(round(cfg.val_fraction * n_windows)))
    n_train = n_windows - n_val
    if n_train < 1:
        raise ValueError("series too short to carve out a validation split")
    scaler = MinMaxScaler.fit(values[:n_train + cfg.window])
    X, Y = make_windows(scaler.scale(values), cfg.window)

    w = init_weights(cfg)
    adam = Adam(w)
    schedule = PlateauSchedule(cfg.learning_rate, cfg.lr_factor, cfg.lr_patience, cfg.stop_patience)
    model = TrainedLstm(weights=w, config=cfg, scaler=scaler)
    keep = 1.0 - cfg.dropout
    lr = cfg.learning_rate
    for epoch in range(cfg.max_epochs):
        gen = np.random.default_rng(np.random.SeedSequence((cfg.seed, 20, epoch)))
        order = gen.permutation(n_train)
        epoch_loss = 0.0
        for lo in range(0, n_train, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            mask = None
            if cfg.dropout > 0:
                mask = (gen.random((len(idx), cfg.units)) < keep) / keep
            grads, loss = bptt_gradients(X[idx], Y[idx], w, dropout_mask=mask)
            adam.update(w, grads, lr)
            epoch_loss += loss * len(idx)
        model.train_losses.append(epoch_loss / n_train)
        y_val, _ = forward_sequence(X[n_train:], w)
        val_loss = float(np.mean((y_val - Y[n_train:])**2))
        model.val_losses.append(val_loss)
        lr, stop = schedule.update(val_loss)
        if stop:
            model.stopped_epoch = epoch
            break
    return model


def lstm_forecast(model: TrainedLstm, series, horizon: int) -> np.ndarray:
    """Recursive multi-step forecast; dropout disabled, outputs
    inverse-scaled back to counts."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if horizon == 0:
        return np.empty(0)
    window = model.config.window
    buf = list(model.scaler.scale(np.asarray(series, dtype=np.float64)[-window:]))
    if len(buf) < window:
        raise ValueError("series shorter than the model window")
    out = []
    for _ in range(horizon):
        X = np.array(buf[-window:])[None, :, None]
        y, _ = forward_sequence(X, model.weights)
        out.append(float(y[0, 0]))
        buf.append(float(y[0, 0]))
    return model.scaler.unscale(np.array(out))
