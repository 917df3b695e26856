"""Minimal dense/conv/pool network kit with analytic gradients.

Everything is plain numpy; float64 for gradient checks, float32 for
training. Initialization is deterministic given the seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ACTS = ("relu", "tanh", "sigmoid", "linear")


def _act(name: str, x: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(x, 0.0)
    if name == "tanh":
        return np.tanh(x)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-x))
    return x


def _act_grad(name: str, out: np.ndarray) -> np.ndarray:
    """Derivative expressed through the activation output."""
    if name == "relu":
        return (out > 0.0).astype(out.dtype)
    if name == "tanh":
        return 1.0 - out * out
    if name == "sigmoid":
        return out * (1.0 - out)
    return np.ones_like(out)


@dataclass(frozen=True)
class Dense:
    width: int
    activation: str = "linear"


@dataclass(frozen=True)
class Conv:
    channels: int
    kernel: int
    activation: str = "linear"


@dataclass(frozen=True)
class MaxPool:
    window: int


@dataclass(frozen=True)
class Flatten:
    pass


LayerSpec = Dense | Conv | MaxPool | Flatten


def _init_layer(spec: LayerSpec, in_shape: tuple, rng: np.random.Generator,
                dtype) -> tuple[list[np.ndarray], tuple]:
    if isinstance(spec, Dense):
        (n_in,) = in_shape
        scale = np.sqrt(2.0 / n_in) if spec.activation == "relu" else np.sqrt(1.0 / n_in)
        w = rng.normal(0.0, scale, size=(spec.width, n_in)).astype(dtype)
        b = np.zeros(spec.width, dtype=dtype)
        return [w, b], (spec.width,)
    if isinstance(spec, Conv):
        c, h, w_ = in_shape
        fan_in = c * spec.kernel * spec.kernel
        scale = np.sqrt(2.0 / fan_in) if spec.activation == "relu" else np.sqrt(1.0 / fan_in)
        w = rng.normal(0.0, scale, size=(spec.channels, fan_in)).astype(dtype)
        b = np.zeros(spec.channels, dtype=dtype)
        oh, ow = h - spec.kernel + 1, w_ - spec.kernel + 1
        if oh < 1 or ow < 1:
            raise ValueError("conv kernel larger than input")
        return [w, b], (spec.channels, oh, ow)
    if isinstance(spec, MaxPool):
        c, h, w_ = in_shape
        if h % spec.window or w_ % spec.window:
            raise ValueError("pool window must divide the feature map")
        return [], (c, h // spec.window, w_ // spec.window)
    if isinstance(spec, Flatten):
        return [], (int(np.prod(in_shape)),)
    raise TypeError(f"unknown layer {spec!r}")


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(B,C,H,W) -> (C*k*k, B*OH*OW) of sliding valid windows.

    Feature-major layout keeps the innermost copied axis contiguous and
    lets the convolution run as one flat GEMM.
    """
    b, c, h, w = x.shape
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    # win: (B, C, OH, OW, k, k) -> (C, k, k, B, OH, OW)
    win = np.ascontiguousarray(win.transpose(1, 4, 5, 0, 2, 3))
    return win.reshape(c * k * k, -1)


class Network:
    """Sequential network over a fixed input shape."""

    def __init__(self, input_shape: tuple, layers: list[LayerSpec], seed: int,
                 dtype=np.float64):
        self.input_shape = tuple(input_shape)
        self.layers = list(layers)
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(np.random.SeedSequence([seed % (1 << 64), 77]))
        self.params: list[list[np.ndarray]] = []
        self.shapes: list[tuple] = [self.input_shape]
        shape = self.input_shape
        for spec in self.layers:
            p, shape = _init_layer(spec, shape, rng, self.dtype)
            self.params.append(p)
            self.shapes.append(shape)
        self.output_shape = shape

    # -- parameter plumbing ------------------------------------------------
    def flat_params(self) -> list[np.ndarray]:
        return [a for group in self.params for a in group]

    def set_flat_params(self, arrays: list[np.ndarray]) -> None:
        it = iter(arrays)
        for group in self.params:
            for i in range(len(group)):
                a = next(it)
                if a.shape != group[i].shape:
                    raise ValueError("parameter shape mismatch")
                group[i] = a.astype(self.dtype)

    def copy_from(self, other: "Network", tau: float = 1.0) -> None:
        """Polyak update of this network toward `other`; tau=1 is a hard copy."""
        for mine, theirs in zip(self.params, other.params):
            for i in range(len(mine)):
                mine[i] = (tau * theirs[i] + (1.0 - tau) * mine[i]).astype(self.dtype)

    # -- forward / backward ------------------------------------------------
    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        x = np.asarray(x, dtype=self.dtype)
        if x.shape[1:] != self.input_shape:
            raise ValueError(f"input shape {x.shape[1:]} != {self.input_shape}")
        cache = []
        for spec, p in zip(self.layers, self.params):
            if isinstance(spec, Dense):
                out = _act(spec.activation, x @ p[0].T + p[1])
                cache.append((x, out))
            elif isinstance(spec, Conv):
                b = x.shape[0]
                cols = _im2col(x, spec.kernel)          # (C*k*k, B*L)
                pre = p[0] @ cols + p[1][:, None]       # (O, B*L)
                oh, ow = self.shapes[len(cache) + 1][1:]
                outf = _act(spec.activation, pre).reshape(spec.channels, b, oh, ow)
                out = np.ascontiguousarray(outf.transpose(1, 0, 2, 3))
                cache.append((x.shape, cols, out))
            elif isinstance(spec, MaxPool):
                s = spec.window
                out = x[:, :, ::s, ::s].copy()
                for i in range(s):
                    for j in range(s):
                        if i or j:
                            np.maximum(out, x[:, :, i::s, j::s], out=out)
                cache.append((x, out, None))
            else:  # Flatten
                out = x.reshape(x.shape[0], -1)
                cache.append((x.shape, None))
            x = out
        return x, cache

    def backward(self, cache: list, grad_out: np.ndarray,
                 need_input_grad: bool = True
                 ) -> tuple[list[np.ndarray], np.ndarray | None]:
        """Returns (flat parameter gradients, input gradient).

        With need_input_grad=False the first layer's input gradient is not
        computed (None returned) — it is dead work for image trunks.
        """
        g = np.asarray(grad_out, dtype=self.dtype)
        grads: list[list[np.ndarray]] = [[] for _ in self.layers]
        for li in range(len(self.layers) - 1, -1, -1):
            spec, p, c = self.layers[li], self.params[li], cache[li]
            skip_input = li == 0 and not need_input_grad
            if isinstance(spec, Dense):
                x, out = c
                g = g * _act_grad(spec.activation, out)
                grads[li] = [g.T @ x, g.sum(axis=0)]
                g = None if skip_input else g @ p[0]
            elif isinstance(spec, Conv):
                x_shape, cols, out = c
                b, ch, oh, ow = out.shape
                gact = g * _act_grad(spec.activation, out)          # (B, O, OH, OW)
                gfm = np.ascontiguousarray(gact.transpose(1, 0, 2, 3)).reshape(ch, -1)
                dw = gfm @ cols.T                                   # (O, C*k*k)
                db = gfm.sum(axis=1)
                grads[li] = [dw, db]
                if skip_input:
                    g = None
                    continue
                dcols = p[0].T @ gfm                                # (C*k*k, B*L)
                k = spec.kernel
                cin = x_shape[1]
                d6 = dcols.reshape(cin, k, k, b, oh, ow)
                dx = np.zeros(x_shape, dtype=self.dtype)
                for i in range(k):
                    for j in range(k):
                        dx[:, :, i:i + oh, j:j + ow] += d6[:, i, j].transpose(1, 0, 2, 3)
                g = dx
            elif isinstance(spec, MaxPool):
                x, out, _ = c
                s = spec.window
                gi = np.zeros_like(x)
                taken = np.zeros(out.shape, dtype=bool)
                # route each pooled gradient to the first maximal slot
                for i in range(s):
                    for j in range(s):
                        m = (x[:, :, i::s, j::s] == out) & ~taken
                        np.copyto(gi[:, :, i::s, j::s], g, where=m)
                        taken |= m
                g = gi
                grads[li] = []
            else:  # Flatten
                g = g.reshape(c[0])
                grads[li] = []
        return [a for group in grads for a in group], g


class ComposedNet:
    """Image trunk + head over concat(trunk features, extra scalars)."""

    def __init__(self, trunk: Network, head: Network):
        if len(trunk.output_shape) != 1 or len(head.input_shape) != 1:
            raise ValueError("trunk must emit and head must take a flat vector")
        self.trunk = trunk
        self.head = head
        self.n_extra = head.input_shape[0] - trunk.output_shape[0]
        if self.n_extra < 0:
            raise ValueError("head input narrower than trunk output")

    @property
    def dtype(self):
        return self.trunk.dtype

    def flat_params(self) -> list[np.ndarray]:
        return self.trunk.flat_params() + self.head.flat_params()

    def set_flat_params(self, arrays: list[np.ndarray]) -> None:
        n = len(self.trunk.flat_params())
        self.trunk.set_flat_params(arrays[:n])
        self.head.set_flat_params(arrays[n:])

    def copy_from(self, other: "ComposedNet", tau: float = 1.0) -> None:
        self.trunk.copy_from(other.trunk, tau)
        self.head.copy_from(other.head, tau)

    def forward(self, img: np.ndarray, extra: np.ndarray | None = None
                ) -> tuple[np.ndarray, tuple]:
        feats, tc = self.trunk.forward(img)
        if self.n_extra:
            if extra is None or extra.shape[1] != self.n_extra:
                raise ValueError(f"expected {self.n_extra} extra inputs")
            z = np.concatenate([feats, np.asarray(extra, dtype=self.dtype)], axis=1)
        else:
            z = feats
        out, hc = self.head.forward(z)
        return out, (tc, hc)

    def backward(self, cache, grad_out, need_input_grad: bool = False
                 ) -> tuple[list[np.ndarray], np.ndarray | None, np.ndarray | None]:
        """Returns (flat grads trunk+head, d_img, d_extra)."""
        tc, hc = cache
        hgrads, dz = self.head.backward(hc, grad_out)
        nf = self.trunk.output_shape[0]
        dfeats, dextra = dz[:, :nf], (dz[:, nf:] if self.n_extra else None)
        tgrads, dimg = self.trunk.backward(tc, dfeats, need_input_grad)
        return tgrads + hgrads, dimg, dextra

    def backward_extra(self, cache, grad_out) -> np.ndarray:
        """Gradient w.r.t. the extra inputs only; skips the trunk backward."""
        _, hc = cache
        _, dz = self.head.backward(hc, grad_out)
        return dz[:, self.trunk.output_shape[0]:]


class TwinCritic:
    """Two Q-heads over one shared image trunk; extras are appended to features.

    Sharing the trunk halves the convolutional work of twin-critic updates;
    both heads stay independently parameterized.
    """

    def __init__(self, trunk: Network, head1: Network, head2: Network):
        if head1.input_shape != head2.input_shape:
            raise ValueError("twin heads must take identical inputs")
        self.trunk = trunk
        self.h1 = head1
        self.h2 = head2
        self.n_extra = head1.input_shape[0] - trunk.output_shape[0]
        if self.n_extra < 0:
            raise ValueError("head input narrower than trunk output")

    @property
    def dtype(self):
        return self.trunk.dtype

    def flat_params(self) -> list[np.ndarray]:
        return self.trunk.flat_params() + self.h1.flat_params() + self.h2.flat_params()

    def set_flat_params(self, arrays: list[np.ndarray]) -> None:
        nt = len(self.trunk.flat_params())
        n1 = len(self.h1.flat_params())
        self.trunk.set_flat_params(arrays[:nt])
        self.h1.set_flat_params(arrays[nt:nt + n1])
        self.h2.set_flat_params(arrays[nt + n1:])

    def copy_from(self, other: "TwinCritic", tau: float = 1.0) -> None:
        self.trunk.copy_from(other.trunk, tau)
        self.h1.copy_from(other.h1, tau)
        self.h2.copy_from(other.h2, tau)

    def forward(self, img: np.ndarray, extra: np.ndarray
                ) -> tuple[np.ndarray, np.ndarray, tuple]:
        feats, tc = self.trunk.forward(img)
        if extra.shape[1] != self.n_extra:
            raise ValueError(f"expected {self.n_extra} extra inputs")
        z = np.concatenate([feats, np.asarray(extra, dtype=self.dtype)], axis=1)
        o1, c1 = self.h1.forward(z)
        o2, c2 = self.h2.forward(z)
        return o1, o2, (tc, c1, c2)

    def backward(self, cache, g1: np.ndarray, g2: np.ndarray) -> list[np.ndarray]:
        """Flat parameter gradients (trunk, head1, head2 order)."""
        tc, c1, c2 = cache
        gr1, dz1 = self.h1.backward(c1, g1)
        gr2, dz2 = self.h2.backward(c2, g2)
        nf = self.trunk.output_shape[0]
        tgrads, _ = self.trunk.backward(tc, dz1[:, :nf] + dz2[:, :nf], False)
        return tgrads + gr1 + gr2

    def backward_extra(self, cache, g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the extras only (both heads summed)."""
        _, c1, c2 = cache
        nf = self.trunk.output_shape[0]
        _, dz1 = self.h1.backward(c1, g1)
        _, dz2 = self.h2.backward(c2, g2)
        return dz1[:, nf:] + dz2[:, nf:]
