"""Convolution, max-pooling and transposed-convolution layers on ``[H, W, C]`` maps.

Kernels are laid out ``[kh, kw, c_in, c_out]``. Every forward function
returns ``(output, cache)``; the matching backward takes the upstream
error and that cache.
"""
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError, ContractError, DimensionError
from .tensor import DTYPE, relu, relu_grad


def same_padding(k):
    """(before, after) zero padding keeping extents for a stride-1 kernel of size ``k``."""
    return ((k - 1) // 2, k // 2)


def _pads(padding):
    if isinstance(padding, (int, np.integer)):
        return (int(padding), int(padding))
    before, after = padding
    return (int(before), int(after))


@dataclass
class ConvLayer:
    kernel: np.ndarray  # [kh, kw, c_in, c_out]
    bias: np.ndarray  # [c_out]
    stride: int = 1
    padding: object = 0  # int, or (before, after) applied to both spatial axes

    def output_extent(self, n, axis=0):
        k = self.kernel.shape[axis]
        before, after = _pads(self.padding)
        return (n + before + after - k) // self.stride + 1


@dataclass
class DeconvLayer:
    kernel: np.ndarray  # [k, k, c_in, c_out]
    stride: int

    @property
    def crop(self):
        # aligns the kernel centre of a 2s bilinear kernel with each input cell's block
        return (self.kernel.shape[0] - self.stride) // 2


def conv_forward(layer, x):
    x = np.asarray(x, dtype=DTYPE)
    kh, kw, cin, cout = layer.kernel.shape
    if x.ndim != 3 or x.shape[2] != cin:
        raise DimensionError(f"conv: input {x.shape} does not have {cin} channels")
    before, after = _pads(layer.padding)
    xp = np.pad(x, ((before, after), (before, after), (0, 0)))
    if xp.shape[0] < kh or xp.shape[1] < kw:
        raise DimensionError(f"conv: kernel {kh}x{kw} larger than padded input {xp.shape[:2]}")
    s = layer.stride
    win = sliding_window_view(xp, (kh, kw), axis=(0, 1))[::s, ::s]  # [Ho, Wo, cin, kh, kw]
    out = np.einsum("ijcab,abcd->ijd", win, layer.kernel, optimize=True) + layer.bias
    return out, {"xp_shape": xp.shape, "win": win, "pads": (before, after), "in_shape": x.shape}


def conv_backward(layer, dout, cache):
    kh, kw, cin, cout = layer.kernel.shape
    win = cache["win"]
    if dout.shape != win.shape[:2] + (cout,):
        raise ContractError(f"conv backward: upstream {dout.shape} does not match forward output")
    s = layer.stride
    dkernel = np.einsum("ijcab,ijd->abcd", win, dout, optimize=True)
    dbias = dout.sum(axis=(0, 1))
    dxp = np.zeros(cache["xp_shape"])
    ho, wo = dout.shape[:2]
    for a in range(kh):
        for b in range(kw):
            dxp[a : a + s * ho : s, b : b + s * wo : s] += dout @ layer.kernel[a, b].T
    before, _ = cache["pads"]
    H, W, _ = cache["in_shape"]
    dx = dxp[before : before + H, before : before + W]
    return dx, {"kernel": dkernel, "bias": dbias}


def maxpool_forward(x, window=2, stride=2):
    """Max pooling; odd extents are padded with -inf. Ties go to the first cell in row-major order."""
    x = np.asarray(x, dtype=DTYPE)
    H, W, C = x.shape
    Ho = -(-max(H - window, 0) // stride) + 1
    Wo = -(-max(W - window, 0) // stride) + 1
    ph, pw = (Ho - 1) * stride + window - H, (Wo - 1) * stride + window - W
    xp = np.pad(x, ((0, ph), (0, pw), (0, 0)), constant_values=-np.inf)
    win = sliding_window_view(xp, (window, window), axis=(0, 1))[::stride, ::stride]
    flat = win.reshape(Ho, Wo, C, window * window)
    arg = flat.argmax(axis=3)  # argmax returns the first maximum
    out = np.take_along_axis(flat, arg[..., None], axis=3)[..., 0]
    return out, {"arg": arg, "in_shape": x.shape, "window": window, "stride": stride}


def maxpool_backward(dout, cache):
    arg, (H, W, C) = cache["arg"], cache["in_shape"]
    if dout.shape != arg.shape:
        raise ContractError(f"maxpool backward: upstream {dout.shape} does not match {arg.shape}")
    window, stride = cache["window"], cache["stride"]
    Ho, Wo = arg.shape[:2]
    di, dj = np.divmod(arg, window)
    rows = np.arange(Ho)[:, None, None] * stride + di
    cols = np.arange(Wo)[None, :, None] * stride + dj
    chans = np.broadcast_to(np.arange(C), arg.shape)
    dx = np.zeros(((Ho - 1) * stride + window, (Wo - 1) * stride + window, C))
    np.add.at(dx, (rows, cols, chans), dout)
    return dx[:H, :W]


def deconv_forward(layer, x):
    """Transposed convolution producing exactly ``stride*H x stride*W`` outputs."""
    x = np.asarray(x, dtype=DTYPE)
    k, _, cin, cout = layer.kernel.shape
    if x.ndim != 3 or x.shape[2] != cin:
        raise DimensionError(f"deconv: input {x.shape} does not have {cin} channels")
    H, W, _ = x.shape
    s = layer.stride
    full = np.zeros(((H - 1) * s + k, (W - 1) * s + k, cout))
    for a in range(k):
        for b in range(k):
            full[a : a + s * H : s, b : b + s * W : s] += x @ layer.kernel[a, b]
    c0 = layer.crop
    out = full[c0 : c0 + s * H, c0 : c0 + s * W]
    if out.shape[:2] != (s * H, s * W):
        raise ConfigurationError(f"deconv kernel {k} too small for stride {s}")
    return out.copy(), {"x": x, "full_shape": full.shape}


def deconv_backward(layer, dout, cache):
    x = cache["x"]
    H, W, _ = x.shape
    s = layer.stride
    k = layer.kernel.shape[0]
    if dout.shape[:2] != (s * H, s * W):
        raise ContractError(f"deconv backward: upstream {dout.shape} does not match forward output")
    dfull = np.zeros(cache["full_shape"])
    c0 = layer.crop
    dfull[c0 : c0 + s * H, c0 : c0 + s * W] = dout
    dx = np.zeros_like(x)
    dkernel = np.zeros_like(layer.kernel)
    xf = x.reshape(-1, x.shape[2])
    for a in range(k):
        for b in range(k):
            g = dfull[a : a + s * H : s, b : b + s * W : s]
            dx += g @ layer.kernel[a, b].T
            dkernel[a, b] = xf.T @ g.reshape(-1, g.shape[2])
    return dx, {"kernel": dkernel}


def deconv_adjoint(layer, v):
    """Apply the adjoint of ``deconv_forward`` (input gradient for upstream ``v``)."""
    s = layer.stride
    H, W = v.shape[0] // s, v.shape[1] // s
    cache = {
        "x": np.zeros((H, W, layer.kernel.shape[2])),
        "full_shape": ((H - 1) * s + layer.kernel.shape[0], (W - 1) * s + layer.kernel.shape[0], layer.kernel.shape[3]),
    }
    return deconv_backward(layer, v, cache)[0]


def bilinear_kernel(size):
    factor = (size + 1) // 2
    center = factor - 1 if size % 2 == 1 else factor - 0.5
    og = np.arange(size)
    w = 1 - np.abs(og - center) / factor
    return np.outer(w, w)


def bilinear_deconv(channels, stride):
    k = 2 * stride
    kernel = np.zeros((k, k, channels, channels))
    bil = bilinear_kernel(k)
    for c in range(channels):
        kernel[:, :, c, c] = bil
    return DeconvLayer(kernel, stride)


# ---------------------------------------------------------------- presets


@dataclass
class LayerSpec:
    kernel: int
    c_in: int
    c_out: int
    relu: bool = True
    pool: bool = False


@dataclass
class NetConfig:
    name: str
    layers: list
    hidden_dim: int
    num_classes: int
    upsample: int = field(init=False)

    def __post_init__(self):
        self.upsample = 2 ** sum(1 for l in self.layers if l.pool)
        for a, b in zip(self.layers, self.layers[1:]):
            if a.c_out != b.c_in:
                raise ConfigurationError(f"{self.name}: channel mismatch {a.c_out} -> {b.c_in}")

    @property
    def downsample(self):
        return self.upsample

    @property
    def feature_dim(self):
        return self.layers[-1].c_out


def build_preset(name, num_classes=3, hidden_dim=None):
    if name == "cnn65":
        layers = [
            LayerSpec(8, 3, 64, pool=True),
            LayerSpec(6, 64, 128, pool=True),
            LayerSpec(5, 128, 256, pool=True),
            LayerSpec(4, 256, 256),
            LayerSpec(1, 256, 64, relu=False),
        ]
        return NetConfig("cnn65", layers, hidden_dim or 64, num_classes)
    if name == "tiny":
        layers = [
            LayerSpec(3, 3, 8, pool=True),
            LayerSpec(3, 8, 16, pool=True),
        ]
        return NetConfig("tiny", layers, hidden_dim or 16, num_classes)
    raise ConfigurationError(f"unknown preset {name!r}; choose 'cnn65' or 'tiny'")


def init_conv_stage(config, rng):
    stage = []
    for spec in config.layers:
        fan_in = spec.kernel * spec.kernel * spec.c_in
        kernel = rng.normal(0.0, np.sqrt(2.0 / fan_in), (spec.kernel, spec.kernel, spec.c_in, spec.c_out))
        stage.append(ConvLayer(kernel, np.zeros(spec.c_out), 1, same_padding(spec.kernel)))
    return stage


def conv_stage_forward(config, layers, x):
    caches = []
    for spec, layer in zip(config.layers, layers):
        x, c = conv_forward(layer, x)
        step = {"conv": c}
        if spec.relu:
            x = relu(x)
            step["relu"] = x
        if spec.pool:
            x, step["pool"] = maxpool_forward(x)
        caches.append(step)
    return x, caches


def conv_stage_backward(config, layers, dx, caches):
    grads = [None] * len(layers)
    for idx in range(len(layers) - 1, -1, -1):
        step = caches[idx]
        if "pool" in step:
            dx = maxpool_backward(dx, step["pool"])
        if "relu" in step:
            dx = dx * relu_grad(step["relu"])
        dx, grads[idx] = conv_backward(layers[idx], dx, step["conv"])
    return dx, grads


def count_parameters(config):
    n = sum(l.kernel * l.kernel * l.c_in * l.c_out + l.c_out for l in config.layers)
    d, h, c = config.feature_dim, config.hidden_dim, config.num_classes
    n += 4 * (h * d + h * h + c * h + h) + c
    k = 2 * config.upsample
    n += k * k * c * c
    return n
